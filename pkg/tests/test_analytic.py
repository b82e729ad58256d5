import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
import sympy

from lapembed.analytic import (
    FlatTorusGrid,
    PeriodicDistances,
    mode_values,
    sphere_coordinate_eigenmap,
    sphere_multiplicity,
    sphere_spectrum,
    torus_eigenfunction,
    torus_embedding_dimension,
    torus_is_integer_case,
    torus_lower_bound,
    torus_proof_basis_coords,
    torus_proof_modes,
    torus_spectrum,
)
from lapembed.embed_dim import injectivity_scan
from lapembed.exceptions import GeometryError, LapEmbedError

TP = (2 * math.pi) ** 2


def test_stretched_torus_first_modes():
    spec = torus_spectrum(1, 2.5, 2, 6)
    np.testing.assert_allclose(spec.eigenvalues, TP * np.array([0, 0.16, 0.16, 0.64, 0.64, 1, 1]), rtol=1e-15)
    assert spec.eigenvalues[1] == pytest.approx(6.3165, abs=1e-4)
    # cosine before sine inside a pair
    assert [m.k for m in spec.modes[1:3]] == [(1, 1), (1, 2)]


def test_count_one():
    spec = torus_spectrum(1, 3, 2, 1)
    assert spec.count == 1 and spec.modes[1].m == (0, 1)
    assert spec.modes[1].q == Fraction(1, 9)


def test_integer_case_tie_ordering():
    spec = torus_spectrum(1, 2, 2, 6)
    tied = [m for m in spec.modes if m.q == 1]
    # lower axis first: (1, 0) before (0, 2)
    assert [m.m for m in tied] == [(1, 0), (1, 0), (0, 2), (0, 2)]


def test_spectrum_matches_bruteforce_enumeration():
    for a, b, n in [(1, 2.5, 2), (Fraction(2, 3), 1, 2), (1, 1.7, 3)]:
        spec = torus_spectrum(a, b, n, 30)
        a_, b_ = Fraction(a), Fraction(b)
        qs = []
        for m in itertools.product(range(8), repeat=n - 1):
            for mn in range(12):
                q = sum(Fraction(x * x) for x in m) / a_ ** 2 + Fraction(mn * mn) / b_ ** 2
                qs += [q] * 2 ** sum(1 for x in (*m, mn) if x)
        assert [mode.q for mode in spec.modes] == sorted(qs)[:31]


def test_bad_torus():
    with pytest.raises(LapEmbedError):
        torus_spectrum(2, 1)
    with pytest.raises(LapEmbedError):
        torus_spectrum(1, 1)
    with pytest.raises(LapEmbedError):
        torus_embedding_dimension(1, 2, 1)


def test_eigenfunction_values():
    spec = torus_spectrum(1, 2.5, 2, 4)
    assert torus_eigenfunction(spec, 1, [0.3, 0.0]) == pytest.approx(1.0)
    assert torus_eigenfunction(spec, 2, [0.3, 2.5 / 4]) == pytest.approx(1.0)
    # coordinates wrap periodically
    assert torus_eigenfunction(spec, 2, [1.3, 2.5 / 4 + 2.5]) == pytest.approx(1.0)
    with pytest.raises(LapEmbedError):
        torus_eigenfunction(spec, 9, [0, 0])


def test_quadrature_orthogonality():
    spec = torus_spectrum(1, 2.5, 2, 24)
    grid = FlatTorusGrid(1, 2.5, (256, 256))
    F = np.column_stack([mode_values(m, grid.points, spec.periods) for m in spec.modes])
    G = F.T @ F / len(F)
    off = G - np.diag(np.diag(G))
    assert np.abs(off).max() < 1e-8
    # mean square is 2^-(number of oscillating axes)
    expect = [0.5 ** sum(1 for x in m.m if x) for m in spec.modes]
    np.testing.assert_allclose(np.diag(G), expect, rtol=1e-12)


@pytest.mark.parametrize("index", [1, 3, 5, 8, 12])
def test_eigen_equation_richardson(index):
    spec = torus_spectrum(1, 2.5, 2, 12)
    mode = spec.modes[index]
    rng = np.random.default_rng(index)
    x = rng.uniform(0, 1, (20, 2)) * [1, 2.5]

    def lap_h(h):
        f0 = mode_values(mode, x, spec.periods)
        acc = np.zeros(len(x))
        for ax in range(2):
            e = np.zeros(2)
            e[ax] = h
            acc += mode_values(mode, x + e, spec.periods) + mode_values(mode, x - e, spec.periods) - 2 * f0
        return -acc / h ** 2, f0

    (l1, f0), (l2, _) = lap_h(1e-2), lap_h(5e-3)
    r1 = np.abs(l1 - mode.eigenvalue * f0).max()
    r2 = np.abs(l2 - mode.eigenvalue * f0).max()
    assert r2 / r1 == pytest.approx(0.25, abs=0.01)
    extrap = (4 * l2 - l1) / 3
    assert np.abs(extrap - mode.eigenvalue * f0).max() < 1e-6 * mode.eigenvalue


@pytest.mark.parametrize("a,b,n,d", [(1, 2.5, 2, 6), (1, 2, 2, 4), (1, 1.01, 3, 6), ("1/3", "1", 2, 6), (1, 3, 4, 10)])
def test_embedding_dimension_examples(a, b, n, d):
    assert torus_embedding_dimension(a, b, n) == d


def test_integer_case_detection():
    assert torus_is_integer_case(1, 2)
    assert torus_is_integer_case("1/3", "1")
    assert not torus_is_integer_case(1, 2.5)
    # 0.1 is not exactly representable; the float value 0.3/0.1 is not an integer
    assert not torus_is_integer_case(0.1, 0.3)
    assert torus_is_integer_case("0.1", "0.3")


def test_lower_bound_value():
    assert torus_lower_bound(1, 2.5, 2) == 5
    assert torus_lower_bound(1, 2, 3) == 4
    for a, b, n in [(1, 2.5, 2), (1, 2, 2), (1, 1.01, 3)]:
        assert torus_embedding_dimension(a, b, n) >= torus_lower_bound(a, b, n)


def test_proof_modes_order():
    modes = torus_proof_modes(1, 2.5, 2, 6)
    assert [m.m for m in modes] == [(0, 1), (0, 1), (0, 2), (0, 2), (1, 0), (1, 0)]
    modes = torus_proof_modes(1, 2, 2, 6)
    # the (0, 2) pair is skipped in favour of the short axis and returns afterwards
    assert [m.m for m in modes] == [(0, 1), (0, 1), (1, 0), (1, 0), (0, 2), (0, 2)]
    with pytest.raises(LapEmbedError):
        torus_proof_modes(1, 2.5, 2, 9)


def test_proof_basis_m2_depends_on_long_axis_only():
    grid = FlatTorusGrid(1, 2.5, (8, 20))
    X = torus_proof_basis_coords(1, 2.5, 2, grid, 2).coords.reshape(8, 20, 2)
    assert np.abs(X - X[:1]).max() < 1e-15
    # injective along the long axis
    Y = X[0]
    D = np.linalg.norm(Y[:, None] - Y[None], axis=2)
    assert D[~np.eye(20, dtype=bool)].min() > 0.1


@pytest.mark.parametrize("a,b,shape", [(1, 2.5, (32, 80)), (1, 2, (32, 64)), (1, 1.5, (32, 48))])
def test_proof_basis_injective_exactly_at_d(a, b, shape):
    grid = FlatTorusGrid(a, b, shape)
    gd = grid.distances()
    d = torus_embedding_dimension(a, b, 2)
    at_d = injectivity_scan(torus_proof_basis_coords(a, b, 2, grid, d), gd, 0.1, 1e-9)
    below = injectivity_scan(torus_proof_basis_coords(a, b, 2, grid, d - 1), gd, 0.1, 1e-9)
    assert at_d.passed and at_d.min_distance > 0.05
    assert not below.passed and below.colliding > 0


def test_proof_basis_three_torus():
    grid = FlatTorusGrid(1, 1.5, (10, 10, 15))
    gd = grid.distances()
    d = torus_embedding_dimension(1, 1.5, 3)
    assert d == 6
    assert injectivity_scan(torus_proof_basis_coords(1, 1.5, 3, grid, d), gd, 0.2, 1e-9).passed
    assert not injectivity_scan(torus_proof_basis_coords(1, 1.5, 3, grid, d - 1), gd, 0.2, 1e-9).passed


def test_periodic_distances():
    pd = PeriodicDistances(np.array([[0.05, 0.1], [0.95, 2.4]]), [1.0, 2.5])
    assert pd.between(0, 1) == pytest.approx(math.hypot(0.1, 0.2))


def test_grid_laplacian_structure():
    grid = FlatTorusGrid(1, 2, (6, 12))
    lap = grid.laplacian()
    lap.check()
    assert lap.n == 72 and grid.edges.shape == (144, 2)
    assert np.all(np.diff(lap.stiffness.indptr) == 5)


def test_grid_too_small():
    with pytest.raises(GeometryError):
        FlatTorusGrid(1, 2, (2, 8))


def harmonic_dimension(n, k):
    """Dimension of degree-k harmonic polynomials in n + 1 variables, by linear algebra."""
    xs = sympy.symbols(f"x0:{n + 1}")
    monos = sorted(sympy.itermonomials(xs, k, k), key=sympy.default_sort_key)
    if k < 2:
        return len(monos)
    lower = sorted(sympy.itermonomials(xs, k - 2, k - 2), key=sympy.default_sort_key)
    index = {m: i for i, m in enumerate(lower)}
    M = sympy.zeros(len(lower), len(monos))
    for j, mono in enumerate(monos):
        lap = sum(sympy.diff(mono, x, 2) for x in xs)
        for term in sympy.Add.make_args(sympy.expand(lap)):
            if term == 0:
                continue
            coeff, rest = term.as_coeff_Mul()
            M[index[rest], j] += coeff
    return len(monos) - M.rank()


@pytest.mark.parametrize("n", [1, 2, 3])
def test_sphere_multiplicities_match_harmonic_polynomials(n):
    spec = sphere_spectrum(n, 4)
    for k, lam, mult in spec.degrees:
        assert lam == k * (n + k - 1)
        assert mult == harmonic_dimension(n, k)


def test_sphere_examples(tmp_path):
    rows = sphere_spectrum(2, 2).degrees
    assert rows[1] == (1, 2, 3) and rows[2] == (2, 6, 5)
    assert sphere_spectrum(3, 1).degrees[1] == (1, 3, 4)
    assert sphere_multiplicity(1, 3) == 2
    sphere_spectrum(2, 3).save_csv(tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "degree,eigenvalue,multiplicity"


def test_sphere_coordinate_map():
    c = sphere_coordinate_eigenmap(2, [[0, 0, 1.0]])
    np.testing.assert_allclose(c.coords, [[0, 0, math.sqrt(3)]])
    with pytest.raises(GeometryError):
        sphere_coordinate_eigenmap(2, [[0, 0, 1.1]])
    rng = np.random.default_rng(0)
    P = rng.standard_normal((20000, 3))
    P /= np.linalg.norm(P, axis=1, keepdims=True)
    X = sphere_coordinate_eigenmap(2, P).coords
    np.testing.assert_allclose((X ** 2).mean(axis=0), 1.0, atol=0.05)


def test_spectrum_csv(tmp_path):
    torus_spectrum(1, 2.5, 2, 5).save_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "index,m1,m2,k1,k2,eigenvalue" and len(lines) == 7
