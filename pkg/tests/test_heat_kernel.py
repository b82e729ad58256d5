import json
import math

import numpy as np
import pytest

from lapembed.eigensolver import Spectrum, dense_oracle
from lapembed.exceptions import LapEmbedError
from lapembed.geometry import PointCloud, graph_distance
from lapembed.heat_kernel import (
    N_TIMES,
    HeatKernelTruncation,
    default_time_grid,
    empirical_remainder,
    heat_kernel_diagonal,
    heat_kernel_partial_sums,
    partial_heat_kernel,
    separation_certificate,
    separation_margin,
    verify_certificate,
)
from lapembed.laplacian import cotangent_laplacian


def test_k0_is_one(ico2_spec):
    np.testing.assert_allclose(heat_kernel_diagonal(ico2_spec, 0, 0.3), 1.0, atol=1e-12)
    assert partial_heat_kernel(ico2_spec, 0, 0.3, 3, 90) == pytest.approx(1.0, abs=1e-12)


def test_long_time_limit(ico2_spec):
    np.testing.assert_allclose(heat_kernel_diagonal(ico2_spec, 20, 1e4), 1.0, atol=1e-6)


@pytest.mark.parametrize("t", [1e-4, 0.01, 1.0])
def test_partial_sums_nondecreasing(ico2_spec, t):
    S = heat_kernel_partial_sums(ico2_spec, t)
    assert np.all(np.diff(S, axis=1) >= 0)
    for k in (0, 7, 20):
        assert np.array_equal(heat_kernel_diagonal(ico2_spec, k, t), S[:, k])
    i = np.arange(ico2_spec.n)
    assert np.array_equal(partial_heat_kernel(ico2_spec, 20, t, i, i), S[:, 20])


def test_symmetric_exact(ico2_spec):
    i = np.arange(162)
    j = i[::-1]
    assert np.array_equal(partial_heat_kernel(ico2_spec, 12, 0.02, i, j), partial_heat_kernel(ico2_spec, 12, 0.02, j, i))


def test_truncation_object(ico2_spec):
    hk = HeatKernelTruncation(ico2_spec, 5, 0.1)
    assert hk(4, 9) == partial_heat_kernel(ico2_spec, 5, 0.1, 4, 9)
    with pytest.raises(LapEmbedError):
        HeatKernelTruncation(ico2_spec, 99, 0.1)
    with pytest.raises(LapEmbedError):
        HeatKernelTruncation(ico2_spec, 5, 0.0)


def test_remainder_edges(ico2_spec):
    K = ico2_spec.count + 1
    assert empirical_remainder(ico2_spec, K, 0.1) == 0.0
    with pytest.raises(LapEmbedError):
        empirical_remainder(ico2_spec, K + 1, 0.1)
    assert empirical_remainder(ico2_spec, 5, 0.2) <= empirical_remainder(ico2_spec, 5, 0.1)


def test_remainder_against_full_spectrum(ico2):
    lap = cotangent_laplacian(ico2)
    full = dense_oracle(lap, lap.n - 1)
    phi2 = full.eigenvectors[:, 10:] ** 2
    truth = float((phi2 @ np.exp(-full.eigenvalues[10:] * 0.5)).max())
    part = Spectrum(full.eigenvalues[:21], full.eigenvectors[:, :21], full.residuals[:21], full.mass)
    assert empirical_remainder(part, 10, 0.5) <= truth
    assert empirical_remainder(full, 10, 0.5) == pytest.approx(truth, rel=1e-12)


def test_default_grid(ico2_spec):
    t = default_time_grid(ico2_spec, 3)
    assert len(t) == N_TIMES
    assert t[0] == pytest.approx(0.1 / ico2_spec.eigenvalues[3])
    assert t[-1] == pytest.approx(10 / ico2_spec.eigenvalues[1])


def test_certificate_icosphere(ico2_spec, ico2_gd, tmp_path):
    cert = separation_certificate(ico2_spec, ico2_gd, 1.0, 8)
    assert cert.passed and cert.d <= 3 and cert.margin > 0
    frac, dmin = verify_certificate(cert, ico2_spec, ico2_gd)
    assert frac == 1.0 and dmin > 0
    cert.save(tmp_path / "c.json")
    assert json.loads((tmp_path / "c.json").read_text())["d"] == cert.d


def test_certificate_stable_under_grid_refinement(ico2_spec, ico2_gd):
    cert = separation_certificate(ico2_spec, ico2_gd, 1.0, 8)
    fine = np.geomspace(cert.T / 1.5, cert.T * 1.5, 9)
    refined = separation_certificate(ico2_spec, ico2_gd, 1.0, cert.d, t_grid=fine)
    assert refined.passed and refined.d == cert.d


def test_certificate_fails_on_identical_rows():
    P = np.column_stack([np.arange(12.0), np.zeros(12)])
    gd = graph_distance(PointCloud(P, 1, 2))
    n, K = 12, 4
    rng = np.random.default_rng(0)
    vecs = np.column_stack([np.ones(n), rng.standard_normal((n, K))])
    vecs[9, 1:] = vecs[1, 1:]
    spec = Spectrum(np.array([0, 1.0, 2, 3, 4]), vecs, np.zeros(K + 1), np.full(n, 1 / n))
    cert = separation_certificate(spec, gd, 3.0, K)
    assert not cert.passed and cert.margin <= 0
    # a direct evaluation of the same pair gives zero margin
    assert separation_margin(spec, K, cert.T, np.array([1]), np.array([9])) == pytest.approx(0.0, abs=1e-15)


def test_certificate_vacuous(ico2_spec, ico2_gd):
    cert = separation_certificate(ico2_spec, ico2_gd, 100.0, 3)
    assert cert.passed and cert.d == 1 and cert.pairs_tested == 0 and math.isinf(cert.margin)


def test_certificate_soundness_random(ico2_spec, ico2_gd):
    for eps in (0.5, 1.0, 2.0):
        cert = separation_certificate(ico2_spec, ico2_gd, eps, 6)
        if cert.passed:
            frac, dmin = verify_certificate(cert, ico2_spec, ico2_gd)
            assert frac == 1.0 and dmin > 0


def test_certificate_bad_args(ico2_spec, ico2_gd):
    for kw in ({"epsilon": 0, "d_max": 3}, {"epsilon": 1, "d_max": 0}, {"epsilon": 1, "d_max": 99}):
        with pytest.raises(LapEmbedError):
            separation_certificate(ico2_spec, ico2_gd, **kw)
    with pytest.raises(LapEmbedError):
        separation_certificate(ico2_spec, ico2_gd, 1.0, 3, t_grid=[-1.0])
