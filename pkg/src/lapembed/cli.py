"""Command-line front end.

Every subcommand writes its results into ``--out`` together with
``manifest.json`` (input hashes, all parameters including defaults, library
versions). Exit status: 0 success, 1 domain error or failed verification,
2 usage error. ``LAPEMBED_THREADS`` caps BLAS/OpenMP threads.
"""

import argparse
import hashlib
import json
import logging
import os
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .analytic import (
    FlatTorusGrid,
    sphere_spectrum,
    torus_embedding_dimension,
    torus_lower_bound,
    torus_proof_basis_coords,
    torus_spectrum,
)
from .eigensolver import DEFAULT_BLOCK, DEFAULT_TOL, DEGENERACY_TOL, START_SEED, smallest_eigenpairs
from .embed_dim import RANK_TOL, embedding_dimension, injectivity_scan, resolve_tau
from .exceptions import LapEmbedError
from .geometry import PointCloud, TriangleMesh, graph_distance, icosphere, load_mesh, load_point_cloud
from .heat_kernel import separation_certificate, verify_certificate
from .laplacian import cotangent_laplacian, gaussian_graph_laplacian
from .registration import SIGN_SEED, register
from .spectral_maps import spectral_map

logger = logging.getLogger("lapembed")

MESH_SUFFIXES = {".off", ".ply"}
THREADS_ENV = "LAPEMBED_THREADS"


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _load(path, args):
    if Path(path).suffix.lower() in MESH_SUFFIXES:
        return load_mesh(path)
    return load_point_cloud(path, args.dim, args.knn)


def _laplacian(geom, args):
    kind = getattr(args, "kind", "auto")
    if kind == "cotan" or (kind == "auto" and isinstance(geom, TriangleMesh)):
        if not isinstance(geom, TriangleMesh):
            raise LapEmbedError("the cotangent Laplacian needs a mesh input")
        return cotangent_laplacian(geom)
    bandwidth = args.bandwidth if args.bandwidth == "auto" else float(args.bandwidth)
    if isinstance(geom, TriangleMesh):
        geom = PointCloud(geom.vertices, 2, args.knn)
    return gaussian_graph_laplacian(geom, bandwidth)


def _spectrum(geom, args, count):
    return smallest_eigenpairs(_laplacian(geom, args), count, tol=args.tol, block_size=args.block, seed=args.seed)


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    return str(x)


def _finite(x):
    return x if np.isfinite(x) else str(x)


# --------------------------------------------------------------------------
# subcommands


def cmd_laplacian(args, out):
    lap = _laplacian(_load(args.input, args), args)
    lap.save_triplets(out / "laplacian.txt")
    return {"kind": lap.kind, "n": lap.n, "volume": lap.volume}


def cmd_eigen(args, out):
    spec = _spectrum(_load(args.input, args), args, args.count)
    spec.save(out / "spectrum.txt")
    rows = np.column_stack([np.arange(spec.count + 1), spec.eigenvalues, spec.raw_eigenvalues, spec.residuals])
    np.savetxt(out / "eigenvalues.csv", rows, delimiter=",", fmt=["%d", "%.17g", "%.17g", "%.17g"], header="index,eigenvalue,raw_eigenvalue,residual", comments="")
    return {"eigenvalues": spec.eigenvalues, "max_residual": float(spec.residuals.max()), "solver": spec.info}


def cmd_embed(args, out):
    geom = _load(args.input, args)
    spec = _spectrum(geom, args, args.m)
    coords = spectral_map(spec, args.m, args.map, args.t)
    coords.save_csv(out / "embedding.csv")
    files = ["embedding.csv"]
    if isinstance(geom, TriangleMesh) and args.m == 3:
        coords.save_off(out / "embedding.off", geom)
        files.append("embedding.off")
    return {"map": coords.map_kind, "m": coords.m, "t": coords.t, "files": files}


def cmd_embed_dim(args, out):
    geom = _load(args.input, args)
    spec = _spectrum(geom, args, args.mmax)
    gd = graph_distance(geom)
    tau = args.tau if args.tau == "auto" else float(args.tau)
    report = embedding_dimension(spec, geom, gd, args.mmax, args.delta, tau, args.rank_tol)
    report.save(out / "embed_dim.json")
    return {"m_star": report.m_star, "raw_eigenvalues": spec.raw_eigenvalues[1:]}


def cmd_certify(args, out):
    geom = _load(args.input, args)
    spec = _spectrum(geom, args, args.dmax)
    gd = graph_distance(geom)
    cert = separation_certificate(spec, gd, args.epsilon, args.dmax, seed=args.seed)
    cert.save(out / "certificate.json")
    frac, dmin = verify_certificate(cert, spec, gd, seed=args.seed)
    return {"passed": cert.passed, "d": cert.d, "T": cert.T, "margin": _finite(cert.margin), "direct_fraction_separated": frac, "direct_min_distance": _finite(dmin)}


def cmd_register(args, out):
    ga, gb = _load(args.source, args), _load(args.target, args)
    count = args.m + 4
    sa, sb = _spectrum(ga, args, count), _spectrum(gb, args, count)
    corr = register(sa, sb, args.m, args.mode, args.degeneracy_tol, seed=args.sign_seed)
    corr.save_csv(out / "correspondence.csv")
    return {"cost": corr.cost, "signs": corr.signs, "candidates": corr.candidates, "groups": corr.info.get("groups")}


def cmd_torus_verify(args, out):
    a, b, n = args.a, args.b, args.n
    d = torus_embedding_dimension(a, b, n)
    bound = torus_lower_bound(a, b, n)
    torus_spectrum(a, b, n, args.count).save_csv(out / "torus_spectrum.csv")
    result = {"d": d, "lower_bound": float(bound), "bound_holds": d >= bound}
    if n == 2:
        shape = (args.grid, int(round(args.grid * float(b) / float(a))))
        grid = FlatTorusGrid(a, b, shape)
        gd = grid.distances()
        scans = {}
        for m in (d - 1, d):
            X = torus_proof_basis_coords(a, b, n, grid, m)
            tau = resolve_tau("auto", X, grid)
            r = injectivity_scan(X, gd, args.delta, tau)
            scans[str(m)] = {"injective": r.passed, "colliding_vertices": r.colliding, "min_far_distance": r.min_distance, "tau": tau}
        result["grid"] = list(shape)
        result["scans"] = scans
        result["verified"] = bool(scans[str(d)]["injective"] and not scans[str(d - 1)]["injective"] and result["bound_holds"])
    else:
        result["verified"] = bool(result["bound_holds"])
    _write_json(out / "torus_report.json", result)
    return result


def cmd_sphere_verify(args, out):
    spec = sphere_spectrum(args.n, args.degree_max)
    spec.save_csv(out / "sphere_spectrum.csv")
    result = {"n": args.n, "embedding_dimension": args.n + 1, "degrees": [list(r) for r in spec.degrees], "verified": True}
    if args.n == 2 and args.subdivisions > 0:
        # compare with a discretized round sphere
        mesh = icosphere(args.subdivisions)
        kmax = min(args.degree_max, 2)
        count = sum(r[2] for r in spec.degrees[1:kmax + 1])
        sp = smallest_eigenpairs(cotangent_laplacian(mesh), max(count, 3), seed=args.seed)
        raw = sp.raw_eigenvalues[1:count + 1]
        expected = np.concatenate([[r[1]] * r[2] for r in spec.degrees[1:kmax + 1]])
        rel = np.abs(raw - expected) / expected
        report = embedding_dimension(sp, mesh, graph_distance(mesh), 3)
        result["mesh"] = {
            "vertices": mesh.n_vertices,
            "raw_eigenvalues": raw,
            "max_relative_error": float(rel.max()),
            "m_star": report.m_star,
        }
        result["verified"] = bool(rel.max() <= args.rel_tol and report.m_star == 3)
    _write_json(out / "sphere_report.json", result)
    return result


# --------------------------------------------------------------------------
# parser


def _common(p, solver=True, geometry=True):
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.add_argument("--seed", type=int, default=START_SEED, help="eigensolver / sampling seed")
    if geometry:
        p.add_argument("--dim", type=int, default=2, help="intrinsic dimension of point clouds")
        p.add_argument("--knn", type=int, default=8, help="k of the k-NN graph for point clouds")
        p.add_argument("--bandwidth", default="auto", help="Gaussian bandwidth, 'auto' or 'inf'")
        p.add_argument("--kind", choices=["auto", "cotan", "gaussian"], default="auto", help="Laplacian discretization")
    if solver:
        p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="eigensolver residual tolerance")
        p.add_argument("--block", type=int, default=DEFAULT_BLOCK, help="Lanczos block size")


def build_parser():
    parser = argparse.ArgumentParser(prog="lapembed", description="Laplacian eigenfunction maps and their embedding dimension.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("laplacian", help="assemble a Laplacian and write its triplets")
    p.add_argument("input")
    _common(p, solver=False)
    p.set_defaults(func=cmd_laplacian)

    p = sub.add_parser("eigen", help="smallest Laplacian eigenpairs")
    p.add_argument("input")
    p.add_argument("--count", type=int, default=10, help="nonconstant eigenpairs to compute")
    _common(p)
    p.set_defaults(func=cmd_eigen)

    p = sub.add_parser("embed", help="eigenmap / diffusion map / GPS coordinates")
    p.add_argument("input")
    p.add_argument("--map", choices=["eigen", "eigenmap", "diffusion", "gps"], default="eigen")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--t", type=float, default=None, help="diffusion time (default 1/lambda_1)")
    _common(p)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("embed-dim", help="empirical embedding dimension")
    p.add_argument("input")
    p.add_argument("--mmax", type=int, default=8)
    p.add_argument("--delta", type=float, default=None, help="far-pair graph distance (default 3 mean edges)")
    p.add_argument("--tau", default="auto", help="image collision distance or 'auto'")
    p.add_argument("--rank-tol", type=float, default=RANK_TOL)
    _common(p)
    p.set_defaults(func=cmd_embed_dim)

    p = sub.add_parser("certify", help="heat-kernel separation certificate")
    p.add_argument("input")
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--dmax", type=int, default=8)
    _common(p)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("register", help="spectral correspondence between two shapes")
    p.add_argument("source")
    p.add_argument("target")
    p.add_argument("--m", type=int, default=6)
    p.add_argument("--mode", choices=["exhaustive", "greedy"], default="exhaustive")
    p.add_argument("--degeneracy-tol", type=float, default=DEGENERACY_TOL)
    p.add_argument("--sign-seed", type=int, default=SIGN_SEED)
    _common(p)
    p.set_defaults(func=cmd_register)

    p = sub.add_parser("torus-verify", help="check the stretched-torus embedding dimension")
    p.add_argument("--a", default="1", help="short side (decimal or fraction)")
    p.add_argument("--b", default="2.5", help="long side (decimal or fraction)")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--grid", type=int, default=64, help="grid points along the short side")
    p.add_argument("--delta", type=float, default=0.1, help="far-pair distance for the grid scan")
    p.add_argument("--count", type=int, default=24, help="spectrum rows to export")
    _common(p, solver=False, geometry=False)
    p.set_defaults(func=cmd_torus_verify)

    p = sub.add_parser("sphere-verify", help="sphere eigenvalue table")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--degree-max", type=int, default=4)
    p.add_argument("--subdivisions", type=int, default=3, help="icosphere check for n = 2 (0 disables)")
    p.add_argument("--rel-tol", type=float, default=0.02, help="allowed relative eigenvalue error on the icosphere")
    _common(p, solver=False, geometry=False)
    p.set_defaults(func=cmd_sphere_verify)
    return parser


def _limit_threads():
    n = os.environ.get(THREADS_ENV)
    if not n:
        return None
    from threadpoolctl import threadpool_limits

    return threadpool_limits(int(n))


def run(argv=None):
    """Parse ``argv`` and execute one subcommand; returns the exit status."""
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out)
    limits = _limit_threads()
    try:
        out.mkdir(parents=True, exist_ok=True)
        result = args.func(args, out)
    except LapEmbedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    finally:
        if limits is not None:
            limits.unregister()
    inputs = {}
    for key in ("input", "source", "target"):
        path = getattr(args, key, None)
        if path is not None:
            inputs[key] = {"path": str(path), "sha256": _sha256(path)}
    params = {k: v for k, v in vars(args).items() if k not in ("func", "verbose", "out")}
    manifest = {
        "command": args.command,
        "inputs": inputs,
        "parameters": params,
        "result": result,
        "versions": {"lapembed": __version__, "numpy": np.__version__, "scipy": scipy.__version__, "python": platform.python_version()},
    }
    _write_json(out / "manifest.json", manifest)
    print(json.dumps(result, sort_keys=True, default=_jsonable))
    if result.get("verified") is False:
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
