"""Command-line front end: ``sphdesign <command> ...``.

Exit codes: 0 success, 1 usage or format error, 2 numerical nonconvergence.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from contextlib import nullcontext

import numpy as np

from . import io as sio
from .approx import project, wendland_field
from .design import compute_design
from .framelet import QuadratureChain, decompose, get_bank, reconstruct
from .pointsets import icosahedral, spiral, uniform
from .sht import PointSet
from .trustregion import TrustRegionConfig
from .variational import HESSIAN_MODES, ant_gradient, ant_value

EXIT_OK, EXIT_USAGE, EXIT_NONCONVERGED = 0, 1, 2


class CliError(Exception):
    pass


def _thread_limit():
    n = os.environ.get("SPHDESIGN_THREADS")
    if not n:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    try:
        return threadpool_limits(limits=max(1, int(n)))
    except ValueError:
        raise CliError("SPHDESIGN_THREADS must be an integer")


def min_separation(points: PointSet) -> float:
    xyz = points.xyz
    best = math.inf
    for start in range(0, len(points), 512):
        d = np.linalg.norm(xyz[start:start + 512, None, :] - xyz[None, :, :], axis=2)
        idx = np.arange(start, min(start + 512, len(points)))
        d[idx - start, idx] = np.inf
        best = min(best, float(d.min()))
    return best


def cmd_design(args) -> int:
    t = args.t
    if args.init == "icosahedral":
        level = args.level
        if level is None:
            if args.N is None:
                raise CliError("--init icosahedral needs --level or --N")
            level = 1
            while 10 * 4 ** (level - 1) + 2 < args.N:
                level += 1
            if 10 * 4 ** (level - 1) + 2 != args.N:
                raise CliError(f"N={args.N} is not of the form 10*4^(k-1)+2")
        pts = icosahedral(level)
    else:
        N = args.N if args.N is not None else (t + 1) ** 2
        pts = spiral(N) if args.init == "spiral" else uniform(N, args.seed)
    cfg = TrustRegionConfig(max_iters=args.max_iters, gtol=args.gtol, delta0=args.delta0,
                            delta_max=args.delta_max,
                            preconditioner="diagonal" if args.precondition else None)
    res = compute_design(pts, t, cfg, hessian_mode=args.hessian)
    sio.write_points(args.out, res.points, t=t, sqrtA=f"{res.sqrt_value:.3e}",
                     grad_inf=f"{res.gnorm:.3e}")
    trace_path = args.trace or args.out + ".trace.csv"
    with open(trace_path, "w", encoding="utf-8") as fh:
        res.trace.to_csv(fh)
    print(f"N={len(res.points)} t={t} sqrtA={res.sqrt_value:.3e} grad_inf={res.gnorm:.3e} "
          f"outer={res.trace.outer_iters} K_TR={res.trace.total_inner} status={res.trace.status}")
    if not res.converged:
        print("warning: trust region stopped before convergence", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_verify(args) -> int:
    pts, _ = sio.read_points(args.points)
    sqrt_a = math.sqrt(max(ant_value(pts, args.t), 0.0))
    gauge = (0, len(pts), len(pts) + 1)
    try:
        g = ant_gradient(pts, args.t, frozen=gauge)
        mask = np.ones(g.size, dtype=bool)
        mask[list(gauge)] = False
        ginf = float(np.max(np.abs(g[mask]))) if mask.any() else 0.0
    except ValueError:
        # a free point on a pole: report the gradient in a rotated frame
        from .design import pole_free_frame

        g = ant_gradient(pole_free_frame(pts), args.t)
        ginf = float(np.max(np.abs(g)))
    print(f"sqrtA {sqrt_a:.17g}")
    print(f"grad_inf {ginf:.17g}")
    print(f"min_separation {min_separation(pts):.17g}")
    return EXIT_OK


def _grid_indices(theta, phi, m, n, printed=False):
    """1-based nearest indices by the ceiling rule, clamped to the grid.

    Rows follow ``theta_i = (i-1) pi/m`` and columns ``phi_j = (j-1) 2pi/n``, so
    ``row = ceil(theta/d_theta)`` and ``col = ceil(phi/d_phi)``.  ``printed=True``
    uses the swapped formula ``row = ceil(phi/d_theta)``, ``col = ceil(theta/d_phi)``.
    """
    d_theta, d_phi = math.pi / m, 2 * math.pi / n
    if printed:
        row, col = np.ceil(phi / d_theta), np.ceil(theta / d_phi)
    else:
        row, col = np.ceil(theta / d_theta), np.ceil(phi / d_phi)
    row = np.clip(row, 1, m).astype(int)
    col = np.clip(col, 1, n).astype(int)
    return row, col


def resample(grid, points: PointSet, printed: bool = False) -> np.ndarray:
    """Nearest-index lookup of ``grid`` (rows along theta, columns along phi)."""
    grid = np.asarray(grid, dtype=float)
    m, n = grid.shape
    pts = points.canonical()
    row, col = _grid_indices(pts.theta, pts.phi, m, n, printed)
    return grid[row - 1, col - 1]


def cmd_resample(args) -> int:
    if (args.grid is None) == (args.image is None):
        raise CliError("give exactly one of --grid or --image")
    path = args.grid or args.image
    grid = sio.read_grid(path)
    pts, _ = sio.read_points(args.points)
    sio.write_field(args.out, resample(grid, pts, args.printed_indices))
    return EXIT_OK


def _load_chain(files) -> QuadratureChain:
    pts, degs = [], []
    for f in files:
        p, fields = sio.read_points(f)
        if "t" not in fields:
            raise CliError(f"{f}: chain files need t= in the header")
        pts.append(p)
        degs.append(int(fields["t"]))
    try:
        return QuadratureChain(pts, degs)
    except ValueError as exc:
        raise CliError(str(exc))


def cmd_denoise(args) -> int:
    from .denoise import denoise_pipeline, gaussian_noise, psnr, snr, snr_power

    chain = _load_chain(args.chain)
    bank = get_bank(args.bank)
    f = sio.read_field(args.field).real
    if f.size != len(chain.points[-1]):
        raise CliError("field length does not match the finest chain level")
    scale = 255.0 if args.image else float(np.max(np.abs(f)))
    sigma_abs = args.sigma * scale
    noisy = f + gaussian_noise(f.size, sigma_abs, args.seed) if args.sigma > 0 else f.copy()
    res = denoise_pipeline(noisy, chain, bank, sigma_abs, args.c, args.c1, args.layer)
    sio.write_field(args.out, res.output)
    if args.noisy_out:
        sio.write_field(args.noisy_out, noisy)
    report = {
        "sigma": args.sigma,
        "sigma_abs": sigma_abs,
        "snr_in": snr(f, noisy),
        "snr_out": snr(f, res.output),
        "snr_power_in": snr_power(f, noisy),
        "snr_power_out": snr_power(f, res.output),
        "psnr_in": psnr(f, noisy),
        "psnr_out": psnr(f, res.output),
    }
    for (j, s), r in sorted(res.kill_ratio.items()):
        report[f"kill_ratio_{j}_{s}"] = r
    lines = [f"{k} {v:.17g}" if isinstance(v, float) else f"{k} {v}" for k, v in report.items()]
    text = "\n".join(lines) + "\n"
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(text)
    print(text, end="")
    return EXIT_OK


def cmd_fmt(args) -> int:
    chain = _load_chain(args.chain)
    bank = get_bank(args.bank)
    if args.mode == "decompose":
        if not args.field:
            raise CliError("decompose needs --field")
        f = sio.read_field(args.field)
        if f.size != len(chain.points[-1]):
            raise CliError("field length does not match the finest chain level")
        sio.write_pyramid(args.out, decompose(f, chain, bank), chain.degrees, bank.name)
    else:
        if not args.pyramid:
            raise CliError("reconstruct needs --pyramid")
        pyr, _ = sio.read_pyramid(args.pyramid)
        try:
            out = reconstruct(pyr, chain, bank)
        except ValueError as exc:
            raise CliError(str(exc))
        if args.real:
            out = out.real
        sio.write_field(args.out, out)
    return EXIT_OK


def cmd_project(args) -> int:
    pts, _ = sio.read_points(args.points)
    f = sio.read_field(args.field)
    if f.size != len(pts):
        raise CliError("field length does not match the point set")
    res = project(f, pts, args.T, max_iter=args.max_iter)
    sio.write_coeffs(args.out, res.coeffs)
    if args.fitted:
        sio.write_field(args.fitted, res.fitted)
    print(f"iterations {res.iterations}")
    print(f"residual_norm {res.residual_norm:.17g}")
    if res.stagnated:
        print("warning: CG stagnated", file=sys.stderr)
    return EXIT_OK


def cmd_wendland(args) -> int:
    pts, _ = sio.read_points(args.points)
    sio.write_field(args.out, wendland_field(args.k, pts, normalized=not args.unscaled))
    return EXIT_OK


def cmd_filters(args) -> int:
    """Export a filter bank on ``xi`` in ``[0, 1/2]`` as CSV (data for plotting)."""
    bank = get_bank(args.bank)
    xi = np.linspace(0.0, 0.5, args.samples)
    cols = [xi, bank.a(xi)] + [b(xi) for b in bank.b]
    header = "xi,a," + ",".join(f"b{s}" for s in range(1, bank.n + 1))
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        np.savetxt(fh, np.column_stack(cols), fmt=sio.FMT, delimiter=",")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sphdesign", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("design", help="compute a numerical spherical t-design")
    d.add_argument("--init", choices=("spiral", "uniform", "icosahedral"), required=True)
    d.add_argument("--t", type=int, required=True)
    d.add_argument("--N", type=int)
    d.add_argument("--level", type=int, help="icosahedral subdivision level")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", required=True)
    d.add_argument("--trace", help="trace CSV path (default: <out>.trace.csv)")
    d.add_argument("--hessian", choices=HESSIAN_MODES, default="full")
    d.add_argument("--max-iters", type=int, default=2000)
    d.add_argument("--gtol", type=float, default=1e-14)
    d.add_argument("--delta0", type=float, default=1.0)
    d.add_argument("--delta-max", type=float, default=100.0)
    d.add_argument("--precondition", action="store_true", help="diagonal preconditioner")
    d.set_defaults(func=cmd_design)

    v = sub.add_parser("verify", help="report sqrt(A), gradient norm and separation")
    v.add_argument("--points", required=True)
    v.add_argument("--t", type=int, required=True)
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("resample", help="nearest-index lookup from a grid or image")
    r.add_argument("--grid")
    r.add_argument("--image")
    r.add_argument("--points", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--printed-indices", action="store_true",
                   help="row from phi and column from theta, as the formula is printed")
    r.set_defaults(func=cmd_resample)

    n = sub.add_parser("denoise", help="add seeded noise and run the framelet denoiser")
    n.add_argument("--field", required=True)
    n.add_argument("--chain", nargs="+", required=True, help="design files, coarse to fine")
    n.add_argument("--bank", choices=("eta1", "eta2", "eta3"), default="eta3")
    n.add_argument("--sigma", type=float, required=True, help="relative noise level")
    n.add_argument("--c", type=float, default=1.0)
    n.add_argument("--c1", type=float, default=3.0)
    n.add_argument("--layer", type=int)
    n.add_argument("--seed", type=int, default=0)
    n.add_argument("--image", action="store_true", help="scale sigma by 255 instead of max|f|")
    n.add_argument("--out", required=True)
    n.add_argument("--noisy-out")
    n.add_argument("--report")
    n.set_defaults(func=cmd_denoise)

    f = sub.add_parser("fmt", help="framelet decomposition or reconstruction")
    f.add_argument("--mode", choices=("decompose", "reconstruct"), required=True)
    f.add_argument("--chain", nargs="+", required=True)
    f.add_argument("--bank", choices=("eta1", "eta2", "eta3"), default="eta3")
    f.add_argument("--field")
    f.add_argument("--pyramid")
    f.add_argument("--real", action="store_true", help="write only the real part")
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_fmt)

    pr = sub.add_parser("project", help="least-squares projection onto degree T")
    pr.add_argument("--field", required=True)
    pr.add_argument("--points", required=True)
    pr.add_argument("--T", type=int, required=True)
    pr.add_argument("--max-iter", type=int, default=1000)
    pr.add_argument("--out", required=True)
    pr.add_argument("--fitted")
    pr.set_defaults(func=cmd_project)

    w = sub.add_parser("wendland", help="sample a Wendland test function")
    w.add_argument("--k", type=int, choices=range(5), required=True)
    w.add_argument("--points", required=True)
    w.add_argument("--out", required=True)
    w.add_argument("--unscaled", action="store_true",
                   help="use phi~_k without the equal-area scaling (denoising test signal)")
    w.set_defaults(func=cmd_wendland)

    fl = sub.add_parser("filters", help="export filter bank values as CSV")
    fl.add_argument("--bank", choices=("eta1", "eta2", "eta3"), default="eta3")
    fl.add_argument("--samples", type=int, default=1001)
    fl.add_argument("--out", required=True)
    fl.set_defaults(func=cmd_filters)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        with _thread_limit():
            return args.func(args)
    except (CliError, sio.FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
