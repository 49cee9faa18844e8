"""Command-line front end.

Subcommands: pointer-dist, magnet, tsirelson, box-check, prbox-sim.
Exit statuses: 0 success, 2 user error (flags or input files), 3 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import secrets
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import montecarlo, pointer, prbox, svgplot

EXIT_OK = 0
EXIT_USER_ERROR = 2
EXIT_INTERNAL_ERROR = 3


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _write_text(path: Optional[str], text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8", newline="")


def _mixture_json(mix: pointer.ShiftMixture) -> dict:
    return {
        "n": mix.n_spins,
        "delta": mix.shape.delta,
        "components": [
            {"shift": s, "weight": float(w)} for s, w in mix.components
        ],
    }


def _mixture_csv(mix: pointer.ShiftMixture) -> str:
    buf = io.StringIO()
    mix.write_csv(buf)
    return buf.getvalue()


def _plot_mixture(mix: pointer.ShiftMixture, plot_path: str, title: str) -> None:
    grid = mix.default_grid()
    dens = mix.density(grid)
    _write_text(plot_path, svgplot.line_chart(grid, [dens], title=title))


def cmd_pointer_dist(args: argparse.Namespace) -> int:
    n = args.n
    if n < 1:
        raise UserInputError("--n must be >= 1")
    shape = pointer.PointerShape(args.delta)
    exact = args.rational
    if exact and n > 200:
        raise UserInputError("--rational supports --n up to 200")
    mu = None
    if args.mu is not None:
        mu = pointer.Magnetization(args.mu, n)  # raises on parity/range violation

    if args.compare:
        mix_z = pointer.rho_z_marginal(n, shape, exact=exact)
        mu_x = mu if mu is not None else pointer.Magnetization(n % 2, n)
        mix_x = pointer.rho_x_conditional(mu_x, shape, exact=exact)
        distance = pointer.total_variation(mix_x, mix_z)
        report = {
            "n": n,
            "delta": shape.delta,
            "mu": mu_x.mu,
            "tv_distance": distance,
            "z": _mixture_json(mix_z)["components"],
            "x": _mixture_json(mix_x)["components"],
        }
        _write_text(args.out, json.dumps(report, indent=2) + "\n")
        if args.plot:
            grid = mix_z.default_grid()
            _write_text(
                args.plot,
                svgplot.line_chart(
                    grid,
                    [mix_z.density(grid), mix_x.density(grid)],
                    labels=["z", "x"],
                    title=f"pointer density, N={n}",
                ),
            )
        return EXIT_OK

    if args.basis == "z":
        mix = (
            pointer.rho_z_conditional(mu, shape)
            if mu is not None
            else pointer.rho_z_marginal(n, shape, exact=exact)
        )
    else:
        mu_x = mu if mu is not None else pointer.Magnetization(n % 2, n)
        mix = pointer.rho_x_conditional(mu_x, shape, exact=exact)

    if args.format == "json":
        _write_text(args.out, json.dumps(_mixture_json(mix), indent=2) + "\n")
    else:
        _write_text(args.out, _mixture_csv(mix))
    if args.plot:
        _plot_mixture(mix, args.plot, f"pointer density, N={n}, basis={args.basis}")
        density_path = (args.out or "pointer-dist") + ".density.csv"
        buf = io.StringIO()
        mix.write_density_csv(buf)
        _write_text(density_path, buf.getvalue())
    return EXIT_OK


def cmd_magnet(args: argparse.Namespace) -> int:
    if args.n < 1:
        raise UserInputError("--n must be >= 1")
    shape = pointer.PointerShape(args.delta)
    state = pointer.magnet_amplitudes(args.n, args.theta)  # raises if theta bad
    mix = pointer.pointer_distribution_of_state(state, shape)
    summary = {"mean": mix.mean(), "variance": mix.variance()}
    if args.format == "json":
        payload = dict(summary, **_mixture_json(mix))
        _write_text(args.out, json.dumps(payload, indent=2) + "\n")
    else:
        _write_text(args.out, _mixture_csv(mix))
        sys.stdout.write(
            f"mean={_fmt(summary['mean'])} variance={_fmt(summary['variance'])}\n"
        )
    if args.plot:
        _plot_mixture(mix, args.plot, f"magnet pointer density, N={args.n}")
    return EXIT_OK


def cmd_tsirelson(args: argparse.Namespace) -> int:
    if args.v_step <= 0 or args.table_step <= 0:
        raise UserInputError("grid steps must be positive")
    result = prbox.tsirelson_scan(args.v_step, args.s_resolution)
    rows = []
    k = 0
    while True:
        v = k * args.table_step
        if v > 1.0 + 1e-12:
            break
        interval = prbox.admissible_s_interval(min(v, 1.0))
        rows.append((min(v, 1.0), interval))
        k += 1
    if args.format == "json":
        payload = {
            "v_star": result.v_star,
            "V_star": result.V_star,
            "rows": [
                {
                    "v": v,
                    "s_min": iv[0] if iv else None,
                    "s_max": iv[1] if iv else None,
                }
                for v, iv in rows
            ],
        }
        _write_text(args.out, json.dumps(payload, indent=2) + "\n")
    else:
        lines = ["v,s_min,s_max"]
        for v, iv in rows:
            if iv is None:
                lines.append(f"{_fmt(v)},,")
            else:
                lines.append(f"{_fmt(v)},{_fmt(iv[0])},{_fmt(iv[1])}")
        lines.append(f"# v_star={_fmt(result.v_star)} V_star={_fmt(result.V_star)}")
        _write_text(args.out, "\n".join(lines) + "\n")
    if args.plot:
        vs = [v for v, _ in rows]
        smax = [iv[1] if iv else 0.0 for _, iv in rows]
        _write_text(
            args.plot,
            svgplot.line_chart(vs, [smax], title="admissible same-side correlator"),
        )
    return EXIT_OK


def cmd_box_check(args: argparse.Namespace) -> int:
    try:
        text = Path(args.box).read_text(encoding="utf-8")
    except OSError as exc:
        raise UserInputError(f"cannot read box file: {exc}") from exc
    box = prbox.BoxDistribution.from_json(text)  # raises BoxValidationError
    report = dict(valid=True, **prbox.box_check_report(box, tol=args.tol))
    _write_text(args.out, json.dumps(report, indent=2) + "\n")
    return EXIT_OK


def cmd_prbox_sim(args: argparse.Namespace) -> int:
    if args.n < 1 or args.runs < 1:
        raise UserInputError("--n and --runs must be >= 1")
    if abs(args.v) > 1.0:
        raise UserInputError("--v must lie in [-1, 1]")
    seed = args.seed
    if seed is None:
        seed = secrets.randbits(64)
        sys.stderr.write(f"seed={seed}\n")
    rows = []
    summary_corr = {}
    all_A = []
    run_id = 0
    for x in (0, 1):
        for y in (0, 1):
            rng = montecarlo.RngSpec(seed, stream=2 * x + y).generator()
            A, B = montecarlo.run_ensemble_batch(args.n, args.v, x, y, rng, args.runs)
            for a, b in zip(A, B):
                rows.append((run_id, x, y, int(a), int(b)))
                run_id += 1
            prod = A.astype(float) * B.astype(float) / args.n
            est = float(np.mean(prod))
            se = float(np.std(prod, ddof=1) / math.sqrt(args.runs)) if args.runs > 1 else float("nan")
            summary_corr[f"{x}{y}"] = {"estimate": est, "stderr": se}
            all_A.append(A)
    buf = io.StringIO()
    montecarlo.write_ensemble_csv(buf, rows)
    _write_text(args.out, buf.getvalue())
    samples = np.concatenate(all_A) / math.sqrt(args.n)
    if samples.size >= 100:
        statistic, ok = montecarlo.gaussianity_check(samples, alpha=0.01)
        ks = {"statistic": statistic, "pass": ok}
    else:
        ks = None
    summary = {
        "n": args.n,
        "v": args.v,
        "runs": args.runs,
        "seed": seed,
        "correlators": summary_corr,
        "ks_gaussianity": ks,
    }
    out_stream = sys.stdout if args.out else sys.stderr
    out_stream.write(json.dumps(summary, indent=2) + "\n")
    return EXIT_OK


class UserInputError(ValueError):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="macroloc",
        description="Pointer distributions for weak spin measurements and "
        "macroscopic-locality checks for noisy PR-boxes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--out", default=None, help="output file (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--plot", default=None, help="optional SVG output path")

    p = sub.add_parser("pointer-dist", help="pointer distribution for N half-singlets")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--basis", choices=("z", "x"), default="z")
    p.add_argument("--mu", type=int, default=None)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--compare", action="store_true",
                   help="emit both bases plus their total-variation distance (JSON)")
    p.add_argument("--rational", action="store_true",
                   help="exact rational weights (N <= 200)")
    common(p)
    p.set_defaults(func=cmd_pointer_dist)

    p = sub.add_parser("magnet", help="pointer distribution for a product magnet state")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--theta", type=float, required=True, help="polar angle in [0, pi]")
    p.add_argument("--delta", type=float, default=1.0)
    common(p)
    p.set_defaults(func=cmd_magnet)

    p = sub.add_parser("tsirelson", help="scan the feasible correlator strength")
    p.add_argument("--v-step", type=float, default=1e-4)
    p.add_argument("--s-resolution", type=float, default=None)
    p.add_argument("--table-step", type=float, default=0.01)
    common(p)
    p.set_defaults(func=cmd_tsirelson)

    p = sub.add_parser("box-check", help="validate a box file and check macroscopic locality")
    p.add_argument("box", help="JSON file with the 2x2x2x2 probability array")
    p.add_argument("--tol", type=float, default=prbox.PSD_TOL)
    common(p)
    p.set_defaults(func=cmd_box_check)

    p = sub.add_parser("prbox-sim", help="Monte-Carlo simulation of a noisy PR-box ensemble")
    p.add_argument("--n", type=int, required=True, help="boxes per run")
    p.add_argument("--v", type=float, required=True)
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--seed", type=int, default=None)
    common(p)
    p.set_defaults(func=cmd_prbox_sim)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (
        UserInputError,
        pointer.InvalidMagnetizationError,
        prbox.BoxValidationError,
        ValueError,
    ) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USER_ERROR
    except Exception as exc:  # pragma: no cover - internal failure path
        sys.stderr.write(f"internal error: {exc}\n")
        return EXIT_INTERNAL_ERROR


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
