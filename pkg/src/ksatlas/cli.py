"""Command-line front end: ``ksatlas {classify,scan,volume,states}``.

Exit codes: 0 success, 2 usage, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .errors import InvalidInputError, NumericalFailure
from .index import index_certificate
from .locking import lock_report, omega_for_fixed_point, pi_state_phi, pi_state_residual, six_states
from .model import check_alpha
from .scan import DEFAULT_HALF_WIDTH, ScanGrid, ScanMode, scan
from .spectral import DEFAULT_TOL, classify, s_dagger_member
from .volume import StrataPlan, decay_fit, stable_volume

OUTPUT_DIR_ENV = "KSATLAS_OUTPUT_DIR"

EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


class UsageError(Exception):
    pass


def fmt(x) -> str:
    """Shortest text for ints, 17 significant digits for floats."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def parse_floats(text: str, name: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"--{name}: expected comma-separated numbers, got {text!r}") from None
    if not vals or not all(math.isfinite(v) for v in vals):
        raise UsageError(f"--{name}: expected finite comma-separated numbers, got {text!r}")
    return vals


def parse_int_list(text: str, name: str) -> list[int]:
    """Accept ``3,4,5`` or the inclusive range ``3..8``."""
    out: list[int] = []
    try:
        for part in text.split(","):
            part = part.strip()
            if ".." in part:
                lo, hi = part.split("..")
                out.extend(range(int(lo), int(hi) + 1))
            elif part:
                out.append(int(part))
    except ValueError:
        raise UsageError(f"--{name}: expected integers or a range like 3..8, got {text!r}") from None
    if not out:
        raise UsageError(f"--{name}: empty list")
    return out


def parse_range(text: str, name: str) -> tuple[float, float]:
    vals = parse_floats(text, name)
    if len(vals) != 2:
        raise UsageError(f"--{name}: expected lo,hi")
    return vals[0], vals[1]


def output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, "."))


def manifest(command: str, parameters: dict, seed: int | None = None) -> dict:
    return {"command": command, "parameters": parameters, "seed": seed, "version": __version__}


def write_csv(path: Path, header: dict, columns: list[str], rows) -> None:
    """One '#' manifest line, one header line, then data; UTF-8 with LF endings."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def write_sidecar(path: Path, header: dict, started: float) -> Path:
    side = path.with_name(path.name + ".manifest.json")
    payload = dict(header, wall_time_s=time.perf_counter() - started, outputs=[str(path)])
    side.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return side


def _print_json(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def cmd_classify(args) -> int:
    theta = parse_floats(args.theta, "theta")
    if len(theta) < 2:
        raise UsageError("--theta needs at least two angles")
    omega = parse_floats(args.omega, "omega") if args.omega else None
    if omega is not None and len(omega) != len(theta):
        raise UsageError("--omega must have the same length as --theta")
    alpha = check_alpha(args.alpha)
    report = classify(theta, alpha, args.tol)
    _print_json(
        {
            "theta": theta,
            "alpha": alpha,
            "omega": omega if omega is not None else [0.0] * len(theta),
            "spectral": report.to_dict(),
            "s_dagger": bool(s_dagger_member(theta, alpha)),
            "index_certificate": index_certificate(theta, alpha, args.tol).to_dict(),
            "lock": lock_report(theta, omega, alpha).to_dict(),
        }
    )
    return 0


def cmd_scan(args) -> int:
    started = time.perf_counter()
    half = (-DEFAULT_HALF_WIDTH, DEFAULT_HALF_WIDTH)
    grid = ScanGrid(
        alpha=check_alpha(args.alpha),
        resolution=args.resolution,
        x_range=parse_range(args.x_range, "x-range") if args.x_range else half,
        y_range=parse_range(args.y_range, "y-range") if args.y_range else half,
    )
    result = scan(grid, args.mode, args.tol)
    out = Path(args.out) if args.out else output_dir() / f"scan_{args.mode}_a{fmt(grid.alpha)}_r{grid.resolution}.csv"
    params = {
        "alpha": grid.alpha,
        "mode": args.mode,
        "resolution": grid.resolution,
        "x_range": list(grid.x_range),
        "y_range": list(grid.y_range),
        "tol": args.tol,
        "layout": "row-major: y outer, x inner; theta = x*(1,-1,0)/sqrt2 + y*(1,1,-2)/sqrt6",
    }
    header = manifest("scan", params)
    coords = result.coords.reshape(-1, 2)
    vals = result.values.reshape(len(coords), -1)

    def rows():
        for c, v in zip(coords, vals):
            if result.mode is ScanMode.SURFACE:
                yield (*c, *v[:-1], int(v[-1]))
            else:
                yield (*c, int(v[0]))

    write_csv(out, header, result.columns, rows())
    write_sidecar(out, header, started)
    sys.stdout.write(str(out) + "\n")
    return 0


def cmd_volume(args) -> int:
    started = time.perf_counter()
    n_list = parse_int_list(args.n_list, "n-list")
    alphas = parse_floats(args.alpha_list, "alpha-list")
    for a in alphas:
        check_alpha(a)
    if any(n < 2 for n in n_list):
        raise UsageError("--n-list entries must be >= 2")
    ests = {}
    for a in alphas:
        for n in n_list:
            plan = StrataPlan(args.strata, args.samples, n, args.seed)
            ests[(n, a)] = stable_volume(plan, a, args.tol, workers=args.workers)
    rho = {}
    for a in alphas:
        group = [ests[(n, a)] for n in n_list]
        if sum(e.volume > 0 for e in group) >= 3:
            rho[a] = decay_fit(group)
    base = {n: ests[(n, 0.0)].volume for n in n_list if (n, 0.0) in ests}

    out = Path(args.out) if args.out else output_dir() / f"volume_seed{args.seed}.csv"
    params = {
        "n_list": n_list,
        "alpha_list": alphas,
        "strata": args.strata,
        "samples": args.samples,
        "tol": args.tol,
        "rho": "exp(slope) of log(fraction) vs n; fraction = volume/(2pi)^n",
    }
    header = manifest("volume", params, seed=args.seed)
    columns = ["n", "alpha", "volume", "std_error", "fraction", "fraction_std_error", "rescaled", "rho_fit", "degenerate"]

    def rows():
        for a in alphas:
            for n in n_list:
                e = ests[(n, a)]
                rescaled = e.volume / base[n] if base.get(n) else float("nan")
                yield (n, a, e.volume, e.std_error, e.fraction, e.fraction_std_error, rescaled, rho.get(a, float("nan")), e.degenerate)

    write_csv(out, header, columns, rows())
    write_sidecar(out, header, started)
    sys.stdout.write(str(out) + "\n")
    for a, r in rho.items():
        sys.stdout.write(f"alpha={fmt(a)} rho={r:.4f}\n")
    return 0


def cmd_states(args) -> int:
    alpha = check_alpha(args.alpha)
    phi = pi_state_phi(alpha)
    states = []
    for st in six_states(alpha):
        th = st.theta.theta
        states.append(
            {
                "name": st.name,
                "theta": th.tolist(),
                "velocity": st.velocity,
                "fixed_point_omega": omega_for_fixed_point(th, alpha).tolist(),
                "spectral": classify(th, alpha, args.tol).to_dict(),
                "lock": lock_report(th, None, alpha).to_dict(),
            }
        )
    _print_json(
        {
            "alpha": alpha,
            "phi": phi,
            "functional_equation_residual": pi_state_residual(alpha, phi),
            "states": states,
        }
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ksatlas", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classify", help="spectral report, index certificate and lock check for one configuration")
    c.add_argument("--theta", required=True, help="comma-separated angles in radians (use --theta=-1,0,1 for a leading minus)")
    c.add_argument("--alpha", type=float, required=True)
    c.add_argument("--omega", help="comma-separated natural frequencies (default 0)")
    c.add_argument("--tol", type=float, default=DEFAULT_TOL)
    c.set_defaults(func=cmd_classify)

    s = sub.add_parser("scan", help="map over the mean-zero plane of three oscillators")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--resolution", type=int, default=400)
    s.add_argument("--mode", choices=[m.value for m in ScanMode], default="index")
    s.add_argument("--x-range", help="lo,hi in plane units")
    s.add_argument("--y-range", help="lo,hi in plane units")
    s.add_argument("--tol", type=float, default=DEFAULT_TOL)
    s.add_argument("--out", help=f"CSV path (default: ${OUTPUT_DIR_ENV} or the working directory)")
    s.set_defaults(func=cmd_scan)

    v = sub.add_parser("volume", help="stratified Monte Carlo volume of the stable set")
    v.add_argument("--n-list", default="3..8")
    v.add_argument("--alpha-list", default="0")
    v.add_argument("--strata", type=int, default=100)
    v.add_argument("--samples", type=int, default=100_000, help="total samples per (n, alpha)")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--workers", type=int, default=1)
    v.add_argument("--tol", type=float, default=DEFAULT_TOL)
    v.add_argument("--out")
    v.set_defaults(func=cmd_volume)

    t = sub.add_parser("states", help="the six phase-locked families of three oscillators")
    t.add_argument("--alpha", type=float, required=True)
    t.add_argument("--tol", type=float, default=DEFAULT_TOL)
    t.set_defaults(func=cmd_states)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, InvalidInputError) as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"ksatlas: error: {exc}\n")
        return EXIT_USAGE
    except (NumericalFailure, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"ksatlas: numerical failure: {exc}\n")
        return EXIT_NUMERICAL
    except OSError as exc:
        sys.stderr.write(f"ksatlas: I/O error: {exc}\n")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
