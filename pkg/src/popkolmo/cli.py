"""``popkolmo`` command line: analyze | simulate | compare.

Exit codes: 0 ok, 1 I/O or numerical non-convergence, 2 invalid input,
3 non-finite simulation state. Diagnostics go to stderr, one JSON object
per line.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .aggregation import run_comparison
from .errors import NonFiniteState, NumericalError, PopKolmoError, ValidationError
from .io import (
    config_to_dict,
    dump_json,
    load_config,
    load_matrix,
    write_error_report,
    write_trajectory,
)
from .kolmogorov import DEFAULT_TOLERANCE, TransitionMatrix
from .simulation import n_steps, simulate
from .spectral import EIGEN_ZERO_RTOL, analyze, transient_block_bounds, verify_zero_pattern
from .structure import Kind, classify_states, is_irreducible

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_DIVERGED = 0, 1, 2, 3


def _diag(**fields):
    print(json.dumps(fields, sort_keys=True), file=sys.stderr)


def analysis_report(c: TransitionMatrix) -> dict:
    """Everything ``analyze`` writes, as a JSON-ready dict."""
    spec = analyze(c)
    nf = spec.normal_form
    labels = classify_states(nf)
    zero_tol = EIGEN_ZERO_RTOL * c.scale
    nonzero = [z for z in spec.spectrum if abs(z) >= zero_tol]
    irreducible = is_irreducible(c)
    t_bounds = transient_block_bounds(c, nf)
    checks = {
        "zero_is_dominant": spec.spectral_bound == 0.0 and all(z.real < 0 for z in nonzero),
        "left_one_residual_ok": spec.left_perron_residual <= 1e-12 * c.scale,
        "zero_pattern_consistent": verify_zero_pattern(spec.right_perron_basis, labels)
        and spec.kernel_dimension_rank == nf.m,
        "transient_blocks_negative_bound": all(b < 0 for b in t_bounds),
        "zero_simple_if_irreducible": (not irreducible) or spec.zero_count_algebraic == 1,
    }
    return {
        "matrix": {
            **c.to_dict(),
            "tolerance": c.tolerance,
            "column_sum_limit": c.tolerance * c.scale,
        },
        "irreducible": irreducible,
        "normal_form": nf.to_dict(),
        "spectral": spec.to_dict(),
        "transient_block_bounds": t_bounds,
        "state_labels": [lab.value for lab in labels],
        "theorem_checks": checks,
    }


def cmd_analyze(args) -> int:
    report = analysis_report(load_matrix(args.matrix, args.tol))
    text = dump_json(report, args.out)
    if args.out is None:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    out = Path(args.out_dir)
    start = time.perf_counter()
    traj = simulate(config)
    wall = time.perf_counter() - start
    files = write_trajectory(traj, out)
    manifest = {
        "version": __version__,
        "config": config_to_dict(config),
        "grid": {
            "age_max": config.rates.age_max,
            "grid_count": config.rates.grid_count,
            "da": config.rates.da,
            "dt": config.rates.da,
            "steps": n_steps(config.horizon, config.rates.da),
        },
        "samples": len(traj.samples),
        "snapshots": files,
        "wall_time_s": wall,
    }
    dump_json(manifest, out / "manifest.json")
    return EXIT_OK


def _write_comparison(config, result, out: Path) -> dict:
    full, model, _, report = result
    out.mkdir(parents=True, exist_ok=True)
    write_error_report(report, out / "error_report.csv")
    labels = classify_states(analyze(config.matrix).normal_form)
    transient = [i for i, lab in enumerate(labels) if lab is Kind.TRANSIENT]
    shares = full.final.shares
    summary = {
        "epsilon": config.epsilon,
        "t_final": float(full.final.time),
        "k": [float(x) for x in model.k],
        "final_shares": [float(x) for x in shares],
        "d_share": float(report.d_share[-1]),
        "d_prof": float(report.d_prof[-1]),
        "state_labels": [lab.value for lab in labels],
        "transient_patches": transient,
        "transient_final_share": float(np.sum(shares[transient])) if transient else 0.0,
    }
    dump_json(summary, out / "summary.json")
    return summary


def _threads() -> int:
    env = os.environ.get("POPKOLMO_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            _diag(warning="ignoring non-integer POPKOLMO_THREADS", value=env)
    return os.cpu_count() or 1


def cmd_compare(args) -> int:
    out = Path(args.out_dir)
    if not args.epsilons:
        config = load_config(args.config)
        _write_comparison(config, run_comparison(config), out)
        return EXIT_OK
    try:
        epsilons = [float(x) for x in args.epsilons.split(",") if x.strip()]
    except ValueError:
        raise ValidationError(f"--epsilons must be comma-separated numbers, got {args.epsilons!r}") from None
    configs = [load_config(args.config, epsilon=e) for e in epsilons]
    # runs fan out across threads; files are written here, in input order
    with ThreadPoolExecutor(max_workers=min(_threads(), len(configs))) as pool:
        results = list(pool.map(run_comparison, configs))
    summaries = [
        _write_comparison(config, result, out / f"eps_{config.epsilon!r}")
        for config, result in zip(configs, results)
    ]
    d = [s["d_share"] for s in sorted(summaries, key=lambda s: -s["epsilon"])]
    dump_json(
        {"summaries": summaries, "d_share_non_increasing": all(a >= b for a, b in zip(d, d[1:]))},
        out / "sweep.json",
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="popkolmo", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="spectral and structural report for a transition matrix")
    p.add_argument("matrix", help="matrix JSON file")
    p.add_argument("--tol", type=float, default=DEFAULT_TOLERANCE, help="validation tolerance")
    p.add_argument("--out", help="report path (default: stdout)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="integrate the age-structured model")
    p.add_argument("config", help="simulation config JSON")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="full model versus the averaged model")
    p.add_argument("config", help="simulation config JSON")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--epsilons", help="comma-separated epsilon sweep, e.g. 1e-1,1e-2,1e-3")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NonFiniteState as exc:
        _diag(**exc.to_dict())
        return EXIT_DIVERGED
    except ValidationError as exc:
        _diag(**exc.to_dict())
        return EXIT_INVALID
    except (NumericalError, PopKolmoError) as exc:
        _diag(**exc.to_dict())
        return EXIT_IO
    except OSError as exc:
        _diag(error="IOError", message=str(exc))
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
