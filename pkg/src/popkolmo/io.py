"""JSON and CSV formats.

Matrix file::

    {"n": 2, "entries": [-1, 2, 1, -2]}            # row-major
    {"n": 2, "offdiagonal_rates": [0, 2, 1, 0]}    # diagonal filled in

Simulation config::

    {"matrix": <matrix object or path relative to the config>,
     "epsilon": 0.01, "age_max": 10, "grid_count": 200, "horizon": 20,
     "output_stride": 10, "fertility_cutoff": 6,
     "mortality": [[[a, value], ...], ...],   # one breakpoint list per patch
     "fertility": [...], "initial": [...]}

CSV floats use 17 significant digits; JSON floats use Python's shortest
round-trip repr. Both are deterministic.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .kolmogorov import DEFAULT_TOLERANCE, TransitionMatrix, from_offdiagonal_rates, validate_kolmogorov
from .simulation import SimulationConfig, Trajectory, VitalRates, resample


def fmt(x) -> str:
    return format(float(x), ".17g")


def _square(flat, n, key):
    arr = np.asarray(flat, dtype=float)
    if arr.ndim == 2:
        arr = arr.ravel()
    if arr.shape != (n * n,):
        raise ValidationError(f'"{key}" must hold n*n = {n * n} numbers, got {arr.size}')
    return arr.reshape(n, n)


def matrix_from_dict(obj, tolerance: float = DEFAULT_TOLERANCE) -> TransitionMatrix:
    if not isinstance(obj, dict) or "n" not in obj:
        raise ValidationError('matrix object needs an integer "n"')
    n = obj["n"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ValidationError('"n" must be a positive integer')
    if "entries" in obj:
        return validate_kolmogorov(_square(obj["entries"], n, "entries"), tolerance)
    if "offdiagonal_rates" in obj:
        return from_offdiagonal_rates(_square(obj["offdiagonal_rates"], n, "offdiagonal_rates"), tolerance)
    raise ValidationError('matrix object needs "entries" or "offdiagonal_rates"')


def read_json(path):
    """Parse a JSON file. Missing files raise OSError, bad JSON ValidationError."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def load_matrix(path, tolerance: float = DEFAULT_TOLERANCE) -> TransitionMatrix:
    return matrix_from_dict(read_json(path), tolerance)


def _require(obj, key):
    if key not in obj:
        raise ValidationError(f'config is missing "{key}"')
    return obj[key]


def config_from_dict(obj, base_dir=".", epsilon=None) -> SimulationConfig:
    if not isinstance(obj, dict):
        raise ValidationError("config must be a JSON object")
    mat = _require(obj, "matrix")
    if isinstance(mat, str):
        mat = read_json(Path(base_dir) / mat)
    matrix = matrix_from_dict(mat, float(obj.get("tolerance", DEFAULT_TOLERANCE)))
    try:
        rates = VitalRates.from_breakpoints(
            float(_require(obj, "age_max")),
            int(_require(obj, "grid_count")),
            _require(obj, "mortality"),
            _require(obj, "fertility"),
            obj.get("fertility_cutoff"),
        )
        initial = [resample(bp, rates.ages) for bp in _require(obj, "initial")]
        return SimulationConfig(
            matrix=matrix,
            rates=rates,
            epsilon=float(_require(obj, "epsilon") if epsilon is None else epsilon),
            horizon=float(_require(obj, "horizon")),
            initial=np.array(initial),
            output_stride=int(obj.get("output_stride", 1)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"malformed config: {exc}") from None


def load_config(path, epsilon=None) -> SimulationConfig:
    path = Path(path)
    return config_from_dict(read_json(path), path.parent, epsilon)


def dump_json(obj, path=None) -> str:
    text = json.dumps(obj, indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def write_csv(path, header, rows):
    lines = [",".join(header)]
    lines.extend(",".join(fmt(x) for x in row) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_trajectory(traj: Trajectory, out_dir) -> list:
    """Write ``trajectory.csv`` plus one ``snapshots/profile_<step>.csv`` per sample."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    n = traj.samples[0].state.values.shape[0]
    write_csv(
        out_dir / "trajectory.csv",
        ["t", "total"] + [f"share_{i + 1}" for i in range(n)],
        [[s.time, s.total, *s.shares] for s in traj.samples],
    )
    snap_dir = out_dir / "snapshots"
    snap_dir.mkdir(exist_ok=True)
    written = []
    for s in traj.samples:
        path = snap_dir / f"profile_{s.step:07d}.csv"
        write_csv(
            path,
            ["age"] + [f"u_{i + 1}" for i in range(n)],
            np.column_stack([s.state.ages, s.state.values.T]),
        )
        written.append(path.name)
    return written


def write_error_report(report, path):
    write_csv(path, ["t", "d_share", "d_prof"], zip(report.times, report.d_share, report.d_prof))


def config_to_dict(config: SimulationConfig) -> dict:
    """Tabulated echo of a config, used in run manifests."""
    r = config.rates
    return {
        "matrix": config.matrix.to_dict(),
        "epsilon": config.epsilon,
        "horizon": config.horizon,
        "output_stride": config.output_stride,
        "age_max": r.age_max,
        "grid_count": r.grid_count,
        "fertility_cutoff": r.fertility_cutoff,
        "mortality": r.mortality.tolist(),
        "fertility": r.fertility.tolist(),
        "initial": config.initial.tolist(),
    }
