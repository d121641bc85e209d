"""Kolmogorov (transition) matrices and their exponential.

Convention: ``entries[i, j]`` is the rate of transfer *from* patch ``j``
*to* patch ``i``, so every column of a valid matrix sums to zero and the
population vector evolves as ``du/dt = C u``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ColumnSumNonZero, NegativeOffDiagonal, NonSquare, NumericalError, Overflow

DEFAULT_TOLERANCE = 1e-12

# Squarings are chosen so that ||tC||_1 / 2**s <= 0.5.
_PADE_THETA = 0.5
_MAX_SQUARINGS = 64
_NEGATIVE_FLOOR = -1e-12

_PADE13 = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)


def _frozen(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TransitionMatrix:
    """A validated Kolmogorov matrix. Build it with :func:`validate_kolmogorov`."""

    entries: np.ndarray
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self):
        object.__setattr__(self, "entries", _frozen(self.entries))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def scale(self) -> float:
        """``max(1, max|c_ij|)``, the reference magnitude for relative thresholds."""
        return max(1.0, float(np.max(np.abs(self.entries))))

    def __array__(self, dtype=None, copy=None):
        return np.array(self.entries, dtype=dtype)

    def to_dict(self) -> dict:
        return {"n": self.n, "entries": [float(x) for x in self.entries.ravel()]}


@dataclass(frozen=True)
class MatrixExponentialResult:
    entries: np.ndarray
    t: float
    # smallest entry before clamping; only meaningful for Kolmogorov input
    min_entry_raw: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "entries", _frozen(self.entries))


def validate_kolmogorov(entries, tolerance: float = DEFAULT_TOLERANCE) -> TransitionMatrix:
    """Check that ``entries`` is a Kolmogorov matrix and wrap it.

    Off-diagonal entries in ``(-tolerance, 0)`` are treated as roundoff and
    clamped to zero. Column sums are checked against
    ``tolerance * max(1, max|c_ij|)``.
    """
    if tolerance < 0:
        raise ValueError("tolerance must be non-negative")
    c = np.array(entries, dtype=float, copy=True)
    if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] < 1:
        raise NonSquare(f"expected a non-empty square matrix, got shape {c.shape}", shape=list(c.shape))
    if not np.all(np.isfinite(c)):
        raise NonSquare("matrix contains non-finite entries", shape=list(c.shape))
    n = c.shape[0]
    off = ~np.eye(n, dtype=bool)
    bad = np.argwhere(off & (c < -tolerance))
    if bad.size:
        i, j = (int(x) for x in bad[0])
        raise NegativeOffDiagonal(
            f"entry ({i}, {j}) = {float(c[i, j])!r} is negative", row=i, column=j, value=float(c[i, j])
        )
    c[off & (c < 0)] = 0.0
    limit = tolerance * max(1.0, float(np.max(np.abs(c))))
    sums = c.sum(axis=0)
    bad_cols = np.flatnonzero(np.abs(sums) > limit)
    if bad_cols.size:
        j = int(bad_cols[0])
        raise ColumnSumNonZero(
            f"column {j} sums to {float(sums[j])!r}", column=j, column_sum=float(sums[j])
        )
    return TransitionMatrix(c, tolerance)


def from_offdiagonal_rates(rates, tolerance: float = DEFAULT_TOLERANCE) -> TransitionMatrix:
    """Fill the diagonal so that each column sums to zero.

    ``c_jj = -sum_{i != j} c_ij``: the loss from patch ``j`` is everything
    that leaves it. The diagonal of ``rates`` is ignored.
    """
    r = np.array(rates, dtype=float, copy=True)
    if r.ndim != 2 or r.shape[0] != r.shape[1] or r.shape[0] < 1:
        raise NonSquare(f"expected a non-empty square matrix, got shape {r.shape}", shape=list(r.shape))
    n = r.shape[0]
    for j in range(n):
        for i in range(n):
            if i != j and not r[i, j] >= 0:
                raise NegativeOffDiagonal(
                    f"rate ({i}, {j}) = {float(r[i, j])!r} is negative", row=i, column=j, value=float(r[i, j])
                )
    for j in range(n):
        total = 0.0
        for i in range(n):
            if i != j:
                total += r[i, j]
        r[j, j] = -total
    return validate_kolmogorov(r, tolerance)


def _pade13(a):
    b = _PADE13
    ident = np.eye(a.shape[0])
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a2 @ a4
    u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
    v = a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident
    return np.linalg.solve(v - u, v + u)


def matrix_exponential(c, t: float = 1.0) -> MatrixExponentialResult:
    """``exp(t C)`` by scaling and squaring with a degree-13 Padé approximant.

    For a :class:`TransitionMatrix` the result is a column-stochastic
    matrix; entries down to ``-1e-12`` are clamped to zero and anything
    more negative raises :class:`NumericalError`.
    """
    kolmogorov = isinstance(c, TransitionMatrix)
    a = np.array(c.entries if kolmogorov else c, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NonSquare(f"expected a square matrix, got shape {a.shape}", shape=list(a.shape))
    t = float(t)
    if kolmogorov and t < 0:
        raise ValueError("t must be non-negative for a transition matrix")
    n = a.shape[0]
    with np.errstate(over="ignore", invalid="ignore"):
        ta = t * a
        norm = float(np.max(np.sum(np.abs(ta), axis=0))) if n else 0.0
    if not math.isfinite(norm):
        raise Overflow("t * C is not finite", t=t)
    if norm == 0.0:
        return MatrixExponentialResult(np.eye(n), t, 0.0 if n > 1 else 1.0)

    squarings = max(0, math.ceil(math.log2(norm / _PADE_THETA)))
    if squarings > _MAX_SQUARINGS:
        raise Overflow(
            f"||tC||_1 = {norm:.3e} needs {squarings} squarings (limit {_MAX_SQUARINGS})",
            t=t,
            norm=norm,
        )
    e = _pade13(ta / 2.0**squarings)
    for _ in range(squarings):
        e = e @ e
    if not np.all(np.isfinite(e)):
        raise Overflow("matrix exponential overflowed", t=t, norm=norm)

    min_raw = float(e.min())
    if kolmogorov:
        if min_raw < _NEGATIVE_FLOOR:
            raise NumericalError(f"exponential has entry {min_raw!r} below the roundoff floor", t=t)
        e = np.maximum(e, 0.0)
    return MatrixExponentialResult(e, t, min_raw)
