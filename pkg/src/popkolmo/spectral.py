"""Spectral analysis of Kolmogorov matrices.

Every valid matrix has spectral bound zero with the all-ones vector as a
left eigenvector. The kernel is spanned by one non-negative vector per
closed block; transient patches carry zero weight in all of them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import NoConvergence
from .kolmogorov import TransitionMatrix
from .structure import Kind, NormalForm, normal_form

POWER_MAX_ITER = 10_000
POWER_TOL = 1e-13
EIGEN_ZERO_RTOL = 1e-8
PERRON_ZERO_TOL = 1e-9


@dataclass(frozen=True)
class SpectralReport:
    spectrum: np.ndarray
    spectral_bound: float
    spectral_radius: float
    right_perron_basis: tuple
    default_perron: np.ndarray
    left_perron_residual: float
    zero_multiplicity_geometric: int
    dominant_is_simple: bool
    # cross-checks
    kernel_dimension_rank: int = 0
    zero_count_algebraic: int = 0
    normal_form: NormalForm | None = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "spectrum": [{"re": float(z.real), "im": float(z.imag)} for z in self.spectrum],
            "spectral_bound": float(self.spectral_bound),
            "spectral_radius": float(self.spectral_radius),
            "right_perron_basis": [[float(x) for x in v] for v in self.right_perron_basis],
            "default_perron": [float(x) for x in self.default_perron],
            "left_perron_residual": float(self.left_perron_residual),
            "zero_multiplicity_geometric": int(self.zero_multiplicity_geometric),
            "dominant_is_simple": bool(self.dominant_is_simple),
            "kernel_dimension_rank": int(self.kernel_dimension_rank),
            "zero_count_algebraic": int(self.zero_count_algebraic),
        }


def spectral_bound_with_witness(c: TransitionMatrix):
    """Spectral bound and a non-negative eigenvector, by shifted power iteration.

    ``C + cI`` with ``c = max|c_ii| + 1`` is non-negative and its spectral
    radius is ``s(C) + c``; the iterate is polished with one inverse
    iteration step on ``C`` before returning.
    """
    a = np.asarray(c.entries, dtype=float)
    n = a.shape[0]
    shift = float(np.max(np.abs(np.diag(a)))) + 1.0
    shifted = a + shift * np.eye(n)
    v = np.full(n, 1.0 / n)
    for _ in range(POWER_MAX_ITER):
        w = shifted @ v
        w /= w.sum()
        if np.max(np.abs(w - v)) < POWER_TOL:
            v = w
            break
        v = w
    else:
        raise NoConvergence(f"power iteration did not converge in {POWER_MAX_ITER} steps")

    scale = max(1.0, float(np.max(np.abs(a))))
    bound = float((a @ v).sum() / v.sum())
    sigma = bound - 1e-8 * scale
    try:
        y = np.linalg.solve(a - sigma * np.eye(n), v)
        if np.all(np.isfinite(y)) and y.sum() != 0.0:
            y = y / y.sum()
            if np.max(np.abs(a @ y - bound * y)) <= np.max(np.abs(a @ v - bound * v)):
                v = y
    except np.linalg.LinAlgError:
        pass
    v = np.maximum(v, 0.0)
    v /= v.sum()
    bound = float((a @ v).sum() / v.sum())
    return bound, v


def full_spectrum(c) -> np.ndarray:
    """Eigenvalues via Hessenberg reduction and Francis double-shift QR."""
    a = c.entries if isinstance(c, TransitionMatrix) else c
    return linalg.eigenvalues(a)


def right_perron_basis(c: TransitionMatrix, nf: NormalForm) -> list:
    """One kernel vector per closed block, supported exactly on that block."""
    n = c.n
    basis = []
    for block in nf.closed_blocks:
        idx = np.asarray(block.original_indices)
        sub = c.entries[np.ix_(idx, idx)]
        v = np.zeros(n)
        v[idx] = linalg.stationary_vector(sub) if len(idx) > 1 else 1.0
        basis.append(v)
    return basis


def verify_zero_pattern(basis, labels, threshold: float = PERRON_ZERO_TOL) -> bool:
    """True iff every basis vector lives on closed patches only.

    Each vector must exceed ``threshold`` on a non-empty set of closed
    patches and stay below it on every transient patch.
    """
    labels = [Kind(lab) for lab in labels]
    for v in basis:
        v = np.asarray(v, dtype=float)
        if v.shape != (len(labels),):
            return False
        support = v > threshold
        if not support.any():
            return False
        for i, lab in enumerate(labels):
            if lab is Kind.TRANSIENT and v[i] >= threshold:
                return False
    return True


def analyze(c: TransitionMatrix) -> SpectralReport:
    nf = normal_form(c)
    spectrum = full_spectrum(c)
    scale = c.scale
    zero_tol = EIGEN_ZERO_RTOL * scale

    bound = float(np.max(spectrum.real))
    if abs(bound) < zero_tol:
        bound = 0.0
    radius = float(np.max(np.abs(spectrum)))
    basis = right_perron_basis(c, nf)
    default = np.mean(basis, axis=0)
    default = default / default.sum()
    left_residual = float(np.max(np.abs(c.entries.sum(axis=0))))
    rank = linalg.elimination_rank(c.entries)

    return SpectralReport(
        spectrum=spectrum,
        spectral_bound=bound,
        spectral_radius=radius,
        right_perron_basis=tuple(basis),
        default_perron=default,
        left_perron_residual=left_residual,
        zero_multiplicity_geometric=nf.m,
        dominant_is_simple=nf.m == 1,
        kernel_dimension_rank=c.n - rank,
        zero_count_algebraic=int(np.sum(np.abs(spectrum) < zero_tol)),
        normal_form=nf,
    )


def transient_block_bounds(c: TransitionMatrix, nf: NormalForm | None = None) -> list:
    """Spectral bound of every transient diagonal block, in normal-form order."""
    nf = nf if nf is not None else normal_form(c)
    return [float(np.max(full_spectrum(nf.diagonal_block(b)).real)) for b in nf.transient_blocks]

