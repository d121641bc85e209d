"""Averaged single-population model and its deviation from the full model.

When migration is fast, patch shares relax to the stable patch structure
``k`` and the total density obeys a scalar McKendrick equation with
k-weighted rates. :func:`compare` measures how far a full multi-patch run
is from that picture.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, SampleMismatch, ValidationError
from .kolmogorov import validate_kolmogorov
from .simulation import SimulationConfig, Trajectory, VitalRates, simulate
from .spectral import analyze

DEVIATION_FLOOR = 1e-12


@dataclass(frozen=True)
class AveragedModel:
    k: np.ndarray
    rates: VitalRates  # single-patch rates on the shared grid

    @property
    def averaged_mortality(self) -> np.ndarray:
        return self.rates.mortality[0]

    @property
    def averaged_fertility(self) -> np.ndarray:
        return self.rates.fertility[0]

    @property
    def ages(self) -> np.ndarray:
        return self.rates.ages


@dataclass(frozen=True)
class ErrorReport:
    times: np.ndarray
    d_share: np.ndarray
    d_prof: np.ndarray

    def final(self) -> dict:
        return {"t": float(self.times[-1]), "d_share": float(self.d_share[-1]), "d_prof": float(self.d_prof[-1])}


def averaged_rates(rates: VitalRates, k) -> AveragedModel:
    k = np.asarray(k, dtype=float)
    if k.shape != (rates.n,):
        raise DimensionMismatch(f"k has shape {k.shape}, expected ({rates.n},)")
    if np.any(k < 0) or not np.isclose(k.sum(), 1.0, rtol=0, atol=1e-12):
        raise ValidationError("k must be non-negative and sum to one")
    mu = k @ rates.mortality
    beta = k @ rates.fertility
    single = VitalRates(rates.age_max, rates.grid_count, mu[None, :], beta[None, :], rates.fertility_cutoff)
    return AveragedModel(k, single)


def simulate_aggregated(model: AveragedModel, initial, horizon: float, output_stride: int = 1) -> Trajectory:
    """Run the scalar model; migration is inert with a 1x1 zero matrix."""
    config = SimulationConfig(
        matrix=validate_kolmogorov([[0.0]]),
        rates=model.rates,
        epsilon=1.0,
        horizon=horizon,
        initial=np.atleast_2d(np.asarray(initial, dtype=float)),
        output_stride=output_stride,
    )
    return simulate(config)


def compare(full: Trajectory, model: AveragedModel, aggregated: Trajectory) -> ErrorReport:
    """Sample-wise share and profile deviations of ``full`` from ``k * aggregated``.

    ``d_share = ||shares - k||_inf``; ``d_prof = max_i int |u_i - k_i u_bar| da``
    divided by ``int u_bar da`` (floored at 1e-12 of the initial aggregate).
    """
    if len(full.samples) != len(aggregated.samples):
        raise SampleMismatch(
            f"{len(full.samples)} full samples vs {len(aggregated.samples)} aggregated samples"
        )
    k = model.k
    floor = DEVIATION_FLOOR * aggregated.samples[0].total
    times, d_share, d_prof = [], [], []
    for fs, ag in zip(full.samples, aggregated.samples):
        if fs.step != ag.step or not np.isclose(fs.time, ag.time, rtol=0, atol=1e-9):
            raise SampleMismatch(f"sample times differ: {fs.time} vs {ag.time}")
        u = fs.state.values
        ubar = ag.state.values[0]
        if u.shape[1] != ubar.shape[0]:
            raise SampleMismatch("full and aggregated grids differ")
        da = fs.state.da
        times.append(fs.time)
        d_share.append(float(np.max(np.abs(fs.shares - k))))
        gap = np.trapezoid(np.abs(u - np.outer(k, ubar)), dx=da, axis=1)
        d_prof.append(float(np.max(gap) / max(np.trapezoid(ubar, dx=da), floor)))
    return ErrorReport(np.array(times), np.array(d_share), np.array(d_prof))


def run_comparison(config: SimulationConfig, k=None):
    """Full run, averaged model and deviation report for one configuration.

    ``k`` defaults to the uniform mixture of the closed-block Perron vectors.
    """
    if k is None:
        k = analyze(config.matrix).default_perron
    full = simulate(config)
    model = averaged_rates(config.rates, k)
    aggregated = simulate_aggregated(model, config.initial.sum(axis=0), config.horizon, config.output_stride)
    return full, model, aggregated, compare(full, model, aggregated)
