"""Age-structured multi-patch population model.

Solves ``u_t + u_a = -M(a) u + (1/eps) C u`` on ``0 <= a <= age_max`` with
the renewal condition ``u(0, t) = int B(a) u(a, t) da`` and ``u(a, 0) = phi(a)``.

The time step equals the age step, so transport is an exact shift along
characteristics. Each step applies, in order: shift, mortality, migration,
births (Lie splitting, first order in the step).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimensionMismatch, EmptyPopulation, GridMismatch, NonFiniteState, ValidationError
from .kolmogorov import TransitionMatrix, matrix_exponential


def resample(breakpoints, ages) -> np.ndarray:
    """Piecewise-linear interpolation of ``[[a, value], ...]`` onto ``ages``.

    Values are held constant outside the first and last breakpoint.
    """
    pts = np.asarray(breakpoints, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) == 0:
        raise ValidationError("breakpoints must be a non-empty list of [age, value] pairs")
    if np.any(np.diff(pts[:, 0]) < 0):
        raise ValidationError("breakpoint ages must be non-decreasing")
    return np.interp(ages, pts[:, 0], pts[:, 1])


def _table(values, n_nodes, name):
    arr = np.array(values, dtype=float, copy=True)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != n_nodes:
        raise GridMismatch(f"{name} must have shape (n_patches, {n_nodes}), got {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ValidationError(f"{name} must be finite and non-negative")
    return arr


@dataclass(frozen=True)
class VitalRates:
    """Per-patch mortality and fertility tabulated on a uniform age grid.

    Fertility is zeroed at ages above ``fertility_cutoff``.
    """

    age_max: float
    grid_count: int
    mortality: np.ndarray
    fertility: np.ndarray
    fertility_cutoff: float | None = None

    def __post_init__(self):
        if not self.age_max > 0:
            raise ValidationError("age_max must be positive")
        if int(self.grid_count) < 1:
            raise ValidationError("grid_count must be at least 1")
        object.__setattr__(self, "grid_count", int(self.grid_count))
        nodes = self.grid_count + 1
        mu = _table(self.mortality, nodes, "mortality")
        beta = _table(self.fertility, nodes, "fertility")
        if mu.shape != beta.shape:
            raise DimensionMismatch(f"mortality {mu.shape} and fertility {beta.shape} disagree")
        cutoff = self.age_max if self.fertility_cutoff is None else float(self.fertility_cutoff)
        if cutoff > self.age_max:
            raise ValidationError("fertility_cutoff must not exceed age_max")
        beta[:, self.ages > cutoff] = 0.0
        for arr in (mu, beta):
            arr.setflags(write=False)
        object.__setattr__(self, "mortality", mu)
        object.__setattr__(self, "fertility", beta)
        object.__setattr__(self, "fertility_cutoff", cutoff)

    @classmethod
    def from_breakpoints(cls, age_max, grid_count, mortality, fertility, fertility_cutoff=None):
        ages = np.linspace(0.0, age_max, int(grid_count) + 1)
        mu = [resample(bp, ages) for bp in mortality]
        beta = [resample(bp, ages) for bp in fertility]
        return cls(age_max, grid_count, mu, beta, fertility_cutoff)

    @property
    def n(self) -> int:
        return self.mortality.shape[0]

    @property
    def da(self) -> float:
        return self.age_max / self.grid_count

    @property
    def ages(self) -> np.ndarray:
        return np.linspace(0.0, self.age_max, self.grid_count + 1)


@dataclass(frozen=True)
class PopulationState:
    time: float
    ages: np.ndarray
    values: np.ndarray  # (n_patches, grid_count + 1)

    @property
    def da(self) -> float:
        return float(self.ages[1] - self.ages[0])

    def patch_totals(self) -> np.ndarray:
        return np.trapezoid(self.values, dx=self.da, axis=1)

    def total(self) -> float:
        return float(self.patch_totals().sum())


@dataclass(frozen=True)
class SimulationConfig:
    matrix: TransitionMatrix
    rates: VitalRates
    epsilon: float
    horizon: float
    initial: np.ndarray
    output_stride: int = 1

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValidationError("epsilon must be positive")
        if not self.horizon >= 0:
            raise ValidationError("horizon must be non-negative")
        if int(self.output_stride) < 1:
            raise ValidationError("output_stride must be at least 1")
        if self.matrix.n != self.rates.n:
            raise DimensionMismatch(
                f"matrix has {self.matrix.n} patches, vital rates have {self.rates.n}"
            )
        phi = _table(self.initial, self.rates.grid_count + 1, "initial")
        if phi.shape[0] != self.rates.n:
            raise DimensionMismatch(f"initial profile has {phi.shape[0]} patches, expected {self.rates.n}")
        if not np.any(phi > 0):
            raise ValidationError("initial profile must have at least one positive entry")
        phi.setflags(write=False)
        object.__setattr__(self, "initial", phi)
        object.__setattr__(self, "output_stride", int(self.output_stride))

    def initial_state(self) -> PopulationState:
        return PopulationState(0.0, self.rates.ages, np.array(self.initial))

    def propagator(self) -> np.ndarray:
        return migration_propagator(self.matrix, self.rates.da, self.epsilon)


@dataclass(frozen=True)
class Sample:
    step: int
    time: float
    total: float
    shares: np.ndarray
    state: PopulationState = field(repr=False)


@dataclass
class Trajectory:
    samples: list = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.samples])

    @property
    def totals(self) -> np.ndarray:
        return np.array([s.total for s in self.samples])

    @property
    def shares(self) -> np.ndarray:
        return np.array([s.shares for s in self.samples])

    @property
    def final(self) -> Sample:
        return self.samples[-1]


def migration_propagator(c: TransitionMatrix, dt: float, epsilon: float) -> np.ndarray:
    return matrix_exponential(c, dt / epsilon).entries


def renewal_boundary(state: PopulationState, rates: VitalRates) -> np.ndarray:
    """Newborn density per patch: trapezoid rule for ``int beta_i(a) u_i(a) da``."""
    _check_grid(state, rates)
    return np.trapezoid(rates.fertility * state.values, dx=rates.da, axis=1)


def patch_shares(state: PopulationState) -> np.ndarray:
    totals = state.patch_totals()
    total = totals.sum()
    if not total > 0:
        raise EmptyPopulation("total population is not positive", total=float(total))
    return totals / total


def _check_grid(state, rates):
    if state.values.shape != (rates.n, rates.grid_count + 1) or not np.allclose(
        state.ages, rates.ages, rtol=0, atol=1e-12 * rates.age_max
    ):
        raise GridMismatch(
            f"state shape {state.values.shape} does not match the {rates.n}-patch,"
            f" {rates.grid_count + 1}-node grid"
        )


def step(state: PopulationState, c, rates: VitalRates, epsilon: float, propagator=None) -> PopulationState:
    """Advance one step of length ``da``.

    The newborn node is filled last from the updated profile; it carries
    zero density during the fertility integral.
    """
    _check_grid(state, rates)
    if propagator is None:
        propagator = migration_propagator(c, rates.da, epsilon)
    dt = rates.da
    u = np.empty_like(state.values)
    u[:, 1:] = state.values[:, :-1]
    u[:, 0] = 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        u[:, 1:] *= np.exp(-rates.mortality[:, 1:] * dt)
        u = propagator @ u
        new = PopulationState(state.time + dt, state.ages, u)
        u[:, 0] = renewal_boundary(new, rates)
    return new


def n_steps(horizon: float, dt: float) -> int:
    ratio = horizon / dt
    nearest = round(ratio)
    if abs(ratio - nearest) <= 1e-9 * max(1.0, ratio):
        return int(nearest)
    return math.ceil(ratio)


def _sample(k, state):
    total = state.total()
    shares = patch_shares(state) if total > 0 else np.full(state.values.shape[0], np.nan)
    return Sample(k, state.time, total, shares, state)


def simulate(config: SimulationConfig) -> Trajectory:
    """Run to the horizon, sampling every ``output_stride`` steps.

    The initial and the final state are always sampled.
    """
    rates = config.rates
    prop = config.propagator()
    state = config.initial_state()
    steps = n_steps(config.horizon, rates.da)
    traj = Trajectory([_sample(0, state)])
    for k in range(1, steps + 1):
        state = replace(step(state, config.matrix, rates, config.epsilon, prop), time=k * rates.da)
        if not np.all(np.isfinite(state.values)):
            raise NonFiniteState(f"non-finite density at step {k}", step=k, time=state.time)
        if k % config.output_stride == 0 or k == steps:
            traj.samples.append(_sample(k, state))
    return traj
