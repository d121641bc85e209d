import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from popkolmo import (
    NonFiniteState,
    PopulationState,
    SimulationConfig,
    VitalRates,
    analyze,
    from_offdiagonal_rates,
    patch_shares,
    renewal_boundary,
    simulate,
    step,
    validate_kolmogorov,
)
from popkolmo.errors import EmptyPopulation, GridMismatch, ValidationError
from popkolmo.simulation import migration_propagator, resample

from oracles import random_irreducible_rates

ZERO2 = validate_kolmogorov(np.zeros((2, 2)))


def flat_rates(n, grid_count, age_max, mu=0.0, beta=0.0, cutoff=None):
    nodes = grid_count + 1
    return VitalRates(age_max, grid_count, np.full((n, nodes), mu), np.full((n, nodes), beta), cutoff)


def boxcar(ages, lo, hi):
    return np.where((ages >= lo - 1e-12) & (ages <= hi + 1e-12), 1.0, 0.0)


def test_renewal_zero_fertility():
    rates = flat_rates(2, 10, 5.0)
    state = PopulationState(0.0, rates.ages, np.ones((2, 11)))
    np.testing.assert_array_equal(renewal_boundary(state, rates), [0, 0])


def test_renewal_constant_integrand():
    rates = flat_rates(1, 40, 3.0, beta=1.0)
    state = PopulationState(0.0, rates.ages, np.ones((1, 41)))
    assert renewal_boundary(state, rates)[0] == pytest.approx(3.0, abs=1e-14)


def test_renewal_linear_integrand_is_exact():
    ages = np.linspace(0, 1, 5)
    rates = VitalRates(1.0, 4, np.zeros((1, 5)), ages[None, :], 1.0)
    state = PopulationState(0.0, ages, np.ones((1, 5)))
    assert renewal_boundary(state, rates)[0] == 0.5


def test_fertility_cutoff_is_enforced():
    rates = flat_rates(1, 10, 10.0, beta=1.0, cutoff=4.0)
    assert np.all(rates.fertility[0, rates.ages > 4.0] == 0)
    assert np.all(rates.fertility[0, rates.ages <= 4.0] == 1)


def test_patch_shares_examples():
    ages = np.linspace(0, 2, 21)
    u = np.exp(-ages)
    assert list(patch_shares(PopulationState(0, ages, np.array([u, u])))) == [0.5, 0.5]
    assert list(patch_shares(PopulationState(0, ages, np.array([u, 0 * u])))) == [1.0, 0.0]
    np.testing.assert_allclose(patch_shares(PopulationState(0, ages, np.array([2 * u, u]))), [2 / 3, 1 / 3])
    with pytest.raises(EmptyPopulation):
        patch_shares(PopulationState(0, ages, np.zeros((2, 21))))


def test_step_pure_transport_shifts_boxcar():
    rates = flat_rates(2, 100, 10.0)
    phi = np.array([boxcar(rates.ages, 1.0, 2.0), 3 * boxcar(rates.ages, 0.5, 1.0)])
    state = PopulationState(0.0, rates.ages, phi)
    prop = migration_propagator(ZERO2, rates.da, 1.0)
    for k in range(1, 31):
        state = step(state, ZERO2, rates, 1.0, prop)
        np.testing.assert_array_equal(state.values[:, k:], phi[:, : 101 - k])
        assert np.all(state.values[:, :k] == 0)


def test_step_constant_mortality_decay():
    mu = 0.7
    rates = flat_rates(2, 100, 10.0, mu=mu)
    phi = np.array([boxcar(rates.ages, 1.0, 2.0), boxcar(rates.ages, 2.0, 3.0)])
    state = PopulationState(0.0, rates.ages, phi)
    for k in range(1, 41):
        state = step(state, ZERO2, rates, 1.0)
        expected = phi[:, : 101 - k] * math.exp(-mu * k * rates.da)
        np.testing.assert_allclose(state.values[:, k:], expected, rtol=1e-13, atol=0)


def test_step_migration_relaxation():
    c = validate_kolmogorov([[-1, 1], [1, -1]])
    rates = flat_rates(2, 50, 5.0)
    ages = rates.ages
    phi = np.array([boxcar(ages, 1, 2), np.zeros_like(ages)])
    state = PopulationState(0.0, ages, phi)
    diff0 = phi[0] - phi[1]
    total0 = state.total()
    for k in range(1, 11):
        state = step(state, c, rates, 1.0)
        diff = state.values[0] - state.values[1]
        np.testing.assert_allclose(diff[k:], diff0[:-k] * math.exp(-2 * k * rates.da), atol=1e-14)
        assert state.total() == pytest.approx(total0, rel=1e-14)


def test_step_grid_mismatch():
    rates = flat_rates(2, 10, 1.0)
    with pytest.raises(GridMismatch):
        step(PopulationState(0.0, np.linspace(0, 1, 12), np.ones((2, 12))), ZERO2, rates, 1.0)


def test_simulate_horizon_zero():
    rates = flat_rates(2, 10, 1.0)
    traj = simulate(SimulationConfig(ZERO2, rates, 1.0, 0.0, np.ones((2, 11))))
    assert len(traj.samples) == 1 and traj.final.time == 0.0


def test_simulate_conserves_mass_for_pure_transport():
    rates = flat_rates(2, 200, 10.0)
    phi = np.array([boxcar(rates.ages, 1, 3), np.exp(-((rates.ages - 2) ** 2)) * boxcar(rates.ages, 0.5, 3.5)])
    traj = simulate(SimulationConfig(ZERO2, rates, 1.0, 5.0, phi, output_stride=7))
    np.testing.assert_allclose(traj.totals, traj.totals[0], rtol=1e-12, atol=0)
    assert traj.final.step == 100
    assert traj.final.time == 5.0


def test_simulate_samples_by_stride():
    rates = flat_rates(1, 10, 1.0)
    traj = simulate(SimulationConfig(validate_kolmogorov([[0.0]]), rates, 1.0, 0.5, np.ones((1, 11)), 2))
    assert [s.step for s in traj.samples] == [0, 2, 4, 5]


def test_simulate_irreducible_shares_approach_perron_vector():
    rng = np.random.default_rng(0)
    c = from_offdiagonal_rates(random_irreducible_rates(rng, 3))
    k = analyze(c).default_perron
    ages = np.linspace(0, 10, 201)
    mu = np.array([0.05 + 0.01 * ages, 0.2 + 0 * ages, 0.1 + 0.03 * ages])
    beta = np.array([np.where((ages > 2) & (ages < 6), f, 0.0) for f in (0.3, 0.5, 0.2)])
    rates = VitalRates(10.0, 200, mu, beta, 6.0)
    phi = np.array([np.exp(-ages), 0 * ages, boxcar(ages, 1, 3)])
    traj = simulate(SimulationConfig(c, rates, 1e-3, 10.0, phi, 50))
    assert np.max(np.abs(traj.final.shares - k)) < 1e-3


def test_simulate_non_finite():
    rates = flat_rates(1, 10, 1.0, beta=1e300)
    with pytest.raises(NonFiniteState) as err:
        simulate(SimulationConfig(validate_kolmogorov([[0.0]]), rates, 1.0, 10.0, np.ones((1, 11))))
    assert err.value.details["step"] >= 1


def test_config_validation():
    rates = flat_rates(2, 10, 1.0)
    with pytest.raises(ValidationError):
        SimulationConfig(ZERO2, rates, 0.0, 1.0, np.ones((2, 11)))
    with pytest.raises(ValidationError):
        SimulationConfig(ZERO2, rates, 1.0, 1.0, np.zeros((2, 11)))
    with pytest.raises(ValidationError):
        SimulationConfig(validate_kolmogorov([[0.0]]), rates, 1.0, 1.0, np.ones((2, 11)))


def test_resample_linear():
    ages = np.linspace(0, 4, 5)
    np.testing.assert_allclose(resample([[1, 0], [3, 2]], ages), [0, 0, 1, 2, 2])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1.0))
def test_positivity_and_node_conservation(seed, eps):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    c = from_offdiagonal_rates(random_irreducible_rates(rng, n))
    rates = flat_rates(n, 30, 3.0)
    state = PopulationState(0.0, rates.ages, rng.uniform(0, 1, (n, 31)))
    prop = migration_propagator(c, rates.da, eps)
    for _ in range(5):
        new = step(state, c, rates, eps, prop)
        assert np.all(new.values >= 0)
        np.testing.assert_allclose(new.values[:, 1:].sum(axis=0), state.values[:, :-1].sum(axis=0), rtol=1e-12)
        state = new
    mortal = VitalRates(3.0, 30, rng.uniform(0, 5, (n, 31)), rng.uniform(0, 5, (n, 31)))
    for _ in range(5):
        state = step(state, c, mortal, eps, prop)
        assert np.all(state.values >= 0)
