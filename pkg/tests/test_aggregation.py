import math

import numpy as np
import pytest
from scipy.integrate import quad

from popkolmo import (
    SimulationConfig,
    analyze,
    VitalRates,
    averaged_rates,
    compare,
    from_offdiagonal_rates,
    simulate,
    simulate_aggregated,
    validate_kolmogorov,
)
from popkolmo.aggregation import run_comparison
from popkolmo.errors import DimensionMismatch, SampleMismatch


def const_rates(mu, beta, grid_count=100, age_max=10.0, cutoff=None):
    nodes = grid_count + 1
    mu = np.outer(np.atleast_1d(mu), np.ones(nodes))
    beta = np.outer(np.atleast_1d(beta), np.ones(nodes))
    return VitalRates(age_max, grid_count, mu, beta, cutoff)


def test_averaged_rates_examples():
    m = averaged_rates(const_rates([1.0, 3.0], [0.0, 0.0]), [0.5, 0.5])
    np.testing.assert_allclose(m.averaged_mortality, 2.0)
    rates = const_rates([1.0, 3.0], [0.2, 0.7])
    m = averaged_rates(rates, [1.0, 0.0])
    np.testing.assert_array_equal(m.averaged_mortality, rates.mortality[0])
    np.testing.assert_array_equal(m.averaged_fertility, rates.fertility[0])
    m = averaged_rates(const_rates([0.0, 0.0], [0.0, 3.0], cutoff=4.0), [2 / 3, 1 / 3])
    ages = m.ages
    np.testing.assert_allclose(m.averaged_fertility[ages <= 4.0], 1.0)
    assert np.all(m.averaged_fertility[ages > 4.0] == 0)


def test_averaged_rates_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        averaged_rates(const_rates([1.0, 3.0], [0.0, 0.0]), [1.0])


def test_aggregated_pure_transport():
    m = averaged_rates(const_rates([0.0], [0.0]), [1.0])
    phi = np.where((m.ages >= 1) & (m.ages <= 2), 1.0, 0.0)
    traj = simulate_aggregated(m, phi, 3.0)
    np.testing.assert_array_equal(traj.final.state.values[0, 30:], phi[:-30])


def test_aggregated_constant_mortality_decay():
    mu = 0.3
    m = averaged_rates(const_rates([mu], [0.0]), [1.0])
    phi = np.where((m.ages >= 1) & (m.ages <= 2), 1.0, 0.0)
    traj = simulate_aggregated(m, phi, 5.0, output_stride=10)
    np.testing.assert_allclose(traj.totals, traj.totals[0] * np.exp(-mu * traj.times), rtol=1e-12)


@pytest.mark.parametrize("fertility", [0.4, 0.6])
def test_aggregated_growth_sign_follows_net_reproduction(fertility):
    mu, lo, hi = 0.2, 1.0, 4.0
    r0, _ = quad(lambda a: fertility * math.exp(-mu * a), lo, hi)
    ages = np.linspace(0, 10, 201)
    beta = np.where((ages >= lo) & (ages <= hi), fertility, 0.0)
    rates = VitalRates(10.0, 200, np.full((1, 201), mu), beta[None, :])
    m = averaged_rates(rates, [1.0])
    traj = simulate_aggregated(m, np.exp(-ages), 80.0, output_stride=200)
    growth = traj.totals[-1] / traj.totals[-2]
    assert (growth > 1) == (r0 > 1)


def test_compare_single_patch_is_exact():
    c = validate_kolmogorov([[0.0]])
    rates = const_rates([0.1], [0.3], cutoff=5.0)
    phi = np.exp(-rates.ages)[None, :]
    full, model, agg, rep = run_comparison(SimulationConfig(c, rates, 0.5, 5.0, phi, 10))
    assert np.all(rep.d_share == 0)
    assert np.max(rep.d_prof) < 1e-14


def test_compare_proportional_start_keeps_shares():
    c = from_offdiagonal_rates([[0, 1.0, 0.5], [2.0, 0, 1.5], [0.5, 1.0, 0]])
    k = analyze(c).default_perron
    ages = np.linspace(0, 10, 101)
    mu = np.tile(0.05 + 0.02 * ages, (3, 1))
    beta = np.tile(np.where((ages > 2) & (ages < 6), 0.5, 0.0), (3, 1))
    rates = VitalRates(10.0, 100, mu, beta, 6.0)
    phi = np.outer(k, np.exp(-ages / 3))
    _, _, _, rep = run_comparison(SimulationConfig(c, rates, 0.1, 10.0, phi, 5))
    assert np.max(rep.d_share) < 1e-10
    assert np.max(rep.d_prof) < 1e-10


def test_compare_smaller_epsilon_is_closer():
    c = from_offdiagonal_rates([[0, 1.0, 0.5], [2.0, 0, 1.5], [0.5, 1.0, 0]])
    ages = np.linspace(0, 10, 201)
    mu = np.array([0.05 + 0.01 * ages, 0.1 + 0.02 * ages, 0.2 + 0.005 * ages])
    beta = np.tile(np.where((ages > 2) & (ages < 6), 0.4, 0.0), (3, 1))
    rates = VitalRates(10.0, 200, mu, beta, 6.0)
    phi = np.array([np.exp(-ages / 3), 0.5 * np.exp(-ages / 2), 0 * ages])
    finals = [run_comparison(SimulationConfig(c, rates, e, 20.0, phi, 50))[3].d_share[-1] for e in (1e-2, 1e-3)]
    assert finals[1] < finals[0]


def test_compare_sample_mismatch():
    rates = const_rates([0.1, 0.1], [0.0, 0.0])
    c = validate_kolmogorov([[-1, 1], [1, -1]])
    phi = np.ones((2, 101))
    full = simulate(SimulationConfig(c, rates, 1.0, 1.0, phi, 1))
    m = averaged_rates(rates, [0.5, 0.5])
    agg = simulate_aggregated(m, phi.sum(axis=0), 1.0, output_stride=2)
    with pytest.raises(SampleMismatch):
        compare(full, m, agg)
