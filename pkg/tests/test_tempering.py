# coding: utf-8

import numpy as np
import pytest
import scipy.stats as stats

from bcmlr import model, simulation
from bcmlr.data import ChangepointVector
from bcmlr.errors import InvalidInputError
from bcmlr.samplers import gibbs, tempering
from bcmlr.samplers.gibbs import ChainState, GibbsConfig
from bcmlr.samplers.tempering import TemperSchedule
from tests.conftest import mean_shift_series, quick_config
from tests.test_gibbs import TINY_X, empirical_kappa, exact_kappa_posterior, total_variation


def random_state(rng, n, p, kappas):
    betas = np.vstack([rng.normal(size=(len(kappas), p)), np.zeros((1, p))])
    kappa = ChangepointVector(kappas, n)
    return ChainState(bounds=kappa.boundaries, betas=betas, omega=np.ones((n, len(kappas))))


def state_kappa(state):
    return ChangepointVector(tuple(state.kappas), int(state.bounds[-1]))


def log_tempered_density(state, power, x):
    "log pi_t up to a constant: -t * loss plus the Gaussian and changepoint log priors."
    kappa = state_kappa(state)
    log_prior = stats.norm.logpdf(state.betas[:-1], scale=np.sqrt(model.DEFAULT_PRIOR_VARIANCE)).sum()
    return -tempering.tempered_loss(kappa, state.betas, x, power) + log_prior + model.kappa_log_prior(kappa)


def test_geometric_schedule():
    schedule = TemperSchedule.geometric(6, 0.1)
    assert schedule.size == 6
    assert schedule.powers[0] == pytest.approx(0.1)
    assert schedule.powers[-1] == 1.0
    ratios = np.array(schedule.powers[1:]) / np.array(schedule.powers[:-1])
    assert np.allclose(ratios, ratios[0]), 'powers should be geometrically spaced'

    assert TemperSchedule.geometric(1).powers == (1.0,)


def test_schedule_validation():
    with pytest.raises(InvalidInputError):
        TemperSchedule((0.5, 0.9))

    with pytest.raises(InvalidInputError):
        TemperSchedule((0.5, 0.3, 1.0))

    with pytest.raises(InvalidInputError):
        TemperSchedule((0.0, 1.0))


def test_swap_pairs_alternate():
    schedule = TemperSchedule((0.2, 0.4, 0.6, 0.8, 1.0))
    assert schedule.swap_pairs() == [(0, 1), (2, 3)]
    schedule.swap_round += 1
    assert schedule.swap_pairs() == [(1, 2), (3, 4)]


def test_tempered_loss(rng):
    x = rng.normal(size=(20, 2))
    state = random_state(rng, 20, 2, (7, 13))
    kappa = state_kappa(state)
    assert tempering.tempered_loss(kappa, state.betas, x, 0.3) == pytest.approx(0.3 * model.loss(kappa, state.betas, x))
    assert tempering.tempered_loss(kappa, state.betas, x, 1.0) == pytest.approx(model.loss(kappa, state.betas, x))


def test_swap_ratio_matches_densities(rng):
    x = rng.normal(size=(24, 2))
    for _ in range(50):
        theta_a = random_state(rng, 24, 2, tuple(sorted(rng.choice(np.arange(1, 24), 2, replace=False))))
        theta_b = random_state(rng, 24, 2, tuple(sorted(rng.choice(np.arange(1, 24), 2, replace=False))))
        t_a, t_b = sorted(rng.uniform(0.05, 1.0, size=2))

        direct = (log_tempered_density(theta_b, t_a, x) + log_tempered_density(theta_a, t_b, x)
                  - log_tempered_density(theta_a, t_a, x) - log_tempered_density(theta_b, t_b, x))
        loss_a = model.loss(state_kappa(theta_a), theta_a.betas, x)
        loss_b = model.loss(state_kappa(theta_b), theta_b.betas, x)
        assert tempering.log_swap_ratio(loss_a, t_a, loss_b, t_b) == pytest.approx(direct, abs=1e-10)

        expected = np.exp(min(0.0, direct))
        assert tempering.swap_probability(theta_a, t_a, theta_b, t_b, x=x) == pytest.approx(expected, abs=1e-10)


def test_identical_states_always_swap(rng):
    x = rng.normal(size=(16, 1))
    state = random_state(rng, 16, 1, (8,))
    assert tempering.swap_probability(state, 0.2, state.copy(), 1.0, x=x) == 1.0

    with pytest.raises(InvalidInputError):
        tempering.swap_probability(state, 0.5, state, 0.5, x=x)


def test_small_power_conditional_is_prior(rng):
    x = rng.normal(size=(15, 2)) * 3
    betas = np.vstack([rng.normal(size=(1, 2)) * 4, np.zeros((1, 2))])
    conditional = gibbs.kappa_full_conditional(0, ChangepointVector((7,), 15), betas, x, power=1e-6)

    prior = np.exp([model.kappa_log_prior(ChangepointVector((k,), 15)) for k in conditional.support])
    prior /= prior.sum()
    assert np.allclose(conditional.probs, prior, atol=1e-4)


def test_single_power_is_plain_chain(rng):
    x = mean_shift_series(rng, n=60, kappas=(30,))
    config = quick_config(iters=120, burn_in=60)

    plain = gibbs.run_chain(x, 1, config)
    tempered = tempering.run_tempered(x, 1, config, TemperSchedule((1.0,)))

    assert np.array_equal(plain.kappa_draws, tempered.draws.kappa_draws)
    assert np.array_equal(plain.beta_draws, tempered.draws.beta_draws)
    assert np.array_equal(plain.loss_trace, tempered.draws.loss_trace)
    assert tempered.rejection_rates.size == 0


def test_tempered_run(rng):
    x = mean_shift_series(rng, n=80, kappas=(40,))
    schedule = TemperSchedule.geometric(4, 0.2)
    run = tempering.run_tempered(x, 1, quick_config(iters=100, burn_in=50), schedule, track_placements=True)

    assert run.draws.num_draws == 50
    assert run.draws.meta['powers'] == list(schedule.powers)
    assert run.rejection_rates.shape == (3,)
    assert np.all((run.rejection_rates >= 0) & (run.rejection_rates <= 1))

    assert run.placements.shape == (100, 4)
    for row in run.placements:
        assert sorted(row.tolist()) == [0, 1, 2, 3], 'every replica should sit at exactly one power'

    again = tempering.run_tempered(x, 1, quick_config(iters=100, burn_in=50), TemperSchedule.geometric(4, 0.2))
    assert np.array_equal(run.draws.kappa_draws, again.draws.kappa_draws)


def test_schedule_can_be_reused(rng):
    x = mean_shift_series(rng, n=60, kappas=(30,))
    config = quick_config(iters=41, burn_in=20)
    schedule = TemperSchedule.geometric(3, 0.3)

    first = tempering.run_tempered(x, 1, config, schedule)
    assert schedule.swap_round == 0, "the caller's schedule should be left alone"
    second = tempering.run_tempered(x, 1, config, schedule)
    assert np.array_equal(first.draws.kappa_draws, second.draws.kappa_draws)
    assert np.array_equal(first.draws.beta_draws, second.draws.beta_draws)
    assert np.array_equal(first.rejection_rates, second.rejection_rates)


def test_swap_acceptance_falls_with_power_gap(rng):
    x = mean_shift_series(rng, n=80, kappas=(40,))
    data = gibbs.ChainData.build(x)
    config = quick_config()

    hot, cold = gibbs.initial_state(data, 1, config), gibbs.initial_state(data, 1, config)
    pairs = []
    for _ in range(300):
        gibbs.sweep(hot, data, config, rng, power=0.2)
        gibbs.sweep(cold, data, config, rng)
        pairs.append((hot.loss, cold.loss))

    acceptance = [np.mean([np.exp(min(0.0, tempering.log_swap_ratio(hot_loss, 1 - gap, cold_loss, 1.0)))
                           for hot_loss, cold_loss in pairs])
                  for gap in (0.05, 0.2, 0.4, 0.8)]
    assert np.all(np.diff(acceptance) <= 0), acceptance
    assert acceptance[-1] < acceptance[0]


def test_tempered_sweep_rejects_bad_power(rng):
    x = rng.normal(size=(10, 1))
    data = gibbs.ChainData.build(x)
    config = quick_config(min_seg=1)
    replica = tempering.Replica(gibbs.initial_state(data, 1, config), rng, 0)
    with pytest.raises(InvalidInputError):
        tempering.tempered_sweep(replica, 0.0, data, config)


@pytest.mark.slow
def test_tempered_posterior_exact():
    exact = exact_kappa_posterior(TINY_X)
    run = tempering.run_tempered(TINY_X, 1, GibbsConfig(iters=60_000, burn_in=2000, seed=2),
                                 TemperSchedule.geometric(4, 0.2))
    assert total_variation(empirical_kappa(run.draws, 10), exact) < 0.03


@pytest.mark.slow
def test_bimodal_instance_visits_both_modes():
    x, (first, second) = simulation.bimodal_instance(rng=np.random.default_rng(4))
    config = GibbsConfig(iters=6000, burn_in=1000, min_seg=5, seed=5)
    run = tempering.run_tempered(x, 1, config, TemperSchedule.geometric(6, 0.05))

    kappas = run.draws.kappa_draws[:, 0]
    for mode in (first.kappas[0], second.kappas[0]):
        assert np.mean(np.abs(kappas - mode) <= 3) > 0.1, f'tempered chain never settled near {mode}'

    plain = gibbs.run_chain(x, 1, config).kappa_draws[:, 0]
    occupancy = [np.mean(np.abs(plain - mode) <= 3) for mode in (first.kappas[0], second.kappas[0])]
    assert min(occupancy) < 0.1, f'the plain chain should stay in one mode, visited {occupancy}'
