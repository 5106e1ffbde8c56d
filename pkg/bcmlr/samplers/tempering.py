# coding: utf-8
"""
Non reversible parallel tempering. Replica k targets the tempered posterior
pi_t(theta) ~ exp(-t * loss(theta)) pi(theta) at power t_k; every round each replica
does one tempered Gibbs sweep and then adjacent replicas try to swap states, pairs
(1,2),(3,4),... on even rounds and (2,3),(4,5),... on odd rounds.

The schedule is a fixed geometric grid. Automated schedule tuning isn't done here;
`TemperedRun.rejection_rates` reports the mean rejection per adjacent pair so a
schedule can be retuned by hand.
"""
import dataclasses
import logging
from typing import Optional

import numpy as np

from bcmlr import model
from bcmlr.errors import InvalidInputError
from bcmlr.samplers import gibbs
from bcmlr.samplers.gibbs import ChainData, ChainState, DrawRecorder, GibbsConfig

logger = logging.getLogger(__name__)

DEFAULT_NUM_POWERS = 6
DEFAULT_MIN_POWER = 0.1


@dataclasses.dataclass
class TemperSchedule:
    powers: tuple
    swap_round: int = 0

    def __post_init__(self):
        powers = tuple(float(t) for t in self.powers)
        if not powers or powers[-1] != 1.0:
            raise InvalidInputError(f'tempering powers must end at exactly 1, got {powers}')
        if any(t <= 0 or t > 1 for t in powers) or any(a >= b for a, b in zip(powers, powers[1:])):
            raise InvalidInputError(f'tempering powers must be strictly increasing in (0, 1], got {powers}')
        self.powers = powers

    @classmethod
    def geometric(cls, num_powers=DEFAULT_NUM_POWERS, min_power=DEFAULT_MIN_POWER):
        "t_k = r^(K-k) with r chosen so the smallest power is `min_power`."
        if num_powers == 1:
            return cls((1.0,))
        ratio = min_power ** (1 / (num_powers - 1))
        return cls(tuple(ratio ** (num_powers - k) for k in range(1, num_powers)) + (1.0,))

    @property
    def size(self):
        return len(self.powers)

    def swap_pairs(self):
        "Adjacent pairs (0-based, lower power first) tried on the current round."
        start = self.swap_round % 2
        return [(k, k + 1) for k in range(start, self.size - 1, 2)]


@dataclasses.dataclass
class Replica:
    state: ChainState
    rng: np.random.Generator
    replica_id: int


@dataclasses.dataclass
class TemperedRun:
    """
    Output of `run_tempered`: draws of the power-1 replica, the per-pair mean rejection
    probabilities and, for every round, which replica sat at each power.
    """
    draws: object
    rejection_rates: np.ndarray
    placements: Optional[np.ndarray] = None


def tempered_sweep(replica: Replica, power, data: ChainData, config: GibbsConfig):
    """
    One Gibbs sweep against pi_t: omega ~ PG(t, eta), delta_j = t (y_j - 1/2) and the
    changepoint likelihood raised to t. The priors are not tempered.
    """
    if not 0 < power <= 1:
        raise InvalidInputError(f'tempering power must be in (0, 1], got {power}')
    gibbs.sweep(replica.state, data, config, replica.rng, power=power)
    return replica


def tempered_loss(kappa, betas, x, power, mask=None):
    "-log of the product of the tempered class probabilities q^t."
    log_q = model.log_class_probs(x, betas) * power
    own = log_q[np.arange(kappa.n), kappa.classes()]
    if mask is not None:
        own = own[mask]
    return -float(own.sum())


def log_swap_ratio(loss_a, power_a, loss_b, power_b):
    """
    log A for exchanging the states of two replicas. With pi_t ~ exp(-t loss) pi,
    the priors cancel out of the four density ratio and
    log A = (t_a - t_b) (loss(theta_a) - loss(theta_b)), with untempered losses.
    """
    return (power_a - power_b) * (loss_a - loss_b)


def swap_probability(theta_a: ChainState, power_a, theta_b: ChainState, power_b, x=None, mask=None):
    """
    Metropolis acceptance probability min(1, A) of swapping the states held at powers
    `power_a` and `power_b`. Losses are recomputed when the data is given, otherwise
    the losses cached in the states are used.
    """
    if power_a == power_b:
        raise InvalidInputError('swap needs two different powers')
    if x is not None:
        data = ChainData.build(x, mask)
        loss_a, loss_b = gibbs.state_loss(theta_a, data), gibbs.state_loss(theta_b, data)
    else:
        loss_a, loss_b = theta_a.loss, theta_b.loss
    return float(np.exp(min(0.0, log_swap_ratio(loss_a, power_a, loss_b, power_b))))


def replica_rngs(seed, num_powers):
    """
    Per replica generators plus the swap decision generator. The replica at power 1
    uses stream 0, the same one a plain chain with this seed uses.
    """
    rngs = [gibbs.chain_rng(seed, num_powers - 1 - k) for k in range(num_powers)]
    return rngs, gibbs.chain_rng(seed, num_powers)


def run_tempered(x, num_changepoints, config: GibbsConfig, schedule: TemperSchedule = None,
                 fit_mask=None, track_placements=False):
    """
    Run the tempered system for `config.iters` rounds and keep the draws of the
    power 1 replica. With a single power this is exactly `gibbs.run_chain`. The swap
    rounds are counted on a copy, so a schedule can be reused across runs.
    """
    schedule = dataclasses.replace(schedule or TemperSchedule.geometric(), swap_round=0)
    data = ChainData.build(x, fit_mask)
    gibbs.check_feasible(data.n, num_changepoints, config.min_seg)

    rngs, swap_rng = replica_rngs(config.seed, schedule.size)
    initial = gibbs.initial_state(data, num_changepoints, config)
    # slots[k] is the replica currently at power k
    slots = [Replica(initial.copy(), rngs[k], k) for k in range(schedule.size)]
    recorder = DrawRecorder(data, num_changepoints, config, initial.hs is not None)

    rejections = np.zeros(max(schedule.size - 1, 0))
    attempts = np.zeros(max(schedule.size - 1, 0))
    placements = np.empty((config.iters, schedule.size), dtype=int) if track_placements else None

    for iteration in range(config.iters):
        for power, replica in zip(schedule.powers, slots):
            tempered_sweep(replica, power, data, config)

        for low, high in schedule.swap_pairs():
            accept = swap_probability(slots[low].state, schedule.powers[low],
                                      slots[high].state, schedule.powers[high])
            rejections[low] += 1 - accept
            attempts[low] += 1
            if swap_rng.random() < accept:
                # states move between powers, random streams stay with their power
                slots[low].state, slots[high].state = slots[high].state, slots[low].state
                slots[low].replica_id, slots[high].replica_id = slots[high].replica_id, slots[low].replica_id

        schedule.swap_round += 1
        if placements is not None:
            placements[iteration] = [replica.replica_id for replica in slots]
        recorder.record(iteration, slots[-1].state)

    rates = np.divide(rejections, attempts, out=np.zeros_like(rejections), where=attempts > 0)
    logger.debug('tempered run over powers %s, rejection rates %s', schedule.powers, rates.round(3).tolist())
    return TemperedRun(recorder.draws(powers=list(schedule.powers)), rates, placements)
