# coding: utf-8
"""
Benchmark harness: simulate replicates of the scenarios, run the known and unknown
number of changepoints pipelines on them and score the estimates with the adjusted
Rand index.
"""
import csv
import dataclasses
import logging
import time

import numpy as np
import scipy.stats as stats

from bcmlr import model, simulation, summaries, tasks
from bcmlr.data import EMBED_POLY2, ChangepointVector, preprocess, project_kappa
from bcmlr.errors import InvalidInputError
from bcmlr.samplers import gibbs
from bcmlr.selection import SelectionConfig, select_num_changepoints

logger = logging.getLogger(__name__)

INPUT_RAW = 'raw'
INPUT_POLY2 = EMBED_POLY2

CSV_COLUMNS = ['scenario', 'variant', 'input_type', 'known_l', 'replicate', 'ari', 'wall_time_seconds']


@dataclasses.dataclass(frozen=True)
class BenchConfig:
    iters: int = 5000
    burn_in: int = 2500
    min_seg: int = 30
    l_fitted: int = 5
    alpha: float = 0.1
    tau: float = 0.5
    zeta: int = 5
    prior: str = model.Prior.KIND_HORSESHOE
    n: int = 600
    kappas: tuple = (100, 500)
    seed: int = 0

    def gibbs_config(self, seed):
        return gibbs.GibbsConfig(iters=self.iters, burn_in=self.burn_in, min_seg=self.min_seg,
                                 prior=model.Prior.resolve(self.prior), seed=seed)

    def selection_config(self):
        return SelectionConfig(l_fitted=self.l_fitted, alpha=self.alpha, tau=self.tau,
                               zeta=self.zeta, min_seg=self.min_seg, refit=True)


@dataclasses.dataclass(frozen=True)
class BenchCase:
    scenario: str
    variant: str
    input_type: str = INPUT_RAW
    known_l: bool = True

    @property
    def embed(self):
        return EMBED_POLY2 if self.input_type == INPUT_POLY2 else None


@dataclasses.dataclass(frozen=True)
class BenchRow:
    scenario: str
    variant: str
    input_type: str
    known_l: bool
    replicate: int
    ari: float
    wall_time_seconds: float


def bench_cases(scenarios=simulation.SCENARIOS, variants=simulation.VARIANTS, known_l=(True, False)):
    """
    Every scenario x variant x known/unknown L combination, on the raw series and,
    for the covariance scenarios, on the degree-2 embedding as well.
    """
    cases = []
    for scenario in scenarios:
        if scenario not in simulation.SCENARIOS:
            raise InvalidInputError(f'unknown scenario {scenario}')
        input_types = [INPUT_RAW]
        if scenario in simulation.EMBEDDED_SCENARIOS:
            input_types.append(INPUT_POLY2)
        for variant in variants:
            for known in known_l:
                for input_type in input_types:
                    cases.append(BenchCase(scenario, variant, input_type, known))
    return cases


def replicate_seeds(seed, replicate):
    "(data seed, chain seed) of a replicate; shared by all cases so they run on the same series."
    data_seq, chain_seq = np.random.SeedSequence(seed, spawn_key=(replicate,)).spawn(2)
    return data_seq, int(chain_seq.generate_state(1)[0])


def estimate_changepoints(x, case: BenchCase, config: BenchConfig, chain_seed):
    gibbs_config = config.gibbs_config(chain_seed)
    n = len(x.values)

    if case.known_l:
        draws = gibbs.run_chain(x, len(config.kappas), gibbs_config)
    else:
        result = select_num_changepoints(x, config.selection_config(), gibbs_config)
        if result.l_hat == 0:
            return ChangepointVector((), n)
        draws = result.refit

    modes = summaries.summarize_kappa(draws).mode
    # marginal modes may fall out of order; project onto a valid configuration
    return project_kappa(modes, n, 1)


def run_replicate(case: BenchCase, replicate, config: BenchConfig):
    data_seq, chain_seed = replicate_seeds(config.seed, replicate)
    spec = simulation.ScenarioSpec(case.scenario, case.variant, config.n, config.kappas)

    start = time.monotonic()
    raw, truth = simulation.generate(spec, np.random.default_rng(data_seq))
    x = preprocess(raw, embed=case.embed, scale=True)
    estimate = estimate_changepoints(x, case, config, chain_seed)
    elapsed = time.monotonic() - start

    ari = simulation.adjusted_rand_index(truth, estimate)
    logger.debug('%s %s replicate %s: estimate %s, ARI %.3f', spec.name, case.input_type,
                 replicate, estimate.kappas, ari)
    return BenchRow(case.scenario, case.variant, case.input_type, case.known_l, replicate, ari, elapsed)


def run_benchmark(cases, replicates, config: BenchConfig = None, threads=None):
    "Run every case on `replicates` simulated series, in parallel over the worker pool."
    if replicates < 1:
        raise InvalidInputError(f'replicates must be positive, got {replicates}')
    config = config or BenchConfig()

    tasks.set_threads(threads)
    jobs = [(case, r, config) for case in cases for r in range(replicates)]
    logger.info('running %s benchmark cases x %s replicates', len(cases), replicates)
    return tasks.map_tasks(run_replicate, jobs)


def summarize_rows(rows):
    """
    Mean and standard error of the ARI per case, in first appearance order. The
    standard error is 0 for a single replicate.
    """
    groups = {}
    for row in rows:
        key = (row.scenario, row.variant, row.input_type, row.known_l)
        groups.setdefault(key, []).append(row.ari)

    table = []
    for (scenario, variant, input_type, known_l), aris in groups.items():
        aris = np.asarray(aris)
        se = float(stats.sem(aris)) if len(aris) > 1 else 0.0
        table.append({'scenario': scenario, 'variant': variant, 'input_type': input_type,
                      'known_l': known_l, 'replicates': len(aris),
                      'mean_ari': float(aris.mean()), 'se_ari': se})
    return table


def write_csv(rows, path):
    with open(path, 'w', newline='', encoding='utf-8') as csv_file:
        writer = csv.writer(csv_file)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([row.scenario, row.variant, row.input_type, int(row.known_l),
                             row.replicate, f'{row.ari:.6f}', f'{row.wall_time_seconds:.3f}'])


def format_table(table):
    lines = [f'{"scenario":<10}{"variant":<9}{"input":<7}{"L":<9}{"R":>4}{"mean ARI":>10}{"se":>8}']
    for entry in table:
        known = 'known' if entry['known_l'] else 'unknown'
        lines.append(f'{entry["scenario"]:<10}{entry["variant"]:<9}{entry["input_type"]:<7}{known:<9}'
                     f'{entry["replicates"]:>4}{entry["mean_ari"]:>10.3f}{entry["se_ari"]:>8.3f}')
    return '\n'.join(lines)
