"""Seeded random selection instances and guarantee benchmarking.

Backs the `select-bench` CLI subcommand and the acceptance suite: generates
small random selection problems, runs greedy against the exhaustive optimum,
and checks the approximation-ratio, belief-distance, and value-loss bounds on
each instance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pbvi import backup, initialize_value, sample_beliefs_uniform, solve
from .pomdp import Belief, InfoSource, Pomdp
from .selection import (
    GREEDY_GUARANTEE,
    SelectionProblem,
    brute_force_optimal,
    check_distance_bound,
    check_value_bound,
    generalized_greedy,
)

__all__ = [
    "BenchConfig",
    "BenchRow",
    "random_pomdp",
    "random_selection_problem",
    "evaluate_instance",
    "run_bench",
    "bench_csv_lines",
    "min_ratio",
]


@dataclass(frozen=True)
class BenchConfig:
    """Caps for random instances; defaults keep exhaustive search cheap."""

    max_states: int = 6
    max_sources: int = 10
    max_symbols: int = 3
    beta: float = 1.0
    discount: float = 0.9
    solver_points: int = 16
    solver_tol: float = 1e-3
    solver_max_iter: int = 500


def random_pomdp(
    rng: np.random.Generator,
    num_states: int,
    num_actions: int,
    num_observations: int,
    discount: float,
) -> Pomdp:
    return Pomdp(
        transition=rng.dirichlet(np.ones(num_states), size=(num_states, num_actions)),
        observation=rng.dirichlet(np.ones(num_observations), size=(num_states, num_actions)),
        reward=rng.uniform(-1.0, 1.0, size=(num_states, num_actions)),
        discount=discount,
    )


def random_selection_problem(
    rng: np.random.Generator,
    num_states: int,
    num_actions: int,
    config: BenchConfig,
) -> SelectionProblem:
    n = int(rng.integers(2, config.max_sources + 1))
    sources = []
    for _ in range(n):
        m = int(rng.integers(2, config.max_symbols + 1))
        sources.append(
            InfoSource(
                likelihood=rng.dirichlet(np.ones(m), size=(num_states, num_actions)),
                cost=float(rng.uniform(0.2, 1.2)),
            )
        )
    total_cost = sum(src.cost for src in sources)
    return SelectionProblem(
        belief=Belief(rng.dirichlet(np.ones(num_states))),
        action=int(rng.integers(num_actions)),
        sources=tuple(sources),
        budget=float(rng.uniform(0.05, 1.05) * total_cost),
        beta=config.beta,
    )


@dataclass(frozen=True)
class BenchRow:
    """Per-instance benchmark results, one CSV row."""

    seed: int
    n: int
    budget: float
    greedy_utility: float
    optimal_utility: float
    ratio: float
    theorem1_pass: bool
    theorem2_pass: bool
    theorem3_pass: bool


def evaluate_instance(
    base_seed: int,
    index: int,
    config: BenchConfig = BenchConfig(),
    one_backup_value_check: bool = False,
) -> BenchRow | tuple[BenchRow, bool]:
    """Run all three guarantee checks on the instance (base_seed, index).

    The value-loss check uses a fully solved value function on the instance's
    random model; with one_backup_value_check the same check also runs against
    a single-backup value function and its verdict is returned alongside.
    """
    rng = np.random.default_rng([base_seed, index])
    num_states = int(rng.integers(2, config.max_states + 1))
    num_actions = int(rng.integers(2, 4))
    num_observations = int(rng.integers(2, config.max_states + 1))
    pomdp = random_pomdp(rng, num_states, num_actions, num_observations, config.discount)
    problem = random_selection_problem(rng, num_states, num_actions, config)

    greedy = generalized_greedy(problem)
    optimal = brute_force_optimal(problem)
    ratio = 1.0 if optimal.utility <= 0.0 else greedy.utility / optimal.utility
    t1 = greedy.utility >= GREEDY_GUARANTEE * optimal.utility - 1e-9

    prior = problem.belief
    distance = check_distance_bound(problem, prior, greedy=greedy, optimal=optimal)

    points = sample_beliefs_uniform(num_states, config.solver_points, seed=index)
    vf = solve(pomdp, points, tol=config.solver_tol, max_iter=config.solver_max_iter).value_function
    value_report = check_value_bound(vf, problem, prior, pomdp, greedy=greedy, optimal=optimal)

    row = BenchRow(
        seed=index,
        n=problem.num_sources,
        budget=problem.budget,
        greedy_utility=greedy.utility,
        optimal_utility=optimal.utility,
        ratio=ratio,
        theorem1_pass=bool(t1),
        theorem2_pass=distance.passed,
        theorem3_pass=value_report.passed,
    )
    if not one_backup_value_check:
        return row
    vf1 = backup(pomdp, initialize_value(pomdp), points)
    one_backup = check_value_bound(vf1, problem, prior, pomdp, greedy=greedy, optimal=optimal)
    return row, one_backup.passed


def run_bench(
    num_instances: int,
    base_seed: int = 0,
    config: BenchConfig = BenchConfig(),
) -> list[BenchRow]:
    return [evaluate_instance(base_seed, i, config) for i in range(num_instances)]


BENCH_CSV_HEADER = "# select-bench v1"
BENCH_CSV_COLUMNS = (
    "seed,n,budget,greedy_utility,optimal_utility,ratio,"
    "theorem1_pass,theorem2_pass,theorem3_pass"
)


def bench_csv_lines(rows: list[BenchRow]) -> list[str]:
    lines = [BENCH_CSV_HEADER, BENCH_CSV_COLUMNS]
    for r in rows:
        lines.append(
            f"{r.seed},{r.n},{r.budget!r},{r.greedy_utility!r},{r.optimal_utility!r},"
            f"{r.ratio!r},{int(r.theorem1_pass)},{int(r.theorem2_pass)},{int(r.theorem3_pass)}"
        )
    return lines


def min_ratio(rows: list[BenchRow]) -> float:
    return min(r.ratio for r in rows)
