"""Zero-cost architecture search over surrogate evaluators.

Three optimizers share one trajectory format: uniform random search,
regularized (aging) evolution and a REINFORCE controller with one
categorical policy per architectural decision. Uni-objective runs
maximize predicted accuracy; bi-objective runs maximize a scalarized
accuracy/performance reward, with a Pareto front extracted from the
sampled cloud afterwards.
"""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from anbkit.archspace import (Architecture, BlockSpec, FIELDS, SpaceDef,
                              as_rng, mutate, sample_uniform)

DEFAULT_SEEDS = (0, 1, 2, 3, 4)
DEFAULT_POPULATION = 100
DEFAULT_SAMPLE = 25
DEFAULT_LR = 0.2
DEFAULT_BASELINE_DECAY = 0.9


class ObjectiveError(ValueError):
    """Objective settings are inconsistent or incomplete."""


@dataclass(frozen=True)
class Objective:
    """What the search maximizes.

    mode "accuracy" rewards predicted accuracy alone. Mode "bi" rewards
    a weighted product of accuracy and a performance ratio against the
    target: acc * (perf / target) ** weight for latency (lower is
    better) and acc * (target / perf) ** weight for throughput. The
    weight must be <= 0 so better performance never lowers the reward.
    """

    mode: str = "accuracy"
    perf_metric: str = "throughput"
    target: float = 1.0
    weight: float = 0.0

    def __post_init__(self):
        if self.mode not in ("accuracy", "bi"):
            raise ObjectiveError(f"unknown objective mode {self.mode!r}")
        if self.perf_metric not in ("throughput", "latency"):
            raise ObjectiveError(
                f"unknown perf_metric {self.perf_metric!r}")
        if self.target <= 0:
            raise ObjectiveError("target must be > 0")
        if self.weight > 0:
            raise ObjectiveError("weight must be <= 0")


def scalarize(acc: float, perf: float, obj: Objective) -> float:
    """Weighted-product reward, monotone in both objectives."""
    if perf <= 0:
        raise ObjectiveError(f"perf must be positive, got {perf}")
    if obj.mode == "accuracy":
        return float(acc)
    if obj.perf_metric == "latency":
        ratio = perf / obj.target
    else:
        ratio = obj.target / perf
    return float(acc * ratio ** obj.weight)


@dataclass(frozen=True)
class Step:
    step: int
    arch: Architecture
    accuracy: float
    perf: float | None
    reward: float
    incumbent: float


@dataclass(frozen=True)
class SearchTrajectory:
    optimizer: str
    seed: int
    steps: tuple[Step, ...]

    def incumbents(self) -> np.ndarray:
        return np.array([s.incumbent for s in self.steps])

    def final_incumbent(self) -> float:
        return self.steps[-1].incumbent


def _call_evaluator(evaluator: Callable, arch: Architecture,
                    objective: Objective) -> tuple[float, float | None, float]:
    out = evaluator(arch)
    if objective.mode == "bi":
        try:
            acc, perf = out
        except TypeError:
            raise ObjectiveError(
                "bi-objective search needs an evaluator returning "
                "(accuracy, perf)") from None
        return float(acc), float(perf), scalarize(acc, perf, objective)
    acc = float(out)
    return acc, None, acc


def _seed_of(rng) -> int:
    return int(rng) if isinstance(rng, (int, np.integer)) else -1


# ---------------------------------------------------------------------------
# optimizers
# ---------------------------------------------------------------------------

def random_search(space: SpaceDef, evaluator: Callable, budget: int, rng,
                  objective: Objective = Objective()) -> SearchTrajectory:
    """budget i.i.d. uniform samples, each evaluated once."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    seed = _seed_of(rng)
    rng = as_rng(rng)
    steps = []
    incumbent = -np.inf
    for i in range(budget):
        arch = sample_uniform(space, rng)
        acc, perf, reward = _call_evaluator(evaluator, arch, objective)
        incumbent = max(incumbent, reward)
        steps.append(Step(i, arch, acc, perf, reward, incumbent))
    return SearchTrajectory("random-search", seed, tuple(steps))


def regularized_evolution(space: SpaceDef, evaluator: Callable, budget: int,
                          rng, population: int = DEFAULT_POPULATION,
                          sample: int = DEFAULT_SAMPLE,
                          objective: Objective = Objective()
                          ) -> SearchTrajectory:
    """Aging evolution: mutate the best of a random sample, drop the oldest.

    The first `population` steps are uniform random. Afterwards each step
    draws `sample` members without replacement, mutates the best-reward
    one and replaces the oldest member with the child.
    """
    if not budget >= population >= sample >= 1:
        raise ValueError("need budget >= population >= sample >= 1")
    seed = _seed_of(rng)
    rng = as_rng(rng)
    steps = []
    incumbent = -np.inf
    pool: deque[tuple[Architecture, float]] = deque()

    for i in range(budget):
        if i < population:
            arch = sample_uniform(space, rng)
        else:
            picks = rng.choice(population, size=sample, replace=False)
            parent = max((pool[int(j)] for j in picks), key=lambda m: m[1])
            arch = mutate(space, parent[0], rng)
        acc, perf, reward = _call_evaluator(evaluator, arch, objective)
        pool.append((arch, reward))
        if len(pool) > population:
            pool.popleft()
        incumbent = max(incumbent, reward)
        steps.append(Step(i, arch, acc, perf, reward, incumbent))
    return SearchTrajectory("regularized-evolution", seed, tuple(steps))


class CategoricalPolicies:
    """One softmax policy per (block, field) decision of the space."""

    def __init__(self, space: SpaceDef):
        self.space = space
        self.field_choices = [space.choices(name) for name in FIELDS]
        self.logits = [np.zeros(len(self.field_choices[d % len(FIELDS)]))
                       for d in range(space.num_blocks * len(FIELDS))]

    def probs(self, d: int) -> np.ndarray:
        shifted = np.exp(self.logits[d] - self.logits[d].max())
        return shifted / shifted.sum()

    def all_probs(self) -> list[np.ndarray]:
        return [self.probs(d) for d in range(len(self.logits))]

    def sample(self, rng) -> tuple[Architecture, list[int]]:
        chosen = [int(rng.choice(len(self.logits[d]), p=self.probs(d)))
                  for d in range(len(self.logits))]
        per = len(FIELDS)
        blocks = tuple(
            BlockSpec(*(self.field_choices[f][chosen[b * per + f]]
                        for f in range(per)))
            for b in range(self.space.num_blocks))
        return Architecture(blocks), chosen

    def update(self, chosen: Sequence[int], advantage: float,
               lr: float) -> None:
        """Exact categorical log-likelihood gradient ascent step."""
        if lr == 0.0 or advantage == 0.0:
            return
        for d, k in enumerate(chosen):
            grad = -self.probs(d)
            grad[k] += 1.0
            self.logits[d] = self.logits[d] + lr * advantage * grad


def reinforce(space: SpaceDef, evaluator: Callable, budget: int, rng,
              lr: float = DEFAULT_LR,
              baseline_decay: float = DEFAULT_BASELINE_DECAY,
              objective: Objective = Objective(),
              policies: CategoricalPolicies | None = None
              ) -> SearchTrajectory:
    """Policy-gradient controller with an EMA reward baseline.

    Each step samples one value per decision, scores the architecture
    and nudges every decision's logits by the advantage-weighted exact
    gradient. The baseline initializes to the first reward, so the first
    update is a no-op. Pass a CategoricalPolicies to observe or resume
    the final policy state.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if lr < 0:
        raise ValueError("lr must be >= 0")
    if not 0.0 <= baseline_decay < 1.0:
        raise ValueError("baseline_decay must be in [0, 1)")
    seed = _seed_of(rng)
    rng = as_rng(rng)
    policies = policies if policies is not None else CategoricalPolicies(space)

    steps = []
    incumbent = -np.inf
    baseline = 0.0
    for i in range(budget):
        arch, chosen = policies.sample(rng)
        acc, perf, reward = _call_evaluator(evaluator, arch, objective)
        if i == 0:
            baseline = reward
        policies.update(chosen, reward - baseline, lr)
        baseline = baseline_decay * baseline + (1 - baseline_decay) * reward
        incumbent = max(incumbent, reward)
        steps.append(Step(i, arch, acc, perf, reward, incumbent))
    return SearchTrajectory("reinforce", seed, tuple(steps))


OPTIMIZERS = {
    "random-search": random_search,
    "regularized-evolution": regularized_evolution,
    "reinforce": reinforce,
}


# ---------------------------------------------------------------------------
# Pareto extraction
# ---------------------------------------------------------------------------

def pareto_front(points: Sequence[tuple[float, float]],
                 perf_direction: str = "max") -> list[tuple[float, float]]:
    """Non-dominated subset, sorted by accuracy ascending.

    Accuracy is always maximized; perf_direction picks the sense of the
    second coordinate. Dominance is weak: at least as good on both axes
    and strictly better on one. Duplicate points are collapsed.
    """
    if perf_direction not in ("max", "min"):
        raise ValueError(f"perf_direction must be 'max' or 'min', "
                         f"got {perf_direction!r}")
    if len(points) == 0:
        raise ValueError("points must be nonempty")
    unique = {(float(a), float(p)) for a, p in points}
    sign = 1.0 if perf_direction == "max" else -1.0
    # scan from high accuracy down; a point survives only if its perf
    # strictly beats everything with higher-or-equal accuracy
    ordered = sorted(unique, key=lambda q: (-q[0], -sign * q[1]))
    front = []
    best = -np.inf
    for acc, perf in ordered:
        if sign * perf > best:
            front.append((acc, perf))
            best = sign * perf
    front.reverse()
    return front


def pareto_table(rows: Sequence[tuple[str, float, float]],
                 perf_direction: str = "max") -> list[tuple[str, float, float]]:
    """Front rows (arch, acc, perf); ties resolved to the smallest arch text."""
    front = set(pareto_front([(acc, perf) for _, acc, perf in rows],
                             perf_direction))
    by_point: dict[tuple[float, float], str] = {}
    for arch, acc, perf in rows:
        point = (float(acc), float(perf))
        if point in front:
            cur = by_point.get(point)
            if cur is None or arch < cur:
                by_point[point] = arch
    return [(by_point[p], p[0], p[1]) for p in sorted(by_point)]


# ---------------------------------------------------------------------------
# multi-seed aggregation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimulationResult:
    optimizer: str
    budget: int
    trajectories: tuple[SearchTrajectory, ...]
    mean_incumbent: np.ndarray
    std_incumbent: np.ndarray


def simulate_runs(optimizer: str, space: SpaceDef, evaluator: Callable,
                  budget: int, seeds: Sequence[int] = DEFAULT_SEEDS,
                  objective: Objective = Objective(),
                  **optimizer_kwargs) -> SimulationResult:
    """Independent seeded runs plus a pointwise mean/std incumbent curve."""
    if optimizer not in OPTIMIZERS:
        raise ValueError(f"unknown optimizer {optimizer!r}; "
                         f"choose from {sorted(OPTIMIZERS)}")
    if len(seeds) < 1:
        raise ValueError("need at least one seed")
    run = OPTIMIZERS[optimizer]
    trajectories = tuple(
        run(space, evaluator, budget, int(seed), objective=objective,
            **optimizer_kwargs)
        for seed in seeds)
    curves = np.stack([t.incumbents() for t in trajectories])
    return SimulationResult(optimizer, budget, trajectories,
                            curves.mean(axis=0), curves.std(axis=0))


# ---------------------------------------------------------------------------
# report files
# ---------------------------------------------------------------------------

def write_trajectory(trajectory: SearchTrajectory, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step", "arch", "accuracy", "perf", "reward",
                         "incumbent"])
        for s in trajectory.steps:
            writer.writerow([s.step, str(s.arch), repr(s.accuracy),
                             "" if s.perf is None else repr(s.perf),
                             repr(s.reward), repr(s.incumbent)])


def write_aggregate(result: SimulationResult, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step", "mean_incumbent", "std_incumbent"])
        for i in range(result.budget):
            writer.writerow([i, repr(float(result.mean_incumbent[i])),
                             repr(float(result.std_incumbent[i]))])


def write_pareto(table: Sequence[tuple[str, float, float]], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["arch", "accuracy", "perf"])
        for arch, acc, perf in table:
            writer.writerow([arch, repr(float(acc)), repr(float(perf))])
