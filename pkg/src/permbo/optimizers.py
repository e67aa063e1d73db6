"""Optimizers over S_d: exhaustive oracle, 2-swap local search, multi-restart.

The exhaustive search doubles as the correctness oracle for everything
else; the multi-restart 2-swap search is the workhorse used to optimize
acquisition functions and to solve the Thompson-sampling QAP. All search
is deterministic given the caller's random generator.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import accel
from .acquisition import QapMatrices
from .perm import Permutation, num_pairs, random_permutation, swap_neighbor_matrix

Objective = Callable[[Permutation], float]
#: Optional vectorized form: (k, d) int array of candidate rows -> (k,) values.
BatchObjective = Callable[[np.ndarray], np.ndarray]

#: Largest dimension the exhaustive search will accept (9! = 362880 evaluations).
BRUTE_FORCE_MAX_D = 9


@dataclass(frozen=True)
class SearchBudget:
    restarts: int = 10
    max_steps_per_restart: int = 0  # 0 means the default cap of 10 * C(d,2)

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_steps_per_restart < 0:
            raise ValueError("max_steps_per_restart must be >= 0")

    def steps_for(self, d: int) -> int:
        if self.max_steps_per_restart > 0:
            return self.max_steps_per_restart
        return 10 * num_pairs(d)


def brute_force_argmin(
    objective: Objective, d: int
) -> tuple[Permutation, float]:
    """Global minimizer by enumerating S_d; ties go to the lexicographically smallest mapping."""
    if d > BRUTE_FORCE_MAX_D:
        raise ValueError(f"brute force capped at d={BRUTE_FORCE_MAX_D}, got {d}")
    best_p: Permutation | None = None
    best_v = math.inf
    for tup in itertools.permutations(range(d)):
        p = Permutation._wrap(np.array(tup, dtype=np.int64))
        v = float(objective(p))
        if v < best_v:
            best_p, best_v = p, v
    assert best_p is not None
    return best_p, best_v


def local_search(
    objective: Objective,
    start: Permutation,
    max_steps: int,
    batch_objective: BatchObjective | None = None,
) -> tuple[Permutation, float]:
    """Best-improvement descent over single-transposition neighbors.

    Steps until no neighbor strictly improves or ``max_steps`` moves were
    taken; neighbor pairs are scanned in lexicographic order so the walk
    is deterministic. When terminated by convergence the result is
    2-swap-locally optimal. ``batch_objective``, if given, must agree with
    ``objective`` and is used to evaluate all neighbors of a state at once.
    """
    current = start.values
    if batch_objective is not None:
        current_v = float(batch_objective(current[None, :])[0])
    else:
        current_v = float(objective(Permutation._wrap(current)))
    for _ in range(max_steps):
        neighbors = swap_neighbor_matrix(current)
        if batch_objective is not None:
            values = np.asarray(batch_objective(neighbors), dtype=np.float64)
        else:
            values = np.array(
                [objective(Permutation._wrap(row)) for row in neighbors]
            )
        best = int(np.argmin(values))
        if not values[best] < current_v:
            break
        current = neighbors[best]
        current_v = float(values[best])
    return Permutation._wrap(current), current_v


def multi_restart_candidates(
    objective: Objective,
    d: int,
    budget: SearchBudget,
    rng: np.random.Generator,
    batch_objective: BatchObjective | None = None,
) -> list[tuple[Permutation, float]]:
    """Local-search results from ``budget.restarts`` uniform starts, in restart order."""
    starts = [random_permutation(d, rng) for _ in range(budget.restarts)]
    max_steps = budget.steps_for(d)
    return [
        local_search(objective, s, max_steps, batch_objective) for s in starts
    ]


def multi_restart_argmin(
    objective: Objective,
    d: int,
    budget: SearchBudget,
    rng: np.random.Generator,
    batch_objective: BatchObjective | None = None,
) -> tuple[Permutation, float]:
    """Best local-search result over the restart budget; deterministic given seed."""
    results = multi_restart_candidates(objective, d, budget, rng, batch_objective)
    best = min(range(len(results)), key=lambda i: results[i][1])
    return results[best]


# --- QAP solve used by Thompson sampling -----------------------------------
#
# Three backend slots share one contract: minimize Tr(W P A P^T) over
# permutation matrices. "exhaustive" is the oracle, "multistart" the
# default, and "sdp" reserves the relaxation route for a future solver.


def _trace_objective(q: QapMatrices) -> tuple[Objective, BatchObjective]:
    W = np.ascontiguousarray(q.W)

    def single(p: Permutation) -> float:
        return accel.ts_trace(W, p.values)

    def batch(rows: np.ndarray) -> np.ndarray:
        return accel.ts_trace_batch(W, np.ascontiguousarray(rows))

    return single, batch


def solve_qap_exhaustive(
    q: QapMatrices,
    budget: SearchBudget | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[Permutation, float]:
    single, _ = _trace_objective(q)
    return brute_force_argmin(single, q.W.shape[0])


def solve_qap_multistart(
    q: QapMatrices, budget: SearchBudget, rng: np.random.Generator
) -> tuple[Permutation, float]:
    single, batch = _trace_objective(q)
    return multi_restart_argmin(single, q.W.shape[0], budget, rng, batch)


def solve_qap_sdp(
    q: QapMatrices, budget: SearchBudget, rng: np.random.Generator
) -> tuple[Permutation, float]:
    raise NotImplementedError("SDP relaxation backend is a reserved slot")


QAP_BACKENDS: dict[str, Callable] = {
    "exhaustive": solve_qap_exhaustive,
    "multistart": solve_qap_multistart,
    "sdp": solve_qap_sdp,
}


def solve_ts_qap(
    q: QapMatrices,
    budget: SearchBudget,
    rng: np.random.Generator,
    backend: str = "multistart",
) -> Permutation:
    """Minimize the Thompson-sampling trace objective; returns the chosen permutation."""
    try:
        solver = QAP_BACKENDS[backend]
    except KeyError:
        raise ValueError(f"unknown QAP backend {backend!r}") from None
    p, _ = solver(q, budget, rng)
    return p


def solve_ts_qap_candidates(
    q: QapMatrices,
    budget: SearchBudget,
    rng: np.random.Generator,
    backend: str = "multistart",
) -> list[tuple[Permutation, float]]:
    """Like solve_ts_qap but keeps every restart's result (best first)."""
    if backend == "exhaustive":
        return [solve_qap_exhaustive(q)]
    if backend == "multistart":
        single, batch = _trace_objective(q)
        results = multi_restart_candidates(
            single, q.W.shape[0], budget, rng, batch
        )
        return sorted(results, key=lambda r: r[1])
    raise ValueError(f"unknown QAP backend {backend!r}")
