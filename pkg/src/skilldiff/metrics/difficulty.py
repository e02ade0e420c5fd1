"""Learning/exploration difficulty, solution density, per-length solution counts."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from ..mdp import (BudgetExceededError, MdpError, SolutionLengthTable,
                   StateDistribution, TabularDsmdp, shortest_solution_lengths)
from .solver import QTable, solve_q


class SupportUnsolvableError(MdpError):
    pass


class QUnderflowError(MdpError):
    def __init__(self, state, q):
        super().__init__(f"q({state}) = {q:g} underflows the log")
        self.state = state
        self.q = q


class DeltaZeroError(MdpError):
    pass


def p_learning_difficulty(mdp: TabularDsmdp, p: StateDistribution,
                          d: SolutionLengthTable | None = None) -> float:
    """|A| times the p-weighted mean shortest-solution length."""
    if d is None:
        d = shortest_solution_lengths(mdp)
    sup = p.support
    if np.any(~d.solvable[sup]):
        bad = sup[~d.solvable[sup]][0]
        raise SupportUnsolvableError(f"state {bad} in support is unsolvable")
    return mdp.num_actions * float(np.dot(p.probs[sup], d.d[sup]))


def p_exploration_difficulty(mdp: TabularDsmdp, p: StateDistribution,
                             qtable: QTable) -> float:
    """p-weighted mean of -log q, in nats."""
    sup = p.support
    qs = qtable.q[sup]
    if np.any(qs <= 0.0) or np.any(qs < 1e-300):
        i = int(np.argmin(qs))
        raise QUnderflowError(int(sup[i]), float(qs[i]))
    return float(-np.dot(p.probs[sup], np.log(qs)))


def p_exploration_difficulty_am(mdp: TabularDsmdp, p: StateDistribution,
                                qtable: QTable) -> float:
    """Arithmetic-mean variant: log E_p[1/q], computed in the log domain."""
    sup = p.support
    qs = qtable.q[sup]
    if np.any(qs <= 0.0) or np.any(qs < 1e-300):
        i = int(np.argmin(qs))
        raise QUnderflowError(int(sup[i]), float(qs[i]))
    return float(logsumexp(np.log(p.probs[sup]) - np.log(qs)))


def solution_density(mdp: TabularDsmdp, delta: float, qtable: QTable) -> float:
    """Total mass of solutions in the geometric-length sequence space:
    D = sum_s (delta/(1-delta)) q(s) over non-goal states."""
    if delta <= 0.0:
        raise DeltaZeroError("solution density needs delta > 0")
    if abs(qtable.delta - delta) > 1e-15:
        raise MdpError("qtable was solved at a different delta")
    return float(delta / (1.0 - delta) * (qtable.q.sum() - qtable.q[mdp.goal]))


_SATURATION = float(2**53)


@dataclass
class PerLengthSolutionCounts:
    """counts[s, l] = number of solutions to s of exact length l (0..L_max).

    Stored as float64; exact until counts exceed 2^53, after which
    ``saturated`` flags the loss of integer exactness.
    """

    counts: np.ndarray  # float64 [num_states, L_max + 1]
    l_max: int
    num_actions: int
    saturated: bool

    def q_tilde(self, l: int) -> np.ndarray:
        """Probability that a uniformly random length-l sequence solves s."""
        return self.counts[:, l] * float(self.num_actions) ** (-l)

    def reconstruct_q(self, delta: float) -> np.ndarray:
        """Sum_l counts(s,l) ((1-delta)/|A|)^l; matches solve_q up to the
        (1-delta)^{L_max} tail."""
        w = ((1.0 - delta) / self.num_actions) ** np.arange(self.l_max + 1)
        return self.counts @ w

    def coverage(self, l: int) -> float:
        """Fraction of all length-l sequences that are solutions."""
        return float(self.q_tilde(l).sum())


def per_length_counts(mdp: TabularDsmdp, l_max: int,
                      memory_budget: int = 2_000_000_000
                      ) -> PerLengthSolutionCounts:
    n, m = mdp.num_states, mdp.num_actions
    if 8 * n * (l_max + 1) > memory_budget:
        raise BudgetExceededError("per-length count table exceeds memory budget")
    succ = mdp.successor_padded()
    counts = np.zeros((n, l_max + 1))
    cur = np.zeros(n + 1)
    cur[mdp.goal] = 1.0
    counts[mdp.goal, 0] = 1.0
    for l in range(1, l_max + 1):
        nxt = cur[succ[:, 0]].copy()
        for a in range(1, m):
            nxt += cur[succ[:, a]]
        nxt[n] = 0.0
        counts[:, l] = nxt[:n]
        cur = nxt
    saturated = bool(np.any(counts > _SATURATION))
    return PerLengthSolutionCounts(counts=counts, l_max=l_max,
                                   num_actions=m, saturated=saturated)
