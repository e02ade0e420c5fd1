"""Exact scramble distributions: random walks of random length from the goal.

The initial-state distribution of puzzle environments is "apply K random
legal moves from the solved state, K uniform on 1..K_max, re-scramble if
solved".  This is computed exactly by dynamic programming over
(state, last-move-group) and averaging the K-step marginals, then
conditioning on not being at the goal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..mdp import StateDistribution


@dataclass
class ScrambleMove:
    """A deterministic map on all states (including the goal row).

    group tags moves that may not repeat consecutively (e.g. same cube face);
    None disables the adjacency constraint for this move.
    """

    successor: np.ndarray  # int32 [num_states]; dead entries are illegal
    group: int | None = None
    label: str = ""


@dataclass
class ScrambleResult:
    distribution: StateDistribution
    step_marginal_sums: np.ndarray  # should each be 1 before conditioning
    goal_mass_removed: float


def scramble_distribution(
    num_states: int,
    goal: int,
    moves: list[ScrambleMove],
    k_max: int,
) -> ScrambleResult:
    """Exact distribution of the scramble walk, conditioned on non-goal.

    A move is legal in state s when it actually changes the state (no no-ops,
    no dead transitions) and its group differs from the previous move's group.
    Each step picks uniformly among legal moves.
    """
    n = num_states
    dead = n
    groups = sorted({m.group for m in moves if m.group is not None})
    gindex = {g: i for i, g in enumerate(groups)}
    C = len(groups) + 1  # context: last move's group; last slot = "none"
    none_ctx = C - 1

    valid = np.zeros((len(moves), n), dtype=bool)
    for j, mv in enumerate(moves):
        t = mv.successor
        valid[j] = (t != dead) & (t != np.arange(n))

    # legal-move counts per (state, context)
    counts = np.zeros((C, n), dtype=np.float64)
    for c in range(C):
        for j, mv in enumerate(moves):
            ctx = gindex[mv.group] if mv.group is not None else None
            if ctx is not None and ctx == c:
                continue
            counts[c] += valid[j]

    w = np.zeros((C, n), dtype=np.float64)
    w[none_ctx, goal] = 1.0
    mixture = np.zeros(n, dtype=np.float64)
    marg_sums = np.zeros(k_max, dtype=np.float64)

    for k in range(k_max):
        w_new = np.zeros_like(w)
        for c in range(C):
            mass = w[c]
            active = mass > 0.0
            if not active.any():
                continue
            denom = counts[c]
            stuck = active & (denom == 0.0)
            if stuck.any():  # no legal move: mass stays put
                w_new[c][stuck] += mass[stuck]
            share = np.where(denom > 0.0, mass / np.maximum(denom, 1.0), 0.0)
            for j, mv in enumerate(moves):
                ctx = gindex[mv.group] if mv.group is not None else none_ctx
                if mv.group is not None and gindex[mv.group] == c:
                    continue
                sel = valid[j] & (share > 0.0)
                if not sel.any():
                    continue
                w_new[ctx] += np.bincount(mv.successor[sel], weights=share[sel],
                                          minlength=n)
        w = w_new
        marginal = w.sum(axis=0)
        marg_sums[k] = marginal.sum()
        mixture += marginal
    mixture /= k_max
    goal_mass = float(mixture[goal])
    mixture[goal] = 0.0
    total = mixture.sum()
    if total <= 0.0:
        raise ValueError("scramble distribution has no non-goal mass")
    mixture /= total
    return ScrambleResult(
        distribution=StateDistribution(mixture),
        step_marginal_sums=marg_sums,
        goal_mass_removed=goal_mass,
    )
