"""Constructive skill augmentation that drives the exploration bound tight.

Given delta > max_s p(s), build K tabular skills so that, per support state
s, floor(K * f(s)) of them send s straight to the goal and the rest map s
back to itself, with f(s) = delta * p(s) / (delta - (1 - delta) * p(s)).
As K grows, the goal-hitting mass rho of the uniform policy converges to p,
making the exploration difficulty approach H[p] - log((1-delta)/delta).

"Send s back to itself" must be realized by base actions: a 2-action round
trip avoiding the goal is used when one exists; otherwise the state is
flagged and the skill keeps it in place by emitting no actions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..mdp import (MdpError, SolutionLengthTable, StateDistribution,
                   TabularDsmdp, shortest_solution_lengths)
from ..skills import GOAL_PASS_DEAD, AugmentedMdp, Skill, augment


class DeltaTooSmallError(MdpError):
    pass


@dataclass
class TightnessInfo:
    goal_skill_counts: np.ndarray  # floor(K f(s)) per state
    fallback_states: list[int]  # self-loop realized by the empty sequence
    f: np.ndarray


def canonical_shortest_solution(mdp: TabularDsmdp, d: SolutionLengthTable,
                                s: int) -> tuple[int, ...]:
    """Lexicographically first shortest solution (greedy d-descent)."""
    dpad = d.padded()
    seq = []
    cur = s
    while cur != mdp.goal:
        for a in range(mdp.num_actions):
            t = mdp.successor[cur, a]
            if dpad[t] == d.d[cur] - 1:
                seq.append(a)
                cur = int(t)
                break
        else:
            raise MdpError(f"state {cur} has no d-decreasing edge")
    return tuple(seq)


def find_round_trip(mdp: TabularDsmdp, s: int) -> tuple[int, int] | None:
    """Lowest (a, b) with T(T(s,a), b) == s avoiding the goal and dead."""
    for a in range(mdp.num_actions):
        t = int(mdp.successor[s, a])
        if t == mdp.dead or t == mdp.goal:
            continue
        for b in range(mdp.num_actions):
            if int(mdp.successor[t, b]) == s:
                return (a, b)
    return None


def tightness_augmentation(mdp0: TabularDsmdp, p: StateDistribution,
                           delta: float, K: int,
                           mode: str = GOAL_PASS_DEAD,
                           d: SolutionLengthTable | None = None
                           ) -> tuple[AugmentedMdp, TightnessInfo]:
    if d is None:
        d = shortest_solution_lengths(mdp0)
    p.validate(mdp0, d.d)
    pmax = float(p.probs.max())
    if delta <= pmax:
        raise DeltaTooSmallError(
            f"need delta > max_s p(s) = {pmax:g}, got {delta:g}")
    n = mdp0.num_states
    f = np.zeros(n)
    sup = p.support
    f[sup] = delta * p.probs[sup] / (delta - (1.0 - delta) * p.probs[sup])
    counts = np.floor(K * f).astype(np.int64)

    goal_seq = {int(s): canonical_shortest_solution(mdp0, d, int(s))
                for s in sup}
    self_seq: dict[int, tuple[int, ...] | None] = {}
    fallback = []
    for s in range(n):
        if s == mdp0.goal:
            continue
        rt = find_round_trip(mdp0, s)
        self_seq[s] = rt
        if rt is None:
            fallback.append(s)

    skills = []
    for j in range(K):
        seqs = []
        self_mask = np.zeros(n, dtype=bool)
        for s in range(n):
            if s == mdp0.goal:
                seqs.append(())
            elif j < counts[s]:
                seqs.append(goal_seq[s])
            elif self_seq[s] is not None:
                seqs.append(tuple(self_seq[s]))
            else:
                seqs.append(())
                self_mask[s] = True
        skills.append(Skill.from_sequences(
            seqs, label=f"tight{j}",
            self_mask=self_mask if self_mask.any() else None))
    aug = augment(mdp0, skills, mode=mode)
    return aug, TightnessInfo(goal_skill_counts=counts,
                              fallback_states=fallback, f=f)
