"""One-stop difficulty report for a (MDP, p, delta) triple."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..mdp import StateDistribution, TabularDsmdp, shortest_solution_lengths
from ..skills import AugmentedMdp
from .difficulty import (p_exploration_difficulty, p_exploration_difficulty_am,
                         p_learning_difficulty, solution_density)
from .incompress import ICValue, ic_merged, ic_unmerged
from .solver import solve_q

LOG_BASE = "nats"
_NATS_TO_BITS = 1.0 / math.log(2.0)


@dataclass
class DifficultyReport:
    j_learn: float
    j_explore: float
    j_explore_am: float
    density: float
    mean_d: float
    entropy_p: float
    delta: float
    epsilon: float
    num_actions: int
    base_action_count: int
    goal_pass_mode: str | None
    ic_unmerged_fixed: dict
    ic_unmerged_sup: dict
    ic_merged: dict | None = None
    log_base: str = LOG_BASE
    q_residual: float = 0.0
    q_iterations: int = 0

    @property
    def j_explore_bits(self) -> float:
        return self.j_explore * _NATS_TO_BITS

    @property
    def entropy_p_bits(self) -> float:
        return self.entropy_p * _NATS_TO_BITS

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, default=float)


def _ic_dict(ic: ICValue) -> dict:
    return {"value": ic.value, "mode": ic.mode, "epsilon": ic.epsilon,
            "clamped": ic.clamped, "method": ic.method, "cap_hit": ic.cap_hit}


def save_report(report: "DifficultyReport", path: str,
                per_state: dict[str, np.ndarray] | None = None):
    """Write the report as JSON; per-state arrays (d, q, p, ...) go to a flat
    binary sidecar per array, named <path>.<key>.npy."""
    with open(path, "w") as f:
        f.write(report.to_json())
    if per_state:
        for key, arr in per_state.items():
            np.save(f"{path}.{key}.npy", np.asarray(arr))


def compute_difficulty_report(mdp: TabularDsmdp, p: StateDistribution,
                              delta: float, epsilon: float | None = None,
                              base: TabularDsmdp | None = None,
                              augmented: AugmentedMdp | None = None,
                              sol_cap: int = 64,
                              q_tol: float = 1e-12) -> DifficultyReport:
    """Compute the standard metric battery.

    epsilon defaults to delta (the fixed-epsilon incompressibility
    convention).  When `augmented` is given, the merged incompressibility of
    its base with respect to the augmented action set is included.
    """
    if epsilon is None:
        epsilon = delta if delta > 0 else 0.02
    d = shortest_solution_lengths(mdp)
    p.validate(mdp, d.d)
    q = solve_q(mdp, delta, tol=q_tol)
    jl = p_learning_difficulty(mdp, p, d)
    je = p_exploration_difficulty(mdp, p, q)
    jam = p_exploration_difficulty_am(mdp, p, q)
    dens = solution_density(mdp, delta, q) if delta > 0 else float("nan")
    mean_d = d.expected(p)
    if mdp.num_actions > 1:
        icf = _ic_dict(ic_unmerged(mdp, p, mode="fixed_epsilon",
                                   epsilon=epsilon, d=d))
        ics = _ic_dict(ic_unmerged(mdp, p, mode="sup", d=d))
    else:  # incompressibility is undefined for single-action spaces
        icf = {"value": None, "mode": "fixed_epsilon", "epsilon": epsilon,
               "clamped": False, "method": None, "cap_hit": False}
        ics = {"value": None, "mode": "sup", "epsilon": None,
               "clamped": False, "method": None, "cap_hit": False}
    icm = None
    if augmented is not None and augmented.base.num_actions > 1:
        icm = _ic_dict(ic_merged(augmented.base, augmented, p, mode="sup",
                                 sol_cap=sol_cap))
    return DifficultyReport(
        j_learn=jl, j_explore=je, j_explore_am=jam, density=dens,
        mean_d=mean_d, entropy_p=p.entropy(), delta=delta, epsilon=epsilon,
        num_actions=mdp.num_actions, base_action_count=mdp.base_action_count,
        goal_pass_mode=augmented.goal_pass_mode if augmented else None,
        ic_unmerged_fixed=icf, ic_unmerged_sup=ics,
        ic_merged=icm, q_residual=q.residual, q_iterations=q.iterations)
