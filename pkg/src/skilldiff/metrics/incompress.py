"""Incompressibility measures: coding-efficiency ratios bounding how much
skills can shrink solution descriptions.

All variants share one epsilon treatment: a termination symbol with rate
epsilon adds -log((1-eps)/eps) to the numerator and -log(1-eps) per symbol
to the denominator.  Three modes are supported:

  * fixed_epsilon -- evaluate at one epsilon, clamping negatives to 0;
  * sup           -- maximize over epsilon (logit-scale grid + bounded
                     refinement), including the analytic eps->1 boundary
                     limit 1/E_p[d];
  * boundary      -- the eps->1 limit alone.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from ..mdp import (MdpError, SolutionLengthTable, StateDistribution,
                   TabularDsmdp, shortest_solution_lengths)
from ..skills import AugmentedMdp


class DegenerateDenominatorError(MdpError):
    pass


@dataclass
class ICValue:
    value: float
    mode: str
    epsilon: float | None = None  # None for sup/boundary modes
    clamped: bool = False
    method: str | None = None  # assignment method for merged/expressive
    entropy_term: float | None = None  # the H used in the numerator
    cap_hit: bool = False

    @property
    def bits(self) -> float:
        return self.value  # dimensionless ratio; same in any log base


def _ic_at_logit(u: float, H: float, Ed: float, a_eff: float) -> float:
    """Eq-10-style ratio at eps = sigmoid(u), numerically stable:
    -log((1-e)/e) = u and -log(1-e) = softplus(u)."""
    return (H + u) / (Ed * (np.log(a_eff) + np.logaddexp(0.0, u)))


def _ic_fixed(H: float, Ed: float, a_eff: float, eps: float):
    num = H - np.log((1.0 - eps) / eps)
    den = Ed * np.log(a_eff / (1.0 - eps))
    if den <= 0.0:
        raise DegenerateDenominatorError(f"denominator {den:g} at eps={eps:g}")
    v = num / den
    return (0.0, True) if v < 0.0 else (float(v), False)


def _ic_sup(H: float, Ed: float, a_eff: float):
    grid = np.linspace(-40.0, 40.0, 2001)
    vals = _ic_at_logit(grid, H, Ed, a_eff)
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(lambda u: -_ic_at_logit(u, H, Ed, a_eff),
                          bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10})
    interior = max(float(vals[i]), float(-res.fun))
    boundary = 1.0 / Ed
    if boundary >= interior:
        return boundary, None
    eps = float(1.0 / (1.0 + np.exp(-res.x)))
    return interior, eps


def _ic_with_mode(H, Ed, a_eff, mode, epsilon, base: ICValue) -> ICValue:
    if a_eff <= 1.0:
        raise DegenerateDenominatorError("need |A| > 1 (effective)")
    if Ed <= 0.0:
        raise DegenerateDenominatorError("E_p[d] must be positive")
    if mode == "fixed_epsilon":
        if epsilon is None:
            raise ValueError("fixed_epsilon mode needs an epsilon")
        v, clamped = _ic_fixed(H, Ed, a_eff, epsilon)
        base.value, base.epsilon, base.clamped = v, epsilon, clamped
    elif mode == "sup":
        v, eps = _ic_sup(H, Ed, a_eff)
        base.value, base.epsilon = max(v, 0.0), eps
        base.clamped = v < 0.0
    elif mode == "boundary":
        base.value, base.epsilon = 1.0 / Ed, None
    else:
        raise ValueError(f"unknown IC mode {mode!r}")
    base.mode = mode
    base.entropy_term = H
    return base


def ic_unmerged(mdp: TabularDsmdp, p: StateDistribution, mode: str = "sup",
                epsilon: float | None = None,
                d: SolutionLengthTable | None = None) -> ICValue:
    if mdp.num_actions <= 1:
        raise DegenerateDenominatorError("unmerged IC needs |A| > 1")
    if d is None:
        d = shortest_solution_lengths(mdp)
    Ed = d.expected(p)
    return _ic_with_mode(p.entropy(), Ed, float(mdp.num_actions),
                         mode, epsilon, ICValue(0.0, mode))


# -- canonical-solution entropy machinery ---------------------------------

def enumerate_shortest_solutions(mdp: TabularDsmdp, d: SolutionLengthTable,
                                 states, cap: int = 64):
    """All shortest solutions per state as action tuples, DFS over
    d-decreasing edges, truncated at `cap` per state."""
    dpad = d.padded()
    succ = mdp.successor
    out: dict[int, list[tuple[int, ...]]] = {}
    cap_hit = False
    for s0 in states:
        sols: list[tuple[int, ...]] = []
        stack = [(int(s0), ())]
        while stack and len(sols) < cap:
            s, prefix = stack.pop()
            for a in range(mdp.num_actions - 1, -1, -1):
                t = succ[s, a]
                if dpad[t] == d.d[s] - 1:
                    seq = prefix + (a,)
                    if d.d[s] == 1:
                        if len(sols) < cap:
                            sols.append(seq)
                        else:
                            break
                    else:
                        stack.append((int(t), seq))
        if len(sols) >= cap:
            cap_hit = True
        out[int(s0)] = sols
    return out, cap_hit


@dataclass
class AssignmentResult:
    entropy: float
    method: str  # matching_exact | exhaustive_exact | greedy_lower_bound |
    #              separable_exact | greedy_upper_bound
    cap_hit: bool = False


def max_entropy_assignment(probs: np.ndarray, candidates: list[list],
                           exhaustive_support: int = 12,
                           exhaustive_budget: int = 200_000,
                           cap_hit: bool = False) -> AssignmentResult:
    """Max-entropy choice of canonical solutions: one candidate per state,
    states sharing the chosen solution merge their mass."""
    keys = sorted({k for cand in candidates for k in cand})
    kidx = {k: i for i, k in enumerate(keys)}
    n = len(candidates)
    rows = np.repeat(np.arange(n), [len(c) for c in candidates])
    cols = np.array([kidx[k] for c in candidates for k in c], dtype=np.int64)
    graph = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)),
                       shape=(n, len(keys)))
    match = maximum_bipartite_matching(graph, perm_type="column")
    if int((match >= 0).sum()) == n:
        # all states keep distinct solutions: H is exactly H[p]
        h = float(-np.dot(probs, np.log(probs)))
        return AssignmentResult(h, "matching_exact", cap_hit)
    sizes = np.prod([len(c) for c in candidates], dtype=np.float64)
    if n <= exhaustive_support and sizes <= exhaustive_budget:
        best = -1.0
        for choice in itertools.product(*[range(len(c)) for c in candidates]):
            h = _merged_entropy(probs, candidates, choice, kidx, len(keys))
            best = max(best, h)
        return AssignmentResult(best, "exhaustive_exact", cap_hit)
    # greedy: heaviest states first, prefer the least-loaded solution
    order = np.argsort(-probs, kind="stable")
    mass = dict.fromkeys(keys, 0.0)
    for i in order:
        k = min(candidates[i], key=lambda kk: (mass[kk], kk))
        mass[k] += probs[i]
    h = _entropy_of(list(mass.values()))
    return AssignmentResult(h, "greedy_lower_bound", cap_hit)


def min_entropy_assignment(probs: np.ndarray, candidates: list[list],
                           exhaustive_support: int = 12,
                           exhaustive_budget: int = 200_000,
                           cap_hit: bool = False) -> AssignmentResult:
    """Merge-maximizing choice: minimizes the canonical-solution entropy."""
    keys = sorted({k for cand in candidates for k in cand})
    kidx = {k: i for i, k in enumerate(keys)}
    n = len(candidates)
    sizes = np.prod([len(c) for c in candidates], dtype=np.float64)
    if n <= exhaustive_support and sizes <= exhaustive_budget:
        best = np.inf
        for choice in itertools.product(*[range(len(c)) for c in candidates]):
            h = _merged_entropy(probs, candidates, choice, kidx, len(keys))
            best = min(best, h)
        return AssignmentResult(float(best), "exhaustive_exact", cap_hit)
    # greedy set-cover flavor: repeatedly take the solution shared by the
    # largest unassigned mass
    remaining = set(range(n))
    mass_groups = []
    while remaining:
        coverage: dict = {}
        for i in remaining:
            for k in candidates[i]:
                coverage.setdefault(k, []).append(i)
        k_best = max(sorted(coverage), key=lambda k: sum(probs[i] for i in coverage[k]))
        grabbed = coverage[k_best]
        mass_groups.append(sum(probs[i] for i in grabbed))
        remaining -= set(grabbed)
    h = _entropy_of(mass_groups)
    return AssignmentResult(h, "greedy_upper_bound", cap_hit)


def _merged_entropy(probs, candidates, choice, kidx, nkeys):
    mass = np.zeros(nkeys)
    for i, c in enumerate(choice):
        mass[kidx[candidates[i][c]]] += probs[i]
    return _entropy_of(mass)


def _entropy_of(mass) -> float:
    m = np.asarray(mass, dtype=np.float64)
    m = m[m > 0.0]
    return float(-np.dot(m, np.log(m)))


def merged_solution_entropy(augmented: AugmentedMdp, p: StateDistribution,
                            sol_cap: int = 64, exhaustive_support: int = 12,
                            exhaustive_budget: int = 200_000,
                            d_aug: SolutionLengthTable | None = None
                            ) -> AssignmentResult:
    """H[P+]: max-entropy canonical shortest solutions in the augmented MDP."""
    if d_aug is None:
        d_aug = shortest_solution_lengths(augmented.mdp)
    sup = p.support
    if np.any(~d_aug.solvable[sup]):
        raise MdpError("support unsolvable in the augmented MDP")
    cands, cap_hit = enumerate_shortest_solutions(augmented.mdp, d_aug, sup,
                                                  cap=sol_cap)
    return max_entropy_assignment(p.probs[sup], [cands[int(s)] for s in sup],
                                  exhaustive_support, exhaustive_budget,
                                  cap_hit)


def ic_merged(mdp0: TabularDsmdp, augmented: AugmentedMdp,
              p: StateDistribution, mode: str = "sup",
              epsilon: float | None = None, sol_cap: int = 64,
              exhaustive_support: int = 12,
              d0: SolutionLengthTable | None = None) -> ICValue:
    """Merged p-incompressibility of the base w.r.t. the augmented action set."""
    if mdp0.num_actions <= 1:
        raise DegenerateDenominatorError("merged IC needs |A0| > 1")
    if d0 is None:
        d0 = shortest_solution_lengths(mdp0)
    asg = merged_solution_entropy(augmented, p, sol_cap=sol_cap,
                                  exhaustive_support=exhaustive_support)
    out = _ic_with_mode(asg.entropy, d0.expected(p), float(mdp0.num_actions),
                        mode, epsilon, ICValue(0.0, mode))
    out.method = asg.method
    out.cap_hit = asg.cap_hit
    return out


def ic_expressive(mdp: TabularDsmdp, p: StateDistribution, expressivity: float,
                  mode: str = "sup", epsilon: float | None = None,
                  separable: bool | None = None, sol_cap: int = 64,
                  exhaustive_support: int = 12,
                  d: SolutionLengthTable | None = None) -> ICValue:
    """E-expressive p-incompressibility: min-entropy canonical solutions in
    the numerator, |A| * E in the denominator.

    Pass separable=True when the MDP is known solution-separable, in which
    case the minimum is exactly H[p].  Otherwise the minimum is bounded with
    enumerated shortest solutions (exhaustive when small, tagged greedy
    otherwise).
    """
    if expressivity < 1.0:
        raise ValueError("expressivity must be >= 1")
    if mdp.num_actions <= 1:
        raise DegenerateDenominatorError("expressive IC needs |A| > 1")
    if d is None:
        d = shortest_solution_lengths(mdp)
    if separable:
        asg = AssignmentResult(p.entropy(), "separable_exact")
    else:
        sup = p.support
        cands, cap_hit = enumerate_shortest_solutions(mdp, d, sup, cap=sol_cap)
        asg = min_entropy_assignment(p.probs[sup],
                                     [cands[int(s)] for s in sup],
                                     exhaustive_support, cap_hit=cap_hit)
    out = _ic_with_mode(asg.entropy, d.expected(p),
                        float(mdp.num_actions) * float(expressivity),
                        mode, epsilon, ICValue(0.0, mode))
    out.method = asg.method
    out.cap_hit = asg.cap_hit
    return out
