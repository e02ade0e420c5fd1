"""Finite deterministic sparse-reward MDPs and the graph algorithms on them.

A tabular MDP here is a dense successor table over states 0..n-1 with a single
goal state and an implicit absorbing dead pseudo-state.  The dead state is
*not* part of the state array; internally it is addressed as index
``num_states`` so that padded gather operations need no masking.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

UNSOLVABLE = -1
DEAD_SENTINEL_U32 = 2**32 - 1

_BIN_MAGIC = b"DSMDP\x00"


class MdpError(Exception):
    pass


class BudgetExceededError(MdpError):
    pass


@dataclass
class TabularDsmdp:
    """Explicit finite deterministic sparse-reward MDP.

    successor[s, a] is the state reached from s under action a, or ``dead``
    (== num_states) for transitions into the absorbing dead state.  The goal
    row is stored as all-dead but is semantically undefined: episodes end at
    the goal and no algorithm may read transitions out of it.

    Actions form a multiset: duplicate labels are allowed and num_actions
    always counts multiplicity.  base_action_count records |A0| when this MDP
    is a skill augmentation (== num_actions for base environments).
    """

    successor: np.ndarray  # int32 [num_states, num_actions]
    goal: int
    action_labels: list[str]
    base_action_count: int = 0

    def __post_init__(self):
        self.successor = np.ascontiguousarray(self.successor, dtype=np.int32)
        if self.base_action_count == 0:
            self.base_action_count = self.num_actions
        self.validate()

    @property
    def num_states(self) -> int:
        return self.successor.shape[0]

    @property
    def num_actions(self) -> int:
        return self.successor.shape[1]

    @property
    def dead(self) -> int:
        """Index used for the dead pseudo-state (one past the state range)."""
        return self.num_states

    def validate(self):
        n, m = self.successor.shape
        if m < 1:
            raise MdpError("need at least one action")
        if not (0 <= self.goal < n):
            raise MdpError(f"goal index {self.goal} out of range")
        if len(self.action_labels) != m:
            raise MdpError("action_labels length must equal num_actions")
        if not (1 <= self.base_action_count <= m):
            raise MdpError("base_action_count out of range")
        lo, hi = int(self.successor.min()), int(self.successor.max())
        if lo < 0 or hi > n:
            raise MdpError("successor entries must lie in [0, num_states]")
        if not np.all(self.successor[self.goal] == self.dead):
            raise MdpError("goal row must be stored as all-dead")

    def successor_padded(self) -> np.ndarray:
        """Successor table plus a dead row, so gathers never go out of range."""
        pad = np.full((1, self.num_actions), self.dead, dtype=np.int32)
        return np.concatenate([self.successor, pad], axis=0)

    def step(self, s: int, a: int) -> int:
        if s == self.goal:
            raise MdpError("transitions from the goal are undefined")
        return int(self.successor[s, a])

    # -- serialization ----------------------------------------------------

    def to_json_dict(self) -> dict:
        succ = self.successor.astype(np.int64)
        succ[succ == self.dead] = DEAD_SENTINEL_U32
        return {
            "num_states": self.num_states,
            "num_actions": self.num_actions,
            "goal": self.goal,
            "base_action_count": self.base_action_count,
            "action_labels": list(self.action_labels),
            "successor": succ.ravel().tolist(),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "TabularDsmdp":
        n, m = d["num_states"], d["num_actions"]
        succ = np.asarray(d["successor"], dtype=np.int64).reshape(n, m)
        succ[succ == DEAD_SENTINEL_U32] = n
        return cls(
            successor=succ.astype(np.int32),
            goal=d["goal"],
            action_labels=list(d["action_labels"]),
            base_action_count=d["base_action_count"],
        )

    def save_json(self, path):
        with open(path, "w") as f:
            json.dump(self.to_json_dict(), f)

    @classmethod
    def load_json(cls, path) -> "TabularDsmdp":
        with open(path) as f:
            return cls.from_json_dict(json.load(f))

    def save_binary(self, path):
        """Header + labels blob + row-major uint32 table (dead = 2^32-1)."""
        labels = json.dumps({"action_labels": self.action_labels}).encode()
        table = self.successor.astype(np.uint32)
        table[self.successor == self.dead] = DEAD_SENTINEL_U32
        with open(path, "wb") as f:
            f.write(_BIN_MAGIC)
            f.write(struct.pack("<5I", 1, self.num_states, self.num_actions,
                                self.goal, self.base_action_count))
            f.write(struct.pack("<I", len(labels)))
            f.write(labels)
            f.write(table.tobytes())

    @classmethod
    def load_binary(cls, path) -> "TabularDsmdp":
        with open(path, "rb") as f:
            if f.read(6) != _BIN_MAGIC:
                raise MdpError("bad magic")
            version, n, m, goal, base = struct.unpack("<5I", f.read(20))
            if version != 1:
                raise MdpError(f"unsupported version {version}")
            (nlabels,) = struct.unpack("<I", f.read(4))
            labels = json.loads(f.read(nlabels))["action_labels"]
            raw = np.frombuffer(f.read(4 * n * m), dtype=np.uint32).reshape(n, m)
        succ = raw.astype(np.int64)
        succ[raw == DEAD_SENTINEL_U32] = n
        return cls(successor=succ.astype(np.int32), goal=goal,
                   action_labels=labels, base_action_count=base)


@dataclass
class StateDistribution:
    """Importance distribution p over solvable states, aligned to state indices."""

    probs: np.ndarray  # float64 [num_states]

    def __post_init__(self):
        self.probs = np.ascontiguousarray(self.probs, dtype=np.float64)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.probs > 0.0)

    @property
    def support_size(self) -> int:
        return int(np.count_nonzero(self.probs > 0.0))

    def entropy(self) -> float:
        """Shannon entropy of p in nats."""
        p = self.probs[self.probs > 0.0]
        return float(-np.dot(p, np.log(p)))

    def validate(self, mdp: TabularDsmdp, d: np.ndarray | None = None):
        if self.probs.shape != (mdp.num_states,):
            raise MdpError("distribution length must equal num_states")
        if np.any(self.probs < 0.0):
            raise MdpError("negative probability")
        if abs(float(self.probs.sum()) - 1.0) > 1e-12:
            raise MdpError(f"probabilities sum to {self.probs.sum()!r}, not 1")
        if self.probs[mdp.goal] > 0.0:
            raise MdpError("no weight allowed on the goal")
        if d is not None and np.any(d[self.support] == UNSOLVABLE):
            raise MdpError("support contains an unsolvable state")


@dataclass
class SolutionLengthTable:
    """Shortest-solution lengths; UNSOLVABLE (-1) marks unreachable states."""

    d: np.ndarray  # int32 [num_states], d[goal] == 0

    @property
    def solvable(self) -> np.ndarray:
        return self.d != UNSOLVABLE

    def padded(self) -> np.ndarray:
        """d plus a trailing UNSOLVABLE entry for the dead pseudo-state."""
        return np.concatenate([self.d, np.array([UNSOLVABLE], dtype=np.int32)])

    def expected(self, p: StateDistribution) -> float:
        sup = p.support
        if np.any(self.d[sup] == UNSOLVABLE):
            raise MdpError("support contains an unsolvable state")
        return float(np.dot(p.probs[sup], self.d[sup]))


class ReverseGraph:
    """Predecessor adjacency (state -> (predecessor, action) pairs) in CSR form."""

    def __init__(self, indptr: np.ndarray, preds: np.ndarray, actions: np.ndarray):
        self.indptr = indptr
        self.preds = preds
        self.actions = actions

    @property
    def num_edges(self) -> int:
        return len(self.preds)

    def predecessors(self, t: int) -> list[tuple[int, int]]:
        lo, hi = self.indptr[t], self.indptr[t + 1]
        return list(zip(self.preds[lo:hi].tolist(), self.actions[lo:hi].tolist()))


def build_reverse_graph(mdp: TabularDsmdp) -> ReverseGraph:
    """Invert the successor table.  Dead transitions and the goal row are skipped."""
    n, m = mdp.num_states, mdp.num_actions
    succ = mdp.successor.ravel()
    valid = np.flatnonzero(succ != mdp.dead)
    targets = succ[valid]
    order = np.argsort(targets, kind="stable")
    sorted_edges = valid[order]
    preds = (sorted_edges // m).astype(np.int32)
    actions = (sorted_edges % m).astype(np.int32)
    counts = np.bincount(targets, minlength=n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return ReverseGraph(indptr, preds, actions)


def shortest_solution_lengths(
    mdp: TabularDsmdp, rev: ReverseGraph | None = None
) -> SolutionLengthTable:
    """BFS over the reverse graph from the goal."""
    if rev is None:
        rev = build_reverse_graph(mdp)
    n = mdp.num_states
    d = np.full(n, UNSOLVABLE, dtype=np.int32)
    d[mdp.goal] = 0
    frontier = np.array([mdp.goal], dtype=np.int64)
    level = 0
    while len(frontier):
        level += 1
        preds = _gather_ragged(rev, frontier)
        if len(preds) == 0:
            break
        fresh = np.unique(preds[d[preds] == UNSOLVABLE])
        d[fresh] = level
        frontier = fresh
    return SolutionLengthTable(d=d)


def _gather_ragged(rev: ReverseGraph, targets: np.ndarray) -> np.ndarray:
    """Concatenate rev.preds CSR segments for all targets, vectorized."""
    starts = rev.indptr[targets]
    counts = rev.indptr[targets + 1] - starts
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=np.int32)
    ends = np.cumsum(counts)
    within = np.arange(total, dtype=np.int64) - np.repeat(ends - counts, counts)
    return rev.preds[np.repeat(starts, counts) + within]


def check_invertible_transitions(mdp: TabularDsmdp,
                                 d: SolutionLengthTable | None = None) -> bool:
    """True iff no two distinct states share (action, successor) with a
    solvable-or-goal successor.  Implemented by bucketing (a, successor)."""
    if d is None:
        d = shortest_solution_lengths(mdp)
    n, m = mdp.num_states, mdp.num_actions
    solvable_pad = np.concatenate([d.solvable, [False]])  # dead is not solvable
    keep = mdp.successor != mdp.dead
    keep[mdp.goal] = False
    keep &= solvable_pad[np.minimum(mdp.successor, n)]
    for a in range(m):
        tgts = mdp.successor[keep[:, a], a]
        if len(np.unique(tgts)) != len(tgts):
            return False
    return True


@dataclass
class SeparabilityVerdict:
    separable: bool
    checked_len: int
    violation: tuple[tuple[int, ...], int, int] | None = None  # (sequence, s, s')

    def __bool__(self) -> bool:
        return self.separable


def check_solution_separable_bruteforce(
    mdp: TabularDsmdp, max_len: int, budget: int = 2_000_000
) -> SeparabilityVerdict:
    """Enumerate all action sequences up to max_len; report the first one
    (shortest, then lexicographic) that solves two distinct states.

    A sequence solves s when folding it through the transition table lands on
    the goal exactly at the last step without passing through the goal
    earlier.
    """
    n, m = mdp.num_states, mdp.num_actions
    if m**max_len > budget:
        raise BudgetExceededError(
            f"|A|^max_len = {m}**{max_len} exceeds budget {budget}")
    succ = mdp.successor
    origins = np.flatnonzero(np.arange(n) != mdp.goal).astype(np.int64)

    best: list = [max_len + 1, None]  # [depth, (sequence, s, s')]

    def dfs(prefix: tuple, origs: np.ndarray, pos: np.ndarray):
        if len(prefix) >= best[0]:
            return
        for a in range(m):
            nxt = succ[pos, a]
            alive = nxt != mdp.dead
            if not alive.any():
                continue
            o, t = origs[alive], nxt[alive]
            seq = prefix + (a,)
            solved = o[t == mdp.goal]
            if len(solved) >= 2 and len(seq) < best[0]:
                best[0] = len(seq)
                best[1] = (seq, int(solved[0]), int(solved[1]))
                if best[0] == 1:
                    return
            cont = t != mdp.goal  # sequences may not pass through the goal
            if cont.any() and len(seq) < best[0] - 1:
                dfs(seq, o[cont], t[cont])

    dfs((), origins, origins.copy())
    if best[1] is not None:
        return SeparabilityVerdict(False, best[0], best[1])
    return SeparabilityVerdict(True, max_len)
