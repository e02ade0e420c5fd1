"""Deterministic skills, macroactions, and skill augmentation of tabular MDPs.

A skill maps states to finite base-action sequences (possibly empty).  A
macroaction is the constant skill with sequence length >= 2.  Augmenting an
MDP appends one action column per skill; the successor is the result of
unrolling the skill's sequence, with two conventions for sequences that cross
the goal mid-way:

  * ``undefined_is_dead`` -- formal convention: the transition is undefined,
    represented as a dead transition (the agent has not reached the goal);
  * ``success`` -- common HRL convention: the agent stops at the goal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mdp import MdpError, TabularDsmdp

GOAL_PASS_DEAD = "undefined_is_dead"
GOAL_PASS_SUCCESS = "success"


class SkillError(MdpError):
    pass


@dataclass
class Skill:
    kind: str  # "macro" | "tabular"
    label: str
    macro: tuple[int, ...] | None = None
    # tabular storage: shared arena with per-state offsets
    offsets: np.ndarray | None = None  # int64 [num_states + 1]
    arena: np.ndarray | None = None  # int32, concatenated sequences
    self_mask: np.ndarray | None = None  # states with forced self-transition

    @classmethod
    def from_macro(cls, seq, label: str | None = None) -> "Skill":
        seq = tuple(int(a) for a in seq)
        if len(seq) < 2:
            raise SkillError("macroactions must have length >= 2")
        return cls(kind="macro", label=label or "+".join(map(str, seq)), macro=seq)

    @classmethod
    def from_sequences(cls, seqs: list[tuple[int, ...]], label: str,
                       self_mask: np.ndarray | None = None) -> "Skill":
        offsets = np.zeros(len(seqs) + 1, dtype=np.int64)
        offsets[1:] = np.cumsum([len(s) for s in seqs])
        arena = np.fromiter((a for s in seqs for a in s), dtype=np.int32,
                            count=int(offsets[-1]))
        return cls(kind="tabular", label=label, offsets=offsets, arena=arena,
                   self_mask=self_mask)

    def sequence(self, s: int) -> tuple[int, ...]:
        if self.kind == "macro":
            return self.macro
        return tuple(self.arena[self.offsets[s]:self.offsets[s + 1]].tolist())

    def is_forced_self(self, s: int) -> bool:
        return self.self_mask is not None and bool(self.self_mask[s])


def macro_from_labels(word: str, base_labels: list[str]) -> Skill:
    """Build a macroaction from a string of single-character action labels."""
    index = {lab: i for i, lab in enumerate(base_labels)}
    try:
        seq = tuple(index[c] for c in word)
    except KeyError as e:
        raise SkillError(f"unknown action label {e} in macro {word!r}")
    return Skill.from_macro(seq, label=word)


@dataclass
class UnrollResult:
    final: int  # state index, or mdp.dead
    goal_step: int | None  # step (1-based) at which the goal was reached

    @property
    def reached_goal_exactly(self) -> bool:
        return self.goal_step is not None


def unroll(base: TabularDsmdp, s: int, seq) -> UnrollResult:
    """Fold a base-action sequence through the transition table from s.

    Reports the step at which the goal was first reached; folding past the
    goal is undefined, so the walk stops there.
    """
    if s == base.goal:
        raise MdpError("cannot unroll from the goal")
    cur = s
    for k, a in enumerate(seq, start=1):
        cur = int(base.successor[cur, a])
        if cur == base.goal:
            return UnrollResult(final=base.goal, goal_step=k)
        if cur == base.dead:
            return UnrollResult(final=base.dead, goal_step=None)
    return UnrollResult(final=cur, goal_step=None)


@dataclass
class AugmentedMdp:
    """A base MDP plus a skill multiset, with the augmented table materialized."""

    base: TabularDsmdp
    skills: list[Skill]
    mdp: TabularDsmdp
    goal_pass_mode: str
    skill_lengths: np.ndarray  # int32 [num_states, num_skills], base actions consumed

    @property
    def num_skills(self) -> int:
        return len(self.skills)

    def action_length(self, s: int, a: int) -> int:
        """Base actions consumed by augmented action a taken in state s."""
        if a < self.base.num_actions:
            return 1
        return int(self.skill_lengths[s, a - self.base.num_actions])


def augment(base: TabularDsmdp, skills: list[Skill],
            mode: str = GOAL_PASS_DEAD) -> AugmentedMdp:
    if mode not in (GOAL_PASS_DEAD, GOAL_PASS_SUCCESS):
        raise SkillError(f"unknown goal_pass_mode {mode!r}")
    n, m0 = base.num_states, base.num_actions
    cols = [base.successor]
    lengths = np.zeros((n, len(skills)), dtype=np.int32)
    labels = list(base.action_labels)
    for j, z in enumerate(skills):
        if z.kind == "macro":
            if max(z.macro) >= m0:
                raise SkillError(f"skill {z.label!r} references base action "
                                 f"{max(z.macro)} out of range")
            col, length = _unroll_macro_column(base, z.macro, mode)
        else:
            col, length = _unroll_tabular_column(base, z, mode)
        col[base.goal] = base.dead
        lengths[:, j] = length
        cols.append(col[:, None])
        labels.append(z.label)
    table = np.concatenate(cols, axis=1) if skills else base.successor.copy()
    mdp = TabularDsmdp(successor=table, goal=base.goal, action_labels=labels,
                       base_action_count=m0)
    return AugmentedMdp(base=base, skills=list(skills), mdp=mdp,
                        goal_pass_mode=mode, skill_lengths=lengths)


def _unroll_macro_column(base: TabularDsmdp, macro, mode):
    """Vectorized unroll of a constant action sequence from every state."""
    n = base.num_states
    succ_pad = base.successor_padded()
    cur = np.arange(n + 1, dtype=np.int64)
    goal_step = np.zeros(n + 1, dtype=np.int32)  # 0 = never hit the goal
    for k, a in enumerate(macro, start=1):
        cur = succ_pad[cur, a].astype(np.int64)
        hit = (cur == base.goal) & (goal_step == 0)
        goal_step[hit] = k
    cur = cur[:n]
    goal_step = goal_step[:n]
    length = np.full(n, len(macro), dtype=np.int32)
    col = np.where(goal_step > 0, base.goal, cur).astype(np.int32)
    if mode == GOAL_PASS_DEAD:
        crossed = (goal_step > 0) & (goal_step < len(macro))
        col[crossed] = base.dead
    else:
        length = np.where(goal_step > 0, goal_step, length).astype(np.int32)
    return col, length


def _unroll_tabular_column(base: TabularDsmdp, z: Skill, mode):
    n = base.num_states
    col = np.empty(n, dtype=np.int32)
    length = np.zeros(n, dtype=np.int32)
    for s in range(n):
        if s == base.goal:
            col[s] = base.dead
            continue
        if z.is_forced_self(s):
            col[s] = s
            continue
        seq = z.sequence(s)
        if not seq:
            col[s] = s
            continue
        if max(seq) >= base.num_actions:
            raise SkillError(f"skill {z.label!r} references an out-of-range "
                             f"base action at state {s}")
        r = unroll(base, s, seq)
        if r.goal_step is not None:
            if r.goal_step == len(seq):
                col[s] = base.goal
                length[s] = len(seq)
            elif mode == GOAL_PASS_SUCCESS:
                col[s] = base.goal
                length[s] = r.goal_step
            else:
                col[s] = base.dead
                length[s] = len(seq)
        else:
            col[s] = r.final
            length[s] = len(seq)
    return col, length


def behavior_variety(skill: Skill, mdp: TabularDsmdp) -> int:
    """Number of distinct action sequences the skill produces over non-goal states."""
    if skill.kind == "macro":
        return 1
    seen = set()
    for s in range(mdp.num_states):
        if s == mdp.goal:
            continue
        if skill.is_forced_self(s):
            seen.add(())
        else:
            seen.add(skill.sequence(s))
    return len(seen)


# -- minimum-length rewriting --------------------------------------------

def rewrite_min_length(solution, macros: list[tuple[int, ...]],
                       num_base_actions: int) -> list[int]:
    """Rewrite a base-action solution with macroactions, minimizing tokens.

    Returns augmented action indices (base action a stays a; macro j becomes
    num_base_actions + j).  Among minimum-length rewritings, ties prefer the
    longest token at the earliest position, then the lowest action index, so
    the output is a deterministic canonical form.
    """
    sol = tuple(int(a) for a in solution)
    n = len(sol)
    INF = n + 2
    cost = [INF] * (n + 1)
    cost[n] = 0
    for i in range(n - 1, -1, -1):
        cost[i] = 1 + cost[i + 1]
        for mac in macros:
            L = len(mac)
            if i + L <= n and sol[i:i + L] == mac and 1 + cost[i + L] < cost[i]:
                cost[i] = 1 + cost[i + L]
    out = []
    i = 0
    while i < n:
        # candidate edges on a shortest path, longest consume first
        best_len, best_token = 1, sol[i]
        for j, mac in enumerate(macros):
            L = len(mac)
            if i + L <= n and sol[i:i + L] == mac and 1 + cost[i + L] == cost[i]:
                token = num_base_actions + j
                if L > best_len or (L == best_len and token < best_token):
                    best_len, best_token = L, token
        if best_len == 1 and 1 + cost[i + 1] != cost[i]:
            raise AssertionError("rewriting DP is inconsistent")
        out.append(best_token)
        i += best_len
    return out


def expand_rewriting(tokens, macros: list[tuple[int, ...]],
                     num_base_actions: int) -> list[int]:
    out = []
    for t in tokens:
        if t < num_base_actions:
            out.append(int(t))
        else:
            out.extend(macros[t - num_base_actions])
    return out


# -- random macroaction generators ----------------------------------------

# Per-environment random macroaction laws: geometric length parameter and the
# per-symbol sampling process (either a flat distribution or a two-level
# bucket scheme choosing a direction pair/triple first).
MACRO_LAWS = {
    "cliff_walking": {
        "length_p": 1.0 / 3.0,
        "buckets": [
            (0.4, [("U", 0.3), ("R", 0.7)]),
            (0.3, [("R", 0.7), ("D", 0.3)]),
            (0.1, [("D", 0.7), ("L", 0.3)]),
            (0.2, [("L", 0.3), ("U", 0.7)]),
        ],
    },
    "pickup_world": {
        "length_p": 1.0 / 3.0,
        "buckets": [
            (0.25, [("L", 0.4), ("U", 0.4), ("P", 0.2)]),
            (0.25, [("U", 0.4), ("R", 0.4), ("P", 0.2)]),
            (0.25, [("R", 0.4), ("D", 0.4), ("P", 0.2)]),
            (0.25, [("D", 0.4), ("L", 0.4), ("P", 0.2)]),
        ],
    },
    "n_puzzle": {
        "length_p": 0.5,
        "buckets": [(1.0, [("U", 0.2), ("R", 0.3), ("D", 0.3), ("L", 0.2)])],
    },
    "pocket_cube": {
        "length_p": 0.5,
        "buckets": [(1.0, [("F", 1 / 3), ("R", 1 / 3), ("U", 1 / 3)])],
    },
}

# Curated macroaction sets (named presets).  "lemma"/"top" entries are the
# abstraction-algorithm outputs; v1..v5 are the hand-derived variations.
MACRO_PRESETS = {
    "cliff/lemma": ["URRRRRRRRRRRD"],
    "cliff/v1": ["RR"],
    "cliff/v2": ["RR", "RRRR", "RRRRRRRR"],
    "cliff/v3": ["RRRRRRRRRRR"],
    "cliff/v4": ["UUURRRR", "RRR", "DRDRD"],
    "cliff/v5": ["URRRRRRRRRRR", "RRRRRRRRRRRD"],
    "pickup/lemma": ["PUURRRP", "LL", "UU", "DD"],
    "pickup/v1": ["LL", "UU", "DD"],
    "pickup/v2": ["LL", "UU", "RRR", "DD"],
    "pickup/v3": ["PUU", "RRRP"],
    "pickup/v4": ["PUURRRP"],
    "pickup/v5": ["PUURRRP", "LL", "UU", "RRR", "DD"],
    "puzzle/lemma": ["RD", "LDR"],
    "puzzle/v1": ["RD"],
    "puzzle/v2": ["LDR"],
    "puzzle/v3": ["RD", "DR"],
    "puzzle/v4": ["LDR", "URD"],
    "puzzle/v5": ["RD", "DR", "LDR", "URD"],
    "cube/top": ["FF", "RR", "UU"],
    "cube/v1": ["FF"],
    "cube/v2": ["FF", "FFF"],
    "cube/v3": ["FF", "RR"],
    "cube/v4": ["FF", "FFF", "RR", "RRR"],
    "cube/v5": ["FF", "FFF", "RR", "RRR", "UUU"],
}


@dataclass
class MacroGenSpec:
    env_kind: str
    seed: int
    ks: tuple[int, ...] = (1, 2, 3, 4, 5)
    sets_per_k: int = 5
    max_rejections: int = 10_000


def _sample_macro_word(rng: np.random.Generator, law) -> str:
    length = 1 + int(rng.geometric(law["length_p"]))  # always >= 2
    bucket_probs = [b[0] for b in law["buckets"]]
    out = []
    for _ in range(length):
        b = law["buckets"][rng.choice(len(law["buckets"]), p=bucket_probs)]
        syms = [s for s, _ in b[1]]
        probs = [q for _, q in b[1]]
        out.append(syms[rng.choice(len(syms), p=probs)])
    return "".join(out)


def generate_macro_sets(spec: MacroGenSpec) -> dict[int, list[list[str]]]:
    """Random distinct macroaction sets per the environment's sampling law.

    Returns {k: [set_0, ..., set_{sets_per_k-1}]} with each set a list of k
    distinct macro words.  Deterministic under the spec seed.
    """
    law = MACRO_LAWS[spec.env_kind]
    rng = np.random.default_rng(spec.seed)
    out: dict[int, list[list[str]]] = {}
    for k in spec.ks:
        sets = []
        for _ in range(spec.sets_per_k):
            words: list[str] = []
            rejections = 0
            while len(words) < k:
                w = _sample_macro_word(rng, law)
                if w in words:
                    rejections += 1
                    if rejections > spec.max_rejections:
                        raise SkillError("macro distinctness rejection budget "
                                         "exceeded")
                    continue
                words.append(w)
            sets.append(words)
        out[k] = sets
    return out
