"""Synthetic theorem-testing environments: chains and suffix-consumption MDPs."""

from __future__ import annotations

import numpy as np

from ..mdp import BudgetExceededError, StateDistribution, TabularDsmdp


def build_chain(n: int) -> tuple[TabularDsmdp, StateDistribution]:
    """Chain 0 <- 1 <- ... <- n with goal 0, a single action, p on the far end."""
    if n < 1:
        raise ValueError("chain needs at least one non-goal state")
    succ = np.arange(-1, n, dtype=np.int32).reshape(n + 1, 1)
    succ[0, 0] = n + 1  # goal row stored as dead
    mdp = TabularDsmdp(successor=succ, goal=0, action_labels=["a"])
    p = np.zeros(n + 1)
    p[n] = 1.0
    return mdp, StateDistribution(p)


def build_sequence_consume(
    alphabet_size: int,
    max_len: int,
    length_weights=None,
    state_budget: int = 3_000_000,
) -> tuple[TabularDsmdp, StateDistribution]:
    """States are all action strings of length 1..max_len plus the goal.

    Action a consumes the first symbol when it matches, else kills the
    episode, so every state has exactly one solution: the state itself.
    p is uniform within each length class; class weights default to class
    size (uniform over all states) and may be overridden.
    """
    A, L = alphabet_size, max_len
    if A < 1 or L < 1:
        raise ValueError("need alphabet_size >= 1 and max_len >= 1")
    sizes = [A**l for l in range(1, L + 1)]
    n = 1 + sum(sizes)  # goal at index 0
    if n > state_budget:
        raise BudgetExceededError(f"{n} states exceed budget {state_budget}")
    offsets = np.zeros(L + 2, dtype=np.int64)  # offsets[l] = first index of length l
    offsets[1] = 1
    for l in range(1, L + 1):
        offsets[l + 1] = offsets[l] + A**l

    succ = np.full((n, A), n, dtype=np.int32)  # default dead
    for l in range(1, L + 1):
        vals = np.arange(A**l, dtype=np.int64)
        head = vals // A ** (l - 1)
        tail = vals % A ** (l - 1)
        dest = tail + offsets[l - 1] if l > 1 else np.zeros_like(vals)
        for a in range(A):
            m = head == a
            succ[offsets[l] + vals[m], a] = dest[m]
    succ[0] = n  # goal row

    labels = [chr(ord("a") + i) for i in range(A)] if A <= 26 else \
        [f"a{i}" for i in range(A)]
    mdp = TabularDsmdp(successor=succ, goal=0, action_labels=labels)

    if length_weights is None:
        length_weights = [float(s) for s in sizes]
    w = np.asarray(length_weights, dtype=np.float64)
    if w.shape != (L,) or np.any(w < 0) or w.sum() <= 0:
        raise ValueError("length_weights must be L nonnegative values")
    w = w / w.sum()
    p = np.zeros(n)
    for l in range(1, L + 1):
        p[offsets[l]:offsets[l + 1]] = w[l - 1] / A**l
    return mdp, StateDistribution(p)


def sequence_state_index(word: str, alphabet_size: int, labels: list[str]) -> int:
    """Index of the state corresponding to an action string (for tests)."""
    A = alphabet_size
    idx = {c: i for i, c in enumerate(labels)}
    offset = 1 + sum(A**l for l in range(1, len(word)))
    val = 0
    for c in word:
        val = val * A + idx[c]
    return offset + val
