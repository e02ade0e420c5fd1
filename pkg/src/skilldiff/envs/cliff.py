"""Cliff-walking grid world.

Classic 4x12 grid: the agent starts bottom-left and must reach bottom-right.
Touching any other bottom-row square (the cliff) teleports the agent back to
the start within the same episode; cliff cells are not states.  Moving off
the grid is a no-op.
"""

from __future__ import annotations

import numpy as np

from ..mdp import StateDistribution, TabularDsmdp

ACTIONS = ["U", "R", "D", "L"]
DELTAS = {"U": (-1, 0), "R": (0, 1), "D": (1, 0), "L": (0, -1)}


def build_cliff_walking(height: int = 4, width: int = 12):
    """Returns the reachable tabular MDP and the point-mass start distribution."""
    bottom = height - 1
    start = (bottom, 0)
    goal_cell = (bottom, width - 1)
    cliff = {(bottom, c) for c in range(1, width - 1)}

    def move(cell, a):
        dr, dc = DELTAS[a]
        r, c = cell[0] + dr, cell[1] + dc
        if not (0 <= r < height and 0 <= c < width):
            return cell
        if (r, c) in cliff:
            return start
        return (r, c)

    # forward closure from the start
    order = [start]
    index = {start: 0}
    for cell in order:
        if cell == goal_cell:
            continue
        for a in ACTIONS:
            t = move(cell, a)
            if t not in index:
                index[t] = len(order)
                order.append(t)
    n = len(order)
    goal = index[goal_cell]
    succ = np.full((n, len(ACTIONS)), n, dtype=np.int32)
    for cell, s in index.items():
        if s == goal:
            continue
        for j, a in enumerate(ACTIONS):
            succ[s, j] = index[move(cell, a)]
    mdp = TabularDsmdp(successor=succ, goal=goal, action_labels=list(ACTIONS))
    p = np.zeros(n)
    p[index[start]] = 1.0
    return mdp, StateDistribution(p), {"cells": order, "start": index[start]}
