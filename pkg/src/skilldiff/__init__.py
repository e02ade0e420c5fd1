"""skilldiff: difficulty and incompressibility metrics for skill-augmented
deterministic sparse-reward MDPs, with tabular-RL experiment drivers."""

from .mdp import (DEAD_SENTINEL_U32, UNSOLVABLE, BudgetExceededError, MdpError,
                  ReverseGraph, SeparabilityVerdict, SolutionLengthTable,
                  StateDistribution, TabularDsmdp, build_reverse_graph,
                  check_invertible_transitions,
                  check_solution_separable_bruteforce,
                  shortest_solution_lengths)
from .skills import (GOAL_PASS_DEAD, GOAL_PASS_SUCCESS, AugmentedMdp,
                     MacroGenSpec, Skill, SkillError, augment,
                     behavior_variety, expand_rewriting, generate_macro_sets,
                     macro_from_labels, rewrite_min_length, unroll)

__version__ = "0.1.0"
