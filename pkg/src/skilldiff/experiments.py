"""Experiment drivers: variant grids, metric tables, RL campaigns,
lambda-optimized correlations, improvement scatters, and the randomized
theorem campaign."""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .envs import ENV_PRESETS, EnvSpec, build_env
from .mdp import StateDistribution, TabularDsmdp, shortest_solution_lengths
from .metrics import (bounds_report, compute_difficulty_report, solve_q,
                      p_exploration_difficulty, p_learning_difficulty,
                      solution_density, tightness_augmentation, ic_unmerged)
from .rl import (NOT_REACHED, RlConfig, RunRecord, protocol_preset,
                 measure_sample_complexity, planner_value_iteration, run)
from .skills import (GOAL_PASS_DEAD, GOAL_PASS_SUCCESS, MACRO_PRESETS,
                     AugmentedMdp, MacroGenSpec, Skill, augment,
                     generate_macro_sets, macro_from_labels)

FLOAT_FMT = "%.12g"

# env preset -> (macro-law kind, curated preset prefix)
_ENV_MACRO_FAMILY = {
    "cliff": ("cliff_walking", "cliff"),
    "pickup": ("pickup_world", "pickup"),
    "puzzle8": ("n_puzzle", "puzzle"),
    "cube": ("pocket_cube", "cube"),
}


@dataclass
class VariantSpec:
    name: str
    macros: list[str]  # macro words over the env's action labels

    @property
    def is_base(self) -> bool:
        return not self.macros


def variant_grid(env_preset: str, seed: int = 0) -> list[VariantSpec]:
    """The 32-variant grid: base + curated sets + 25 random sets
    (5 set sizes x 5 sets, per the environment's sampling law)."""
    kind, prefix = _ENV_MACRO_FAMILY[env_preset]
    out = [VariantSpec("base", [])]
    for key in sorted(MACRO_PRESETS):
        if key.startswith(prefix + "/"):
            out.append(VariantSpec(key, list(MACRO_PRESETS[key])))
    gen = generate_macro_sets(MacroGenSpec(env_kind=kind, seed=seed))
    for k in sorted(gen):
        for j, words in enumerate(gen[k]):
            out.append(VariantSpec(f"gen/k{k}/s{j}", words))
    return out


def materialize_variant(mdp: TabularDsmdp, variant: VariantSpec,
                        mode: str) -> AugmentedMdp:
    skills = [macro_from_labels(w, mdp.action_labels) for w in variant.macros]
    return augment(mdp, skills, mode=mode)


def cell_seed(*parts: int) -> int:
    """Stable scalar seed derived from a tuple of integers."""
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


# -- metric tables ---------------------------------------------------------

def metrics_table(env_preset: str, variants: list[VariantSpec],
                  delta: float = 1.0 / 50.0,
                  include_merged: bool = False) -> list[dict]:
    mdp, p, _ = build_env(ENV_PRESETS[env_preset])
    rows = []
    for v in variants:
        if v.is_base:
            rep = compute_difficulty_report(mdp, p, delta)
        else:
            aug = materialize_variant(mdp, v, GOAL_PASS_DEAD)
            rep = compute_difficulty_report(
                aug.mdp, p, delta, augmented=aug if include_merged else None)
        row = {"variant": v.name, "macros": "|".join(v.macros)}
        row.update({k: val for k, val in asdict(rep).items()
                    if not isinstance(val, dict)})
        row["ic_fixed"] = rep.ic_unmerged_fixed["value"]
        row["ic_sup"] = rep.ic_unmerged_sup["value"]
        if rep.ic_merged:
            row["ic_merged"] = rep.ic_merged["value"]
            row["ic_merged_method"] = rep.ic_merged["method"]
        rows.append(row)
    return rows


def write_csv(rows: list[dict], path: str):
    import csv
    keys = list(rows[0].keys())
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(keys)
        for r in rows:
            w.writerow([_fmt(r.get(k)) for k in keys])


def _fmt(v):
    if isinstance(v, float):
        return FLOAT_FMT % v
    return v


# -- RL campaign -------------------------------------------------------------

_ENV_CACHE: dict = {}


def _cached_env(env_preset: str):
    if env_preset not in _ENV_CACHE:
        mdp, p, _ = build_env(ENV_PRESETS[env_preset])
        _ENV_CACHE[env_preset] = (mdp, p)
    return _ENV_CACHE[env_preset]


_ALGO_IDS = {"q_learning": 0, "rl_value_iteration": 1, "reinforce": 2}


def _run_cell(args) -> dict:
    (env_preset, variant, v_idx, algo, seed_idx, root_seed, overrides) = args
    import dataclasses

    mdp, p = _cached_env(env_preset)
    cfg = protocol_preset(algo)
    for k, v in overrides.items():
        cfg = dataclasses.replace(cfg, **{k: v})
    cfg = cfg.with_seed(cell_seed(root_seed, v_idx, _ALGO_IDS[algo], seed_idx))
    if variant.is_base:
        env = mdp
    else:
        env = materialize_variant(mdp, variant, GOAL_PASS_SUCCESS)
    rec = run(env, p, cfg)
    return {
        "variant": variant.name, "algorithm": algo, "seed_index": seed_idx,
        "record": rec,
    }


def run_rl_campaign(env_preset: str, variants: list[VariantSpec],
                    algorithms: list[str], seeds: int, root_seed: int = 0,
                    overrides: dict | None = None, jobs: int = 1,
                    progress=None) -> list[dict]:
    cells = [(env_preset, v, vi, algo, si, root_seed, overrides or {})
             for vi, v in enumerate(variants) for algo in algorithms
             for si in range(seeds)]
    results = []
    if jobs > 1:
        import multiprocessing as mp
        with mp.get_context("fork").Pool(jobs) as pool:
            for res in pool.imap(_run_cell, cells):
                results.append(res)
                if progress:
                    progress(res)
    else:
        for c in cells:
            res = _run_cell(c)
            results.append(res)
            if progress:
                progress(res)
    return results


def sample_complexities(results: list[dict], criterion: str,
                        threshold: float) -> dict[str, list[float | None]]:
    """variant -> per-seed N (None = never crossed)."""
    out: dict[str, list] = {}
    for res in results:
        n = measure_sample_complexity(res["record"], criterion, threshold)
        out.setdefault(res["variant"], []).append(n)
    return out


# -- lambda-optimized correlation -------------------------------------------

@dataclass
class CorrelationResult:
    pearson_r: float
    lambda_star: float
    excluded: list[str]
    pairs: list[tuple[str, float, float]]  # (variant, log N, log J at best)


class InsufficientDataError(ValueError):
    pass


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    if np.ptp(x) == 0.0 or np.ptp(y) == 0.0:
        return float("nan")
    return float(np.corrcoef(x, y)[0, 1])


def _log_j(lam: float, ln_jl: np.ndarray, je: np.ndarray) -> np.ndarray:
    """log(lam * J_learn + (1 - lam) * exp(J_explore)) without overflow."""
    if lam <= 0.0:
        return je
    if lam >= 1.0:
        return ln_jl
    return np.logaddexp(math.log(lam) + ln_jl, math.log1p(-lam) + je)


def lambda_correlation(names: list[str], log_n, j_learn, j_explore,
                       grid: int = 1001) -> CorrelationResult:
    """Maximize Pearson r between log N and log(lam Jl + (1-lam) e^{Je})."""
    keep = [i for i, n in enumerate(log_n) if n is not None]
    excluded = [names[i] for i in range(len(names)) if i not in keep]
    if len(keep) < 3:
        raise InsufficientDataError(
            f"need at least 3 converged variants, have {len(keep)}")
    ln_n = np.array([log_n[i] for i in keep], dtype=float)
    ln_jl = np.log(np.array([j_learn[i] for i in keep], dtype=float))
    je = np.array([j_explore[i] for i in keep], dtype=float)

    def r_at(lam: float) -> float:
        r = _pearson(ln_n, _log_j(lam, ln_jl, je))
        return -1.0 if math.isnan(r) else r

    lams = np.linspace(0.0, 1.0, grid)
    vals = [r_at(l) for l in lams]
    i = int(np.argmax(vals))
    lo = lams[max(i - 1, 0)]
    hi = lams[min(i + 1, grid - 1)]
    res = minimize_scalar(lambda l: -r_at(l), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-6})
    best_lam, best_r = (float(res.x), float(-res.fun))
    if vals[i] >= best_r:
        best_lam, best_r = float(lams[i]), float(vals[i])
    logj = _log_j(best_lam, ln_jl, je)
    pairs = [(names[k], float(ln_n[j]), float(logj[j]))
             for j, k in enumerate(keep)]
    return CorrelationResult(pearson_r=best_r, lambda_star=best_lam,
                             excluded=excluded, pairs=pairs)


def mean_log_n(per_variant: dict[str, list], names: list[str]) -> list:
    """Mean log N per variant; None when any seed never crossed."""
    out = []
    for n in names:
        vals = per_variant.get(n, [])
        if not vals or any(v is None for v in vals):
            out.append(None)
        else:
            out.append(float(np.mean(np.log(vals))))
    return out


# -- improvement scatter ------------------------------------------------------

GNUPLOT_TEMPLATE = """\
set datafile separator ','
set xlabel 'unmerged incompressibility (base)'
set ylabel 'best improvement ratio min C+/C0'
set logscale y
plot '{csv}' using 2:3:1 with labels point pt 7 offset char 1,0.5 notitle
"""


def improvement_scatter(env_rows: dict[str, dict]) -> list[dict]:
    """env_rows: env -> {"ic": float, "base": {measure: value},
    "variants": {name: {measure: value}}}.  Emits one row per (env, measure):
    the best ratio min over strict variants of C+/C0."""
    out = []
    for env, data in sorted(env_rows.items()):
        for measure, c0 in sorted(data["base"].items()):
            ratios = [vv[measure] / c0 for vv in data["variants"].values()
                      if vv.get(measure) is not None]
            if not ratios or c0 is None:
                continue
            out.append({"env": env, "measure": measure, "ic": data["ic"],
                        "best_ratio": min(ratios)})
    return out


# -- randomized theorem campaign ---------------------------------------------

def random_invertible_mdp(rng: np.random.Generator, num_states: int,
                          num_actions: int, max_tries: int = 200
                          ) -> TabularDsmdp:
    """Random DSMDP whose actions are permutations restricted to non-goal
    states (hence invertible transitions, hence solution-separable), with
    every state solvable."""
    for _ in range(max_tries):
        succ = np.empty((num_states, num_actions), dtype=np.int32)
        for a in range(num_actions):
            succ[:, a] = rng.permutation(num_states)
        succ[0] = num_states  # goal row
        mdp = TabularDsmdp(successor=succ, goal=0,
                           action_labels=[f"a{i}" for i in range(num_actions)])
        d = shortest_solution_lengths(mdp)
        if d.solvable.all():
            return mdp
    raise RuntimeError("failed to sample a fully solvable invertible MDP")


def random_distribution(rng: np.random.Generator, mdp: TabularDsmdp
                        ) -> StateDistribution:
    probs = np.zeros(mdp.num_states)
    non_goal = [s for s in range(mdp.num_states) if s != mdp.goal]
    w = rng.dirichlet(np.ones(len(non_goal)))
    probs[non_goal] = w
    return StateDistribution(probs)


def random_macro_skills(rng: np.random.Generator, mdp: TabularDsmdp,
                        max_k: int = 4, max_len: int = 4) -> list[Skill]:
    k = int(rng.integers(1, max_k + 1))
    seen = set()
    skills = []
    tries = 0
    while len(skills) < k and tries < 200:
        tries += 1
        L = int(rng.integers(2, max_len + 1))
        seq = tuple(int(x) for x in rng.integers(0, mdp.num_actions, size=L))
        if seq in seen:
            continue
        seen.add(seq)
        skills.append(Skill.from_macro(seq, label="m" + "".join(map(str, seq))))
    return skills


def random_tabular_skills(rng: np.random.Generator, mdp: TabularDsmdp,
                          max_k: int = 3) -> list[Skill]:
    k = int(rng.integers(1, max_k + 1))
    skills = []
    for j in range(k):
        seqs = []
        for s in range(mdp.num_states):
            if s == mdp.goal or rng.random() < 0.3:
                seqs.append(())
            else:
                L = int(rng.integers(1, 4))
                seqs.append(tuple(int(x) for x in
                                  rng.integers(0, mdp.num_actions, size=L)))
        skills.append(Skill.from_sequences(seqs, label=f"z{j}"))
    return skills


def build_star_base(num_actions: int = 6) -> tuple[TabularDsmdp,
                                                    StateDistribution]:
    """Maximally incompressible base: state i is solved only by action i.
    All support sits at distance 1 with full length-1 coverage, so the
    unmerged incompressibility attains 1 (the boundary limit)."""
    n = num_actions + 1
    succ = np.full((n, num_actions), n, dtype=np.int32)
    for i in range(num_actions):
        succ[1 + i, i] = 0
    mdp = TabularDsmdp(successor=succ, goal=0,
                       action_labels=[f"a{i}" for i in range(num_actions)])
    p = np.zeros(n)
    p[1:] = 1.0 / num_actions
    return mdp, StateDistribution(p)


@dataclass
class CampaignSummary:
    cases: int = 0
    holds: int = 0
    inconclusive: int = 0
    skipped: int = 0
    violations: list[str] = field(default_factory=list)
    held_by_claim: dict = field(default_factory=dict)

    def absorb(self, tag: str, report):
        self.cases += 1
        for c in report.claims:
            if not c.preconditions_met:
                self.skipped += 1
            elif c.holds is True:
                self.holds += 1
                self.held_by_claim[c.name] = \
                    self.held_by_claim.get(c.name, 0) + 1
            elif c.holds is None:
                self.inconclusive += 1
            else:
                self.violations.append(
                    f"{tag}: {c.name} lhs={c.lhs!r} rhs={c.rhs!r} ({c.notes})")


def theorem_campaign(seed: int = 0, n_macro_cases: int = 200,
                     n_skill_cases: int = 200, n_seqcons_sets: int = 50,
                     delta: float = 0.1, max_states: int = 40,
                     progress=None) -> CampaignSummary:
    """Randomized verification campaign over the inequality claims."""
    from .envs.synthetic import build_sequence_consume

    rng = np.random.default_rng(seed)
    summary = CampaignSummary()

    for i in range(n_macro_cases):
        n = int(rng.integers(5, max_states + 1))
        m = int(rng.integers(2, 4))
        mdp = random_invertible_mdp(rng, n, m)
        p = random_distribution(rng, mdp)
        aug = augment(mdp, random_macro_skills(rng, mdp), mode=GOAL_PASS_DEAD)
        rep = bounds_report(mdp, aug, p, delta, separable=True)
        summary.absorb(f"macro[{i}]", rep)
        if progress:
            progress(i, "macro")

    for i in range(n_skill_cases):
        n = int(rng.integers(5, max_states + 1))
        m = int(rng.integers(2, 4))
        mdp = random_invertible_mdp(rng, n, m)
        p = random_distribution(rng, mdp)
        aug = augment(mdp, random_tabular_skills(rng, mdp),
                      mode=GOAL_PASS_DEAD)
        rep = bounds_report(mdp, aug, p, delta, separable=True)
        summary.absorb(f"skill[{i}]", rep)
        if progress:
            progress(i, "skill")

    seq_mdp, seq_p = build_sequence_consume(2, 3)
    for i in range(n_seqcons_sets):
        aug = augment(seq_mdp, random_macro_skills(rng, seq_mdp),
                      mode=GOAL_PASS_DEAD)
        rep = bounds_report(seq_mdp, aug, seq_p, 0.0, separable=True,
                            uniform_length_solutions=True)
        summary.absorb(f"seqcons[{i}]", rep)
        if progress:
            progress(i, "seqcons")
    return summary


def tradeoff_demonstration(delta: float = 0.2, K: int = 600) -> dict:
    """On a base meeting the incompressibility condition, a suitable skill
    augmentation raises learning difficulty while lowering exploration
    difficulty."""
    mdp, p = build_star_base(6)
    d = shortest_solution_lengths(mdp)
    ic = ic_unmerged(mdp, p, mode="sup", d=d)
    a0 = mdp.num_actions
    cond_rhs = (1.0 / (a0 + 1)) * (1.0 - 1.0 / math.log(a0))
    aug, info = tightness_augmentation(mdp, p, delta, K)
    q0 = solve_q(mdp, delta)
    qp = solve_q(aug.mdp, delta)
    out = {
        "condition_met": bool(1.0 - ic.value <= cond_rhs),
        "ic": ic.value,
        "j_learn_ratio": p_learning_difficulty(aug.mdp, p)
        / p_learning_difficulty(mdp, p, d),
        "j_explore_ratio": p_exploration_difficulty(aug.mdp, p, qp)
        / p_exploration_difficulty(mdp, p, q0),
        "fallback_self_states": len(info.fallback_states),
    }
    return out
