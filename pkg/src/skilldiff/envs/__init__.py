"""Environment constructors and the spec-driven dispatcher."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..mdp import MdpError, StateDistribution, TabularDsmdp
from .cliff import build_cliff_walking
from .cube import build_pocket_cube
from .npuzzle import build_n_puzzle
from .pickup import (DEFAULT_PICKUP_CONFIG, PickupWorldConfig,
                     build_pickup_world, parse_pickup_config)
from .scramble import ScrambleMove, scramble_distribution
from .synthetic import build_chain, build_sequence_consume

ENV_KINDS = ("cliff_walking", "n_puzzle", "pocket_cube", "pickup_world",
             "chain", "sequence_consume")


@dataclass
class EnvSpec:
    kind: str
    params: dict = field(default_factory=dict)

    def validate(self):
        if self.kind not in ENV_KINDS:
            raise MdpError(f"unknown environment kind {self.kind!r}")


def build_env(spec: EnvSpec) -> tuple[TabularDsmdp, StateDistribution, dict]:
    """Build the reachable tabular MDP and its initial distribution p."""
    spec.validate()
    p = spec.params
    if spec.kind == "cliff_walking":
        return build_cliff_walking(**p)
    if spec.kind == "n_puzzle":
        return build_n_puzzle(**p)
    if spec.kind == "pocket_cube":
        return build_pocket_cube(**p)
    if spec.kind == "pickup_world":
        cfg = p.get("config")
        if isinstance(cfg, str):
            cfg = parse_pickup_config(cfg)
        elif cfg is None:
            cfg = parse_pickup_config(DEFAULT_PICKUP_CONFIG)
        return build_pickup_world(cfg, **{k: v for k, v in p.items()
                                          if k != "config"})
    if spec.kind == "chain":
        mdp, dist = build_chain(**p)
        return mdp, dist, {}
    if spec.kind == "sequence_consume":
        mdp, dist = build_sequence_consume(**p)
        return mdp, dist, {}
    raise AssertionError


# named presets used by the CLI and the experiment drivers
ENV_PRESETS = {
    "cliff": EnvSpec("cliff_walking"),
    "puzzle8": EnvSpec("n_puzzle", {"n": 3}),
    "cube": EnvSpec("pocket_cube"),
    "pickup": EnvSpec("pickup_world"),
    "chain20": EnvSpec("chain", {"n": 20}),
    "seqcons": EnvSpec("sequence_consume", {"alphabet_size": 2, "max_len": 3}),
}
