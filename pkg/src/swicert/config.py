"""JSON analysis configuration."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from swicert import siggen
from swicert.densities import SignalProfile, bundle_from_dict
from swicert.errors import ConfigurationError
from swicert.family import DEFAULT_CLASS_TOL, SystemFamily
from swicert.signal import HFunction, SwitchingSignal, TransitionGraph

SIGNAL_SOURCES = ("profile", "generator", "csv", "bundle")
SEED_ENV = "SWICERT_SEED"


@dataclass
class AnalysisConfig:
    family: SystemFamily
    graph: TransitionGraph
    h: HFunction
    signal_kind: str
    signal_block: dict
    Q: dict = field(default_factory=dict)
    P: dict = field(default_factory=dict)
    simulation: dict = field(default_factory=dict)
    seed: int = 0
    out_dir: str | None = None
    base_dir: Path = Path(".")

    def profile(self):
        raw = dict(self.signal_block["profile"])
        raw.setdefault("h", self.h.to_dict())
        return SignalProfile.from_dict(raw)

    def generator_spec(self, horizon=None, start=None):
        """Generator spec from the signal block (a profile source yields profile tracking)."""
        if self.signal_kind == "profile":
            return siggen.ProfileTracking(
                self.profile(), self.graph,
                float(horizon if horizon is not None else self.simulation.get("horizon", 1e4)),
                int(start if start is not None else self.simulation.get("start", self.graph.vertices[0])),
            )
        if self.signal_kind != "generator":
            raise ConfigurationError(f"signal source {self.signal_kind!r} is not a generator")
        return parse_generator(self.signal_block["generator"], self.graph, self.h, self.seed, horizon)

    def signal(self, horizon=None):
        if self.signal_kind == "csv":
            path = Path(self.signal_block["csv"])
            if not path.is_absolute():
                path = self.base_dir / path
            text = path.read_text()
            return SwitchingSignal.from_csv(text, self.signal_block.get("horizon"))
        if self.signal_kind in ("generator", "profile"):
            return siggen.generate(self.generator_spec(horizon))
        raise ConfigurationError("a declared density bundle has no concrete signal to simulate")

    def bundle(self):
        return bundle_from_dict(self.signal_block["bundle"])


def parse_generator(g, graph, h, seed, horizon=None):
    kind = g.get("kind")
    T = float(horizon if horizon is not None else g["horizon"])
    if kind == "round_robin":
        return siggen.RoundRobin(tuple(int(i) for i in g["cycle"]), float(g["hold"]), T)
    if kind == "random_walk":
        hold = g.get("hold", {"fixed": 1.0})
        if "fixed" in hold:
            dist = siggen.Fixed(float(hold["fixed"]))
        elif "uniform" in hold:
            lo, hi = hold["uniform"]
            dist = siggen.UniformRange(float(lo), float(hi))
        else:
            raise ConfigurationError("random_walk hold must be {'fixed': s} or {'uniform': [a, b]}")
        s = g.get("seed", seed)
        if os.environ.get(SEED_ENV):
            s = int(os.environ[SEED_ENV])
        return siggen.RandomWalk(graph, dist, int(s), T, g.get("start"))
    if kind == "profile_tracking":
        raw = dict(g["profile"])
        raw.setdefault("h", h.to_dict())
        return siggen.ProfileTracking(SignalProfile.from_dict(raw), graph, T, int(g.get("start", graph.vertices[0])))
    raise ConfigurationError(f"unknown generator kind {kind!r}")


def _index_map(raw, name):
    out = {}
    for k, m in (raw or {}).items():
        out[int(k)] = np.array(m, dtype=float)
    return out


def from_dict(d, base_dir="."):
    try:
        fam_block = d["family"]
        family = SystemFamily.from_matrices(fam_block["matrices"], fam_block.get("class_tol", DEFAULT_CLASS_TOL))
        if "d" in fam_block and int(fam_block["d"]) != family.dim:
            raise ConfigurationError(f"declared d = {fam_block['d']} but matrices are {family.dim}x{family.dim}")
        edges = d.get("graph", {}).get("edges")
        if edges is None:
            graph = TransitionGraph.complete(len(family))
        else:
            graph = TransitionGraph.from_edges(edges, vertices=family.indices)
        sig = d.get("signal", {})
        present = [k for k in SIGNAL_SOURCES if k in sig]
        if len(present) != 1:
            raise ConfigurationError(f"signal block needs exactly one of {SIGNAL_SOURCES}, got {present}")
        Q = _index_map(fam_block.get("Q"), "Q")
        P = _index_map(fam_block.get("P"), "P")
        for i in list(Q) + list(P):
            if i not in family.indices:
                raise ConfigurationError(f"override for unknown system {i}")
        return AnalysisConfig(
            family=family,
            graph=graph,
            h=HFunction.from_dict(d.get("h")),
            signal_kind=present[0],
            signal_block=sig,
            Q=Q,
            P=P,
            simulation=d.get("simulation", {}),
            seed=int(d.get("seed", 0)),
            out_dir=d.get("output", {}).get("dir"),
            base_dir=Path(base_dir),
        )
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"malformed config: {exc!r}") from exc


def load(path):
    path = Path(path)
    try:
        d = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return from_dict(d, base_dir=path.parent)
