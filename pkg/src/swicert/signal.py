"""Switching signals, transition digraphs and finite-horizon statistics."""
from __future__ import annotations

import csv
import hashlib
import io
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from swicert.errors import ConfigurationError, DomainError, UndefinedStatistic

__all__ = [
    "TransitionGraph",
    "SwitchingSignal",
    "HFunction",
    "switch_count",
    "holding_times",
    "transition_count",
    "nu_h",
    "rho",
    "eta_h",
    "check_adt",
    "validate_signal",
]


@dataclass(frozen=True)
class TransitionGraph:
    vertices: tuple
    edges: tuple

    def __post_init__(self):
        vs = set(self.vertices)
        for k, l in self.edges:
            if k == l:
                raise ConfigurationError(f"self-loop ({k},{l}) is not a transition")
            if k not in vs or l not in vs:
                raise ConfigurationError(f"edge ({k},{l}) references an undeclared vertex")

    @classmethod
    def from_edges(cls, edges, vertices=None):
        edges = tuple(sorted({(int(k), int(l)) for k, l in edges}))
        if vertices is None:
            vertices = sorted({v for e in edges for v in e})
        return cls(tuple(sorted(int(v) for v in vertices)), edges)

    @classmethod
    def complete(cls, n):
        return cls.from_edges([(k, l) for k in range(1, n + 1) for l in range(1, n + 1) if k != l],
                              vertices=range(1, n + 1))

    def successors(self, k):
        return [l for (a, l) in self.edges if a == k]

    def __contains__(self, edge):
        return tuple(edge) in set(self.edges)


@dataclass(frozen=True)
class HFunction:
    """A class-K-infinity gauge: ``identity``, ``power`` (t**p) or ``tlog`` (t ln(1+t))."""

    kind: str = "identity"
    p: float = 1.0

    def __post_init__(self):
        if self.kind not in ("identity", "power", "tlog"):
            raise DomainError(f"unknown h kind {self.kind!r}")
        if self.kind == "power" and not self.p > 0:
            raise DomainError("power h needs p > 0")

    @classmethod
    def identity(cls):
        return cls("identity")

    @classmethod
    def power(cls, p):
        return cls("power", float(p))

    @classmethod
    def tlog(cls):
        return cls("tlog")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "identity":
            out = t
        elif self.kind == "power":
            out = t ** self.p
        else:
            out = t * np.log1p(t)
        return out if out.ndim else float(out)

    @property
    def order(self):
        """Growth order as ``(exponent, log power)``; used for symbolic limits."""
        if self.kind == "identity":
            return (1.0, 0)
        if self.kind == "power":
            return (self.p, 0)
        return (1.0, 1)

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind == "power":
            d["p"] = self.p
        return d

    @classmethod
    def from_dict(cls, d):
        if d is None:
            return cls.identity()
        return cls(d.get("kind", "identity"), float(d.get("p", 1.0)))


class SwitchingSignal:
    """Right-continuous piecewise-constant signal on ``[0, horizon]``.

    ``instants[0]`` is 0 and is not a switch; ``instants[1:]`` are the
    discontinuities, each changing the active index.
    """

    def __init__(self, instants, indices, horizon=None):
        tau = np.asarray(instants, dtype=float)
        idx = np.asarray(indices, dtype=int)
        if tau.ndim != 1 or len(tau) == 0 or len(tau) != len(idx):
            raise ConfigurationError("instants and indices must be equal-length non-empty lists")
        if tau[0] != 0.0:
            raise ConfigurationError("first instant must be 0")
        if not np.all(np.isfinite(tau)):
            raise ConfigurationError("instants must be finite")
        if len(tau) > 1:
            if np.any(np.diff(tau) <= 0):
                raise ConfigurationError("instants must be strictly increasing")
            if np.any(idx[1:] == idx[:-1]):
                raise ConfigurationError("consecutive indices must differ at every switch")
        if horizon is None:
            horizon = float(tau[-1]) if len(tau) > 1 else 1.0
        horizon = float(horizon)
        if not horizon >= tau[-1] or horizon <= 0:
            raise ConfigurationError(f"horizon {horizon} precedes the last instant {tau[-1]}")
        self.instants = tau
        self.indices = idx
        self.horizon = horizon
        self.instants.setflags(write=False)
        self.indices.setflags(write=False)

    def __len__(self):
        return len(self.instants)

    @property
    def n_switches(self):
        return len(self.instants) - 1

    def __repr__(self):
        return f"SwitchingSignal(n_switches={self.n_switches}, horizon={self.horizon})"

    def __eq__(self, other):
        return (isinstance(other, SwitchingSignal)
                and self.horizon == other.horizon
                and np.array_equal(self.instants, other.instants)
                and np.array_equal(self.indices, other.indices))

    def active(self, t):
        """Index active at time ``t`` (vectorized)."""
        pos = np.searchsorted(self.instants, t, side="right") - 1
        return self.indices[pos]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tau", "sigma"])
        for t, s in zip(self.instants, self.indices):
            w.writerow([repr(float(t)), int(s)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, horizon=None):
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows or set(rows[0]) != {"tau", "sigma"}:
            raise ConfigurationError("signal CSV needs header 'tau,sigma'")
        return cls([float(r["tau"]) for r in rows], [int(r["sigma"]) for r in rows], horizon)

    def fingerprint(self):
        return hashlib.sha256(self.to_csv().encode() + repr(self.horizon).encode()).hexdigest()[:16]


def _check_t(sig, t):
    if not (0 < t <= sig.horizon * (1 + 1e-12)):
        raise DomainError(f"t = {t} outside ]0, {sig.horizon}]")


def switch_count(sig, t):
    _check_t(sig, t)
    return bisect_right(sig.instants, t) - 1


def holding_times(sig):
    return np.diff(sig.instants)


def transition_count(sig, k, l, t):
    if k == l:
        raise DomainError("transition counts need distinct indices")
    n = switch_count(sig, t)
    src = sig.indices[:n]
    dst = sig.indices[1:n + 1]
    return int(np.sum((src == k) & (dst == l)))


def transition_counts(sig, t):
    """All executed transitions by time ``t`` as ``{(k, l): count}``."""
    n = switch_count(sig, t)
    out = {}
    for k, l in zip(sig.indices[:n].tolist(), sig.indices[1:n + 1].tolist()):
        out[(k, l)] = out.get((k, l), 0) + 1
    return out


def nu_h(sig, h, t):
    return switch_count(sig, t) / h(t)


def rho(sig, k, l, t):
    n = switch_count(sig, t)
    if n == 0:
        raise UndefinedStatistic(f"no switches on ]0, {t}]: transition frequency undefined")
    return transition_count(sig, k, l, t) / n


def completed_time(sig, j, t):
    """Total length of completed holds of system ``j`` by time ``t``."""
    n = switch_count(sig, t)
    holds = np.diff(sig.instants[:n + 1])
    return float(np.sum(holds[sig.indices[:n] == j]))


def eta_h(sig, h, j, t):
    # the live hold [tau_N, t] is deliberately excluded
    return completed_time(sig, j, t) / h(t)


def check_adt(sig, N0, tau_a):
    """True iff ``N(T, t) <= N0 + (T - t)/tau_a`` for every ``0 <= t <= T``.

    The excess ``N(T, t) - (T - t)/tau_a`` is largest for ``T`` at a switch
    and ``t`` just below a switch, so with ``g_m = m - tau_m/tau_a`` the
    condition is ``max_{m >= k} g_m - g_k + 1 <= N0`` over switches ``k``.
    """
    tau = sig.instants[1:]
    if len(tau) == 0:
        return True
    m = np.arange(1, len(tau) + 1, dtype=float)
    g = m - tau / tau_a
    suffix_max = np.maximum.accumulate(g[::-1])[::-1]
    worst = float(np.max(suffix_max - g + 1.0))
    return worst <= N0 + 1e-12 * max(1.0, abs(N0))


@dataclass(frozen=True)
class Violation:
    position: int
    time: float
    edge: tuple
    reason: str


def validate_signal(sig, graph):
    """List every executed transition not in the graph, plus unknown indices."""
    report = []
    vs = set(graph.vertices)
    edges = set(graph.edges)
    for pos, (t, s) in enumerate(zip(sig.instants, sig.indices)):
        s = int(s)
        if s not in vs:
            report.append(Violation(pos, float(t), (s,), "index not a graph vertex"))
        if pos > 0:
            e = (int(sig.indices[pos - 1]), s)
            if e not in edges:
                report.append(Violation(pos, float(t), e, "transition not in E(P)"))
    return report

