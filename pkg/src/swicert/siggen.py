"""Generators of admissible switching signals."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from swicert.densities import SignalProfile
from swicert.errors import ConfigurationError, InsufficientSwitches
from swicert.signal import SwitchingSignal, TransitionGraph

BISECTION_TOL = 1e-9
_MIN_HOLD_FRACTION = 1e-3


@dataclass(frozen=True)
class RoundRobin:
    cycle: tuple
    hold: float
    horizon: float

    def __post_init__(self):
        c = list(self.cycle)
        if len(c) < 2 or any(a == b for a, b in zip(c, c[1:] + c[:1])):
            raise ConfigurationError("round-robin cycle needs >= 2 entries, consecutive (and wrap-around) distinct")
        if not self.hold > 0:
            raise ConfigurationError("hold must be positive")

    @property
    def graph(self):
        c = list(self.cycle)
        return TransitionGraph.from_edges(zip(c, c[1:] + c[:1]))


@dataclass(frozen=True)
class Fixed:
    value: float

    def draw(self, rng, n):
        return np.full(n, float(self.value))


@dataclass(frozen=True)
class UniformRange:
    low: float
    high: float

    def draw(self, rng, n):
        return rng.uniform(self.low, self.high, size=n)


@dataclass(frozen=True)
class RandomWalk:
    graph: TransitionGraph
    hold: object
    seed: int
    horizon: float
    start: int | None = None

    def __post_init__(self):
        for v in self.graph.vertices:
            if not self.graph.successors(v):
                raise ConfigurationError(f"vertex {v} has no outgoing edge")


@dataclass(frozen=True)
class ProfileTracking:
    profile: SignalProfile
    graph: TransitionGraph
    horizon: float
    start: int = 1
    weights: tuple = field(default=(1.0, 1.0))


def generate(spec):
    if isinstance(spec, RoundRobin):
        return _round_robin(spec)
    if isinstance(spec, RandomWalk):
        return _random_walk(spec)
    if isinstance(spec, ProfileTracking):
        return _profile_tracking(spec)
    raise ConfigurationError(f"unknown generator spec {type(spec).__name__}")


def _round_robin(spec):
    n = int(np.floor(spec.horizon / spec.hold + 1e-12))
    tau = spec.hold * np.arange(n + 1)
    idx = [spec.cycle[i % len(spec.cycle)] for i in range(n + 1)]
    return SwitchingSignal(tau, idx, spec.horizon)


def _random_walk(spec):
    rng = np.random.default_rng(spec.seed)
    cur = spec.start if spec.start is not None else spec.graph.vertices[0]
    tau, idx = [0.0], [cur]
    succ = {v: spec.graph.successors(v) for v in spec.graph.vertices}
    t = 0.0
    while True:
        t += float(spec.hold.draw(rng, 1)[0])
        if t > spec.horizon:
            break
        options = succ[cur]
        cur = options[int(rng.integers(len(options)))]
        tau.append(t)
        idx.append(cur)
    return SwitchingSignal(tau, idx, spec.horizon)


def inverse_count(N, targets, upper):
    """Solve ``N(t) = k`` for every target ``k`` by vectorized bisection on ``[0, upper]``."""
    k = np.asarray(targets, dtype=float)
    lo = np.zeros_like(k)
    hi = np.full_like(k, float(upper))
    while np.any(N(hi) < k):
        hi = np.where(N(hi) < k, 2 * hi, hi)
    while np.max(hi - lo) > BISECTION_TOL * max(1.0, float(upper)):
        mid = 0.5 * (lo + hi)
        below = N(mid) < k
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def _profile_tracking(spec):
    """Deterministic walk whose statistics track a closed-form profile.

    Switch number ``k`` is scheduled against ``t_k = N^-1(k)``. A visit to
    system ``j`` lasts ``(E_j(t_{k+1}) - E_j(t_k)) / q_j`` where ``E_j`` is
    the target activation time and ``q_j`` the target share of visits, so
    time shares follow ``E_j`` while the mean switching rate follows ``N``.
    The destination at each switch minimizes the change in the summed
    deviation of running transition shares and activation fractions from
    their targets; ties go to the smallest index.
    """
    prof, graph, T = spec.profile, spec.graph, float(spec.horizon)
    if spec.start not in graph.vertices:
        raise ConfigurationError(f"start index {spec.start} is not a graph vertex")
    total = float(prof.N(T))
    if total < 2:
        raise InsufficientSwitches(f"profile gives N(T) = {total:.3g} < 2 switches")
    for e, r in prof.rho.items():
        if r > 0 and e not in graph:
            raise ConfigurationError(f"target transition {e} is not an edge of the graph")

    vertices = list(graph.vertices)
    succ = {v: graph.successors(v) for v in vertices}
    rho_t = {e: prof.rho.get(e, 0.0) for e in graph.edges}
    q = {v: sum(rho_t[(v, l)] for l in succ[v]) for v in vertices}
    h = prof.h
    w_rho, w_eta = spec.weights

    # target instants; extended geometrically if the walk lags behind
    n_target = int(np.ceil(total * 1.5)) + 16
    t_star = np.concatenate([[0.0], inverse_count(prof.N, np.arange(1, n_target + 1), T)])
    dt_star = np.diff(t_star)
    dE = {}
    for v in vertices:
        if v in prof.eta and q[v] > 0:
            e = prof.eta[v](t_star)
            dE[v] = np.diff(e) / q[v]
        else:
            dE[v] = dt_star
    h_star = h(np.maximum(t_star, 1e-300))
    eta_star = {v: (prof.eta[v](t_star) if v in prof.eta else None) for v in vertices}

    def hold(v, k):
        return max(dE[v][k], _MIN_HOLD_FRACTION * dt_star[k])

    counts = {e: 0 for e in graph.edges}
    done = {v: 0.0 for v in vertices}
    cur = spec.start
    tau, idx = [0.0], [cur]
    t = 0.0
    k = 0
    while True:
        if k + 2 >= len(t_star):
            raise InsufficientSwitches("profile targets exhausted before the horizon")
        s = hold(cur, k)
        if t + s > T:
            break
        t += s
        done[cur] += s
        n_next = k + 1
        best, best_cost = None, None
        hk = h_star[k + 2]
        for l in succ[cur]:
            e = (cur, l)
            target = rho_t[e]
            d_rho = abs((counts[e] + 1) / n_next - target) - abs(counts[e] / n_next - target)
            d_eta = 0.0
            if eta_star[l] is not None:
                goal = eta_star[l][k + 2]
                proj = done[l] + hold(l, k + 1)
                d_eta = (abs(proj - goal) - abs(done[l] - goal)) / hk
            cost = w_rho * d_rho + w_eta * d_eta
            if best_cost is None or cost < best_cost:
                best, best_cost = l, cost
        counts[(cur, best)] += 1
        cur = best
        tau.append(t)
        idx.append(cur)
        k += 1
    return SwitchingSignal(tau, idx, T)


def transition_residuals(sig, profile):
    """Running transition shares minus their targets at the horizon."""
    n = sig.n_switches
    out = {}
    src, dst = sig.indices[:-1].tolist(), sig.indices[1:].tolist()
    counts = {}
    for e in zip(src, dst):
        counts[e] = counts.get(e, 0) + 1
    for e, r in profile.rho.items():
        out[e] = counts.get(e, 0) / n - r
    return out
