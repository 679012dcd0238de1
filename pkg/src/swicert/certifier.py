"""Stability certificate from asymptotic densities, plus pointwise diagnostics.

The certificate compares the transition cost

    nu_hat * sum_{(k,l)} rho_hat_kl * ln(mu_kl)

against the net decay budget

    sum_{j stable} |lambda_j| eta_check(j) - sum_{j unstable} |lambda_j| eta_hat(j)

and requires ``nu_check > 0``. :func:`psi` is the exponent that bounds
``V_sigma(t)(x(t)) <= exp(psi(t)) V_sigma(0)(x0)`` along a concrete signal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from swicert.densities import Provenance
from swicert.errors import ConfigurationError
from swicert.family import StabilityClass, uniformity_constant

ENVELOPE_RTOL = 1e-6


@dataclass(frozen=True)
class Certificate:
    lhs: float
    rhs: float
    nu_check_positive: bool
    certified: bool
    margin: float
    provenance: Provenance
    edge_contributions: dict = field(default_factory=dict)
    system_contributions: dict = field(default_factory=dict)

    @property
    def verdict(self):
        if not self.certified:
            return "not certified"
        if self.provenance is Provenance.EMPIRICAL:
            return "indicated (empirical densities)"
        return "certified (analytic densities)"

    def to_dict(self):
        return {
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "nu_check_positive": self.nu_check_positive,
            "certified": self.certified,
            "verdict": self.verdict,
            "provenance": self.provenance.value,
            "edge_contributions": {f"{k}->{l}": v for (k, l), v in sorted(self.edge_contributions.items())},
            "system_contributions": {str(j): v for j, v in sorted(self.system_contributions.items())},
        }


def _edge_terms(bundle, mu):
    terms = {}
    for edge, r in bundle.rho_hat.items():
        if r == 0.0:
            continue
        m = mu.get(edge)
        if m is None:
            raise ConfigurationError(f"no mu value for weighted edge {edge}")
        # mu == 1 gives exactly 0 here, which the boundary case relies on
        terms[edge] = bundle.nu_hat * r * math.log(m)
    return terms


def _system_terms(bundle, pairs, classes):
    terms = {}
    for j in sorted(set(bundle.eta_hat) | set(bundle.eta_check) | set(classes)):
        cls = classes.get(j)
        hi, lo = bundle.eta_hat.get(j, 0.0), bundle.eta_check.get(j, 0.0)
        if cls is None or j not in pairs:
            if hi == 0.0 and lo == 0.0:
                continue
            raise ConfigurationError(f"no Lyapunov pair/class for system {j} with nonzero activation")
        lam = abs(pairs[j].lam)
        if cls is StabilityClass.AS:
            terms[j] = lam * lo
        elif cls is StabilityClass.U:
            terms[j] = -lam * hi
        else:
            terms[j] = 0.0
    return terms


def _fsum_sorted(terms):
    return math.fsum(v for _, v in sorted(terms.items()))


def theorem_lhs(bundle, mu):
    return _fsum_sorted(_edge_terms(bundle, mu))


def theorem_rhs(bundle, pairs, classes):
    return _fsum_sorted(_system_terms(bundle, pairs, classes))


def certify(bundle, mu, pairs, classes):
    edges = _edge_terms(bundle, mu)
    systems = _system_terms(bundle, pairs, classes)
    lhs = _fsum_sorted(edges)
    rhs = _fsum_sorted(systems)
    positive = bundle.nu_check > 0
    return Certificate(
        lhs=lhs,
        rhs=rhs,
        nu_check_positive=positive,
        certified=bool(positive and lhs < rhs),
        margin=rhs - lhs,
        provenance=bundle.provenance,
        edge_contributions=edges,
        system_contributions=systems,
    )


@dataclass
class PsiTrace:
    """Components of psi on a time grid; ``psi = transitions + unstable - stable + current``."""

    times: np.ndarray
    psi: np.ndarray
    transitions: np.ndarray
    unstable: np.ndarray
    stable: np.ndarray
    current: np.ndarray


def psi_trace(sig, pairs, mu, classes, times):
    times = np.asarray(times, dtype=float)
    n_sw = sig.n_switches
    src = sig.indices[:-1].tolist()
    dst = sig.indices[1:].tolist()
    costs = np.empty(n_sw)
    for i, e in enumerate(zip(src, dst)):
        m = mu.get(e)
        if m is None:
            raise ConfigurationError(f"executed transition {e} has no mu entry")
        costs[i] = math.log(m)
    lam = {j: p.lam for j, p in pairs.items()}
    for j in set(sig.indices.tolist()):
        if j not in lam or j not in classes:
            raise ConfigurationError(f"system {j} is active but has no pair/class")
    holds = np.diff(sig.instants)
    lam_src = np.array([lam[j] for j in src], dtype=float)
    unstable_mask = np.array([classes[j] is StabilityClass.U for j in src], dtype=bool)
    stable_mask = np.array([classes[j] is StabilityClass.AS for j in src], dtype=bool)

    def cum(x):
        return np.concatenate([[0.0], np.cumsum(x)])

    cum_cost = cum(costs)
    cum_u = cum(np.where(unstable_mask, np.abs(lam_src) * holds, 0.0))
    cum_s = cum(np.where(stable_mask, np.abs(lam_src) * holds, 0.0))

    n = np.searchsorted(sig.instants, times, side="right") - 1
    active = sig.indices[n]
    lam_active = np.array([lam[j] for j in active.tolist()], dtype=float)
    current = -lam_active * (times - sig.instants[n])
    transitions = cum_cost[n]
    unstable = cum_u[n]
    stable = cum_s[n]
    return PsiTrace(times, transitions + unstable - stable + current,
                    transitions, unstable, stable, current)


def psi(sig, pairs, mu, classes, t):
    if not 0 < t <= sig.horizon * (1 + 1e-12):
        raise ConfigurationError(f"t = {t} outside ]0, {sig.horizon}]")
    return float(psi_trace(sig, pairs, mu, classes, [t]).psi[0])


@dataclass(frozen=True)
class EnvelopeReport:
    n_samples: int
    v_passed: bool
    norm_passed: bool
    worst_v_ratio: float
    worst_norm_ratio: float
    first_violation: int | None

    @property
    def passed(self):
        return self.v_passed and self.norm_passed

    def to_dict(self):
        return {
            "n_samples": self.n_samples,
            "passed": self.passed,
            "v_passed": self.v_passed,
            "norm_passed": self.norm_passed,
            "worst_v_ratio": self.worst_v_ratio,
            "worst_norm_ratio": self.worst_norm_ratio,
            "first_violation": self.first_violation,
        }


def lyapunov_values(states, active, pairs):
    """``V_{active[k]}(states[k])`` for every sample."""
    v = np.empty(len(states))
    for j in np.unique(active).tolist():
        if j not in pairs:
            raise ConfigurationError(f"no Lyapunov pair for active system {j}")
        mask = active == j
        v[mask] = pairs[j].V(states[mask])
    return v


def log_lyapunov_values(states, active, pairs):
    """``ln V_{active[k]}(states[k])`` via ``2 ln|x| + ln V(x/|x|)``.

    Forming V directly loses precision once it drops into the subnormal
    range (or overflows) long before the state itself does.
    """
    norms = np.linalg.norm(states, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    unit = states / safe[:, None]
    with np.errstate(divide="ignore"):
        out = 2 * np.log(norms) + np.log(lyapunov_values(unit, active, pairs))
    return np.where(norms > 0, out, -np.inf)


def envelope_check(traj, sig, pairs, mu, classes, rtol=ENVELOPE_RTOL):
    """Check the Lyapunov-value and norm envelopes at every trajectory sample.

    Ratios are value/bound; a sample passes when its ratio is at most
    ``1 + rtol``.
    """
    if traj.signal_fingerprint != sig.fingerprint():
        raise ConfigurationError("trajectory was not produced from this signal")
    tr = psi_trace(sig, pairs, mu, classes, traj.times)
    # psi(0) = 0 by convention: no switches and no elapsed hold
    psi_vals = np.where(traj.times > 0, tr.psi, 0.0)
    log_v = log_lyapunov_values(traj.states, traj.active, pairs)
    c = uniformity_constant(pairs)
    norms = np.linalg.norm(traj.states, axis=1)
    with np.errstate(divide="ignore"):
        log_n = np.log(norms)
    # compared in log space so decayed states never underflow to 0/0
    if norms[0] > 0:
        v_log = log_v - (psi_vals + log_v[0])
        n_log = log_n - (np.log(c) + log_n[0] + 0.5 * psi_vals)
    else:
        v_log = np.where(norms > 0, np.inf, -np.inf)
        n_log = v_log
    cap = np.log1p(rtol)
    v_ok = v_log <= cap
    n_ok = n_log <= cap
    v_ratio, n_ratio = np.exp(v_log), np.exp(n_log)
    bad = np.flatnonzero(~(v_ok & n_ok))
    return EnvelopeReport(
        n_samples=len(traj.times),
        v_passed=bool(v_ok.all()),
        norm_passed=bool(n_ok.all()),
        worst_v_ratio=float(v_ratio.max()),
        worst_norm_ratio=float(n_ratio.max()),
        first_violation=int(bad[0]) if len(bad) else None,
    )
