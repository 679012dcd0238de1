"""Asymptotic densities of switching statistics.

Three constructors produce a :class:`DensityBundle`:

* :func:`densities_from_profile` takes closed-form growth laws and computes
  the limits exactly by comparing leading orders;
* :func:`bundle_direct` accepts declared values;
* :func:`densities_empirical` scans the tail of a finite signal. It is a
  heuristic surrogate for the limits and is labelled as such.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from swicert.errors import (
    DivergentDensity,
    DomainError,
    InconsistentBundle,
    InsufficientData,
)
from swicert.signal import HFunction

TAIL_GRID = 256
CONVERGENCE_RTOL = 0.05
CONVERGENCE_ATOL = 1e-3
_COEF_TOL = 1e-12


class Provenance(enum.Enum):
    PROFILE = "Profile"
    DECLARED = "Declared"
    EMPIRICAL = "EmpiricalTail"


@dataclass(frozen=True)
class Expression:
    """Finite sum of ``c * t**p`` and ``c * t**p * ln(1 + t)`` terms, ``p >= 0``."""

    terms: tuple = ()

    def __post_init__(self):
        for c, p, lg in self.terms:
            if not (math.isfinite(c) and math.isfinite(p)) or p < 0:
                raise DomainError(f"invalid term ({c}, {p}, {lg})")

    @classmethod
    def parse(cls, raw):
        terms = []
        for item in raw:
            c, p = float(item[0]), float(item[1])
            lg = int(bool(item[2])) if len(item) > 2 else 0
            terms.append((c, p, lg))
        return cls(tuple(terms))

    def to_list(self):
        return [[c, p, bool(lg)] for c, p, lg in self.terms]

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for c, p, lg in self.terms:
            term = c * t ** p
            if lg:
                term = term * np.log1p(t)
            out = out + term
        return out if out.ndim else float(out)

    def leading(self):
        """Collapse like orders and return ``{(p, log): coefficient}`` without zeros."""
        grouped = {}
        for c, p, lg in self.terms:
            grouped[(p, lg)] = grouped.get((p, lg), 0.0) + c
        scale = max([abs(c) for c, _, _ in self.terms], default=0.0)
        return {k: v for k, v in grouped.items() if abs(v) > _COEF_TOL * max(scale, 1.0)}

    def limit_ratio(self, h):
        """``lim expr(t)/h(t)`` as ``t -> inf`` for this expression family."""
        lead = self.leading()
        if not lead:
            return 0.0
        top = max(lead)
        if top > h.order:
            sign = "+" if lead[top] > 0 else "-"
            raise DivergentDensity(f"ratio diverges to {sign}inf (leading order {top} beyond h order {h.order})")
        if top == h.order:
            return lead[top]
        return 0.0


@dataclass(frozen=True)
class SignalProfile:
    """Closed-form growth laws of a switching signal.

    ``eta`` maps a system index to its accumulated activation time (not yet
    divided by ``h``); ``rho`` maps an edge to its constant transition share.
    """

    h: HFunction
    N: Expression
    eta: dict = field(default_factory=dict)
    rho: dict = field(default_factory=dict)
    t_range: tuple = (10.0, 1e6)

    def validate(self):
        lo, hi = self.t_range
        grid = np.geomspace(lo, hi, 512)
        n = self.N(grid)
        if np.any(n < 0) or np.any(np.diff(n) < -1e-9 * np.maximum(1.0, np.abs(n[1:]))):
            raise DomainError("N(t) must be nonnegative and nondecreasing on the evaluation range")
        for j, e in self.eta.items():
            if np.any(e(grid) < -1e-9 * np.maximum(1.0, grid)):
                raise DomainError(f"eta_{j}(t) must be nonnegative on the evaluation range")
        if self.rho:
            if any(r < 0 for r in self.rho.values()):
                raise DomainError("transition shares must be nonnegative")
            total = sum(self.rho.values())
            if abs(total - 1.0) > 1e-9:
                raise DomainError(f"transition shares must sum to 1, got {total}")

    @classmethod
    def from_dict(cls, d):
        eta = {int(k): Expression.parse(v) for k, v in d.get("eta", {}).items()}
        rho = {}
        for key, r in d.get("rho", {}).items():
            k, l = key.split("->")
            rho[(int(k), int(l))] = float(r)
        t_range = tuple(float(x) for x in d.get("t_range", (10.0, 1e6)))
        return cls(HFunction.from_dict(d.get("h")), Expression.parse(d["N"]), eta, rho, t_range)

    def to_dict(self):
        return {
            "h": self.h.to_dict(),
            "N": self.N.to_list(),
            "eta": {str(j): e.to_list() for j, e in sorted(self.eta.items())},
            "rho": {f"{k}->{l}": r for (k, l), r in sorted(self.rho.items())},
            "t_range": list(self.t_range),
        }


@dataclass(frozen=True)
class DensityBundle:
    nu_hat: float
    nu_check: float
    rho_hat: dict
    eta_hat: dict
    eta_check: dict
    provenance: Provenance = Provenance.DECLARED
    converged: bool = True

    def validate(self):
        values = [self.nu_hat, self.nu_check, *self.rho_hat.values(),
                  *self.eta_hat.values(), *self.eta_check.values()]
        if not all(math.isfinite(v) and v >= 0 for v in values):
            raise InconsistentBundle("density values must be finite and nonnegative")
        if self.nu_check > self.nu_hat:
            raise InconsistentBundle(f"nu_check {self.nu_check} exceeds nu_hat {self.nu_hat}")
        for j in set(self.eta_hat) | set(self.eta_check):
            lo, hi = self.eta_check.get(j, 0.0), self.eta_hat.get(j, 0.0)
            if lo > hi:
                raise InconsistentBundle(f"eta_check({j}) = {lo} exceeds eta_hat({j}) = {hi}")
        if self.provenance is not Provenance.EMPIRICAL and sum(self.rho_hat.values()) > 1 + 1e-9:
            raise InconsistentBundle("transition densities sum above 1")
        return self

    def to_dict(self):
        return {
            "nu_hat": self.nu_hat,
            "nu_check": self.nu_check,
            "rho_hat": {f"{k}->{l}": v for (k, l), v in sorted(self.rho_hat.items())},
            "eta_hat": {str(j): v for j, v in sorted(self.eta_hat.items())},
            "eta_check": {str(j): v for j, v in sorted(self.eta_check.items())},
            "provenance": self.provenance.value,
            "converged": self.converged,
        }


def densities_from_profile(profile):
    profile.validate()
    nu = profile.N.limit_ratio(profile.h)
    eta = {j: e.limit_ratio(profile.h) for j, e in profile.eta.items()}
    if nu < 0 or any(v < 0 for v in eta.values()):
        raise DomainError("profile has a negative leading coefficient")
    return DensityBundle(
        nu_hat=nu,
        nu_check=nu,
        rho_hat=dict(profile.rho),
        eta_hat=dict(eta),
        eta_check=dict(eta),
        provenance=Provenance.PROFILE,
        converged=True,
    ).validate()


def _edge_key(e):
    if isinstance(e, str):
        k, l = e.split("->")
        return int(k), int(l)
    return int(e[0]), int(e[1])


def bundle_direct(nu_hat, nu_check, rho_hat=None, eta_hat=None, eta_check=None):
    rho_hat = {_edge_key(e): float(v) for e, v in (rho_hat or {}).items()}
    eta_hat = {int(j): float(v) for j, v in (eta_hat or {}).items()}
    eta_check = {int(j): float(v) for j, v in (eta_check or {}).items()}
    return DensityBundle(float(nu_hat), float(nu_check), rho_hat, eta_hat, eta_check,
                         Provenance.DECLARED, True).validate()


def bundle_from_dict(d):
    return bundle_direct(d["nu_hat"], d.get("nu_check", d["nu_hat"]), d.get("rho_hat"),
                         d.get("eta_hat"), d.get("eta_check", d.get("eta_hat")))


def _agree(a, b):
    return abs(a - b) <= max(CONVERGENCE_RTOL * max(abs(a), abs(b)), CONVERGENCE_ATOL)


def tail_series(sig, h, graph, grid):
    """Evaluate nu_h, eta_h(j) and rho_kl on a time grid, vectorized."""
    n = np.searchsorted(sig.instants, grid, side="right") - 1
    hv = h(grid)
    nu = n / hv
    holds = np.diff(sig.instants)
    src = sig.indices[:-1]
    dst = sig.indices[1:]
    eta = {}
    for j in graph.vertices:
        cum = np.concatenate([[0.0], np.cumsum(np.where(src == j, holds, 0.0))])
        eta[j] = cum[n] / hv
    rho = {}
    safe_n = np.maximum(n, 1)
    for k, l in graph.edges:
        cum = np.concatenate([[0], np.cumsum((src == k) & (dst == l))])
        rho[(k, l)] = np.where(n > 0, cum[n] / safe_n, 0.0)
    return nu, eta, rho


def densities_empirical(sig, h, graph, tail_fraction=0.5):
    if not 0 < tail_fraction < 1:
        raise DomainError("tail_fraction must lie in (0, 1)")
    T = sig.horizon
    start = tail_fraction * T
    in_tail = np.sum((sig.instants > start) & (sig.instants <= T))
    if in_tail < 10:
        raise InsufficientData(f"only {in_tail} switches in the tail window [{start}, {T}]")
    grid = np.linspace(start, T, TAIL_GRID)
    nu, eta, rho = tail_series(sig, h, graph, grid)
    half = TAIL_GRID // 2

    checks = [(nu[:half].max(), nu[half:].max()), (nu[:half].min(), nu[half:].min())]
    for s in eta.values():
        checks += [(s[:half].max(), s[half:].max()), (s[:half].min(), s[half:].min())]
    for s in rho.values():
        checks.append((s[:half].max(), s[half:].max()))
    converged = all(_agree(a, b) for a, b in checks)

    return DensityBundle(
        nu_hat=float(nu.max()),
        nu_check=float(nu.min()),
        rho_hat={e: float(s.max()) for e, s in rho.items()},
        eta_hat={j: float(s.max()) for j, s in eta.items()},
        eta_check={j: float(s.min()) for j, s in eta.items()},
        provenance=Provenance.EMPIRICAL,
        converged=bool(converged),
    ).validate()
