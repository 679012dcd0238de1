"""System families, stability classes and Lyapunov-like pairs.

Each constituent system ``x' = A_i x`` gets a quadratic function
``V_i(x) = x^T P_i x`` with ``V_i(x(t)) <= V_i(x(0)) exp(-lambda_i t)``.
The sign of ``lambda_i`` encodes the class: positive for asymptotically
stable, zero for marginally stable, negative for unstable systems.
"""
from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field

import numpy as np

from swicert import matops
from swicert.errors import (
    ConfigurationError,
    DomainError,
    NotPositiveDefinite,
    SynthesisUnavailable,
)

DEFAULT_CLASS_TOL = 1e-9
FULL_RANK_TOL = 1e-12
MS_NSD_TOL = 1e-10
CERT_TOL = 1e-9


class StabilityClass(enum.Enum):
    AS = "AsymptoticallyStable"
    MS = "MarginallyStable"
    U = "Unstable"


class PairSource(enum.Enum):
    SYNTHESIZED = "Synthesized"
    USER = "UserSupplied"


@dataclass(frozen=True)
class System:
    index: int
    A: np.ndarray
    cls: StabilityClass


@dataclass(frozen=True)
class SystemFamily:
    dim: int
    systems: tuple

    @classmethod
    def from_matrices(cls, matrices, tol=DEFAULT_CLASS_TOL):
        """Build a family from a list of matrices; indices are 1..N in order."""
        mats = [matops.as_matrix(m, name=f"A_{i + 1}") for i, m in enumerate(matrices)]
        if not mats:
            raise ConfigurationError("a family needs at least one system")
        d = mats[0].shape[0]
        systems = []
        for i, a in enumerate(mats, start=1):
            if a.shape != (d, d):
                raise ConfigurationError(f"A_{i} has shape {a.shape}, expected {(d, d)}")
            check_full_rank(a, i)
            systems.append(System(i, a, classify(a, tol)))
        return cls(d, tuple(systems))

    @property
    def indices(self):
        return [s.index for s in self.systems]

    def __len__(self):
        return len(self.systems)

    def __getitem__(self, index):
        for s in self.systems:
            if s.index == index:
                return s
        raise ConfigurationError(f"no system with index {index}")

    @property
    def classes(self):
        return {s.index: s.cls for s in self.systems}

    def fingerprint(self):
        h = hashlib.sha256()
        for s in self.systems:
            h.update(np.ascontiguousarray(s.A).tobytes())
        return h.hexdigest()[:16]


@dataclass(frozen=True)
class LyapunovPair:
    index: int
    P: np.ndarray
    lam: float
    Q: np.ndarray
    source: PairSource = PairSource.SYNTHESIZED

    def V(self, x):
        """Quadratic form along the last axis of ``x``."""
        x = np.asarray(x, dtype=float)
        return np.einsum("...i,ij,...j->...", x, self.P, x)


@dataclass
class MuTable:
    entries: dict = field(default_factory=dict)

    def __getitem__(self, edge):
        return self.entries[edge]

    def __contains__(self, edge):
        return edge in self.entries

    def get(self, edge, default=None):
        return self.entries.get(edge, default)

    def items(self):
        return sorted(self.entries.items())

    def halved(self):
        return MuTable({e: 0.5 * m for e, m in self.entries.items()})


def check_full_rank(a, index=None):
    # |det A| / prod(row norms) lies in [0, 1] (Hadamard) and is scale-free
    rows = np.linalg.norm(a, axis=1)
    if np.any(rows == 0.0):
        ratio = 0.0
    else:
        ratio = abs(np.linalg.det(a)) / np.prod(rows)
    if ratio <= FULL_RANK_TOL:
        raise DomainError(f"A_{index} is rank deficient (scaled determinant {ratio:.3g})")


def _is_semisimple(a, lam, cluster, tol):
    d = a.shape[0]
    alg = int(np.sum(np.abs(cluster - lam) <= tol))
    sv = np.linalg.svd(a - lam * np.eye(d), compute_uv=False)
    rank = int(np.sum(sv > 1e-7 * max(1.0, sv[0])))
    return d - rank >= alg


def classify(a, tol=DEFAULT_CLASS_TOL):
    """Classify ``x' = A x`` as asymptotically stable, marginally stable or unstable."""
    a = matops.as_matrix(a, name="A")
    eigs = np.array(matops.eig_general(a).values)
    top = eigs.real.max()
    if top < -tol:
        return StabilityClass.AS
    if top > tol:
        return StabilityClass.U
    near_axis = eigs[np.abs(eigs.real) <= tol]
    # eigenvalues of a defective block split by ~sqrt(eps) under roundoff
    cluster_tol = 1e-6 * max(1.0, matops.spectral_norm(a))
    for lam in near_axis:
        if not _is_semisimple(a, lam, near_axis, cluster_tol):
            return StabilityClass.U
    return StabilityClass.MS


def _rate_for(a, p):
    """Return ``(Q, lambda)`` where Q = -(A^T P + P A) and lambda is the tight decay rate."""
    q = matops.symmetrize(-(a.T @ p + p @ a))
    low = matops.cholesky(p)
    linv = np.linalg.inv(low)
    return q, matops.eig_sym(matops.symmetrize(linv @ q @ linv.T)).values[0].real


def synth_pair(a, cls, Q=None, P=None, index=0):
    """Construct a Lyapunov-like pair for one system.

    Parameters
    ----------
    a : array_like
        System matrix.
    cls : StabilityClass
        Class of ``a`` as returned by :func:`classify`.
    Q : array_like, optional
        Certificate matrix for asymptotically stable systems (default identity).
    P : array_like, optional
        User-supplied ``P``; overrides synthesis for any class.
    index : int
        System index, recorded in the pair and in error messages.
    """
    a = matops.as_matrix(a, name="A")
    d = a.shape[0]
    if P is not None:
        return _user_pair(a, cls, matops.as_matrix(P, name="P"), index)

    if cls is StabilityClass.AS:
        q = np.eye(d) if Q is None else matops.as_matrix(Q, name="Q")
        if not matops.is_positive_definite(q):
            raise DomainError(f"Q_{index} must be symmetric positive definite")
        p = matops.solve_lyapunov(a, q)
        lam = matops.eig_sym(q).min_real() / matops.eig_sym(p).max_real()
        return LyapunovPair(index, p, float(lam), matops.symmetrize(q))

    if cls is StabilityClass.MS:
        if Q is not None:
            raise SynthesisUnavailable(
                f"system {index}: a Q override cannot be used for a marginally stable "
                "system (the Lyapunov operator is singular); supply P instead",
                index=index,
            )
        s = a.T + a
        if matops.eig_sym(matops.symmetrize(s)).max_real() <= MS_NSD_TOL * max(1.0, matops.spectral_norm(a)):
            return LyapunovPair(index, np.eye(d), 0.0, matops.symmetrize(-s))
        raise SynthesisUnavailable(
            f"system {index} is marginally stable but A^T + A is indefinite; "
            "supply a P with A^T P + P A <= 0 in the family overrides",
            index=index,
        )

    if Q is not None:
        raise SynthesisUnavailable(f"system {index}: Q override only applies to stable systems", index=index)
    eye = np.eye(d)
    return LyapunovPair(index, eye, -2.0 * matops.spectral_norm(a), matops.symmetrize(-(a.T + a)))


def _user_pair(a, cls, p, index):
    if not matops.is_positive_definite(p):
        raise DomainError(f"user-supplied P_{index} is not positive definite")
    p = matops.symmetrize(p)
    q, rate = _rate_for(a, p)
    if cls is StabilityClass.AS:
        if not matops.is_positive_definite(q):
            raise DomainError(f"user-supplied P_{index} does not make A^T P + P A negative definite")
        lam = matops.eig_sym(q).min_real() / matops.eig_sym(p).max_real()
    elif cls is StabilityClass.MS:
        if matops.eig_sym(q).min_real() < -MS_NSD_TOL * max(1.0, np.abs(q).max()):
            raise DomainError(f"user-supplied P_{index} does not make A^T P + P A negative semidefinite")
        lam = 0.0
    else:
        lam = min(rate, -np.finfo(float).eps)
    return LyapunovPair(index, p, float(lam), q, PairSource.USER)


def decay_certificate_gap(a, pair):
    """Largest eigenvalue of ``A^T P + P A + lambda P`` (should be <= 0)."""
    m = a.T @ pair.P + pair.P @ a + pair.lam * pair.P
    return matops.eig_sym(matops.symmetrize(m)).max_real()


def synthesize_family(family, Q=None, P=None):
    """Synthesize pairs for every system; ``Q``/``P`` map index -> override matrix."""
    Q = Q or {}
    P = P or {}
    return {
        s.index: synth_pair(s.A, s.cls, Q=Q.get(s.index), P=P.get(s.index), index=s.index)
        for s in family.systems
    }


def mu_estimate(p_i, p_j):
    """Smallest mu with ``V_j <= mu V_i``: the top eigenvalue of ``L^-1 P_j L^-T``, ``L L^T = P_i``."""
    p_i = matops.as_matrix(p_i, name="P_i")
    p_j = matops.as_matrix(p_j, name="P_j")
    if p_i.shape != p_j.shape:
        raise DomainError("P_i and P_j differ in dimension")
    try:
        low = matops.cholesky(p_i)
        matops.cholesky(p_j)
    except NotPositiveDefinite as exc:
        raise DomainError(f"mu_estimate needs positive definite inputs: {exc}") from exc
    linv = np.linalg.inv(low)
    return matops.eig_sym(matops.symmetrize(linv @ p_j @ linv.T)).max_real()


def mu_table(pairs, graph):
    entries = {}
    for v in graph.vertices:
        if v not in pairs:
            raise ConfigurationError(f"no Lyapunov pair for graph vertex {v}")
    for k, l in graph.edges:
        entries[(k, l)] = mu_estimate(pairs[k].P, pairs[l].P)
    return MuTable(entries)


def lipschitz_constant(family):
    return max(matops.spectral_norm(s.A) for s in family.systems)


def uniformity_constant(pairs):
    """``c`` with ``|x(t)| <= c |x0| exp(psi(t)/2)``."""
    ps = [p.P for p in (pairs.values() if isinstance(pairs, dict) else pairs)]
    top = matops.eig_sym(matops.symmetrize(sum(ps))).max_real()
    bottom = min(matops.eig_sym(p).min_real() for p in ps)
    return float(np.sqrt(top / bottom))
