"""Dense real-matrix kernels for small dimensions.

Matrices are plain ``numpy`` float arrays; :func:`as_matrix` is the single
validation point used by every kernel.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from swicert.errors import (
    DimensionError,
    DomainError,
    NoUniqueSolution,
    NotPositiveDefinite,
    NumericalFailure,
)

__all__ = [
    "Spectrum",
    "as_matrix",
    "symmetrize",
    "expm",
    "eig_general",
    "eig_sym",
    "solve_lyapunov",
    "cholesky",
    "spectral_norm",
]

_TAYLOR_ORDER = 16
_SCALED_NORM = 0.5
_SYM_TOL = 1e-12


@dataclass(frozen=True)
class Spectrum:
    values: tuple
    is_real_symmetric_source: bool = False

    def __len__(self):
        return len(self.values)

    @property
    def real(self):
        return np.array([v.real for v in self.values])

    def max_real(self):
        return max(v.real for v in self.values)

    def min_real(self):
        return min(v.real for v in self.values)


def as_matrix(a, square=True, name="matrix"):
    """Coerce ``a`` to a finite 2-D float array, raising on bad shape or NaN/inf."""
    m = np.array(a, dtype=float)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.size == 0:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError(f"{name} has non-finite entries")
    return m


def symmetrize(m):
    return 0.5 * (m + m.T)


def _check_symmetric(s, name):
    scale = max(np.max(np.abs(s)), np.finfo(float).tiny)
    if np.max(np.abs(s - s.T)) > _SYM_TOL * scale:
        raise DomainError(f"{name} is not symmetric")


def expm(a, t=1.0):
    """Return ``exp(a * t)`` by scaling and squaring a truncated Taylor core.

    The argument is scaled by ``2**-s`` until its induced norm bound is at
    most 0.5, the order-16 Taylor polynomial is evaluated by Horner's rule,
    and the result is squared ``s`` times.
    """
    a = as_matrix(a, name="A")
    t = float(t)
    if not np.isfinite(t) or t < 0:
        raise DomainError(f"expm requires finite t >= 0, got {t}")
    n = a.shape[0]
    x = a * t
    # max(1-norm, inf-norm) bounds the spectral norm from above
    norm = max(np.abs(x).sum(axis=0).max(), np.abs(x).sum(axis=1).max())
    if norm == 0.0:
        return np.eye(n)
    s = max(0, int(np.ceil(np.log2(norm / _SCALED_NORM))))
    x = x / (2.0 ** s)
    eye = np.eye(n)
    result = eye.copy()
    for k in range(_TAYLOR_ORDER, 0, -1):
        result = eye + (x @ result) / k
    for _ in range(s):
        result = result @ result
    return result


def _sort_spectrum(values):
    # conjugate pairs end up adjacent: same real part, same |imag|
    return tuple(sorted(values, key=lambda z: (round(z.real, 12), abs(z.imag), z.imag)))


def eig_general(a):
    a = as_matrix(a, name="A")
    n = a.shape[0]
    if n == 1:
        return Spectrum((complex(a[0, 0]),))
    if n == 2:
        tr = a[0, 0] + a[1, 1]
        det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
        disc = 0.25 * tr * tr - det
        if disc >= 0:
            r = np.sqrt(disc)
            # avoid cancellation in the smaller root
            big = 0.5 * tr + np.copysign(r, tr) if tr != 0 else r
            small = det / big if big != 0 else 0.5 * tr - r
            return Spectrum(_sort_spectrum([complex(big), complex(small)]))
        r = np.sqrt(-disc)
        return Spectrum(_sort_spectrum([complex(0.5 * tr, r), complex(0.5 * tr, -r)]))
    try:
        values = np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigenvalue iteration failed: {exc}", matrix=a) from exc
    return Spectrum(_sort_spectrum([complex(v) for v in values]))


def eig_sym(s, vectors=False):
    """Eigenvalues of a symmetric matrix, ascending.

    With ``vectors=True`` returns ``(Spectrum, V)`` where the columns of ``V``
    are orthonormal eigenvectors.
    """
    s = as_matrix(s, name="S")
    _check_symmetric(s, "S")
    w, v = np.linalg.eigh(symmetrize(s))
    spec = Spectrum(tuple(complex(x) for x in w), is_real_symmetric_source=True)
    if vectors:
        return spec, v
    return spec


def _lambda_max_sym(s):
    return float(np.linalg.eigvalsh(symmetrize(s))[-1])


def _lambda_min_sym(s):
    return float(np.linalg.eigvalsh(symmetrize(s))[0])


def solve_lyapunov(a, q):
    """Solve ``A^T P + P A + Q = 0`` through the Kronecker-vectorized system.

    Raises :class:`NoUniqueSolution` when two eigenvalues of ``A`` sum to
    (numerically) zero, which is exactly when the operator is singular.
    """
    a = as_matrix(a, name="A")
    q = as_matrix(q, name="Q")
    if a.shape != q.shape:
        raise DimensionError(f"A and Q shapes differ: {a.shape} vs {q.shape}")
    _check_symmetric(q, "Q")
    n = a.shape[0]
    eigs = np.array(eig_general(a).values)
    gap = np.min(np.abs(eigs[:, None] + eigs[None, :]))
    scale = max(1.0, spectral_norm(a))
    if gap <= 1e-10 * scale:
        raise NoUniqueSolution(
            f"Lyapunov operator is singular (min |l_i + l_j| = {gap:.3g})", matrix=a
        )
    eye = np.eye(n)
    # column-major vec: vec(A^T P) = (I kron A^T) vec P, vec(P A) = (A^T kron I) vec P
    op = np.kron(eye, a.T) + np.kron(a.T, eye)
    rhs = -q.reshape(-1, order="F")
    try:
        p = np.linalg.solve(op, rhs).reshape(n, n, order="F")
    except np.linalg.LinAlgError as exc:
        raise NoUniqueSolution(f"Lyapunov operator is singular: {exc}", matrix=a) from exc
    return symmetrize(p)


def cholesky(p):
    p = as_matrix(p, name="P")
    _check_symmetric(p, "P")
    n = p.shape[0]
    low = np.zeros_like(p)
    for j in range(n):
        d = p[j, j] - low[j, :j] @ low[j, :j]
        if not d > 0.0:
            raise NotPositiveDefinite(f"non-positive pivot {d:.3g} at column {j}", matrix=p)
        low[j, j] = np.sqrt(d)
        low[j + 1:, j] = (p[j + 1:, j] - low[j + 1:, :j] @ low[j, :j]) / low[j, j]
    return low


def spectral_norm(a):
    a = as_matrix(a, square=False, name="A")
    g = a.T @ a
    return float(np.sqrt(max(_lambda_max_sym(g), 0.0)))


def is_positive_definite(p):
    try:
        cholesky(p)
    except (NotPositiveDefinite, DomainError):
        return False
    return True
