"""Dense linear-algebra substrate: channels, spectra and real Lie closures.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``.  A
:class:`Channel` is a completely positive map given by Kraus operators,
acting as ``X -> sum_k K X K^dagger``.  Superoperators use row-major
vectorization, so ``vec(K X K^dagger) = kron(K, conj(K)) @ vec(X)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import NonDiagonalizable, ToleranceAmbiguity, ValidationError

TOL_MAT = 1e-12
TOL_UNITARY = 1e-10
CLOSURE_TOL = 1e-9


def dag(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def is_unitary(u: np.ndarray, tol: float = TOL_UNITARY) -> bool:
    u = np.asarray(u)
    return np.linalg.norm(dag(u) @ u - np.eye(u.shape[0])) <= tol


def hs_inner(a: np.ndarray, b: np.ndarray) -> float:
    """Real Hilbert-Schmidt inner product ``Re Tr(a^dagger b)``."""
    return float(np.real(np.vdot(a, b)))


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Half the trace norm of ``rho - sigma`` (both assumed hermitian)."""
    diff = rho - sigma
    diff = 0.5 * (diff + dag(diff))
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


def partial_trace(rho: np.ndarray, dims: tuple[int, int], keep: int) -> np.ndarray:
    """Partial trace of a bipartite operator on ``dims[0] x dims[1]``.

    ``keep=0`` returns the reduced operator on the first factor.
    """
    d0, d1 = dims
    r = rho.reshape(d0, d1, d0, d1)
    if keep == 0:
        return np.einsum("ajbj->ab", r)
    return np.einsum("iaib->ab", r)


def pure_density(psi: Sequence[complex]) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def psd_sqrt(a: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (a + dag(a)))
    return (v * np.sqrt(np.clip(w, 0, None))) @ dag(v)


@dataclass(frozen=True)
class Channel:
    """Completely positive map ``X -> sum_k K_k X K_k^dagger``."""

    kraus: tuple[np.ndarray, ...]

    def __init__(self, kraus: Sequence[np.ndarray]):
        ks = tuple(np.array(k, dtype=complex) for k in kraus)
        if not ks:
            raise ValidationError("a channel needs at least one Kraus operator")
        shape = ks[0].shape
        if len(shape) != 2 or shape[0] != shape[1]:
            raise ValidationError("Kraus operators must be square")
        if any(k.shape != shape for k in ks):
            raise ValidationError("Kraus operators must share one dimension")
        for k in ks:
            k.setflags(write=False)
        object.__setattr__(self, "kraus", ks)

    @property
    def dim(self) -> int:
        return self.kraus[0].shape[0]

    def apply(self, x: np.ndarray) -> np.ndarray:
        return sum(k @ x @ dag(k) for k in self.kraus)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.apply(x)

    def adjoint(self) -> "Channel":
        return Channel([dag(k) for k in self.kraus])

    def superoperator(self) -> np.ndarray:
        return sum(np.kron(k, k.conj()) for k in self.kraus)

    def completeness(self) -> np.ndarray:
        """``sum_k K^dagger K``; the identity iff the channel is trace preserving."""
        return sum(dag(k) @ k for k in self.kraus)

    def is_trace_preserving(self, tol: float = TOL_UNITARY) -> bool:
        return np.linalg.norm(self.completeness() - np.eye(self.dim)) <= tol

    def power(self, x: np.ndarray, m: int) -> np.ndarray:
        for _ in range(m):
            x = self.apply(x)
        return x


def channel_spectrum(ch: Channel, degeneracy_tol: float = 1e-9) -> list[tuple[complex, np.ndarray]]:
    """Eigen-decomposition of a channel's superoperator.

    Returns ``(eigenvalue, eigenmatrix)`` pairs sorted by modulus, largest
    first; eigenmatrices have unit Frobenius norm.  Raises
    :class:`NonDiagonalizable` if the dominant eigenvalue looks defective.
    """
    if ch.dim > 64:
        raise ValidationError(f"channel dimension {ch.dim} too large for dense diagonalization")
    s = ch.superoperator()
    w, v = np.linalg.eig(s)
    # round the modulus so near-ties order reproducibly by phase
    order = np.lexsort((-np.round(w.imag, 12), -np.round(w.real, 12), -np.round(np.abs(w), 10)))
    w, v = w[order], v[:, order]
    v = v / np.linalg.norm(v, axis=0)

    cluster = np.abs(w - w[0]) < degeneracy_tol
    if cluster.sum() > 1:
        sv = np.linalg.svd(v[:, cluster], compute_uv=False)
        if sv[-1] < 1e-6:
            raise NonDiagonalizable(
                f"dominant eigenvalue {w[0]:.6g} has a suspected Jordan block "
                f"(multiplicity {int(cluster.sum())}, smallest singular value {sv[-1]:.2e})"
            )
    d = ch.dim
    return [(complex(w[k]), v[:, k].reshape(d, d)) for k in range(len(w))]


def spectrum_reconstruction(spectrum: list[tuple[complex, np.ndarray]]) -> np.ndarray:
    """Rebuild the superoperator from its eigenpairs (diagonalizable case)."""
    w = np.array([e for e, _ in spectrum])
    v = np.column_stack([m.reshape(-1) for _, m in spectrum])
    return v @ np.diag(w) @ np.linalg.inv(v)


def power_fixed_point(ch: Channel, x0: np.ndarray | None = None, tol: float = 1e-12,
                      max_iter: int | None = None) -> np.ndarray:
    """Fixed point of a trace-preserving channel by power iteration.

    Used when the spectrum is not diagonalizable.  Iterates at most
    ``10 * dim**2`` times; the result is normalized to unit trace.
    """
    d = ch.dim
    if max_iter is None:
        max_iter = 10 * d * d
    x = np.eye(d, dtype=complex) / d if x0 is None else np.array(x0, dtype=complex)
    for _ in range(max_iter):
        y = ch.apply(x)
        y = y / np.trace(y)
        if np.linalg.norm(y - x) < tol:
            return y
        x = y
    return x


def kraus_span_rank(kraus: Sequence[np.ndarray], length: int, tol: float = 1e-10) -> int:
    """Dimension of the span of all length-``length`` products of Kraus operators."""
    d = kraus[0].shape[0]
    basis = np.eye(d, dtype=complex).reshape(1, d * d)
    for _ in range(length):
        cand = np.array([(k @ b.reshape(d, d)).reshape(-1) for k in kraus for b in basis])
        u, s, vh = np.linalg.svd(cand, full_matrices=False)
        r = int(np.sum(s > tol * max(s[0], 1.0)))
        basis = vh[:r]
    return basis.shape[0]


def is_primitive_span(kraus: Sequence[np.ndarray], length: int | None = None) -> bool:
    """True if length-L Kraus products span all matrices (default ``L = 4 d^2``)."""
    d = kraus[0].shape[0]
    if length is None:
        length = 4 * d * d
    return kraus_span_rank(kraus, length) == d * d


def _as_real(m: np.ndarray) -> np.ndarray:
    flat = m.reshape(-1)
    return np.concatenate([flat.real, flat.imag])


def _from_real(v: np.ndarray, d: int) -> np.ndarray:
    n = d * d
    return (v[:n] + 1j * v[n:]).reshape(d, d)


def real_span_closure(gens: Sequence[np.ndarray], tol: float = CLOSURE_TOL) -> tuple[int, list[np.ndarray]]:
    """Smallest real Lie algebra containing ``gens``.

    ``gens`` must be antihermitian and traceless.  The result is an
    orthonormal basis for ``Re Tr(A^dagger B)``, grown by commutators of
    basis pairs in sorted order until no new direction appears.

    Raises :class:`ToleranceAmbiguity` if a residual lands in ``(tol, 10 tol]``.
    """
    gens = [np.asarray(g, dtype=complex) for g in gens]
    if not gens:
        return 0, []
    d = gens[0].shape[0]
    for g in gens:
        if np.linalg.norm(g + dag(g)) > tol:
            raise ValidationError("generators must be antihermitian")
        if abs(np.trace(g)) > tol:
            raise ValidationError("generators must be traceless")

    q = np.zeros((0, 2 * d * d))
    mats: list[np.ndarray] = []

    def add(m: np.ndarray) -> None:
        nonlocal q
        v = _as_real(m)
        # two rounds of Gram-Schmidt for stability
        for _ in range(2):
            v = v - q.T @ (q @ v)
        nrm = np.linalg.norm(v)
        if nrm <= tol:
            return
        if nrm <= 10 * tol:
            raise ToleranceAmbiguity(
                f"residual norm {nrm:.3e} within (tol, 10 tol]; tighten tol (currently {tol:g})"
            )
        v = v / nrm
        q = np.vstack([q, v])
        mats.append(_from_real(v, d))

    for g in gens:
        nrm = np.linalg.norm(g)
        if nrm > tol:
            add(g / nrm)

    b = 0
    while b < len(mats):
        for a in range(b):
            c = commutator(mats[a], mats[b])
            nrm = np.linalg.norm(c)
            if nrm > tol:
                add(c / nrm)
        b += 1
        if len(mats) == d * d - 1:
            break
    return len(mats), mats


def closure_defect(basis: Sequence[np.ndarray]) -> float:
    """Largest out-of-span residual of ``[A, B]`` over basis pairs."""
    if not basis:
        return 0.0
    q = np.array([_as_real(m) for m in basis])
    worst = 0.0
    for a in range(len(basis)):
        for b in range(a + 1, len(basis)):
            v = _as_real(commutator(basis[a], basis[b]))
            v = v - q.T @ (q @ v)
            worst = max(worst, float(np.linalg.norm(v)))
    return worst


def expm(a: np.ndarray) -> np.ndarray:
    return scipy.linalg.expm(a)
