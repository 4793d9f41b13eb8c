"""Resource-state tensors and transfer-channel analysis.

An :class:`MPSTensor` holds the matrices ``A^i`` (one per physical basis
state of the wire basis), always in right-canonical gauge
``sum_i A^i^dagger A^i = I``.  Tensors in a maximally non-commutative SPT
phase additionally carry the factorization ``A^i = C^i (x) B^i`` into a
logical part ``C^i`` (Heisenberg-Weyl, dimension ``D``) and a junk part
``B^i`` (dimension ``kappa``).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import cohomology as coh
from .errors import (
    DimensionTooLarge,
    NonDiagonalizable,
    NotNormalizable,
    NotPrimitive,
    RetriesExhausted,
    ValidationError,
)
from .linalg import (
    Channel,
    channel_spectrum,
    dag,
    is_primitive_span,
    power_fixed_point,
)

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}

NU_FLOOR = 1e-6


@dataclass(frozen=True, eq=False)
class MPSTensor:
    matrices: np.ndarray  # (d, D*kappa, D*kappa)
    logical_dim: int
    junk_dim: int
    logical: np.ndarray | None = None  # (d, D, D)
    junk: np.ndarray | None = None  # (d, kappa, kappa)
    ops: coh.LogicalOps | None = field(default=None, repr=False)
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        a = np.array(self.matrices, dtype=complex)
        n = self.logical_dim * self.junk_dim
        if a.ndim != 3 or a.shape[1:] != (n, n):
            raise ValidationError(f"matrices must have shape (d, {n}, {n}), got {a.shape}")
        canon = np.einsum("iba,ibc->ac", a.conj(), a)
        if np.linalg.norm(canon - np.eye(n)) > 1e-10:
            raise ValidationError("tensor is not right-canonical (sum A^dag A != I)")
        a.setflags(write=False)
        object.__setattr__(self, "matrices", a)
        if (self.logical is None) != (self.junk is None):
            raise ValidationError("factorization needs both logical and junk parts")
        if self.logical is not None:
            c = np.array(self.logical, dtype=complex)
            b = np.array(self.junk, dtype=complex)
            for i in range(len(a)):
                if not np.allclose(c[i].conj().T @ c[i], np.eye(self.logical_dim), atol=1e-10):
                    raise ValidationError(f"logical operator {i} is not unitary")
                if np.max(np.abs(np.kron(c[i], b[i]) - a[i])) > 1e-12:
                    raise ValidationError(f"A^{i} != C^{i} (x) B^{i}")
            c.setflags(write=False)
            b.setflags(write=False)
            object.__setattr__(self, "logical", c)
            object.__setattr__(self, "junk", b)

    @property
    def phys_dim(self) -> int:
        return self.matrices.shape[0]

    @property
    def bond_dim(self) -> int:
        return self.matrices.shape[1]

    @property
    def factorized(self) -> bool:
        return self.logical is not None

    @property
    def characters(self) -> tuple[coh.Character, ...] | None:
        return None if self.ops is None else self.ops.characters

    def label(self, i: int) -> str:
        return self.names[i] if self.names else str(i)

    def index_of(self, key) -> int:
        """Resolve a wire label (``'x'``) or integer index."""
        if isinstance(key, str) and self.names and key in self.names:
            return self.names.index(key)
        try:
            k = int(key)
        except (TypeError, ValueError):
            raise ValidationError(f"unknown wire label {key!r}") from None
        if not 0 <= k < self.phys_dim:
            raise ValidationError(f"wire index {k} out of range")
        return k

    def physical_rep(self, h: coh.Element) -> np.ndarray:
        """Diagonal on-site symmetry ``u(h) = diag(chi_i(h))``."""
        return np.diag([chi(h) for chi in self.characters])


def aklt_tensor() -> MPSTensor:
    """Spin-1 AKLT state in the wire basis ``{|x>, |y>, |z>}``: ``A^i = sigma^i / sqrt 3``."""
    group, omega, irrep = coh.weyl_setup(2)
    # characters of Z2 x Z2 under which sigma^x, sigma^y, sigma^z transform
    chars = [coh.Character(group, e) for e in ((1, 0), (1, 1), (0, 1))]
    elements = tuple(coh.solve_logical_element(irrep, c) for c in chars)
    logical = np.array([PAULI[k] for k in "xyz"])
    ops = coh.LogicalOps(
        2, tuple(logical), tuple(irrep.weyl_exponents(h) for h in elements), tuple(chars), elements, irrep
    )
    junk = np.full((3, 1, 1), 1 / np.sqrt(3), dtype=complex)
    mats = logical / np.sqrt(3)
    return MPSTensor(mats, 2, 1, logical, junk, ops, ("x", "y", "z"))


def canonical_junk(junk: Sequence[np.ndarray]) -> np.ndarray:
    """Gauge-transform junk matrices so that ``sum_i B^i^dagger B^i = I``.

    Uses the dominant fixed point ``Y`` of the adjoint channel:
    ``B -> Y^{1/2} B Y^{-1/2} / sqrt(lambda)``, which leaves the state
    unchanged up to normalization.
    """
    b = np.array([np.atleast_2d(np.asarray(m, dtype=complex)) for m in junk])
    k = b.shape[1]
    if b.ndim != 3 or b.shape[2] != k:
        raise ValidationError("junk matrices must be square with a common dimension")
    s = np.einsum("iba,ibc->ac", b.conj(), b)
    if np.linalg.eigvalsh(0.5 * (s + dag(s)))[0] <= 1e-12 * max(np.linalg.norm(s), 1e-300):
        raise NotNormalizable("sum_i B^dagger B is singular")
    if k == 1:
        return b / np.sqrt(np.real(s[0, 0]))
    spec = channel_spectrum(Channel(list(b)).adjoint())
    lam, y = spec[0]
    y = y / (np.trace(y) / abs(np.trace(y)))
    y = 0.5 * (y + dag(y))
    w, v = np.linalg.eigh(y)
    if w[0] <= 1e-12 * w[-1]:
        raise NotNormalizable("adjoint fixed point is singular; junk channel not primitive")
    ys = (v * np.sqrt(w)) @ dag(v)
    ysi = (v / np.sqrt(w)) @ dag(v)
    out = np.array([ys @ m @ ysi for m in b]) / np.sqrt(abs(lam))
    return out


def spt_tensor(ops: coh.LogicalOps, junk: Sequence[np.ndarray], names: Sequence[str] | None = None) -> MPSTensor:
    """Resource tensor ``A^i = C^i (x) B^i`` with the junk part put in canonical gauge."""
    if len(junk) != len(ops):
        raise ValidationError(f"{len(junk)} junk matrices for {len(ops)} logical operators")
    b = canonical_junk(junk)
    c = np.array(ops.matrices)
    mats = np.array([np.kron(ci, bi) for ci, bi in zip(c, b)])
    return MPSTensor(mats, ops.dim, b.shape[1], c, b, ops, tuple(names) if names else None)


@dataclass(frozen=True, eq=False)
class FixedPointData:
    rho_fix: np.ndarray
    lambda_tilde: np.ndarray
    lambda1: float
    xi: float
    decay_constant: float
    eigenvalues: np.ndarray

    def project(self, x: np.ndarray) -> np.ndarray:
        """Infinite-power limit ``Tr(Lambda x) rho_fix``."""
        return np.trace(self.lambda_tilde @ x) * self.rho_fix


def _unit_trace_hermitian(m: np.ndarray) -> np.ndarray:
    m = m / np.trace(m)
    return 0.5 * (m + dag(m))


def fixed_point_data(ch: Channel, n_samples: int = 5, seed: int = 0) -> FixedPointData:
    """Fixed points, subleading eigenvalue and correlation length of a junk channel.

    ``xi = -1 / ln(lambda1)``; a one-dimensional junk space uses the
    convention ``lambda1 = xi = 0``.  ``decay_constant`` is the worst
    spectral constant ``c`` in ``|E^m(X) - Tr(Lambda X) rho| <= c lambda1^m``
    over ``n_samples`` random unit-norm hermitian ``X``.
    """
    k = ch.dim
    if k == 1:
        one = np.ones((1, 1), dtype=complex)
        return FixedPointData(one, one, 0.0, 0.0, 0.0, np.array([1.0 + 0j]))

    try:
        spec = channel_spectrum(ch)
        diagonalizable = True
    except NonDiagonalizable:
        spec = None
        diagonalizable = False
    w = np.linalg.eigvals(ch.superoperator())
    w = w[np.argsort(-np.abs(w), kind="stable")]
    if abs(w[1]) > abs(w[0]) - 1e-9:
        raise NotPrimitive(f"dominant eigenvalue is degenerate: |{w[0]:.6g}| ~ |{w[1]:.6g}|")
    if diagonalizable:
        rho = _unit_trace_hermitian(spec[0][1])
        lam = channel_spectrum(ch.adjoint())[0][1]
    else:
        rho = power_fixed_point(ch)
        lam = power_fixed_point(ch.adjoint())
    lam = lam / np.trace(lam @ rho)
    lam = 0.5 * (lam + dag(lam))

    lambda1 = float(abs(w[1]))
    xi = -1.0 / np.log(lambda1) if lambda1 > 0 else 0.0

    c = 0.0
    if diagonalizable and lambda1 > 0:
        vecs = np.column_stack([m.reshape(-1) for _, m in spec])
        inv = np.linalg.inv(vecs)
        rng = np.random.default_rng(seed)
        for _ in range(n_samples):
            x = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
            x = x + dag(x)
            x /= np.linalg.norm(x)
            coeffs = inv @ x.reshape(-1)
            c = max(c, float(np.sum(np.abs(coeffs[1:]))))
    return FixedPointData(rho, lam, lambda1, float(xi), c, w)


def transfer_channels(t: MPSTensor) -> tuple[Channel, Channel | None]:
    """Full transfer channel (Kraus ``A^i``) and junk channel (Kraus ``B^i``)."""
    full = Channel(list(t.matrices))
    junk = Channel(list(t.junk)) if t.factorized else None
    return full, junk


def is_primitive(t_or_junk, length: int | None = None) -> bool:
    """Spectral primitivity test: unique dominant eigenvalue and a full-rank fixed point."""
    b = t_or_junk.junk if isinstance(t_or_junk, MPSTensor) else np.asarray(t_or_junk)
    ch = Channel(list(b))
    if ch.dim == 1:
        return True
    try:
        fp = fixed_point_data(ch)
    except NotPrimitive:
        return False
    return bool(np.linalg.eigvalsh(fp.rho_fix)[0] > 1e-10)


def junk_nu(junk: np.ndarray, fp: FixedPointData) -> np.ndarray:
    """``nu_ij = Tr(Lambda B^i rho_fix B^j^dagger)``."""
    return np.einsum("ab,ibc,cd,jad->ij", fp.lambda_tilde, junk, fp.rho_fix, junk.conj())


def random_primitive_junk(d: int, kappa: int, seed: int, max_attempts: int = 100) -> np.ndarray:
    """Seeded generic junk matrices in canonical gauge.

    Resamples until the junk channel is primitive and every calibration
    constant satisfies ``|nu_ij| > 1e-6``.
    """
    if kappa < 1 or d < 1:
        raise ValidationError("need d >= 1 and kappa >= 1")
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        raw = (rng.normal(size=(d, kappa, kappa)) + 1j * rng.normal(size=(d, kappa, kappa))) / np.sqrt(2)
        try:
            b = canonical_junk(raw)
        except (NotNormalizable, NonDiagonalizable):
            continue
        ch = Channel(list(b))
        if not is_primitive(b):
            continue
        if kappa > 1 and not is_primitive_span(list(b)):
            continue
        nu = junk_nu(b, fixed_point_data(ch))
        if np.min(np.abs(nu)) <= NU_FLOOR:
            continue
        return b
    raise RetriesExhausted(f"no primitive junk found after {max_attempts} attempts (seed {seed})")


def symmetry_check(t: MPSTensor, group: coh.FiniteAbelianGroup | None = None,
                   irrep: coh.ProjectiveIrrep | None = None) -> float:
    """Largest violation of ``chi_i(h) A^i = (V(h)^dag (x) I) A^i (V(h) (x) I)``."""
    if t.characters is None:
        raise ValidationError("tensor carries no wire-basis character labels")
    irrep = irrep or t.ops.irrep
    group = group or irrep.group
    eye = np.eye(t.junk_dim)
    worst = 0.0
    for h in group.elements:
        v = np.kron(irrep(h), eye)
        for chi, a in zip(t.characters, t.matrices):
            worst = max(worst, float(np.linalg.norm(chi(h) * a - dag(v) @ a @ v)))
    return worst


MAX_BLOCKED_DIM = 1024


def block_sites(t: MPSTensor, b: int) -> MPSTensor:
    """Merge ``b`` neighbouring sites: ``A^{(i1..ib)} = A^{ib} ... A^{i1}``.

    Blocked indices run lexicographically over ``(i1, ..., ib)``.
    """
    if b < 1:
        raise ValidationError("block size must be positive")
    if t.phys_dim**b > MAX_BLOCKED_DIM:
        raise DimensionTooLarge(f"d^b = {t.phys_dim ** b} exceeds {MAX_BLOCKED_DIM}")
    if b == 1:
        return t
    idx = list(itertools.product(range(t.phys_dim), repeat=b))

    def word(mats, w):
        out = np.eye(mats.shape[1], dtype=complex)
        for i in w:
            out = mats[i] @ out
        return out

    mats = np.array([word(t.matrices, w) for w in idx])
    logical = junk = None
    ops = None
    if t.factorized:
        logical = np.array([word(t.logical, w) for w in idx])
        junk = np.array([word(t.junk, w) for w in idx])
    if t.ops is not None:
        o = t.ops
        chars = elems = labels = None
        if o.characters is not None:
            chars = tuple(_prod_chars([o.characters[i] for i in w]) for w in idx)
        if o.elements is not None and o.irrep is not None:
            g = o.irrep.group
            elems = tuple(_sum_elements(g, [o.elements[i] for i in w]) for w in idx)
        if o.weyl_exponents is not None:
            labels = tuple(
                (sum(o.weyl_exponents[i][0] for i in w) % o.dim, sum(o.weyl_exponents[i][1] for i in w) % o.dim)
                for w in idx
            )
        ops = coh.LogicalOps(o.dim, tuple(logical) if logical is not None else (), labels, chars, elems, o.irrep)
    names = None
    if t.names:
        names = tuple("".join(t.names[i] for i in w) for w in idx)
    return MPSTensor(mats, t.logical_dim, t.junk_dim, logical, junk, ops, names)


def _prod_chars(chars):
    out = chars[0]
    for c in chars[1:]:
        out = out * c
    return out


def _sum_elements(group, els):
    out = group.identity
    for e in els:
        out = group.add(out, e)
    return out


def correlation_length(ch: Channel) -> float:
    """``-1/ln|lambda_1|`` of any channel from its superoperator spectrum."""
    w = np.linalg.eigvals(ch.superoperator())
    w = np.sort(np.abs(w))[::-1]
    if len(w) < 2 or w[1] <= 0:
        return 0.0
    return float(-1.0 / math.log(w[1]))


def haldane_tensor(kappa: int, seed: int) -> MPSTensor:
    """Generic Haldane-phase tensor: AKLT logical part, seeded primitive junk."""
    a = aklt_tensor()
    if kappa == 1:
        return a
    return spt_tensor(a.ops, random_primitive_junk(3, kappa, seed), a.names)


def symmetric_tensor(group: coh.FiniteAbelianGroup, omega: coh.Cocycle,
                     chars: Sequence[coh.Character] | None = None, kappa: int = 1, seed: int = 0) -> MPSTensor:
    """Tensor with one wire label per character of ``group``.

    ``chars`` defaults to all nontrivial characters.  With ``kappa = 1`` the
    junk scalars are uniform, otherwise seeded primitive junk is drawn.
    """
    irrep = coh.projective_irrep(group, omega)
    if chars is None:
        chars = coh.all_characters(group, include_trivial=False)
    ops = coh.logical_ops_for_rep(irrep, list(chars))
    d = len(ops)
    if kappa == 1:
        junk = np.full((d, 1, 1), 1 / math.sqrt(d), dtype=complex)
    else:
        junk = random_primitive_junk(d, kappa, seed)
    names = tuple("c" + "".join(str(e) for e in c.exponents) for c in chars)
    if len(set(names)) != len(names):
        names = None
    return spt_tensor(ops, junk, names)
