"""Virtual-space simulation of measurement-based computation on a wire.

A measurement on one site in basis ``{|b_s>}`` maps the virtual state with
the Kraus operators ``A[s] = sum_i <b_s|i> A^i``.  Outcome ``s`` carries the
byproduct ``C^{k_s} (x) I`` of its wire label ``k_s``; propagating it through
the rest of the computation is folded into the corrected Kraus operator
``Gamma_s = (C^{k_s} (x) I)^dagger A[s]``.  Summing over outcomes gives the
outcome-averaged virtual state, which is what a computation delivers.

Gate convention.  With ``P = C^{i dagger} C^j`` write
``K(psi) = exp(-i psi) P - exp(i psi) P^dagger``.  A step in the tilted basis
``B(i, j; dtheta, phi)`` followed by a full pump acts on the logical factor
as ``exp(dtheta |nu_ij| / nu * K(phi + delta_ij))`` to first order.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from . import cohomology as coh
from .errors import DeadDirection, IndexOutOfRange, ValidationError
from .linalg import Channel, dag, partial_trace, pure_density, trace_distance
from .mps import NU_FLOOR, FixedPointData, MPSTensor, fixed_point_data, junk_nu

MAX_TILT = 0.3
STEP_CAP = 0.05


# ---------------------------------------------------------------- bases


@dataclass(frozen=True, eq=False)
class MeasurementBasis:
    """Orthonormal measurement basis on one site.

    ``vectors[s]`` is the outcome-``s`` vector in wire-basis components and
    ``labels[s]`` the wire label whose byproduct that outcome carries.
    """

    vectors: np.ndarray
    labels: tuple[int, ...]
    name: str = ""

    def __post_init__(self):
        v = np.array(self.vectors, dtype=complex)
        d = v.shape[0]
        if v.shape != (d, d):
            raise ValidationError(f"basis must be d x d, got {v.shape}")
        if np.linalg.norm(v.conj() @ v.T - np.eye(d)) > 1e-10:
            raise ValidationError("basis vectors are not orthonormal")
        if sorted(self.labels) != list(range(d)):
            raise ValidationError("byproduct labels must be a permutation of the wire labels")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)
        object.__setattr__(self, "labels", tuple(int(k) for k in self.labels))

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def is_wire(self) -> bool:
        return self.labels == tuple(range(self.dim)) and np.array_equal(self.vectors, np.eye(self.dim))

    def byproduct_elements(self, t: MPSTensor) -> list[coh.Element]:
        return [t.ops.elements[k] for k in self.labels]

    def adapted(self, u: np.ndarray) -> "MeasurementBasis":
        """Basis ``u |b_s>`` used on a state carrying an uncorrected byproduct."""
        return MeasurementBasis((u @ self.vectors.T).T, self.labels, self.name)


def wire_basis(t: MPSTensor) -> MeasurementBasis:
    d = t.phys_dim
    return MeasurementBasis(np.eye(d), tuple(range(d)), "wire")


def _pair(t: MPSTensor, i, j) -> tuple[int, int]:
    try:
        i, j = t.index_of(i), t.index_of(j)
    except ValidationError as e:
        raise IndexOutOfRange(str(e)) from None
    if i == j:
        raise IndexOutOfRange("tilted basis needs two distinct wire labels")
    return i, j


def _two_vector_basis(t: MPSTensor, i: int, j: int, c: float, s: complex, name: str) -> MeasurementBasis:
    v = np.eye(t.phys_dim, dtype=complex)
    v[i] = 0
    v[j] = 0
    v[i, i], v[i, j] = c, s
    v[j, j], v[j, i] = c, -np.conj(s)
    return MeasurementBasis(v, tuple(range(t.phys_dim)), name)


def tilted_basis(t: MPSTensor, i, j, dtheta: float, phi: float) -> MeasurementBasis:
    """Wire basis with ``|i>, |j>`` replaced by
    ``|i> + dtheta e^{i phi} |j>`` and ``|j> - dtheta e^{-i phi} |i>``, normalized."""
    i, j = _pair(t, i, j)
    if abs(dtheta) > MAX_TILT:
        raise ValidationError(f"|dtheta| = {abs(dtheta):.3g} exceeds the perturbative cap {MAX_TILT}")
    n = math.sqrt(1.0 + dtheta * dtheta)
    return _two_vector_basis(t, i, j, 1.0 / n, dtheta * np.exp(1j * phi) / n, f"tilt({i},{j})")


def rotated_basis(t: MPSTensor, i, j, angle: float, phi: float = math.pi) -> MeasurementBasis:
    """Finite rotation of the ``(i, j)`` plane by ``angle / 2`` with relative phase ``phi``."""
    i, j = _pair(t, i, j)
    return _two_vector_basis(t, i, j, math.cos(angle / 2), math.sin(angle / 2) * np.exp(1j * phi), f"rot({i},{j})")


def aklt_basis(t: MPSTensor, theta: float) -> MeasurementBasis:
    """``{cos(theta/2)|x> - sin(theta/2)|y>, sin(theta/2)|x> + cos(theta/2)|y>, |z>}``."""
    return rotated_basis(t, "x", "y", theta, math.pi)


# ---------------------------------------------------------------- states


@dataclass(frozen=True)
class ByproductFrame:
    group: coh.FiniteAbelianGroup
    accumulated: coh.Element

    @classmethod
    def fresh(cls, group: coh.FiniteAbelianGroup) -> "ByproductFrame":
        return cls(group, group.identity)

    def compose(self, h: coh.Element) -> "ByproductFrame":
        return ByproductFrame(self.group, self.group.add(self.accumulated, h))


@dataclass(frozen=True, eq=False)
class MixedVirtualState:
    """Density matrix on logical (x) junk space; ``pre_trace`` is the trace
    before the last renormalization."""

    rho: np.ndarray
    logical_dim: int
    junk_dim: int
    pre_trace: float = 1.0

    def __post_init__(self):
        n = self.logical_dim * self.junk_dim
        r = np.array(self.rho, dtype=complex)
        if r.shape != (n, n):
            raise ValidationError(f"state must be {n} x {n}, got {r.shape}")
        r.setflags(write=False)
        object.__setattr__(self, "rho", r)

    @classmethod
    def product(cls, logical: np.ndarray, junk: np.ndarray) -> "MixedVirtualState":
        logical = np.asarray(logical, dtype=complex)
        if logical.ndim == 1:
            logical = pure_density(logical)
        junk = np.asarray(junk, dtype=complex)
        return cls(np.kron(logical, junk), logical.shape[0], junk.shape[0])

    @property
    def logical(self) -> np.ndarray:
        return partial_trace(self.rho, (self.logical_dim, self.junk_dim), keep=0)

    @property
    def junk(self) -> np.ndarray:
        return partial_trace(self.rho, (self.logical_dim, self.junk_dim), keep=1)

    def trace_distance(self, other: "MixedVirtualState | np.ndarray") -> float:
        o = other.rho if isinstance(other, MixedVirtualState) else other
        return trace_distance(self.rho, o)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.rho + dag(self.rho)))[0])


def initial_state(t: MPSTensor, logical, fp: FixedPointData | None = None) -> MixedVirtualState:
    """``logical (x) rho_fix``; ``logical`` is a vector or density matrix."""
    if fp is None:
        fp = _fixed_point(t)
    return MixedVirtualState.product(logical, fp.rho_fix)


def _fixed_point(t: MPSTensor) -> FixedPointData:
    if not t.factorized:
        raise ValidationError("operation needs a factorized tensor")
    return fixed_point_data(Channel(list(t.junk)))


# ---------------------------------------------------------------- steps


def outcome_kraus(t: MPSTensor, basis: MeasurementBasis) -> np.ndarray:
    """Uncorrected ``A[s] = sum_i <b_s|i> A^i``, shape ``(d, n, n)``."""
    if basis.dim != t.phys_dim:
        raise ValidationError(f"basis dimension {basis.dim} != physical dimension {t.phys_dim}")
    return np.einsum("si,iab->sab", basis.vectors.conj(), t.matrices)


def corrected_kraus(t: MPSTensor, basis: MeasurementBasis) -> np.ndarray:
    """``Gamma_s = (C^{k_s} (x) I)^dagger A[s]``; exactly ``I (x) B^k`` for the wire basis."""
    if basis.dim != t.phys_dim:
        raise ValidationError(f"basis dimension {basis.dim} != physical dimension {t.phys_dim}")
    eye_l = np.eye(t.logical_dim)
    if basis.is_wire:
        return np.array([np.kron(eye_l, b) for b in t.junk])
    a = outcome_kraus(t, basis)
    eye_j = np.eye(t.junk_dim)
    return np.array([np.kron(dag(t.logical[k]), eye_j) @ a[s] for s, k in enumerate(basis.labels)])


def _superop(kraus: np.ndarray) -> np.ndarray:
    return sum(np.kron(k, k.conj()) for k in kraus)


def sum_over_outcomes_step(sigma: MixedVirtualState, basis: MeasurementBasis, t: MPSTensor) -> MixedVirtualState:
    """``sigma <- sum_s Gamma_s sigma Gamma_s^dagger``, renormalized."""
    g = corrected_kraus(t, basis)
    out = np.einsum("sab,bc,sdc->ad", g, sigma.rho, g.conj())
    tr = float(np.real(np.trace(out)))
    return MixedVirtualState(out / tr, sigma.logical_dim, sigma.junk_dim, tr)


def pump_fixed_point(sigma: MixedVirtualState, t: MPSTensor, m: int) -> MixedVirtualState:
    """``m`` wire-basis steps; the junk factor relaxes towards ``rho_fix``."""
    if not t.factorized:
        raise ValidationError("pumping needs a factorized tensor")
    if m < 0:
        raise ValidationError("pump length must be nonnegative")
    if m == 0 or t.junk_dim == 1:
        return sigma
    w = _superop(corrected_kraus(t, wire_basis(t)))
    v = np.linalg.matrix_power(w, m) @ sigma.rho.reshape(-1)
    n = sigma.rho.shape[0]
    out = v.reshape(n, n)
    tr = float(np.real(np.trace(out)))
    return MixedVirtualState(out / tr, sigma.logical_dim, sigma.junk_dim, tr)


def project_junk(sigma: MixedVirtualState, fp: FixedPointData) -> MixedVirtualState:
    """Infinite pump: ``(I (x) [X -> Tr(Lambda X) rho_fix]) sigma``."""
    dl, dj = sigma.logical_dim, sigma.junk_dim
    r = sigma.rho.reshape(dl, dj, dl, dj)
    logical = np.einsum("ajbk,kj->ab", r, fp.lambda_tilde)
    return MixedVirtualState(np.kron(logical, fp.rho_fix), dl, dj)


def pumping_errors(t: MPSTensor, ms: Iterable[int], rho0: np.ndarray | None = None) -> np.ndarray:
    """Trace distance of the junk state to ``rho_fix`` after ``m`` wire steps.

    ``rho0`` defaults to the pure junk state ``|0><0|``.
    """
    fp = _fixed_point(t)
    ch = Channel(list(t.junk))
    if rho0 is None:
        rho0 = np.zeros((t.junk_dim, t.junk_dim), dtype=complex)
        rho0[0, 0] = 1
    s = ch.superoperator()
    out = []
    for m in ms:
        x = (np.linalg.matrix_power(s, int(m)) @ rho0.reshape(-1)).reshape(rho0.shape)
        out.append(trace_distance(x, fp.rho_fix))
    return np.array(out)


def decay_rate(ms: Sequence[int], errors: Sequence[float]) -> float:
    """Slope of ``log(error)`` against ``m`` by least squares."""
    return float(np.polyfit(np.asarray(ms, float), np.log(np.asarray(errors, float)), 1)[0])


# ---------------------------------------------------------------- calibration


@dataclass(frozen=True, eq=False)
class NuMatrix:
    nu: np.ndarray

    def __post_init__(self):
        v = np.array(self.nu, dtype=complex)
        if np.linalg.norm(v - dag(v)) > 1e-10:
            raise ValidationError("nu matrix is not hermitian")
        if np.min(np.real(np.diag(v))) < -1e-12 or np.real(np.trace(v)) <= 0:
            raise ValidationError("nu matrix needs a nonnegative diagonal and positive trace")
        v.setflags(write=False)
        object.__setattr__(self, "nu", v)

    @property
    def moduli(self) -> np.ndarray:
        return np.abs(self.nu)

    @property
    def phases(self) -> np.ndarray:
        return np.angle(self.nu)

    @property
    def total(self) -> float:
        return float(np.real(np.trace(self.nu)))

    @property
    def dead(self) -> np.ndarray:
        return self.moduli < NU_FLOOR

    def ratio(self, i: int, j: int) -> float:
        return float(self.moduli[i, j] / self.total)


def calibrate_nu(t: MPSTensor) -> NuMatrix:
    """``nu_ij = Tr(Lambda B^i rho_fix B^j^dagger)`` by spectral projection."""
    fp = _fixed_point(t)
    return NuMatrix(junk_nu(np.asarray(t.junk), fp))


def calibrate_nu_iterative(t: MPSTensor, m: int = 200) -> NuMatrix:
    """Cross-check: iterate the junk channel ``m`` times on ``B^i rho_fix B^j^dagger``
    and read off the component along ``rho_fix``."""
    fp = _fixed_point(t)
    ch = Channel(list(t.junk))
    s = np.linalg.matrix_power(ch.superoperator(), m)
    b = np.asarray(t.junk)
    d = len(b)
    rf = fp.rho_fix.reshape(-1)
    nu = np.empty((d, d), dtype=complex)
    for i in range(d):
        for j in range(d):
            x = s @ (b[i] @ fp.rho_fix @ dag(b[j])).reshape(-1)
            nu[i, j] = np.vdot(rf, x) / np.vdot(rf, rf)
    return NuMatrix(0.5 * (nu + dag(nu)))


def generator(t: MPSTensor, i: int, j: int, psi: float) -> np.ndarray:
    """``K(psi) = e^{-i psi} C^i^dag C^j - e^{i psi} C^j^dag C^i`` (antihermitian)."""
    p = dag(t.logical[i]) @ t.logical[j]
    return np.exp(-1j * psi) * p - np.exp(1j * psi) * dag(p)


def _check_alive(nu: NuMatrix, i: int, j: int) -> None:
    if nu.moduli[i, j] < NU_FLOOR:
        raise DeadDirection(f"|nu_{i}{j}| = {nu.moduli[i, j]:.2e} is below the floor {NU_FLOOR:g}")


def predicted_gate(t: MPSTensor, i, j, dtheta: float, phi: float, nu: NuMatrix) -> np.ndarray:
    """First-order logical gate ``exp(dtheta |nu_ij| / nu * K(phi + delta_ij))``."""
    i, j = _pair(t, i, j)
    _check_alive(nu, i, j)
    k = generator(t, i, j, phi + nu.phases[i, j])
    return scipy.linalg.expm(dtheta * nu.ratio(i, j) * k)


@dataclass(frozen=True, eq=False)
class Comparison:
    """Outcome of one tilted step plus pump versus the first-order prediction.

    ``second_order`` is the residual after an infinite pump divided by
    ``dtheta**2``; ``pump_bound`` is ``c lambda1^m``.  Unpacks as
    ``(state, residual)``.
    """

    state: MixedVirtualState
    residual: float
    gate: np.ndarray
    second_order: float
    pump_bound: float

    def __iter__(self):
        return iter((self.state, self.residual))


def execute_and_compare(sigma0, t: MPSTensor, i, j, dtheta: float, phi: float, m: int,
                        nu: NuMatrix | None = None) -> Comparison:
    """Run one tilted step and ``m`` pump steps from ``sigma0 (x) rho_fix``."""
    i, j = _pair(t, i, j)
    fp = _fixed_point(t)
    nu = nu or calibrate_nu(t)
    start = initial_state(t, sigma0, fp)
    after = sum_over_outcomes_step(start, tilted_basis(t, i, j, dtheta, phi), t)
    out = pump_fixed_point(after, t, m)
    gate = predicted_gate(t, i, j, dtheta, phi, nu)
    g = np.kron(gate, np.eye(t.junk_dim))
    ideal = g @ start.rho @ dag(g)
    residual = out.trace_distance(ideal)
    inf = trace_distance(project_junk(after, fp).rho, ideal)
    c2 = inf / dtheta**2 if dtheta else 0.0
    return Comparison(out, residual, gate, c2, fp.decay_constant * fp.lambda1**m)


# ---------------------------------------------------------------- programs


@dataclass(frozen=True, eq=False)
class GateProgram:
    """``N`` repetitions of (tilted step, ``m`` pump steps).

    ``phi`` is the logical phase of the target generator ``K(phi)`` and
    ``phys_phi = phi - delta_ij`` the phase used in the tilted basis.  The
    target gate is ``exp((theta / 2) K(phi) / |K(phi)|)``.
    """

    pair: tuple[int, int]
    phi: float
    theta: float
    N: int
    m: int
    dtheta: float
    phys_phi: float
    steps: tuple[tuple[MeasurementBasis, int], ...] = field(repr=False)
    epsilon: float | None = None

    def __post_init__(self):
        if self.m < 0:
            raise ValidationError("pump length must be nonnegative")
        if self.N != len(self.steps):
            raise ValidationError("N must equal the number of steps")

    @property
    def cost(self) -> int:
        return self.N * (self.m + 1)

    @property
    def physical_angle(self) -> float:
        """Rotation angle of the tilted basis, ``2 arctan(dtheta)``."""
        return 2.0 * math.atan(self.dtheta)


def _unit_generator(t: MPSTensor, i: int, j: int, phi: float) -> tuple[np.ndarray, float]:
    k = generator(t, i, j, phi)
    nrm = float(np.linalg.norm(k, 2))
    if nrm < 1e-12:
        raise DeadDirection(f"generator K(phi) vanishes for pair ({i},{j}) at phi = {phi:g}")
    return k / nrm, nrm


def target_unitary(t: MPSTensor, p: GateProgram) -> np.ndarray:
    khat, _ = _unit_generator(t, *p.pair, p.phi)
    return scipy.linalg.expm(0.5 * p.theta * khat)


def pump_length(fp: FixedPointData, n: int, kappa: int) -> int:
    if kappa == 1:
        return 0
    return int(math.ceil(max(2.0 * fp.xi * math.log(max(n, 1)), 1.0)))


def program_for(t: MPSTensor, nu: NuMatrix, i, j, phi: float, theta: float, N: int, m: int,
                epsilon: float | None = None) -> GateProgram:
    """Program with explicit step count ``N`` and pump length ``m``."""
    i, j = _pair(t, i, j)
    _check_alive(nu, i, j)
    if N < 1:
        raise ValidationError("a compiled program needs N >= 1")
    _, knorm = _unit_generator(t, i, j, phi)
    dtheta = theta / (2.0 * N * nu.ratio(i, j) * knorm)
    phys_phi = phi - float(nu.phases[i, j])
    basis = tilted_basis(t, i, j, dtheta, phys_phi)
    return GateProgram((i, j), phi, theta, N, m, dtheta, phys_phi, ((basis, m),) * N, epsilon)


def compile_rotation(t: MPSTensor, nu: NuMatrix, i, j, phi: float, theta: float, epsilon: float) -> GateProgram:
    """Compile ``exp((theta/2) K(phi)/|K(phi)|)`` to logical error ``~epsilon``."""
    if epsilon <= 0:
        raise ValidationError("epsilon must be positive")
    i, j = _pair(t, i, j)
    _check_alive(nu, i, j)
    theta = float(theta)
    n = max(1, math.ceil(max(theta * theta / epsilon, abs(theta) / STEP_CAP)))
    _, knorm = _unit_generator(t, i, j, phi)
    per_unit = 1.0 / (2.0 * nu.ratio(i, j) * knorm)
    # the physical angle 2 arctan(dtheta) is capped at STEP_CAP
    max_tilt = math.tan(STEP_CAP / 2)
    if abs(theta) * per_unit / n > max_tilt:
        n = math.ceil(abs(theta) * per_unit / max_tilt)
    m = pump_length(_fixed_point(t), n, t.junk_dim)
    return program_for(t, nu, i, j, phi, theta, n, m, epsilon)


class _StepCache:
    """Superoperators per distinct basis and per pump length, for one tensor."""

    def __init__(self, t: MPSTensor):
        self.t = t
        self.bases: dict[int, tuple[MeasurementBasis, np.ndarray]] = {}
        self.wire = _superop(corrected_kraus(t, wire_basis(t)))
        self.pumps: dict[int, np.ndarray] = {}

    def basis(self, b: MeasurementBasis) -> np.ndarray:
        hit = self.bases.get(id(b))
        if hit is None:
            hit = (b, _superop(corrected_kraus(self.t, b)))
            self.bases[id(b)] = hit
        return hit[1]

    def pump(self, m: int) -> np.ndarray | None:
        if m == 0 or self.t.junk_dim == 1:
            return None
        if m not in self.pumps:
            self.pumps[m] = np.linalg.matrix_power(self.wire, m)
        return self.pumps[m]


def run_program(p: GateProgram, sigma0, t: MPSTensor) -> MixedVirtualState:
    """Exact sum-over-outcomes evolution of ``sigma0 (x) rho_fix`` through ``p``.

    ``sigma0`` is a logical vector, a logical density matrix or a full
    :class:`MixedVirtualState`.
    """
    state = sigma0 if isinstance(sigma0, MixedVirtualState) else initial_state(t, sigma0)
    n = state.rho.shape[0]
    v = state.rho.reshape(-1)
    cache = _StepCache(t)
    tr = 1.0
    for basis, m in p.steps:
        v = cache.basis(basis) @ v
        w = cache.pump(m)
        if w is not None:
            v = w @ v
        tr = float(np.real(np.trace(v.reshape(n, n))))
        v = v / tr
    return MixedVirtualState(v.reshape(n, n), state.logical_dim, state.junk_dim, tr)


def logical_error(t: MPSTensor, p: GateProgram, out: MixedVirtualState, sigma0) -> float:
    """Trace distance between the logical output and ``U sigma0 U^dagger``."""
    s = np.asarray(sigma0, dtype=complex)
    if s.ndim == 1:
        s = pure_density(s)
    u = target_unitary(t, p)
    return trace_distance(out.logical, u @ s @ dag(u))


def logical_channel(p: GateProgram, t: MPSTensor) -> np.ndarray:
    """Superoperator (row-major) of the program on the logical factor, junk
    starting at ``rho_fix`` and traced out at the end."""
    fp = _fixed_point(t)
    d = t.logical_dim
    s = np.empty((d * d, d * d), dtype=complex)
    for c in range(d):
        for e in range(d):
            x = np.zeros((d, d), dtype=complex)
            x[c, e] = 1
            start = MixedVirtualState(np.kron(x, fp.rho_fix), d, t.junk_dim)
            out = _run_unnormalized(p, start, t)
            s[:, c * d + e] = partial_trace(out, (d, t.junk_dim), keep=0).reshape(-1)
    return s


def _run_unnormalized(p: GateProgram, state: MixedVirtualState, t: MPSTensor) -> np.ndarray:
    n = state.rho.shape[0]
    v = state.rho.reshape(-1)
    cache = _StepCache(t)
    for basis, m in p.steps:
        v = cache.basis(basis) @ v
        w = cache.pump(m)
        if w is not None:
            v = w @ v
    return v.reshape(n, n)


def dominant_unitary(superop: np.ndarray) -> np.ndarray:
    """Unitary closest to the dominant Kraus operator of a channel, with unit determinant."""
    d = int(round(math.sqrt(superop.shape[0])))
    choi = superop.reshape(d, d, d, d).transpose(0, 2, 1, 3).reshape(d * d, d * d)
    w, v = np.linalg.eigh(0.5 * (choi + dag(choi)))
    k = v[:, -1].reshape(d, d)
    u, _, vh = np.linalg.svd(k)
    q = u @ vh
    q = q / np.linalg.det(q) ** (1.0 / d)
    # of the d determinant roots, keep the one nearest the identity
    roots = np.exp(2j * np.pi * np.arange(d) / d)
    best = roots[np.argmax([np.real(np.trace(q * r)) for r in roots])]
    return q * best


def realized_generator(superop: np.ndarray) -> np.ndarray:
    """Traceless antihermitian ``G`` with ``exp(G)`` the dominant unitary."""
    g = scipy.linalg.logm(dominant_unitary(superop))
    g = 0.5 * (g - dag(g))
    return g - np.trace(g) / g.shape[0] * np.eye(g.shape[0])


@dataclass(frozen=True)
class OperationalEstimate:
    ratio: float  # |nu_ij| / nu
    phase: float  # delta_ij
    residual: float


def operational_nu(t: MPSTensor, i, j, theta: float = math.pi / 4, N: int = 200, m: int | None = None) -> OperationalEstimate:
    """Estimate ``|nu_ij|/nu`` and ``delta_ij`` from realized rotation angles.

    Runs uncalibrated programs (tilt ``theta / 2N`` per step) at phases
    ``0`` and ``pi/2``, extracts each realized logical generator and fits
    ``G(phi) = N dtheta (u K(phi) + v K(phi + pi/2))`` by least squares;
    then ``ratio = hypot(u, v)`` and ``delta = atan2(v, u)``.
    """
    i, j = _pair(t, i, j)
    fp = _fixed_point(t)
    if m is None:
        m = 0 if t.junk_dim == 1 else int(math.ceil(fp.xi * math.log(1e10))) + 1
    dtheta = theta / (2.0 * N)
    rows, rhs = [], []
    for phi in (0.0, math.pi / 2):
        basis = tilted_basis(t, i, j, dtheta, phi)
        p = GateProgram((i, j), phi, theta, N, m, dtheta, phi, ((basis, m),) * N)
        g = realized_generator(logical_channel(p, t)) / (N * math.atan(dtheta))
        a, b = generator(t, i, j, phi), generator(t, i, j, phi + math.pi / 2)
        for part in (np.real, np.imag):
            rows.append(np.column_stack([part(a).ravel(), part(b).ravel()]))
            rhs.append(part(g).ravel())
    x, res, *_ = np.linalg.lstsq(np.vstack(rows), np.concatenate(rhs), rcond=None)
    u, v = x
    resid = float(np.linalg.norm(np.vstack(rows) @ x - np.concatenate(rhs)))
    return OperationalEstimate(float(math.hypot(u, v)), float(math.atan2(v, u)), resid)


# ---------------------------------------------------------------- trajectories


@dataclass(frozen=True, eq=False)
class TrajectoryLog:
    """Per-shot outcomes (wire-label indices), final frames and corrected states."""

    outcomes: np.ndarray  # (shots, steps)
    frames: np.ndarray  # (shots,) group-element indices
    states: np.ndarray  # (shots, n, n) corrected, normalized
    logical: np.ndarray  # (shots, D, D)

    def frequencies(self) -> np.ndarray:
        """Outcome frequencies per step, shape ``(steps, d)``."""
        d = int(self.outcomes.max()) + 1 if self.outcomes.size else 0
        return np.array([np.bincount(col, minlength=d) for col in self.outcomes.T]) / len(self.outcomes)


def _flatten(p: GateProgram | Sequence[MeasurementBasis], t: MPSTensor) -> list[MeasurementBasis]:
    if isinstance(p, GateProgram):
        wb = wire_basis(t)
        out = []
        for b, m in p.steps:
            out.append(b)
            out.extend([wb] * m)
        return out
    return list(p)


def _sample(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    c = np.cumsum(probs, axis=1)
    c /= c[:, -1:]
    return np.minimum((c < u[:, None]).sum(axis=1), probs.shape[1] - 1)


def sample_trajectories(p, sigma0, t: MPSTensor, shots: int, seed: int) -> tuple[MixedVirtualState, TrajectoryLog]:
    """Monte-Carlo outcome strings with explicit byproduct frames.

    Each shot carries its accumulated byproduct as a group element ``h``.
    A non-wire step on a shot is measured in the adapted basis
    ``u(h)|b_s>`` on the uncorrected state ``V(h) sigma V(h)^dagger``;
    the new frame is ``h + h_{k_s}``.  The wire basis is invariant under
    adaptation and keeps a product state product, so while no tilted step
    has occurred the logical factor is left untouched.

    Shot ``n`` uses row ``n`` of a Philox stream keyed by ``seed``, so
    results per shot do not depend on the total number of shots.
    """
    if shots < 1:
        raise ValidationError("shots must be >= 1")
    if not t.factorized or t.ops is None or t.ops.irrep is None:
        raise ValidationError("trajectory sampling needs a symmetric factorized tensor")
    bases = _flatten(p, t)
    fp = _fixed_point(t)
    dl, dj = t.logical_dim, t.junk_dim
    n = dl * dj
    group = t.ops.irrep.group
    elems = group.elements
    table = group.add_table
    label_el = np.array([group.index(h) for h in t.ops.elements])
    vfull = np.array([np.kron(t.ops.irrep(h), np.eye(dj)) for h in elems])
    urep = np.array([t.physical_rep(h) for h in elems])
    rng = np.random.Generator(np.random.Philox(seed))
    uni = rng.random((shots, len(bases)))

    s0 = np.asarray(sigma0, dtype=complex)
    if s0.ndim == 1:
        s0 = pure_density(s0)
    rho_l = np.broadcast_to(s0, (shots, dl, dl))
    rho_j = np.broadcast_to(fp.rho_fix, (shots, dj, dj)).copy()
    full = None
    frames = np.full(shots, group.index(group.identity))
    outcomes = np.zeros((shots, len(bases)), dtype=np.int8)
    junk = np.asarray(t.junk)
    wire_g = corrected_kraus(t, wire_basis(t))
    rows = np.arange(shots)

    for step, basis in enumerate(bases):
        if basis.is_wire:
            if full is None:
                cand = np.einsum("kab,sbc,kdc->skad", junk, rho_j, junk.conj())
                probs = np.real(np.einsum("skaa->sk", cand))
                k = _sample(probs, uni[:, step])
                rho_j = cand[rows, k] / probs[rows, k][:, None, None]
            else:
                cand = np.einsum("kab,sbc,kdc->skad", wire_g, full, wire_g.conj())
                probs = np.real(np.einsum("skaa->sk", cand))
                k = _sample(probs, uni[:, step])
                full = cand[rows, k] / probs[rows, k][:, None, None]
            outcomes[:, step] = k
            frames = table[frames, label_el[k]]
            continue

        if full is None:
            full = np.einsum("sab,scd->sacbd", rho_l, rho_j).reshape(shots, n, n)
        # outcome Kraus of the adapted basis, one set per frame
        kad = np.array([outcome_kraus(t, basis.adapted(u)) for u in urep])
        v = vfull[frames]
        actual = v @ full @ dag_batch(v)
        ks = kad[frames]
        cand = np.einsum("skab,sbc,skdc->skad", ks, actual, ks.conj())
        probs = np.real(np.einsum("skaa->sk", cand))
        s = _sample(probs, uni[:, step])
        lab = np.array(basis.labels)[s]
        frames = table[frames, label_el[lab]]
        v = vfull[frames]
        full = dag_batch(v) @ (cand[rows, s] / probs[rows, s][:, None, None]) @ v
        outcomes[:, step] = lab

    if full is None:
        logical = np.array(rho_l)
        full = np.einsum("sab,scd->sacbd", rho_l, rho_j).reshape(shots, n, n)
    else:
        logical = np.einsum("sajbj->sab", full.reshape(shots, dl, dj, dl, dj))
    mean = full.mean(axis=0)
    return MixedVirtualState(mean, dl, dj), TrajectoryLog(outcomes, frames, full, logical)


def dag_batch(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def bootstrap_sd(values: np.ndarray, n_boot: int = 200, seed: int = 0) -> np.ndarray:
    """Bootstrap standard deviation of the mean of ``values`` along axis 0."""
    rng = np.random.default_rng(seed)
    n = len(values)
    means = np.array([values[rng.integers(0, n, n)].mean(axis=0) for _ in range(n_boot)])
    return means.std(axis=0, ddof=1)


# ---------------------------------------------------------------- readout


def readout_probabilities(sigma: MixedVirtualState | np.ndarray, basis: MeasurementBasis, t: MPSTensor,
                          k: int = 0) -> np.ndarray:
    """``p(o) = Tr[(I (x) Lambda)(I (x) E^k)(A[o] sigma A[o]^dagger)]``."""
    if k < 0:
        raise ValidationError("k must be nonnegative")
    rho = sigma.rho if isinstance(sigma, MixedVirtualState) else np.asarray(sigma, dtype=complex)
    fp = _fixed_point(t)
    dl, dj = t.logical_dim, t.junk_dim
    a = outcome_kraus(t, basis)
    ej = np.linalg.matrix_power(Channel(list(t.junk)).superoperator(), k) if dj > 1 else np.eye(1)
    out = []
    for ao in a:
        x = ao @ rho @ dag(ao)
        jr = partial_trace(x, (dl, dj), keep=1)
        jr = (ej @ jr.reshape(-1)).reshape(dj, dj)
        out.append(float(np.real(np.trace(fp.lambda_tilde @ jr))))
    return np.array(out)


# ---------------------------------------------------------------- scans


@dataclass(frozen=True)
class ScanRow:
    N: int
    m: int
    cost: int
    error: float


SCAN_COLUMNS = ("N", "m", "cost", "error")


def error_scan(t: MPSTensor, i, j, theta: float, N_list: Sequence[int], m_list: Sequence[int],
               phi: float = math.pi, sigma0=None, nu: NuMatrix | None = None) -> list[ScanRow]:
    """Logical error of ``program_for(N, m)`` over a grid of ``(N, m)``.

    ``sigma0`` defaults to ``|+>``-like ``(|0> + |1>)/sqrt 2``.
    """
    if not t.factorized:
        raise ValidationError("error scan needs a factorized tensor")
    if not N_list or not m_list:
        raise ValidationError("empty scan range")
    nu = nu or calibrate_nu(t)
    if sigma0 is None:
        sigma0 = np.zeros(t.logical_dim, dtype=complex)
        sigma0[:2] = 1 / np.sqrt(2)
    rows = []
    for n in N_list:
        for m in m_list:
            p = program_for(t, nu, i, j, phi, theta, int(n), int(m))
            out = run_program(p, sigma0, t)
            rows.append(ScanRow(int(n), int(m), p.cost, logical_error(t, p, out, sigma0)))
    return rows


def loglog_slope(rows: Sequence[ScanRow]) -> float:
    n = np.array([r.N for r in rows], float)
    e = np.array([r.error for r in rows], float)
    return float(np.polyfit(np.log(n), np.log(e), 1)[0])


def scan_csv(rows: Sequence[ScanRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SCAN_COLUMNS)
    for r in rows:
        w.writerow([r.N, r.m, r.cost, repr(r.error)])
    return buf.getvalue()


def excess_decay_rate(rows: Sequence[ScanRow], m_min: int = 5, floor: float = 1e-11) -> float | None:
    """Decay rate of the error above its large-``m`` value.

    Fits ``log|err(m) - err(m_max)|`` against ``m`` for ``m >= m_min``; points
    whose excess is below ``floor`` are dropped.  Returns ``None`` if fewer
    than two points survive.  For a junk channel with subleading eigenvalue
    ``lambda1`` the rate is ``ln|lambda1|``.
    """
    rows = sorted(rows, key=lambda r: r.m)
    ref = rows[-1].error
    pts = [(r.m, abs(r.error - ref)) for r in rows[:-1] if r.m >= m_min and abs(r.error - ref) > floor]
    if len(pts) < 2:
        return None
    ms, ex = zip(*pts)
    return decay_rate(ms, ex)
