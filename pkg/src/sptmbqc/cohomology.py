"""Finite abelian groups, characters, 2-cocycles and Heisenberg-Weyl irreps.

Phases are kept exact: a cocycle stores integer numerators over a common
denominator ``N`` (the exponent of the group), so ``omega(a, b) =
exp(2 pi i num[a, b] / N)``.  Matrices are only produced on demand.

Group elements are tuples of integers reduced modulo the factor orders and
are enumerated lexicographically; every index ``i`` used downstream (for
characters, logical operators, calibration constants) follows that order.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    NoSolution,
    NotADivisor,
    NotGenerating,
    NotMNC,
    NotSquareForm,
    ValidationError,
)

Element = tuple[int, ...]


def omega_root(d: int) -> complex:
    return np.exp(2j * np.pi / d)


def shift(d: int) -> np.ndarray:
    """Cyclic shift ``X|k> = |k-1>``, so that ``XZ = Omega ZX``."""
    return np.roll(np.eye(d, dtype=complex), -1, axis=0)


def clock(d: int) -> np.ndarray:
    return np.diag(omega_root(d) ** np.arange(d))


def weyl(x: int, z: int, d: int) -> np.ndarray:
    """Heisenberg-Weyl operator ``X^x Z^z`` on ``C^d``."""
    return np.linalg.matrix_power(shift(d), x % d) @ np.linalg.matrix_power(clock(d), z % d)


def symplectic(u: Sequence[int], v: Sequence[int], d: int) -> int:
    """Exponent ``r`` with ``W(u) W(v) = Omega^r W(v) W(u)`` for Weyl labels ``(x, z)``."""
    return (u[0] * v[1] - v[0] * u[1]) % d


@dataclass(frozen=True)
class FiniteAbelianGroup:
    """Product of cyclic groups ``Z_{n_1} x ... x Z_{n_k}``."""

    factor_orders: tuple[int, ...]

    def __post_init__(self):
        orders = tuple(int(n) for n in self.factor_orders)
        if not orders or any(n < 1 for n in orders):
            raise ValidationError(f"invalid factor orders {self.factor_orders!r}")
        object.__setattr__(self, "factor_orders", orders)

    @property
    def order(self) -> int:
        return math.prod(self.factor_orders)

    @property
    def exponent(self) -> int:
        return math.lcm(*self.factor_orders)

    @property
    def identity(self) -> Element:
        return (0,) * len(self.factor_orders)

    @cached_property
    def elements(self) -> list[Element]:
        return list(itertools.product(*(range(n) for n in self.factor_orders)))

    @cached_property
    def _index(self) -> dict[Element, int]:
        return {h: k for k, h in enumerate(self.elements)}

    def reduce(self, h: Iterable[int]) -> Element:
        return tuple(int(a) % n for a, n in zip(h, self.factor_orders))

    def index(self, h: Iterable[int]) -> int:
        return self._index[self.reduce(h)]

    def add(self, g: Element, h: Element) -> Element:
        return tuple((a + b) % n for a, b, n in zip(g, h, self.factor_orders))

    def neg(self, h: Element) -> Element:
        return tuple((-a) % n for a, n in zip(h, self.factor_orders))

    def element_order(self, h: Element) -> int:
        return math.lcm(*(n // math.gcd(a, n) for a, n in zip(h, self.factor_orders)))

    @cached_property
    def add_table(self) -> np.ndarray:
        els = np.array(self.elements, dtype=np.int64).reshape(self.order, len(self.factor_orders))
        orders = np.array(self.factor_orders)
        s = (els[:, None, :] + els[None, :, :]) % orders
        # mixed-radix index of each sum
        radix = np.cumprod((self.factor_orders[1:] + (1,))[::-1])[::-1]
        return (s * radix).sum(axis=-1)

    def __str__(self) -> str:
        return " x ".join(f"Z{n}" for n in self.factor_orders)


@dataclass(frozen=True)
class Character:
    """Linear character ``chi(h) = prod_j exp(2 pi i e_j h_j / n_j)``."""

    group: FiniteAbelianGroup
    exponents: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "exponents", self.group.reduce(self.exponents))

    def phase(self, h: Element) -> Fraction:
        s = sum(Fraction(e * a, n) for e, a, n in zip(self.exponents, h, self.group.factor_orders))
        return s - math.floor(s)

    def __call__(self, h: Element) -> complex:
        return complex(np.exp(2j * np.pi * float(self.phase(h))))

    def numerators(self) -> np.ndarray:
        """Phases over all elements as integers modulo the group exponent."""
        n = self.group.exponent
        return np.array([int(self.phase(h) * n) for h in self.group.elements], dtype=np.int64)

    def __mul__(self, other: "Character") -> "Character":
        return Character(self.group, tuple(a + b for a, b in zip(self.exponents, other.exponents)))

    @property
    def is_trivial(self) -> bool:
        return not any(self.exponents)


def all_characters(group: FiniteAbelianGroup, include_trivial: bool = True) -> list[Character]:
    """Characters in lexicographic exponent order."""
    chars = [Character(group, e) for e in group.elements]
    if not include_trivial:
        chars = [c for c in chars if not c.is_trivial]
    return chars


@dataclass(frozen=True, eq=False)
class Cocycle:
    """2-cocycle ``omega(a, b) = exp(2 pi i numerators[a, b] / denominator)``."""

    group: FiniteAbelianGroup
    numerators: np.ndarray
    denominator: int

    def __post_init__(self):
        num = np.asarray(self.numerators, dtype=np.int64) % self.denominator
        if num.shape != (self.group.order, self.group.order):
            raise ValidationError("cocycle table has the wrong shape")
        num.setflags(write=False)
        object.__setattr__(self, "numerators", num)

    def phase(self, a: Element, b: Element) -> Fraction:
        g = self.group
        return Fraction(int(self.numerators[g.index(a), g.index(b)]), self.denominator)

    def __call__(self, a: Element, b: Element) -> complex:
        return complex(np.exp(2j * np.pi * float(self.phase(a, b))))

    def satisfies_cocycle_condition(self) -> bool:
        """Exhaustive check of ``w(a,b) w(a+b,c) = w(b,c) w(a,b+c)``."""
        w, add = self.numerators, self.group.add_table
        lhs = w[:, :, None] + w[add][:, :, :]
        rhs = w[None, :, :] + w[np.arange(len(w))[:, None, None], add[None, :, :]]
        return bool(np.all((lhs - rhs) % self.denominator == 0))

    @cached_property
    def commutator_numerators(self) -> np.ndarray:
        """``beta(a, b) = w(a, b) / w(b, a)`` as integers mod ``denominator``."""
        return (self.numerators - self.numerators.T) % self.denominator

    def commutation_phase(self, a: Element, b: Element) -> complex:
        g = self.group
        n = self.commutator_numerators[g.index(a), g.index(b)]
        return complex(np.exp(2j * np.pi * n / self.denominator))

    def __mul__(self, other: "Cocycle") -> "Cocycle":
        if other.group != self.group:
            raise ValidationError("cocycles live on different groups")
        n = math.lcm(self.denominator, other.denominator)
        num = self.numerators * (n // self.denominator) + other.numerators * (n // other.denominator)
        return Cocycle(self.group, num, n)

    @classmethod
    def from_function(cls, group: FiniteAbelianGroup, fn, denominator: int | None = None) -> "Cocycle":
        """Build from ``fn(a, b) -> Fraction`` (phase in units of ``2 pi``)."""
        n = denominator or group.exponent
        els = group.elements
        table = np.zeros((len(els), len(els)), dtype=np.int64)
        for i, a in enumerate(els):
            for j, b in enumerate(els):
                f = Fraction(fn(a, b)) * n
                if f.denominator != 1:
                    raise ValidationError(f"phase {fn(a, b)} not representable over denominator {n}")
                table[i, j] = int(f)
        return cls(group, table, n)


def trivial_cocycle(group: FiniteAbelianGroup) -> Cocycle:
    return Cocycle(group, np.zeros((group.order, group.order), dtype=np.int64), 1)


def _pairs(group: FiniteAbelianGroup) -> list[int]:
    orders = group.factor_orders
    if len(orders) % 2 or any(orders[2 * k] != orders[2 * k + 1] for k in range(len(orders) // 2)):
        raise NotSquareForm(
            f"group {group} is not given as consecutive pairs Z_q x Z_q; "
            "list factor orders as q1,q1,q2,q2,..."
        )
    return [orders[2 * k] for k in range(len(orders) // 2)]


def standard_cocycle(group: FiniteAbelianGroup, scales: Sequence[int] | None = None) -> Cocycle:
    """Product of Weyl cocycles ``Omega_q^{s b c}`` over the factor pairs.

    An element ``(a1, b1, a2, b2, ...)`` is represented by
    ``(x) Z^{s a} X^b``; ``scales`` defaults to all ones.
    """
    qs = _pairs(group)
    scales = [1] * len(qs) if scales is None else list(scales)
    n = group.exponent

    def fn(h, g):
        return sum(Fraction(s * h[2 * k + 1] * g[2 * k], q) for k, (q, s) in enumerate(zip(qs, scales)))

    return Cocycle.from_function(group, fn, n)


def weyl_cocycle(d: int) -> Cocycle:
    """Standard maximally non-commutative cocycle on ``Z_d x Z_d``."""
    if d < 2:
        raise ValidationError("D must be at least 2")
    return standard_cocycle(FiniteAbelianGroup((d, d)))


def is_maximally_noncommutative(group: FiniteAbelianGroup, omega: Cocycle) -> bool:
    """True iff only the identity commutes (projectively) with every element."""
    beta = omega.commutator_numerators
    central = np.all(beta == 0, axis=1)
    return int(central.sum()) == 1


def _divide_mod_one(x: Fraction, n: int) -> Fraction:
    y = x / n
    return y - math.floor(y)


def _solve_coboundary(group: FiniteAbelianGroup, mu: np.ndarray, denom: int) -> list[Fraction]:
    """Find ``f`` with ``f(a) + f(b) - f(a + b) = mu(a, b)`` mod 1 for symmetric ``mu``."""
    els = group.elements
    idx = group.index

    def m(a, b):
        return Fraction(int(mu[idx(a), idx(b)]), denom)

    f: dict[Element, Fraction] = {group.identity: m(group.identity, group.identity)}
    k_dim = len(group.factor_orders)
    for k, n in enumerate(group.factor_orders):
        e = tuple(1 if j == k else 0 for j in range(k_dim))
        if n == 1:
            continue
        tot = sum((m(tuple(j * c for c in e), e) for j in range(n)), Fraction(0))
        f[group.reduce(e)] = _divide_mod_one(tot, n)
        prev = group.reduce(e)
        for j in range(2, n):
            cur = group.reduce(tuple(j * c for c in e))
            val = f[prev] + f[group.reduce(e)] - m(prev, group.reduce(e))
            f[cur] = val - math.floor(val)
            prev = cur
    for h in els:
        if h in f:
            continue
        last = max(j for j, a in enumerate(h) if a)
        head = tuple(a if j != last else 0 for j, a in enumerate(h))
        tail = tuple(a if j == last else 0 for j, a in enumerate(h))
        val = f[head] + f[tail] - m(head, tail)
        f[h] = val - math.floor(val)
    return [f[h] for h in els]


@dataclass(frozen=True, eq=False)
class ProjectiveIrrep:
    """The unique irrep ``h -> V(h)`` of a maximally non-commutative cocycle.

    ``V(h) = exp(2 pi i coboundary[h]) * (x)_k Z^{s_k a_k} X^{b_k}``; the
    scalar coboundary converts the block-standard cocycle into the one the
    caller supplied.
    """

    group: FiniteAbelianGroup
    cocycle: Cocycle
    blocks: tuple[tuple[int, int], ...]  # (q, scale) per factor pair
    coboundary: tuple[Fraction, ...]

    @property
    def dim(self) -> int:
        return math.prod(q for q, _ in self.blocks)

    @cached_property
    def _matrices(self) -> list[np.ndarray]:
        out = []
        for h, f in zip(self.group.elements, self.coboundary):
            m = np.ones((1, 1), dtype=complex)
            for k, (q, s) in enumerate(self.blocks):
                a, b = h[2 * k], h[2 * k + 1]
                blk = np.linalg.matrix_power(clock(q), (s * a) % q) @ np.linalg.matrix_power(shift(q), b)
                m = np.kron(m, blk)
            m = np.exp(2j * np.pi * float(f)) * m
            m.setflags(write=False)
            out.append(m)
        return out

    def __call__(self, h: Element) -> np.ndarray:
        return self._matrices[self.group.index(h)]

    def weyl_exponents(self, h: Element) -> tuple[int, int] | None:
        """Label ``(x, z)`` with ``V(h) ~ X^x Z^z``; only for a single factor pair."""
        if len(self.blocks) != 1:
            return None
        q, s = self.blocks[0]
        a, b = self.group.reduce(h)
        return (b % q, (s * a) % q)


def projective_irrep(group: FiniteAbelianGroup, omega: Cocycle) -> ProjectiveIrrep:
    if omega.group != group:
        raise ValidationError("cocycle is defined on a different group")
    if not is_maximally_noncommutative(group, omega):
        raise NotMNC(f"cocycle on {group} is not maximally non-commutative")
    qs = _pairs(group)
    n = omega.denominator
    beta = omega.commutator_numerators
    scales = []
    for k, q in enumerate(qs):
        ea = tuple(1 if j == 2 * k else 0 for j in range(len(group.factor_orders)))
        eb = tuple(1 if j == 2 * k + 1 else 0 for j in range(len(group.factor_orders)))
        val = Fraction(int(beta[group.index(ea), group.index(eb)]), n) * q
        if val.denominator != 1:
            raise NotSquareForm("commutation phases do not match the factor pairs")
        s = (-int(val)) % q
        if math.gcd(s, q) != 1:
            raise NotSquareForm(f"pair {k} (Z{q} x Z{q}) is not maximally non-commutative by itself")
        scales.append(s)
    std = standard_cocycle(group, scales)
    nn = math.lcm(n, std.denominator)
    w = omega.numerators * (nn // n)
    ws = std.numerators * (nn // std.denominator)
    if not np.array_equal((w - w.T) % nn, (ws - ws.T) % nn):
        raise NotSquareForm(
            "commutation form mixes factor pairs; re-express the group so each "
            "pair Z_q x Z_q carries its own Weyl structure"
        )
    mu = (w - ws) % nn
    f = _solve_coboundary(group, mu, nn)
    return ProjectiveIrrep(group, omega, tuple(zip(qs, scales)), tuple(f))


@dataclass(frozen=True, eq=False)
class LogicalOps:
    """Logical operators ``C^i`` with their labels.

    ``weyl_exponents[i] = (x, z)`` means ``C^i ~ X^x Z^z`` on ``C^D``; it is
    ``None`` when ``D`` mixes several factor pairs.
    """

    dim: int
    matrices: tuple[np.ndarray, ...]
    weyl_exponents: tuple[tuple[int, int], ...] | None = None
    characters: tuple[Character, ...] | None = None
    elements: tuple[Element, ...] | None = None
    irrep: ProjectiveIrrep | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.matrices)

    def commutation_exponent(self, i: int, j: int) -> int:
        return symplectic(self.weyl_exponents[i], self.weyl_exponents[j], self.dim)


def solve_logical_element(irrep: ProjectiveIrrep, chi: Character) -> Element:
    """Unique ``h`` with ``V(h) V(g) = chi(g) V(g) V(h)`` for all ``g``."""
    group = irrep.group
    if chi.group != group:
        raise ValidationError("character is defined on a different group")
    n = math.lcm(irrep.cocycle.denominator, group.exponent)
    beta = irrep.cocycle.commutator_numerators * (n // irrep.cocycle.denominator)
    target = chi.numerators() * (n // group.exponent)
    hits = np.nonzero(np.all(beta % n == target % n, axis=1))[0]
    if len(hits) != 1:
        raise NoSolution(f"character {chi.exponents} has {len(hits)} solutions; cocycle not MNC?")
    return group.elements[int(hits[0])]


def logical_ops_for_rep(irrep: ProjectiveIrrep, chars: Sequence[Character]) -> LogicalOps:
    elements = tuple(solve_logical_element(irrep, c) for c in chars)
    mats = tuple(irrep(h) for h in elements)
    if len(irrep.blocks) == 1:
        labels = tuple(irrep.weyl_exponents(h) for h in elements)
    else:
        labels = None
    return LogicalOps(irrep.dim, mats, labels, tuple(chars), elements, irrep)


def weyl_ops(exponents: Sequence[tuple[int, int]], d: int) -> LogicalOps:
    """Logical operators ``X^x Z^z`` for the given labels."""
    labels = tuple((x % d, z % d) for x, z in exponents)
    return LogicalOps(d, tuple(weyl(x, z, d) for x, z in labels), labels)


@dataclass(frozen=True)
class CanonicalForm:
    r: int
    ops: LogicalOps
    transform: np.ndarray  # exponent map (x, z) -> transform @ (x, z) mod D
    pair: tuple[int, int]
    reference: int


def _inverse_2x2_mod(m: np.ndarray, d: int) -> np.ndarray:
    det = int(round(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])) % d
    inv_det = pow(det, -1, d)
    adj = np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]], dtype=np.int64)
    return (inv_det * adj) % d


def generated_subgroup(vectors: Iterable[tuple[int, int]], d: int) -> set[tuple[int, int]]:
    seen = {(0, 0)}
    frontier = [(0, 0)]
    gens = [tuple(v) for v in vectors]
    while frontier:
        nxt = []
        for u in frontier:
            for g in gens:
                w = ((u[0] + g[0]) % d, (u[1] + g[1]) % d)
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
        frontier = nxt
    return seen


def canonicalize_generators(ops: LogicalOps, p: int, n: int, reference: int = 0) -> CanonicalForm:
    """Bring Weyl-labelled logical operators into the normal form ``{I, X, Z^r}``.

    Gauge-fixes ``C^i -> C^{ref dagger} C^i``, picks the first pair whose
    commutation exponent ``r`` is a unit mod ``p``, and applies the
    determinant-one exponent map sending that pair to ``X`` and ``Z^r``.
    """
    d = p**n
    if ops.dim != d:
        raise ValidationError(f"ops act on dimension {ops.dim}, expected {d}")
    if ops.weyl_exponents is None:
        raise ValidationError("canonicalization needs Weyl labels (single factor pair)")
    x0, z0 = ops.weyl_exponents[reference]
    gauged = [((x - x0) % d, (z - z0) % d) for x, z in ops.weyl_exponents]
    if len(generated_subgroup(gauged, d)) != d * d:
        raise NotGenerating("gauge-fixed exponents do not generate Z_D x Z_D")
    pair = None
    for a, b in itertools.combinations(range(len(gauged)), 2):
        r = symplectic(gauged[a], gauged[b], d)
        if r % p:
            pair, rr = (a, b), r
            break
    if pair is None:
        raise NotGenerating(f"every commutation exponent is divisible by {p}")
    a, b = pair
    basis = np.array([gauged[a], gauged[b]], dtype=np.int64).T  # columns e_a, e_b
    target = np.array([[1, 0], [0, rr]], dtype=np.int64)
    transform = (target @ _inverse_2x2_mod(basis, d)) % d
    new = [tuple(int(c) for c in (transform @ np.array(v)) % d) for v in gauged]
    canon = weyl_ops(new, d)
    canon = LogicalOps(d, canon.matrices, canon.weyl_exponents, ops.characters, ops.elements)
    return CanonicalForm(rr, canon, transform, pair, reference)


@dataclass(frozen=True, eq=False)
class Restriction:
    group: FiniteAbelianGroup
    cocycle: Cocycle
    embedding: tuple[Element, ...]  # images of the subgroup's generators
    parent: FiniteAbelianGroup
    host_order: int  # q = p^m of the hosting primary factor

    def embed(self, x: Element) -> Element:
        acc = self.parent.identity
        for c, g in zip(x, self.embedding):
            acc = self.parent.reduce(a + c * b for a, b in zip(acc, g))
        return acc

    def restrict_character(self, chi: Character) -> Character:
        exps = []
        for g, n in zip(self.embedding, self.group.factor_orders):
            ph = chi.phase(g) * n
            exps.append(int(ph) % n)
        return Character(self.group, tuple(exps))


def restrict_cocycle(group: FiniteAbelianGroup, omega: Cocycle, generators: Sequence[Element]) -> Restriction:
    """Restrict to the subgroup generated by independent ``generators``."""
    gens = [group.reduce(g) for g in generators]
    orders = tuple(group.element_order(g) for g in gens)
    sub = FiniteAbelianGroup(orders)
    if len({tuple(_combine(group, gens, x)) for x in sub.elements}) != sub.order:
        raise ValidationError("generators are not independent")
    images = [group.index(_combine(group, gens, x)) for x in sub.elements]
    table = omega.numerators[np.ix_(images, images)]
    return Restriction(sub, Cocycle(sub, table, omega.denominator), tuple(gens), group, max(orders))


def _combine(group, gens, coeffs):
    acc = group.identity
    for c, g in zip(coeffs, gens):
        acc = group.reduce(a + c * b for a, b in zip(acc, g))
    return acc


def _valuation(q: int, p: int) -> int:
    e = 0
    while q % p == 0:
        q //= p
        e += 1
    return e


def primary_blocks(group: FiniteAbelianGroup) -> list[tuple[int, int, int]]:
    """``(pair index, p, m)`` for every prime-power factor ``Z_{p^m}^2``."""
    out = []
    for k, q in enumerate(_pairs(group)):
        rest, p = q, 2
        while rest > 1:
            if rest % p == 0:
                m = _valuation(rest, p)
                out.append((k, p, m))
                rest //= p**m
            p += 1
    return out


def restrict_to_prime_power(group: FiniteAbelianGroup, omega: Cocycle, p: int, n: int = 1) -> Restriction:
    """Restrict to the primary factor ``Z_{p^m} x Z_{p^m}`` (``m >= n``) of ``group``.

    The first factor pair whose ``p``-part has exponent at least ``n`` is
    used.  When ``m > n`` the returned block carries ``su(p^m)``, which
    contains ``su(p^n)``.
    """
    qs = _pairs(group)
    root = math.prod(qs)
    if n < 1 or root % (p**n):
        raise NotADivisor(f"{p}^{n} does not divide sqrt|H| = {root}")
    for k, pp, m in primary_blocks(group):
        if pp == p and m >= n:
            q = qs[k]
            u = q // p**m
            dim = len(group.factor_orders)
            ga = tuple(u if j == 2 * k else 0 for j in range(dim))
            gb = tuple(u if j == 2 * k + 1 else 0 for j in range(dim))
            res = restrict_cocycle(group, omega, [ga, gb])
            return Restriction(res.group, res.cocycle, res.embedding, group, p**m)
    raise NotADivisor(
        f"{p}^{n} divides sqrt|H| = {root} but no single factor pair hosts Z_{p}^{n} x Z_{p}^{n}"
    )


def weyl_setup(d: int) -> tuple[FiniteAbelianGroup, Cocycle, ProjectiveIrrep]:
    group = FiniteAbelianGroup((d, d))
    omega = weyl_cocycle(d)
    return group, omega, projective_irrep(group, omega)
