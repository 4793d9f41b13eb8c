"""Reachable gate algebras: generator sets, the exponent grid, and the closure oracle.

Each pair ``(i, j)`` of logical operators contributes the two-real-dimensional
family ``alpha P - alpha^* P^dagger`` with ``P = C^{i dagger} C^j``.  When the
``C^i`` are Heisenberg-Weyl operators, ``P ~ X^a Z^b`` and the family is the
grid point ``(a, b)`` of a ``D x D`` torus.  Commutators with the three
families ``(1, 0)``, ``(0, r)`` and ``(D-1, r)`` move between grid points, and
marking every nonzero point certifies that the generated Lie algebra is
``su(D)``.  :func:`brute_force_closure` computes the same algebra numerically.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import cohomology as coh
from .errors import InconsistentVerdict, NotGenerating, NotMNC, ValidationError
from .linalg import CLOSURE_TOL, dag, real_span_closure

Point = tuple[int, int]
MOVES = ("X", "Z", "Y")
MAX_ORACLE_DIM = 16
STRATEGIES = ("saturate", "rowcol")
STRATEGY_ALIASES = {"paper": "rowcol"}


# ---------------------------------------------------------------- generator sets


@dataclass(frozen=True)
class GeneratorSet:
    D: int
    pairs: tuple[tuple[int, int], ...]
    exponents: tuple[Point, ...]


def generator_set(ops: coh.LogicalOps, present: Sequence[int]) -> GeneratorSet:
    """Unordered pairs of present labels and the Weyl exponent of ``C^{i dag} C^j``."""
    if ops.weyl_exponents is None:
        raise ValidationError("generator sets need Weyl-labelled logical operators")
    idx = sorted(set(int(k) for k in present))
    if idx and not (0 <= idx[0] and idx[-1] < len(ops)):
        raise ValidationError(f"present indices {idx} out of range for {len(ops)} operators")
    d = ops.dim
    pairs, exps = [], []
    for i, j in itertools.combinations(idx, 2):
        (xi, zi), (xj, zj) = ops.weyl_exponents[i], ops.weyl_exponents[j]
        pairs.append((i, j))
        exps.append(((xj - xi) % d, (zj - zi) % d))
    return GeneratorSet(d, tuple(pairs), tuple(exps))


# ---------------------------------------------------------------- grid


def hermitian_points(d: int) -> frozenset[Point]:
    if d % 2:
        return frozenset()
    h = d // 2
    return frozenset({(h, 0), (0, h), (h, h)})


@dataclass(frozen=True)
class Move:
    kind: str
    at: Point
    marked: tuple[Point, ...]
    hermitian: bool = False


@dataclass(frozen=True, eq=False)
class GridState:
    """Marks on the exponent torus; ``marked[i, j]`` covers ``alpha X^i Z^j - h.c.``."""

    D: int
    r: int
    marked: np.ndarray
    move_log: tuple[Move, ...] = ()
    milestones: tuple[tuple[str, frozenset[Point]], ...] = ()

    def __post_init__(self):
        m = np.array(self.marked, dtype=bool)
        if m.shape != (self.D, self.D):
            raise ValidationError(f"grid must be {self.D} x {self.D}")
        if m[0, 0]:
            raise ValidationError("the identity point (0, 0) cannot be marked")
        m.setflags(write=False)
        object.__setattr__(self, "marked", m)

    def is_marked(self, p: Point) -> bool:
        return bool(self.marked[p[0] % self.D, p[1] % self.D])

    @property
    def points(self) -> frozenset[Point]:
        return frozenset((int(i), int(j)) for i, j in zip(*np.nonzero(self.marked)))

    @property
    def count(self) -> int:
        return int(self.marked.sum())

    @property
    def complete(self) -> bool:
        return self.count == self.D * self.D - 1

    def render(self) -> str:
        """Rows ``j = D-1 .. 0`` top to bottom, columns ``i = 0 .. D-1``.

        ``#`` marked, ``H`` an unmarked hermitian point, ``.`` unmarked.
        """
        herm = hermitian_points(self.D)
        lines = []
        for j in reversed(range(self.D)):
            row = []
            for i in range(self.D):
                row.append("#" if self.marked[i, j] else "H" if (i, j) in herm else ".")
            lines.append(" ".join(row))
        return "\n".join(lines)


def _with_partners(d: int, pts) -> set[Point]:
    out = set()
    for i, j in pts:
        p = (i % d, j % d)
        out.add(p)
        out.add(((-p[0]) % d, (-p[1]) % d))
    out.discard((0, 0))
    return out


def grid_init(gs: GeneratorSet, r: int = 1) -> GridState:
    m = np.zeros((gs.D, gs.D), dtype=bool)
    for p in _with_partners(gs.D, gs.exponents):
        m[p] = True
    return GridState(gs.D, r % gs.D if gs.D > 1 else 0, m)


def canonical_triple(d: int, r: int) -> GeneratorSet:
    """Generator set with exactly the points ``(1, 0), (0, r), (D-1, r)``."""
    return generator_set(coh.weyl_ops([(0, 0), (1, 0), (0, r)], d), [0, 1, 2])


def inspected(d: int, r: int, kind: str, at: Point) -> tuple[Point, Point, bool]:
    """The two inspected points of a move and whether the move is allowed."""
    i, j = at
    if kind == "X":
        a, b, ok = (i + 1, j), (i - 1, j), j % d != 0
    elif kind == "Z":
        a, b, ok = (i, j + r), (i, j - r), i % d != 0
    elif kind == "Y":
        a, b, ok = (i - 1, j + r), (i + 1, j - r), (i * r + j) % d != 0
    else:
        raise ValidationError(f"unknown move {kind!r}")
    return (a[0] % d, a[1] % d), (b[0] % d, b[1] % d), ok


class _NoOp:
    def __repr__(self) -> str:
        return "NoOp"

    def __bool__(self) -> bool:
        return False


NoOp = _NoOp()


def apply_move(g: GridState, kind: str, at: Point):
    """One basic move from a marked point; returns a new state or ``NoOp``."""
    d = g.D
    at = (at[0] % d, at[1] % d)
    if not g.is_marked(at):
        return NoOp
    a, b, ok = inspected(d, g.r, kind, at)
    if not ok:
        return NoOp
    herm = hermitian_points(d)
    if a in herm or b in herm:
        if d % 2:
            raise InconsistentVerdict("hermitian rule fired for odd D")
        new = [p for p in (a, b) if not g.is_marked(p)]
        rule = True
    else:
        ma, mb = g.is_marked(a), g.is_marked(b)
        if ma == mb:
            return NoOp
        new = [b if ma else a]
        rule = False
    add = _with_partners(d, new) - g.points
    if not add:
        return NoOp
    m = g.marked.copy()
    for p in add:
        m[p] = True
    move = Move(kind, at, tuple(sorted(add)), rule)
    return replace(g, marked=m, move_log=g.move_log + (move,))


def _saturate(g: GridState, kinds=MOVES) -> GridState:
    changed = True
    while changed:
        changed = False
        for i in range(g.D):
            for j in range(g.D):
                for k in kinds:
                    h = apply_move(g, k, (i, j))
                    if h is not NoOp:
                        g, changed = h, True
    return g


def _fill_line(g: GridState, kind: str, pts: Sequence[Point]) -> GridState:
    changed = True
    while changed:
        changed = False
        for p in pts:
            h = apply_move(g, kind, p)
            if h is not NoOp:
                g, changed = h, True
    return g


def _snap(g: GridState, name: str) -> GridState:
    return replace(g, milestones=g.milestones + ((name, g.points),))


def _rowcol_schedule(g: GridState) -> GridState:
    """Row/column schedule from the canonical triple, then the hermitian unlock."""
    d, r = g.D, g.r
    g = _snap(g, "initial")
    h = apply_move(g, "X", (0, r))
    g = h or g

    def rowcol(g, c):
        g = _fill_line(g, "X", [(i, c * r % d) for i in range(d)])
        return _fill_line(g, "Z", [(c % d, k * r % d) for k in range(d)])

    g = _snap(rowcol(g, 1), "rowcol 1")
    for c in range(3, d, 2):
        for at in ((c - 1, r), (1, (c - 1) * r)):
            h = apply_move(g, "Y", at)
            g = h or g
        g = _snap(rowcol(g, c), f"rowcol {c}")
    if d % 2 == 0 and d > 2:
        h = apply_move(g, "X", (1, d // 2 * r % d))
        g = _snap(h or g, "hermitian")
    return _snap(_saturate(g), "final")


def fill_grid(g: GridState, r: int | None = None, strategy: str = "saturate") -> tuple[bool, GridState]:
    """Mark every reachable point.

    ``saturate`` sweeps marked points in row-major order, moves in X, Z, Y
    order, until nothing changes.  ``rowcol`` (alias ``paper``) first runs the row/column
    schedule (recording milestones) and then saturates.
    """
    if r is not None:
        g = replace(g, r=r % g.D)
    strategy = STRATEGY_ALIASES.get(strategy, strategy)
    if strategy == "saturate":
        g = _saturate(g)
    elif strategy == "rowcol":
        g = _rowcol_schedule(g)
    else:
        raise ValidationError(f"unknown strategy {strategy!r}")
    return g.complete, g


def verify_certificate(initial: GridState, final: GridState) -> bool:
    """Replay ``final.move_log`` from ``initial``; True if every move is legal and reproduces the marks."""
    g = replace(initial, move_log=())
    for mv in final.move_log[len(initial.move_log):]:
        h = apply_move(g, mv.kind, mv.at)
        if h is NoOp or h.move_log[-1] != mv:
            return False
        g = h
    return g.points == final.points


# ---------------------------------------------------------------- oracle


@dataclass(frozen=True, eq=False)
class ClosureReport:
    dim: int
    basis: list[np.ndarray] = field(repr=False)
    D: int
    contains_su_D: bool


def oracle_generators(ops: coh.LogicalOps, present: Sequence[int]) -> list[np.ndarray]:
    """``P - P^dag`` and ``i (P + P^dag)`` for each pair, traceless parts."""
    idx = sorted(set(int(k) for k in present))
    d = ops.dim
    eye = np.eye(d)
    out = []
    for i, j in itertools.combinations(idx, 2):
        p = dag(ops.matrices[i]) @ ops.matrices[j]
        for g in (p - dag(p), 1j * (p + dag(p))):
            g = g - np.trace(g) / d * eye
            if np.linalg.norm(g) > CLOSURE_TOL:
                out.append(g)
    return out


def brute_force_closure(ops: coh.LogicalOps, present: Sequence[int], tol: float = CLOSURE_TOL) -> ClosureReport:
    if len(set(present)) < 2:
        raise ValidationError("closure needs at least two present characters")
    dim, basis = real_span_closure(oracle_generators(ops, present), tol)
    return ClosureReport(dim, basis, ops.dim, dim == ops.dim**2 - 1)


# ---------------------------------------------------------------- reports


def blocked_characters(chars: Sequence[coh.Character], b: int) -> list[coh.Character]:
    """Distinct characters of ``b``-site words, in first-seen order."""
    if b < 1:
        raise ValidationError("blocking length must be >= 1")
    out: dict[tuple, coh.Character] = {}
    for word in itertools.product(chars, repeat=b):
        c = word[0]
        for x in word[1:]:
            c = c * x
        out.setdefault(tuple(c.numerators()), c)
    return list(out.values())


def _dedupe(chars):
    out: dict[tuple, coh.Character] = {}
    for c in chars:
        out.setdefault(tuple(c.numerators()), c)
    return list(out.values())


@dataclass
class BlockVerdict:
    p: int
    m: int
    D: int
    characters: list[tuple[int, ...]]
    r: int | None
    grid_complete: bool | None
    oracle_dim: int
    contains_su: bool
    agree: bool
    grid: GridState | None = field(default=None, repr=False)
    note: str = ""

    def as_dict(self) -> dict:
        out = {k: v for k, v in self.__dict__.items() if k != "grid"}
        if self.grid is not None:
            out["grid_art"] = self.grid.render()
            out["move_log"] = [[mv.kind, list(mv.at), [list(p) for p in mv.marked], mv.hermitian]
                               for mv in self.grid.move_log]
        return out


@dataclass
class ReachabilityReport:
    group: tuple[int, ...]
    D: int
    block: int
    characters: list[tuple[int, ...]]
    oracle_dim: int | None
    contains_su_D: bool | None
    blocks: list[BlockVerdict]
    verdict: str

    def as_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != "blocks"}
        d["blocks"] = [b.as_dict() for b in self.blocks]
        return d

    def to_json(self, **extra) -> str:
        return json.dumps({**self.as_dict(), **extra}, indent=2, default=_json_default)

    def text(self) -> str:
        lines = [f"H = {'x'.join(f'Z{q}' for q in self.group)}, D = {self.D}, blocking b = {self.block}",
                 f"verdict: {self.verdict}"]
        for bv in self.blocks:
            g = "-" if bv.grid_complete is None else ("\u2713" if bv.grid_complete else "\u2717")
            o = "\u2713" if bv.contains_su else "\u2717"
            alg = f"su({bv.D})" if bv.contains_su else f"dim {bv.oracle_dim}"
            lines.append(f"  p^m = {bv.p}^{bv.m}: {alg}, grid {g} oracle {o} "
                         f"(oracle dim {bv.oracle_dim}/{bv.D**2 - 1}{', agree' if bv.agree else ''})")
            if bv.grid is not None:
                lines.extend("    " + ln for ln in bv.grid.render().splitlines())
        return "\n".join(lines)


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    raise TypeError(f"not serializable: {type(o)}")


def _closure_dim(ops: coh.LogicalOps, present: Sequence[int], tol: float) -> int:
    if len(set(present)) < 2:
        return 0
    return brute_force_closure(ops, present, tol).dim


def _block_verdict(res: coh.Restriction, chars: Sequence[coh.Character], p: int, m: int,
                   strategy: str, tol: float) -> BlockVerdict:
    sub = _dedupe(res.restrict_character(c) for c in chars)
    irrep = coh.projective_irrep(res.group, res.cocycle)
    ops = coh.logical_ops_for_rep(irrep, sub)
    d = irrep.dim
    idx = list(range(len(sub)))
    dim = _closure_dim(ops, idx, tol)
    full = dim == d * d - 1
    r, complete, grid, note = None, None, None, ""
    if len(sub) < 2:
        return BlockVerdict(p, m, d, [tuple(int(x) for x in c.exponents) for c in sub], None, None, dim,
                            full, True, None, "grid abstains: fewer than two characters")
    try:
        canon = coh.canonicalize_generators(ops, p, m)
    except NotGenerating as e:
        note = f"grid abstains: {e}"
    else:
        r = canon.r
        gs = generator_set(canon.ops, idx)
        complete, grid = fill_grid(grid_init(gs, r), strategy=strategy)
    if complete is not None and complete != full:
        raise InconsistentVerdict(
            f"block {p}^{m}: grid says {'complete' if complete else 'incomplete'} "
            f"but the oracle closure has dimension {dim} of {d * d - 1}"
        )
    return BlockVerdict(p, m, d, [tuple(int(x) for x in c.exponents) for c in sub], r, complete, dim, full,
                        complete is None or complete == full, grid, note)


def reachability_report(group: coh.FiniteAbelianGroup, omega: coh.Cocycle,
                        present: Sequence[coh.Character] | None = None, block: int = 1,
                        strategy: str = "saturate", tol: float = CLOSURE_TOL) -> ReachabilityReport:
    """Grid and oracle verdicts for every prime-power block of ``group``.

    ``present`` defaults to all nontrivial characters.  With ``block > 1``
    the characters of ``block``-site words are used instead.
    """
    if not coh.is_maximally_noncommutative(group, omega):
        raise NotMNC("cocycle is not maximally non-commutative")
    if present is None:
        present = coh.all_characters(group, include_trivial=False)
    chars = blocked_characters(list(present), block) if block > 1 else _dedupe(present)
    irrep = coh.projective_irrep(group, omega)
    d = irrep.dim

    oracle_dim = contains = None
    if d <= MAX_ORACLE_DIM:
        ops = coh.logical_ops_for_rep(irrep, chars)
        oracle_dim = _closure_dim(ops, range(len(chars)), tol)
        contains = oracle_dim == d * d - 1

    blocks = []
    for k, p, m in coh.primary_blocks(group):
        res = coh.restrict_to_prime_power(group, omega, p, m)
        blocks.append(_block_verdict(res, chars, p, m, strategy, tol))

    if contains is None:
        contains = all(b.contains_su for b in blocks) and len(blocks) == 1
    if contains:
        verdict = f"su({d})"
    elif oracle_dim is not None:
        verdict = f"sub-closure of dimension {oracle_dim}"
    else:
        verdict = "per-block: " + ", ".join(
            f"su({b.D})" if b.contains_su else f"dim {b.oracle_dim}" for b in blocks)
    if block > 1:
        verdict += f" after blocking b={block}"
    return ReachabilityReport(tuple(group.factor_orders), d, block,
                              [tuple(int(x) for x in c.exponents) for c in chars],
                              oracle_dim, contains, blocks, verdict)
