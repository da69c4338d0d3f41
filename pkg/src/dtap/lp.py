"""The covering LP  min c.x  s.t.  M x >= 1, x >= 0, solved exactly.

The solver is a dense two-phase tableau simplex over ``gmpy2.mpq``
rationals. Pricing is Dantzig's rule with smallest-index tie breaking; after
a run of degenerate pivots it switches to Bland's rule until the objective
moves again, which rules out cycling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

import gmpy2
from gmpy2 import mpq

from .errors import Infeasible, NotIntegral
from .instance import Link, RootedInstance, fmt_fraction

_ZERO = mpq(0)


def _to_fraction(q) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


def _to_mpq(v) -> "gmpy2.mpq":
    if isinstance(v, Fraction):
        return mpq(v.numerator, v.denominator)
    return mpq(v)


# ---------------------------------------------------------------------------
# generic exact simplex

def _pivot(T, obj, basis, r, e):
    prow = T[r]
    piv = prow[e]
    if piv != 1:
        prow = [a / piv for a in prow]
        T[r] = prow
    nz = [(j, a) for j, a in enumerate(prow) if a]
    for i, row in enumerate(T):
        if i != r:
            f = row[e]
            if f:
                for j, a in nz:
                    row[j] -= f * a
    f = obj[e]
    if f:
        for j, a in nz:
            obj[j] -= f * a
    basis[r] = e


def _iterate(T, obj, basis, allowed, max_pivots):
    """Run simplex pivots on tableau T until optimal. Returns False if unbounded."""
    rhs = len(obj) - 1
    degenerate = 0
    bland = False
    pivots = 0
    while True:
        e = -1
        best = _ZERO
        for j in allowed:
            d = obj[j]
            if d < 0:
                if bland:
                    e = j
                    break
                if d < best:
                    best, e = d, j
        if e < 0:
            return True
        r = -1
        ratio = None
        for i, row in enumerate(T):
            a = row[e]
            if a > 0:
                q = row[rhs] / a
                if ratio is None or q < ratio or (q == ratio and basis[i] < basis[r]):
                    ratio, r = q, i
        if r < 0:
            return False
        if ratio == 0:
            degenerate += 1
            if degenerate > len(T):
                bland = True
        else:
            degenerate = 0
            bland = False
        _pivot(T, obj, basis, r, e)
        pivots += 1
        if pivots > max_pivots:
            raise RuntimeError("simplex pivot limit reached")


def lp_minimize(c, rows, rhs, max_pivots=100000):
    """Exactly solve  min c.x  s.t.  rows.x >= rhs, x >= 0.

    ``rows`` is a list of dense coefficient lists. Returns the list of
    optimal values of a basic optimal solution (as Fractions), or raises
    Infeasible.
    """
    n = len(c)
    m = len(rows)
    c = [_to_mpq(v) for v in c]
    arts = [i for i in range(m) if _to_mpq(rhs[i]) > 0]
    art_col = {i: n + m + k for k, i in enumerate(arts)}
    N = n + m + len(arts)
    T = []
    basis = []
    for i in range(m):
        a = [_to_mpq(v) for v in rows[i]]
        b = _to_mpq(rhs[i])
        row = [_ZERO] * (N + 1)
        if i in art_col:
            row[:n] = a
            row[n + i] = mpq(-1)
            row[art_col[i]] = mpq(1)
            row[N] = b
            basis.append(art_col[i])
        else:
            row[:n] = [-v for v in a]
            row[n + i] = mpq(1)
            row[N] = -b
            basis.append(n + i)
        T.append(row)
    real = list(range(n + m))
    if arts:
        obj = [_ZERO] * (N + 1)
        for i in arts:
            obj[art_col[i]] = mpq(1)
        for i in arts:
            row = T[i]
            obj = [o - a for o, a in zip(obj, row)]
        _iterate(T, obj, basis, real + [art_col[i] for i in arts], max_pivots)
        if obj[N] != 0:
            raise Infeasible("LP has no feasible point")
        artset = set(art_col.values())
        for r, bv in enumerate(basis):
            if bv in artset:
                for j in real:
                    if T[r][j] != 0:
                        _pivot(T, obj, basis, r, j)
                        break
    obj = [_ZERO] * (N + 1)
    for j in range(n):
        obj[j] = c[j]
    for r, bv in enumerate(basis):
        if bv < n and c[bv]:
            f = c[bv]
            obj = [o - f * a for o, a in zip(obj, T[r])]
    if not _iterate(T, obj, basis, real, max_pivots):
        raise Infeasible("LP is unbounded")
    x = [_ZERO] * n
    for r, bv in enumerate(basis):
        if bv < n:
            x[bv] = T[r][N]
    return [_to_fraction(v) for v in x]


# ---------------------------------------------------------------------------
# coverage matrix and fractional solutions

@dataclass
class CoverageMatrix:
    arcs: list
    links: list
    cols: list  # per link: sorted list of arc indices it covers
    rows: list  # per arc: list of link indices covering it

    @property
    def shape(self):
        return (len(self.arcs), len(self.links))

    def entry(self, i, j) -> int:
        return 1 if i in self.cols[j] else 0

    def dense(self, row_idx=None, col_idx=None) -> list:
        ri = range(len(self.arcs)) if row_idx is None else row_idx
        ci = range(len(self.links)) if col_idx is None else col_idx
        colsets = [set(self.cols[j]) for j in range(len(self.links))]
        return [[1 if i in colsets[j] else 0 for j in ci] for i in ri]


def build_matrix(inst: RootedInstance, links=None) -> CoverageMatrix:
    pairs = inst.link_pairs() if links is None else [
        l.pair if isinstance(l, Link) else tuple(l) for l in links]
    arcs = list(inst.arcs)
    aidx = {a: i for i, a in enumerate(arcs)}
    cols = [sorted(aidx[a] for a in inst.path_view(p).fwd) for p in pairs]
    rows = [[] for _ in arcs]
    for j, col in enumerate(cols):
        for i in col:
            rows[i].append(j)
    return CoverageMatrix(arcs, pairs, cols, rows)


class FractionalSolution:
    """Nonnegative rational values on links; zero entries are not stored."""

    def __init__(self, values: Mapping, costs: Mapping):
        self.x = {}
        self.costs = {}
        for p, v in values.items():
            v = Fraction(v)
            if v < 0:
                raise ValueError(f"negative value {v} on {p}")
            if v:
                p = tuple(p)
                self.x[p] = v
                self.costs[p] = Fraction(costs[p])

    @classmethod
    def from_instance(cls, inst: RootedInstance, values: Mapping):
        return cls(values, {p: inst.pair_cost(p) for p, v in values.items() if v})

    @property
    def cost(self) -> Fraction:
        return sum((self.costs[p] * v for p, v in self.x.items()), Fraction(0))

    def support(self) -> list:
        return list(self.x)

    def __getitem__(self, pair):
        return self.x.get(tuple(pair), Fraction(0))

    def mass(self, pairs: Iterable) -> Fraction:
        return sum((self.x.get(tuple(p), Fraction(0)) for p in pairs), Fraction(0))

    def scaled(self, factor) -> "FractionalSolution":
        return FractionalSolution({p: v * factor for p, v in self.x.items()}, self.costs)

    def __repr__(self):
        return f"FractionalSolution(support={len(self.x)}, cost={self.cost})"

    def to_json(self) -> dict:
        return {"links": [{"tail": p[0], "head": p[1], "cost": fmt_fraction(self.costs[p]),
                           "x": fmt_fraction(v)} for p, v in sorted(self.x.items())],
                "cost": fmt_fraction(self.cost)}


@dataclass
class ExtraConstraint:
    """A row  sum coeffs[l] * x_l >= rhs."""

    coeffs: dict
    rhs: Fraction
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.coeffs = {tuple(p): Fraction(v) for p, v in self.coeffs.items() if v}
        self.rhs = Fraction(self.rhs)
        if not self.coeffs:
            raise ValueError("an extra constraint needs a nonzero coefficient")

    def lhs(self, x) -> Fraction:
        vals = x.x if isinstance(x, FractionalSolution) else x
        return sum((c * Fraction(vals.get(p, 0)) for p, c in self.coeffs.items()), Fraction(0))

    def satisfied_by(self, x) -> bool:
        return self.lhs(x) >= self.rhs


def solve_lp(inst: RootedInstance, extra=(), cost_cap=None) -> FractionalSolution:
    """Optimal vertex of the covering LP plus ``extra`` rows and an optional cost cap."""
    mat = build_matrix(inst)
    for i, r in enumerate(mat.rows):
        if not r:
            raise Infeasible(f"arc {mat.arcs[i]} is covered by no link")
    pairs = mat.links
    pidx = {p: j for j, p in enumerate(pairs)}
    c = [inst.cost[p] for p in pairs]
    rows = mat.dense()
    rhs = [1] * len(rows)
    for con in extra:
        row = [0] * len(pairs)
        for p, v in con.coeffs.items():
            if p not in pidx:
                raise ValueError(f"constraint refers to unknown link {p}")
            row[pidx[p]] = v
        rows.append(row)
        rhs.append(con.rhs)
    if cost_cap is not None:
        rows.append([-v for v in c])
        rhs.append(-Fraction(cost_cap))
    if not pairs:
        if rows:
            raise Infeasible("no links")
        return FractionalSolution({}, {})
    vals = lp_minimize(c, rows, rhs)
    return FractionalSolution({p: v for p, v in zip(pairs, vals)}, inst.cost)


def assert_integral(x: FractionalSolution) -> list:
    """Support of x if every value is 0 or 1, else NotIntegral."""
    for p in sorted(x.x):
        if x.x[p] != 1:
            raise NotIntegral(p, x.x[p])
    return sorted(x.x)


def covers(inst: RootedInstance, x: FractionalSolution) -> bool:
    """Exact check of M x >= 1."""
    mass = {a: Fraction(0) for a in inst.arcs}
    for p, v in x.x.items():
        for a in inst.path_view(p).fwd:
            mass[a] += v
    return all(m >= 1 for m in mass.values())
