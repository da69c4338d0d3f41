"""Link splittings.

A splitting maps each link to a sequence of shadows whose paths partition
the link's path. Applying it to a fractional solution moves each link's
value onto its pieces. Only non-identity entries are stored.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping

from .errors import InvalidSplitting
from .instance import Link, RootedInstance
from .lp import FractionalSolution


def _pair(l):
    return l.pair if isinstance(l, Link) else (l[0], l[1])


class Splitting:
    """sigma: link -> tuple of pieces ordered along the link's path."""

    def __init__(self, mapping: Mapping = None):
        self.map = {}
        for p, pieces in (mapping or {}).items():
            p = _pair(p)
            pieces = tuple(_pair(q) for q in pieces)
            if pieces != (p,):
                self.map[p] = pieces

    def __call__(self, pair) -> tuple:
        pair = _pair(pair)
        return self.map.get(pair, (pair,))

    def __len__(self):
        return len(self.map)

    def __eq__(self, other):
        return isinstance(other, Splitting) and self.map == other.map

    def __repr__(self):
        return f"Splitting({len(self.map)} non-identity entries)"

    def support(self, domain: Iterable) -> set:
        out = set()
        for p in domain:
            out.update(self(p))
        return out

    def validate(self, inst: RootedInstance) -> None:
        for p, pieces in self.map.items():
            path = inst.path_view(p).vertices
            pos = {v: i for i, v in enumerate(path)}
            at = p[0]
            for a, b in pieces:
                if a != at or a not in pos or b not in pos or pos[b] <= pos[a]:
                    raise InvalidSplitting(f"pieces {pieces} do not partition the path of {p}")
                at = b
            if at != p[1]:
                raise InvalidSplitting(f"pieces {pieces} do not reach the head of {p}")

    def to_json(self) -> list:
        return [{"from": {"tail": p[0], "head": p[1]},
                 "to": [{"tail": a, "head": b} for a, b in pieces]}
                for p, pieces in sorted(self.map.items())]

    @classmethod
    def from_json(cls, data) -> "Splitting":
        return cls({(d["from"]["tail"], d["from"]["head"]):
                    [(t["tail"], t["head"]) for t in d["to"]] for d in data})


IDENTITY = Splitting()


def apply(x: FractionalSolution, sigma: Splitting, inst: RootedInstance,
          validate: bool = True) -> FractionalSolution:
    """split(x, sigma): each piece receives the values of the links it comes from."""
    if validate:
        Splitting({p: sigma(p) for p in x.x}).validate(inst)
    vals = {}
    for p, v in x.x.items():
        for q in sigma(p):
            vals[q] = vals.get(q, Fraction(0)) + v
    costs = {q: (x.costs[q] if q in x.costs else inst.pair_cost(q)) for q in vals}
    return FractionalSolution(vals, costs)


def split_cost(x: FractionalSolution, sigma: Splitting, inst: RootedInstance) -> Fraction:
    """sum over l of (sum of piece costs) * x_l."""
    total = Fraction(0)
    for p, v in x.x.items():
        total += sum((x.costs[q] if q in x.costs else inst.pair_cost(q)
                      for q in sigma(p)), Fraction(0)) * v
    return total


def split_at_vertex(inst: RootedInstance, v, links: Iterable) -> Splitting:
    """Split every given link that passes strictly through v into two pieces at v."""
    out = {}
    for p in links:
        p = _pair(p)
        if v in inst.path_view(p).inner:
            out[p] = ((p[0], v), (v, p[1]))
    return Splitting(out)


def split_at_apex(inst: RootedInstance, links: Iterable) -> Splitting:
    """Split every given cross-link into its up-piece and down-piece."""
    out = {}
    for p in links:
        p = _pair(p)
        ap = inst.path_view(p).apex
        if ap not in p:
            out[p] = ((p[0], ap), (ap, p[1]))
    return Splitting(out)


def compose(outer: Splitting, inner: Splitting) -> Splitting:
    """(outer o inner)(l) = union of outer(l') over l' in inner(l)."""
    out = {}
    for p in set(inner.map) | set(outer.map):
        pieces = []
        for q in inner(p):
            pieces.extend(outer(q))
        out[p] = pieces
    return Splitting(out)


def cost_increase_bound(x: FractionalSolution, sigma: Splitting, inst: RootedInstance,
                        delta=None) -> Fraction:
    """c(x) + sum (|sigma(l)| - 1) c(l) x_l, which bounds c(split(x, sigma)).

    With ``delta`` given, the coarser bound c(x) + delta * sum (|sigma(l)|-1) x_l
    is returned instead.
    """
    extra = Fraction(0)
    for p, v in x.x.items():
        k = len(sigma(p)) - 1
        if k:
            extra += k * v * (Fraction(delta) if delta is not None else x.costs[p])
    return x.cost + extra


def coverage_masses(inst: RootedInstance, x: FractionalSolution) -> dict:
    """arc -> (forward mass, wrong-direction mass, total mass)."""
    out = {a: [Fraction(0), Fraction(0)] for a in inst.arcs}
    for p, v in x.x.items():
        pv = inst.path_view(p)
        for a in pv.fwd:
            out[a][0] += v
        for a in pv.bwd:
            out[a][1] += v
    return {a: (f, b, f + b) for a, (f, b) in out.items()}
