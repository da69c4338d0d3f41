"""Visible width, thin link sets, and the exact DP for cheapest N-thin solutions.

An arc a below v is visible to v if some link covers a and passes strictly
through v on its generic-shadow path. The visible width at v is the largest
ancestor-free set of visible arcs of one orientation. If every vertex has
visible width at most k, some optimal solution is 2k-thin (every vertex is
interior to at most 2k solution paths), and the DP below finds it.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .errors import BudgetExceeded, Infeasible, PreconditionViolation, WidthExceeded
from .instance import (Link, RootedInstance, Solution, generic_shadow,
                       is_shadow_complete, shadow_complete, uncovered_arcs)


def _pairs(inst, links):
    if links is None:
        return inst.link_pairs()
    return [l.pair if isinstance(l, Link) else tuple(l) for l in links]


def visibility(inst: RootedInstance, links=None) -> dict:
    """Map each vertex to the set of lower endpoints of its visible arcs."""
    vis = {v: set() for v in inst.vertices}
    for p in _pairs(inst, links):
        s = generic_shadow(inst, p)
        if s is None:
            continue
        fwd = inst.path_view(p).fwd_low
        for x in inst.path_view(s).inner:
            vis[x].update(w for w in fwd if w != x and inst.is_ancestor(x, w))
    return vis


def visible_arcs(inst: RootedInstance, v, links=None) -> frozenset:
    return frozenset(inst.parent_arc[w] for w in visibility(inst, links)[v])


def _antichain(inst, lows) -> int:
    """Size of a largest ancestor-free subset: the number of minimal elements."""
    lows = list(lows)
    return sum(1 for w in lows
               if not any(x != w and inst.is_ancestor(w, x) for x in lows))


@dataclass
class VisibilityReport:
    visible: dict  # vertex -> frozenset of arcs
    up: dict
    down: dict

    @property
    def width(self) -> dict:
        return {v: max(self.up[v], self.down[v]) for v in self.up}

    @property
    def max(self) -> int:
        return max(self.width.values(), default=0)

    def forward(self, inst: RootedInstance, v) -> int:
        """Width in the direction of a_v (both directions at the root)."""
        if v == inst.root:
            return max(self.up[v], self.down[v])
        return self.up[v] if inst.is_up[v] else self.down[v]

    def backward(self, inst: RootedInstance, v) -> int:
        if v == inst.root:
            return max(self.up[v], self.down[v])
        return self.down[v] if inst.is_up[v] else self.up[v]

    def to_json(self) -> dict:
        return {"vertices": {v: {"up": self.up[v], "down": self.down[v],
                                 "viwidth": max(self.up[v], self.down[v]),
                                 "visible": sorted(list(a) for a in self.visible[v])}
                             for v in self.up},
                "viwidth": self.max}


def viwidth(inst: RootedInstance, links=None) -> VisibilityReport:
    vis = visibility(inst, links)
    up, down, arcs = {}, {}, {}
    for v, lows in vis.items():
        up[v] = _antichain(inst, [w for w in lows if inst.is_up[w]])
        down[v] = _antichain(inst, [w for w in lows if not inst.is_up[w]])
        arcs[v] = frozenset(inst.parent_arc[w] for w in lows)
    return VisibilityReport(arcs, up, down)


def thinness(inst: RootedInstance, F) -> dict:
    count = {v: 0 for v in inst.vertices}
    for p in _pairs(inst, F):
        for x in inst.path_view(p).inner:
            count[x] += 1
    return count


def is_k_thin(inst: RootedInstance, F, k: int) -> bool:
    return all(c <= k for c in thinness(inst, F).values())


# ---------------------------------------------------------------------------
# the DP

class _ThinDP:
    def __init__(self, inst: RootedInstance, N: int, links, budget: int):
        self.inst = inst
        self.N = N
        self.budget = budget
        self.states = 0
        self.pairs = _pairs(inst, links)
        self.cost = [inst.pair_cost(p) for p in self.pairs]
        idx = {p: j for j, p in enumerate(self.pairs)}
        verts = inst.vertices
        out = {v: 0 for v in verts}
        cross = {v: 0 for v in verts}
        covers = {v: 0 for v in verts}
        for j, p in enumerate(self.pairs):
            pv = inst.path_view(p)
            bit = 1 << j
            for w in pv.fwd_low:
                covers[w] |= bit
            for x in pv.inner:
                if x == pv.apex:
                    cross[x] |= bit
                else:
                    out[x] |= bit
        self.out, self.cross, self.covers = out, cross, covers
        self.star = {}
        for v in verts:
            if v == inst.root:
                continue
            par = inst.parent[v]
            d = (par, v) if inst.is_up[v] else (v, par)
            self.star[v] = idx.get(d)
        self.memo = {}
        self.child_memo = {}

    def mask_cost(self, m) -> Fraction:
        c = Fraction(0)
        j = 0
        while m:
            if m & 1:
                c += self.cost[j]
            m >>= 1
            j += 1
        return c

    def subsets(self, mask, limit):
        bits = [1 << j for j in range(mask.bit_length()) if mask >> j & 1]
        for r in range(0, min(limit, len(bits)) + 1):
            for combo in combinations(bits, r):
                s = 0
                for b in combo:
                    s |= b
                yield s

    def child_term(self, v, c, fixed, yz_covers):
        key = (c, fixed, yz_covers)
        if key in self.child_memo:
            return self.child_memo[key]
        free = self.out[c] & ~self.out[v] & ~self.cross[v]
        nfix = bin(fixed).count("1")
        best = None
        if nfix <= self.N:
            base = self.mask_cost(fixed)
            for S in self.subsets(free, self.N - nfix):
                val, wit = self.solve(c, fixed | S)
                if val is None:
                    continue
                val = val - base
                if not (yz_covers or (fixed | S) & self.covers[c]):
                    j = self.star[c]
                    if j is None:
                        continue
                    val += self.cost[j]
                    wit |= 1 << j
                if best is None or val < best[0]:
                    best = (val, wit)
        self.child_memo[key] = best
        return best

    def solve(self, v, Y):
        key = (v, Y)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        self.states += 1
        if self.states > self.budget:
            raise BudgetExceeded(f"DP exceeded {self.budget} states")
        kids = self.inst.children[v]
        nY = bin(Y).count("1")
        best = (None, 0)
        for Z in self.subsets(self.cross[v], self.N - nY):
            YZ = Y | Z
            total = Fraction(0)
            wit = YZ
            seen = 0
            ok = True
            for c in kids:
                new = YZ & self.incident[c] & ~seen
                seen |= self.incident[c]
                total += self.mask_cost(new)
                term = self.child_term(v, c, YZ & self.out[c],
                                       bool(YZ & self.covers[c]))
                if term is None:
                    ok = False
                    break
                total += term[0]
                wit |= term[1]
            if ok and (best[0] is None or total < best[0]):
                best = (total, wit)
        self.memo[key] = best
        return best

    def run(self):
        inst = self.inst
        # links with an endpoint in U_c, per vertex c
        inc = {}
        for v in reversed(inst.preorder):
            m = 0
            for j, p in enumerate(self.pairs):
                if v in p:
                    m |= 1 << j
            for c in inst.children[v]:
                m |= inc[c]
            inc[v] = m
        self.incident = inc
        val, wit = self.solve(inst.root, 0)
        if val is None:
            raise Infeasible("no feasible N-thin solution")
        links = [self.pairs[j] for j in range(len(self.pairs)) if wit >> j & 1]
        if self.mask_cost(wit) != val:
            raise AssertionError("DP witness cost does not match its value")
        return Solution(links, val, {"N": self.N, "states": self.states})


def solve_n_thin(inst: RootedInstance, N: int, links=None, budget: int = 2_000_000) -> Solution:
    """Cheapest N-thin feasible link set.

    A missing direct link for a_{v_i} is treated as an infinitely expensive
    option, so the result is exact on any instance, shadow-complete or not.
    """
    if uncovered_arcs(inst, links):
        raise Infeasible("some arc is covered by no link")
    return _ThinDP(inst, N, links, budget).run()


def solve_bounded_viwidth(inst: RootedInstance, k: int, budget: int = 2_000_000) -> Solution:
    """Optimal solution when the visible width is at most k.

    Works on the shadow completion (which has the same optimum and no larger
    visible width), restricted to links equal to their own generic shadow,
    with N = 2k. Shadow links in the answer are mapped back to the cheapest
    original link containing them.
    """
    rep = viwidth(inst)
    if rep.max > k:
        raise WidthExceeded(rep.max, k)
    full = inst if is_shadow_complete(inst) else shadow_complete(inst)
    generic = [ln.pair for ln in full.links if generic_shadow(full, ln.pair) == ln.pair]
    sol = solve_n_thin(full, 2 * k, generic, budget)
    back = sorted({lift_shadow(inst, p) for p in sol.links})
    out = Solution.of(inst, back, **sol.meta)
    if out.cost > sol.cost:
        raise AssertionError("lifting shadows increased the cost")
    return out


def lift_shadow(inst: RootedInstance, pair):
    """Cheapest link of ``inst`` having ``pair`` as a shadow (ties favour ``pair``)."""
    from .instance import is_shadow
    pair = tuple(pair)
    best = Link(pair[0], pair[1], inst.cost[pair]) if pair in inst.cost else None
    for ln in inst.links:
        if is_shadow(inst, pair, ln.pair) and (best is None or ln.cost < best.cost):
            best = ln
    if best is None:
        raise KeyError(f"{pair} is not a shadow of any link")
    return best.pair


def require_shadow_complete(inst: RootedInstance):
    if not is_shadow_complete(inst):
        raise PreconditionViolation("instance is not shadow-complete")


def shadow_minimalize(inst: RootedInstance, F) -> list:
    """Replace links by shadows (then drop or trim them) while staying feasible.

    Costs of shadows are inherited from their cheapest containing link, so
    the cost never increases.
    """
    cur = []
    for p in _pairs(inst, F):
        s = generic_shadow(inst, p)
        if s is not None and s not in cur:
            cur.append(s)
    changed = True
    while changed:
        changed = False
        for p in sorted(cur, key=lambda q: (-inst.pair_cost(q), q)):
            rest = [q for q in cur if q != p]
            if not uncovered_arcs(inst, rest):
                cur = rest
                changed = True
                break
            path = inst.path_view(p).vertices
            for s in ((path[1], path[-1]), (path[0], path[-2])):
                if s[0] == s[1] or s in rest:
                    continue
                if not uncovered_arcs(inst, rest + [s]):
                    cur = rest + [s]
                    changed = True
                    break
            if changed:
                break
    return sorted(cur)
