"""Oriented trees with directed links: the WDTAP data model.

Arcs are stored as ``(tail, head)`` pairs. Internally an arc is also
identified by its lower endpoint (the endpoint farther from the root), so
``a_v`` is simply ``v``.
"""

from __future__ import annotations

import io
import json
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple

from .errors import InstanceError

Pair = tuple  # (tail, head)


def as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        raise TypeError("floats are not accepted as costs; use str or Fraction")
    return Fraction(str(value).strip()) if isinstance(value, str) else Fraction(value)


def fmt_fraction(q: Fraction) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True, order=True)
class Link:
    tail: str
    head: str
    cost: Fraction = Fraction(1)

    @property
    def pair(self) -> Pair:
        return (self.tail, self.head)

    def to_json(self) -> dict:
        return {"tail": self.tail, "head": self.head, "cost": fmt_fraction(self.cost)}


class PathView(NamedTuple):
    """The tree path of a link, ordered from tail to head."""

    vertices: tuple
    fwd: frozenset  # arcs traversed backward, i.e. covered
    bwd: frozenset  # arcs traversed forward (wrong direction)
    apex: str
    fwd_low: frozenset  # covered arcs, by lower endpoint
    bwd_low: frozenset

    @property
    def arcs(self) -> frozenset:
        return self.fwd | self.bwd

    @property
    def inner(self) -> tuple:
        return self.vertices[1:-1]


class SubtreeView(NamedTuple):
    vertex: str
    vertices: frozenset
    arcs: frozenset
    parent_arc: tuple | None
    up_arcs: frozenset
    down_arcs: frozenset


class RootedInstance:
    """A WDTAP instance (T, L, c, r).

    Links are normalized on construction: self-loops and links covering no
    arc are dropped with a warning, and parallel links keep the cheapest
    cost. Set ``quiet=True`` to suppress the warnings (used internally when
    derived instances are built).
    """

    def __init__(self, vertices: Iterable, arcs: Iterable, links: Iterable, root,
                 quiet: bool = False):
        verts = []
        seen = set()
        for v in vertices:
            v = str(v)
            if v not in seen:
                seen.add(v)
                verts.append(v)
        self.root = str(root)
        if self.root not in seen:
            raise InstanceError(f"root {self.root!r} is not a vertex")
        arcs = [(str(t), str(h)) for t, h in arcs]
        self._build_tree(verts, arcs)
        self.vertices = tuple(verts)
        self.arcs = tuple(arcs)
        self._pv = {}
        self._pair_cost = {}

        best = {}
        order = []
        for ln in links:
            if not isinstance(ln, Link):
                ln = Link(str(ln[0]), str(ln[1]), as_fraction(ln[2]))
            else:
                ln = Link(str(ln.tail), str(ln.head), as_fraction(ln.cost))
            for end in ln.pair:
                if end not in self.parent:
                    raise InstanceError(f"link endpoint {end!r} is not a vertex")
            if ln.cost <= 0:
                raise InstanceError(f"link {ln.pair} has non-positive cost {ln.cost}")
            if ln.tail == ln.head:
                if not quiet:
                    warnings.warn(f"dropping self-loop link {ln.pair}")
                continue
            if not self.path_view(ln.pair).fwd:
                if not quiet:
                    warnings.warn(f"dropping link {ln.pair}: it covers no arc")
                continue
            if ln.pair not in best:
                order.append(ln.pair)
                best[ln.pair] = ln.cost
            elif ln.cost < best[ln.pair]:
                best[ln.pair] = ln.cost
        self.links = tuple(Link(p[0], p[1], best[p]) for p in order)
        self.cost = dict(best)

    # -- tree structure -------------------------------------------------
    def _build_tree(self, verts, arcs):
        if len(arcs) != len(verts) - 1:
            raise InstanceError(
                f"arc set is not a tree: {len(arcs)} arcs for {len(verts)} vertices")
        vs = set(verts)
        adj = {v: [] for v in verts}
        for t, h in arcs:
            if t not in vs or h not in vs:
                raise InstanceError(f"arc ({t}, {h}) uses an unknown vertex")
            if t == h:
                raise InstanceError(f"arc ({t}, {h}) is a loop")
            adj[t].append((h, (t, h)))
            adj[h].append((t, (t, h)))
        parent = {self.root: None}
        parc = {self.root: None}
        depth = {self.root: 0}
        children = {v: [] for v in verts}
        order = [self.root]
        stack = [self.root]
        while stack:
            v = stack.pop()
            for w, arc in adj[v]:
                if w == parent[v] and arc == parc[v]:
                    continue
                if w in parent:
                    raise InstanceError("arc set is not a tree: it contains a cycle")
                parent[w] = v
                parc[w] = arc
                depth[w] = depth[v] + 1
                children[v].append(w)
                order.append(w)
                stack.append(w)
        if len(parent) != len(verts):
            raise InstanceError("arc set is not a tree: it is disconnected")
        # children in input-arc order for determinism
        arc_pos = {a: i for i, a in enumerate(arcs)}
        for v in verts:
            children[v].sort(key=lambda w: arc_pos[parc[w]])
        self.parent = parent
        self.parent_arc = parc
        self.depth = depth
        self.children = children
        # is the arc a_v an up-arc (pointing toward the root)?
        self.is_up = {v: parc[v][0] == v for v in verts if v != self.root}
        pre = []
        tin, tout = {}, {}
        stack = [(self.root, False)]
        while stack:
            v, done = stack.pop()
            if done:
                tout[v] = len(pre)
                continue
            tin[v] = len(pre)
            pre.append(v)
            stack.append((v, True))
            for w in reversed(children[v]):
                stack.append((w, False))
        self.preorder = tuple(pre)
        self._tin = tin
        self._tout = tout
        self._low = {a: (a[0] if parc.get(a[0]) == a else a[1]) for a in arcs}

    # -- queries --------------------------------------------------------
    @property
    def n(self) -> int:
        return len(self.vertices)

    def arc_low(self, arc) -> str:
        """Lower endpoint of an arc (the one farther from the root)."""
        return self._low[tuple(arc)]

    def arc_of(self, v) -> tuple:
        return self.parent_arc[v]

    def is_up_arc(self, arc) -> bool:
        return self.is_up[self._low[tuple(arc)]]

    @property
    def up_arcs(self) -> frozenset:
        return frozenset(self.parent_arc[v] for v, u in self.is_up.items() if u)

    @property
    def down_arcs(self) -> frozenset:
        return frozenset(self.parent_arc[v] for v, u in self.is_up.items() if not u)

    def is_ancestor(self, a, b) -> bool:
        """True if a is an ancestor of b or a == b."""
        return self._tin[a] <= self._tin[b] < self._tout[a]

    def in_subtree(self, v, w) -> bool:
        return self.is_ancestor(v, w)

    def subtree_vertices(self, v) -> list:
        return list(self.preorder[self._tin[v]:self._tout[v]])

    def lca(self, a, b):
        while self.depth[a] > self.depth[b]:
            a = self.parent[a]
        while self.depth[b] > self.depth[a]:
            b = self.parent[b]
        while a != b:
            a, b = self.parent[a], self.parent[b]
        return a

    def tree_path(self, u, v) -> tuple:
        left, right = [u], [v]
        a, b = u, v
        while self.depth[a] > self.depth[b]:
            a = self.parent[a]
            left.append(a)
        while self.depth[b] > self.depth[a]:
            b = self.parent[b]
            right.append(b)
        while a != b:
            a, b = self.parent[a], self.parent[b]
            left.append(a)
            right.append(b)
        right.pop()
        return tuple(left + right[::-1])

    def path_view(self, link) -> PathView:
        pair = link.pair if isinstance(link, Link) else (link[0], link[1])
        pv = self._pv.get(pair)
        if pv is not None:
            return pv
        path = self.tree_path(*pair)
        apex = min(path, key=lambda w: self.depth[w])
        k = path.index(apex)
        fwd, bwd = [], []
        for x in path[:k]:  # climbing from the tail: down-arcs are covered
            (bwd if self.is_up[x] else fwd).append(x)
        for x in path[k + 1:]:  # descending to the head: up-arcs are covered
            (fwd if self.is_up[x] else bwd).append(x)
        pv = PathView(path,
                      frozenset(self.parent_arc[x] for x in fwd),
                      frozenset(self.parent_arc[x] for x in bwd),
                      apex, frozenset(fwd), frozenset(bwd))
        self._pv[pair] = pv
        return pv

    def apex(self, link) -> str:
        return self.path_view(link).apex

    def link_kind(self, link) -> str:
        """'up' if the head is the apex, 'down' if the tail is, else 'cross'."""
        pair = link.pair if isinstance(link, Link) else tuple(link)
        ap = self.path_view(pair).apex
        if pair[1] == ap:
            return "up"
        if pair[0] == ap:
            return "down"
        return "cross"

    def subtree(self, v) -> SubtreeView:
        verts = self.subtree_vertices(v)
        arcs = [self.parent_arc[w] for w in verts if w != v]
        up = frozenset(a for a in arcs if self.is_up_arc(a))
        return SubtreeView(v, frozenset(verts), frozenset(arcs), self.parent_arc[v],
                           up, frozenset(arcs) - up)

    def link_pairs(self) -> list:
        return [ln.pair for ln in self.links]

    def pair_cost(self, pair) -> Fraction:
        """Cost of a pair: its own cost if it is a link, otherwise the
        cheapest link of which it is a shadow."""
        pair = tuple(pair)
        if pair in self.cost:
            return self.cost[pair]
        c = self._pair_cost.get(pair)
        if c is None:
            for ln in self.links:
                if is_shadow(self, pair, ln.pair) and (c is None or ln.cost < c):
                    c = ln.cost
            if c is None:
                raise KeyError(f"{pair} is not a shadow of any link")
            self._pair_cost[pair] = c
        return c

    def cost_ratio(self) -> Fraction:
        if not self.links:
            return Fraction(1)
        cs = [ln.cost for ln in self.links]
        return max(cs) / min(cs)

    def with_links(self, links, quiet=True) -> "RootedInstance":
        return RootedInstance(self.vertices, self.arcs, links, self.root, quiet=quiet)

    def __repr__(self):
        return f"RootedInstance(n={self.n}, links={len(self.links)}, root={self.root!r})"

    def __eq__(self, other):
        return (isinstance(other, RootedInstance) and self.root == other.root
                and set(self.arcs) == set(other.arcs) and self.cost == other.cost
                and set(self.vertices) == set(other.vertices))

    __hash__ = None

    # -- I/O --------------------------------------------------------------
    def to_text(self) -> str:
        out = io.StringIO()
        out.write(f"root {self.root}\n")
        for t, h in self.arcs:
            out.write(f"arc {t} {h}\n")
        for ln in self.links:
            out.write(f"link {ln.tail} {ln.head} {fmt_fraction(ln.cost)}\n")
        return out.getvalue()

    def to_json(self) -> dict:
        return {"root": self.root,
                "arcs": [list(a) for a in self.arcs],
                "links": [ln.to_json() for ln in self.links]}


def is_shadow(inst: RootedInstance, sub, pair) -> bool:
    """True if ``sub`` = (u', v') lies in order on the path of ``pair``."""
    if tuple(sub) == tuple(pair):
        return True
    path = inst.path_view(pair).vertices
    try:
        i = path.index(sub[0])
        j = path.index(sub[1])
    except ValueError:
        return False
    return i < j


def parse_instance(text) -> RootedInstance:
    """Parse the line format (``root``, ``arc``, ``link`` records) or JSON."""
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("utf-8")
    if text.lstrip().startswith("{"):
        return instance_from_json(json.loads(text))
    root = None
    arcs = []
    links = []
    verts = []
    arc_lines = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0]
        if kind == "root" and len(parts) == 2:
            if root is not None:
                raise InstanceError("root given twice", lineno)
            root = parts[1]
            verts.append(root)
        elif kind == "arc" and len(parts) == 3:
            a = (parts[1], parts[2])
            if a in arc_lines or a[::-1] in arc_lines:
                raise InstanceError(f"arc {a} is repeated: arc set is not a tree", lineno)
            arc_lines[a] = lineno
            arcs.append(a)
            verts.extend(a)
        elif kind == "link" and len(parts) == 4:
            try:
                cost = as_fraction(parts[3])
            except (ValueError, ZeroDivisionError):
                raise InstanceError(f"bad cost {parts[3]!r}", lineno) from None
            if cost <= 0:
                raise InstanceError(f"non-positive cost {parts[3]}", lineno)
            links.append((parts[1], parts[2], cost, lineno))
        else:
            raise InstanceError(f"malformed line {raw.strip()!r}", lineno)
    if root is None:
        raise InstanceError("missing root line")
    known = set(verts)
    for t, h, _, lineno in links:
        for end in (t, h):
            if end not in known:
                raise InstanceError(f"unknown vertex {end!r}", lineno)
    try:
        return RootedInstance(verts, arcs, [(t, h, c) for t, h, c, _ in links], root)
    except InstanceError as exc:
        if exc.line is None and arcs:
            raise InstanceError(str(exc), max(arc_lines.values())) from None
        raise


def load_instance(path) -> RootedInstance:
    with open(path, "rb") as fh:
        return parse_instance(fh.read())


def instance_from_json(data: dict) -> RootedInstance:
    try:
        root = data["root"]
        arcs = [tuple(a) for a in data["arcs"]]
        links = [(d["tail"], d["head"], as_fraction(d["cost"])) for d in data["links"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceError(f"malformed JSON instance: {exc}") from None
    verts = [root] + [v for a in arcs for v in a]
    return RootedInstance(verts, arcs, links, root)


def generic_shadow(inst: RootedInstance, link):
    """Minimal shadow with the same covered arcs, or None if nothing is covered."""
    pair = link.pair if isinstance(link, Link) else tuple(link)
    pv = inst.path_view(pair)
    if not pv.fwd_low:
        return None
    path = pv.vertices
    k = path.index(pv.apex)

    def low(i):  # lower endpoint of the arc between path[i] and path[i+1]
        return path[i] if i < k else path[i + 1]

    covered = [i for i in range(len(path) - 1) if low(i) in pv.fwd_low]
    return (path[covered[0]], path[covered[-1] + 1])


def shadows(inst: RootedInstance, pair):
    """All shadows of a pair, in path order."""
    path = inst.path_view(pair).vertices
    for i in range(len(path)):
        for j in range(i + 1, len(path)):
            yield (path[i], path[j])


def shadow_complete(inst: RootedInstance) -> RootedInstance:
    """Add every shadow of every link at the cheapest inherited cost."""
    best = dict(inst.cost)
    for ln in sorted(inst.links, key=lambda l: l.cost):
        for s in shadows(inst, ln.pair):
            if s not in best or ln.cost < best[s]:
                best[s] = ln.cost
    links = [Link(p[0], p[1], c) for p, c in best.items()]
    return inst.with_links(links)


def is_shadow_complete(inst: RootedInstance) -> bool:
    for ln in inst.links:
        for s in shadows(inst, ln.pair):
            if inst.path_view(s).fwd and inst.cost.get(s, None) is None:
                return False
            if s in inst.cost and inst.cost[s] > ln.cost:
                return False
    return True


def contract_arcs(inst: RootedInstance, arcs) -> tuple:
    """Contract ``arcs``; returns ``(instance, vertex_map)``.

    Each super-vertex is named after its member closest to the root.
    Link images keep the cheapest preimage cost.
    """
    lows = {inst.arc_low(a) for a in arcs}
    vmap = {}
    for v in inst.preorder:
        vmap[v] = vmap[inst.parent[v]] if v in lows else v
    verts = [v for v in inst.vertices if vmap[v] == v]
    new_arcs = [(vmap[t], vmap[h]) for t, h in inst.arcs if inst.arc_low((t, h)) not in lows]
    links = []
    for ln in inst.links:
        t, h = vmap[ln.tail], vmap[ln.head]
        if t != h:
            links.append(Link(t, h, ln.cost))
    return RootedInstance(verts, new_arcs, links, inst.root, quiet=True), vmap


def is_feasible(inst: RootedInstance, links=None) -> bool:
    return not uncovered_arcs(inst, links)


def uncovered_arcs(inst: RootedInstance, links=None) -> set:
    pairs = inst.link_pairs() if links is None else [
        l.pair if isinstance(l, Link) else tuple(l) for l in links]
    todo = set(inst.arcs)
    for p in pairs:
        todo -= inst.path_view(p).fwd
    return todo


def solution_cost(inst: RootedInstance, links) -> Fraction:
    return sum((inst.pair_cost(l.pair if isinstance(l, Link) else l) for l in links),
               Fraction(0))


@dataclass
class Solution:
    """An integral solution: a set of link pairs and its cost."""

    links: tuple
    cost: Fraction
    meta: dict = None

    def __post_init__(self):
        self.links = tuple(sorted(tuple(p) for p in self.links))
        self.cost = Fraction(self.cost)
        if self.meta is None:
            self.meta = {}

    @classmethod
    def of(cls, inst: RootedInstance, links, **meta) -> "Solution":
        pairs = sorted({l.pair if isinstance(l, Link) else tuple(l) for l in links})
        return cls(tuple(pairs), solution_cost(inst, pairs), dict(meta))

    def to_json(self, inst: RootedInstance = None) -> dict:
        out = []
        for p in self.links:
            d = {"tail": p[0], "head": p[1]}
            if inst is not None:
                d["cost"] = fmt_fraction(inst.pair_cost(p))
            out.append(d)
        return {"links": out, "cost": fmt_fraction(self.cost)}
