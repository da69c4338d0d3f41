"""Reductions between tree covering problems, plus two instance families.

multi 2-TAP  ->  bi-directed tree cover  ->  WDTAP, the reverse step
WDTAP -> bi-directed tree cover, an orientation routine turning a 2-cover
into a bi-directed cover, the 3DM hardness family and the small
integrality-gap instance.

Zero-cost links only exist in BiDirectedCoverInstance. When such an
instance is turned back into a RootedInstance the free links are taken
up front and the arcs they cover are contracted, so every remaining link
has a positive cost.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product

from .errors import InstanceError, NotACover, PropertyViolation
from .instance import Link, RootedInstance, as_fraction, contract_arcs
from .lp import lp_minimize


# ---------------------------------------------------------------------------
# undirected trees

class _Tree:
    """Undirected tree rooted at its first vertex, for shore computations."""

    def __init__(self, vertices, edges):
        self.vertices = tuple(str(v) for v in vertices)
        self.edges = tuple((str(a), str(b)) for a, b in edges)
        if len(set(self.vertices)) != len(self.vertices):
            raise InstanceError("duplicate vertex")
        if len(self.edges) != len(self.vertices) - 1:
            raise InstanceError("edge set is not a tree")
        adj = {v: [] for v in self.vertices}
        for a, b in self.edges:
            if a not in adj or b not in adj or a == b:
                raise InstanceError(f"bad edge {(a, b)}")
            adj[a].append(b)
            adj[b].append(a)
        root = self.vertices[0]
        self.parent = {root: None}
        self.depth = {root: 0}
        order = [root]
        for v in order:
            for w in adj[v]:
                if w not in self.parent:
                    self.parent[w] = v
                    self.depth[w] = self.depth[v] + 1
                    order.append(w)
        if len(order) != len(self.vertices):
            raise InstanceError("edge set is not a tree")
        # the shore of edge i is the subtree below its lower endpoint
        self.low = [b if self.parent.get(b) == a else a for a, b in self.edges]

    def path_up(self, u, v):
        """Lower endpoints of the edges on the u-v path, split by side."""
        up, down = [], []
        while u != v:
            if self.depth[u] >= self.depth[v]:
                up.append(u)
                u = self.parent[u]
            else:
                down.append(v)
                v = self.parent[v]
        return up, down

    def crossing(self, u, v) -> dict:
        """edge index -> +1 if u->v leaves the shore, -1 if it enters it."""
        idx = {w: i for i, w in enumerate(self.low)}
        up, down = self.path_up(u, v)
        out = {idx[w]: 1 for w in up}
        out.update({idx[w]: -1 for w in down})
        return out


@dataclass
class Multi2TapInstance:
    vertices: tuple
    edges: tuple
    links: tuple  # (u, v, cost), undirected

    def __post_init__(self):
        self.links = tuple((str(u), str(v), as_fraction(c)) for u, v, c in self.links)
        self.tree = _Tree(self.vertices, self.edges)
        self.vertices, self.edges = self.tree.vertices, self.tree.edges
        for u, v, c in self.links:
            if u not in self.tree.parent or v not in self.tree.parent or u == v:
                raise InstanceError(f"bad link {(u, v)}")
            if c <= 0:
                raise InstanceError(f"link {(u, v)} has non-positive cost {c}")

    def to_json(self) -> dict:
        return {"vertices": list(self.vertices), "edges": [list(e) for e in self.edges],
                "links": [{"u": u, "v": v, "cost": str(c)} for u, v, c in self.links]}

    @classmethod
    def from_json(cls, data) -> "Multi2TapInstance":
        return cls(data["vertices"], [tuple(e) for e in data["edges"]],
                   [(d["u"], d["v"], d["cost"]) for d in data["links"]])


@dataclass
class BiDirectedCoverInstance:
    vertices: tuple
    edges: tuple
    links: tuple  # (tail, head, cost), cost >= 0
    origin: tuple = field(default=None)  # per link: where it came from

    def __post_init__(self):
        self.links = tuple((str(u), str(v), as_fraction(c)) for u, v, c in self.links)
        self.tree = _Tree(self.vertices, self.edges)
        self.vertices, self.edges = self.tree.vertices, self.tree.edges
        for u, v, c in self.links:
            if u not in self.tree.parent or v not in self.tree.parent or u == v:
                raise InstanceError(f"bad link {(u, v)}")
            if c < 0:
                raise InstanceError(f"link {(u, v)} has negative cost {c}")
        if self.origin is None:
            self.origin = tuple(range(len(self.links)))


def is_2cover(inst: Multi2TapInstance, F) -> bool:
    """F is a multiset of link indices."""
    count = Counter()
    for j in F:
        u, v, _ = inst.links[j]
        count.update(inst.tree.crossing(u, v).keys())
    return all(count[i] >= 2 for i in range(len(inst.edges)))


def is_bidirected_cover(inst, links) -> bool:
    """``links`` are (tail, head) pairs over the tree of ``inst``."""
    out, inn = set(), set()
    for u, v in links:
        for i, s in inst.tree.crossing(u, v).items():
            (out if s > 0 else inn).add(i)
    n = len(inst.edges)
    return len(out) == n and len(inn) == n


def multiset_cost(inst: Multi2TapInstance, F) -> Fraction:
    return sum((inst.links[j][2] for j in F), Fraction(0))


# ---------------------------------------------------------------------------
# reductions

def m2tap_to_bidirected(inst: Multi2TapInstance) -> BiDirectedCoverInstance:
    links, origin = [], []
    for j, (u, v, c) in enumerate(inst.links):
        links += [(u, v, c), (v, u, c)]
        origin += [(j, "+"), (j, "-")]
    return BiDirectedCoverInstance(inst.vertices, inst.edges, links, tuple(origin))


def _mid(a, b):
    return f"m({a},{b})"


@dataclass
class Reduction:
    """A WDTAP instance produced from a bi-directed cover instance.

    ``provenance`` maps each output link pair to the index of the input link
    it came from; ``free`` lists the indices of zero-cost input links that
    were taken up front, and ``vmap`` is the contraction map.
    """
    instance: RootedInstance
    provenance: dict
    free: tuple
    vmap: dict

    def pull_back(self, links) -> list:
        """Input-link indices of a WDTAP solution, free links included."""
        return sorted(set(self.free) | {self.provenance[tuple(p)] for p in links})


def reduce_bidirected(inst: BiDirectedCoverInstance) -> Reduction:
    verts = list(inst.vertices)
    arcs = []
    for a, b in inst.edges:
        m = _mid(a, b)
        verts.append(m)
        arcs += [(a, m), (b, m)]
    full = RootedInstance(verts, arcs, [], inst.vertices[0])
    free = tuple(j for j, l in enumerate(inst.links) if l[2] == 0)
    pre = set()
    for j in free:
        pre |= full.path_view(inst.links[j][:2]).fwd
    paid = [(j, l) for j, l in enumerate(inst.links) if l[2] > 0]
    base = RootedInstance(verts, arcs, [Link(u, v, c) for _, (u, v, c) in paid],
                          inst.vertices[0], quiet=True)
    out, vmap = contract_arcs(base, pre)
    prov = {}
    for j, (u, v, c) in paid:
        p = (vmap[u], vmap[v])
        if p in out.cost and out.cost[p] == c and p not in prov:
            prov[p] = j
    return Reduction(out, prov, free, vmap)


def bidirected_to_wdtap(inst: BiDirectedCoverInstance) -> RootedInstance:
    """Subdivide each edge {a,b} by a midpoint m with arcs (a,m) and (b,m).

    A link crossing from a's side to b's side covers (b,m) and the reverse
    direction covers (a,m). The root is the first tree vertex.
    """
    return reduce_bidirected(inst).instance


def wdtap_to_bidirected(inst: RootedInstance) -> BiDirectedCoverInstance:
    """Forget arc directions and add a free link along each arc."""
    links = [(l.tail, l.head, l.cost) for l in inst.links]
    origin = [("link", l.pair) for l in inst.links]
    for t, h in inst.arcs:
        links.append((t, h, 0))
        origin.append(("arc", (t, h)))
    verts = [inst.root] + [v for v in inst.vertices if v != inst.root]
    return BiDirectedCoverInstance(verts, inst.arcs, links, tuple(origin))


def m2tap_to_wdtap(inst: Multi2TapInstance) -> Reduction:
    return reduce_bidirected(m2tap_to_bidirected(inst))


# ---------------------------------------------------------------------------
# orientation

def orient_2cover(inst: Multi2TapInstance, F) -> list:
    """Orient every copy in the 2-cover F so each shore is left and entered.

    F is a multiset of link indices. Each copy starts in its stored
    direction; flip variables y in [0,1] must satisfy, per edge,
    out - y(out) + y(in) >= 1 and in - y(in) + y(out) >= 1. The rows are
    signed tree paths, a network matrix, so the simplex vertex is
    integral. Returns a list of (index, tail, head), one per copy.
    """
    F = list(F)
    for j in F:
        if not 0 <= j < len(inst.links):
            raise NotACover(f"unknown link index {j}")
    if not is_2cover(inst, F):
        raise NotACover("F does not cover every edge twice")
    m, n = len(F), len(inst.edges)
    sign = [inst.tree.crossing(*inst.links[j][:2]) for j in F]
    rows, rhs = [], []
    for i in range(n):
        outs = sum(1 for s in sign if s.get(i) == 1)
        ins = sum(1 for s in sign if s.get(i) == -1)
        rows.append([-s.get(i, 0) for s in sign])
        rhs.append(1 - outs)
        rows.append([s.get(i, 0) for s in sign])
        rhs.append(1 - ins)
    for k in range(m):
        rows.append([-1 if t == k else 0 for t in range(m)])
        rhs.append(-1)
    y = lp_minimize([1] * m, rows, rhs) if m else []
    if any(v not in (0, 1) for v in y):
        raise PropertyViolation(f"orientation LP returned a fractional point {y}")
    out = []
    for j, flip in zip(F, y):
        u, v, _ = inst.links[j]
        out.append((j, v, u) if flip else (j, u, v))
    if not is_bidirected_cover(inst, [(u, v) for _, u, v in out]):
        raise PropertyViolation("orientation fails a shore check")
    return out


def orient_exhaustive(inst: Multi2TapInstance, F):
    """Reference search over all 2^|F| orientations; None if none works."""
    F = list(F)
    for flips in product((0, 1), repeat=len(F)):
        links = []
        for j, f in zip(F, flips):
            u, v, _ = inst.links[j]
            links.append((v, u) if f else (u, v))
        if is_bidirected_cover(inst, links):
            return links
    return None


# ---------------------------------------------------------------------------
# brute force on the undirected side

def opt_2cover(inst: Multi2TapInstance):
    """Cheapest 2-cover: depth-first search over multiplicities in {0,1,2}.

    Links are tried in index order; a branch stops once its cost reaches the
    best found or some edge can no longer be covered twice.
    """
    m, n = len(inst.links), len(inst.edges)
    hits = [tuple(inst.tree.crossing(*l[:2])) for l in inst.links]
    # remaining[j][i]: links at index >= j crossing edge i
    remaining = [[0] * n for _ in range(m + 1)]
    for j in range(m - 1, -1, -1):
        remaining[j] = list(remaining[j + 1])
        for i in hits[j]:
            remaining[j][i] += 1
    best = [None, None]
    count = [0] * n
    mult = [0] * m

    def rec(j, cost):
        if best[0] is not None and cost >= best[0]:
            return
        if any(count[i] + 2 * remaining[j][i] < 2 for i in range(n)):
            return
        if j == m:
            best[0], best[1] = cost, [t for t in range(m) for _ in range(mult[t])]
            return
        for k in (2, 1, 0):
            mult[j] = k
            for i in hits[j]:
                count[i] += k
            rec(j + 1, cost + k * inst.links[j][2])
            for i in hits[j]:
                count[i] -= k
        mult[j] = 0

    rec(0, Fraction(0))
    return None if best[0] is None else (best[0], best[1])


def opt_bidirected(inst: BiDirectedCoverInstance):
    """Cheapest bi-directed cover by subset enumeration."""
    m = len(inst.links)
    best = None
    for r in range(m + 1):
        for S in combinations(range(m), r):
            c = sum((inst.links[j][2] for j in S), Fraction(0))
            if best is not None and c >= best[0]:
                continue
            if is_bidirected_cover(inst, [inst.links[j][:2] for j in S]):
                best = (c, list(S))
    return best


def random_m2tap(n: int, seed: int, m: int = None, delta: int = 4) -> Multi2TapInstance:
    """Random tree on n vertices with random links; every edge gets crossed."""
    rng = random.Random(seed)
    verts = [f"u{i}" for i in range(n)]
    edges = [(verts[rng.randrange(i)], verts[i]) for i in range(1, n)]
    m = n if m is None else m
    links = []
    for _ in range(m):
        a, b = rng.sample(verts, 2)
        links.append((a, b, rng.randint(1, delta)))
    tree = _Tree(verts, edges)
    crossed = set()
    for a, b, _ in links:
        crossed |= tree.crossing(a, b).keys()
    for i, (a, b) in enumerate(edges):
        if i not in crossed:
            links.append((a, b, rng.randint(1, delta)))
    return Multi2TapInstance(verts, edges, links)


# ---------------------------------------------------------------------------
# 3-dimensional matching

def _check_triples(M, q):
    M = [tuple(int(t) for t in trip) for trip in M]
    for trip in M:
        if len(trip) != 3 or not all(1 <= t <= q for t in trip):
            raise InstanceError(f"malformed triple {trip} for q={q}")
    if len(set(M)) != len(M):
        raise InstanceError("repeated triple")
    return M


def perfect_matchings(M, q) -> list:
    """All perfect matchings of the triple set, by backtracking over W."""
    M = _check_triples(M, q)
    by_w = {i: [t for t in M if t[0] == i] for i in range(1, q + 1)}
    out = []

    def rec(i, xs, ys, chosen):
        if i > q:
            out.append(list(chosen))
            return
        for t in by_w[i]:
            if t[1] not in xs and t[2] not in ys:
                chosen.append(t)
                rec(i + 1, xs | {t[1]}, ys | {t[2]}, chosen)
                chosen.pop()

    rec(1, frozenset(), frozenset(), [])
    return out


def gen_3dm_instance(M, q: int):
    """DTAP instance whose unit-cost optimum is p+q iff M has a perfect matching.

    Tree arcs (r,x_j), (r,w_i), (y_k,r), and per triple t=(i,j,k) the arcs
    (a_t,w_i), (w_i,a'_t). Links (x_j,a_t), (a'_t,a_t), (a'_t,y_k).
    Returns (instance, key).
    """
    M = _check_triples(M, q)
    if q < 1:
        raise InstanceError("q must be positive")
    verts = ["r"] + [f"{s}{i}" for i in range(1, q + 1) for s in "wxy"]
    arcs = []
    for i in range(1, q + 1):
        arcs += [("r", f"x{i}"), ("r", f"w{i}"), (f"y{i}", "r")]
    links = []
    for i, j, k in M:
        a, b = f"a_{i}_{j}_{k}", f"b_{i}_{j}_{k}"  # b stands for a'
        verts += [a, b]
        arcs += [(a, f"w{i}"), (f"w{i}", b)]
        links += [Link(f"x{j}", a, 1), Link(b, a, 1), Link(b, f"y{k}", 1)]
    inst = RootedInstance(verts, arcs, links, "r")
    pm = perfect_matchings(M, q)
    key = {"p": len(M), "q": q, "target": len(M) + q,
           "has_perfect_matching": bool(pm),
           "matching": pm[0] if pm else None}
    return inst, key


def matching_solution(M, matching) -> list:
    """The p+q link solution built from a perfect matching."""
    chosen = set(map(tuple, matching))
    out = []
    for i, j, k in map(tuple, M):
        a, b = f"a_{i}_{j}_{k}", f"b_{i}_{j}_{k}"
        if (i, j, k) in chosen:
            out += [(f"x{j}", a), (b, f"y{k}")]
        else:
            out.append((b, a))
    return out


def _covers_all(M, q):
    return all({t[d] for t in M} == set(range(1, q + 1)) for d in range(3))


def random_3dm(q: int, seed: int, planted: bool = True, decoys: int = None):
    """Random triple set with or without a perfect matching.

    Every element appears in some triple so the instance is feasible. With
    q = 1 that forces the single triple (1,1,1), so an unplanted case does
    not exist and ValueError is raised.
    """
    if q == 1 and not planted:
        raise ValueError("every feasible q=1 instance has a perfect matching")
    rng = random.Random(seed)
    decoys = q if decoys is None else decoys
    universe = list(product(range(1, q + 1), repeat=3))
    for _ in range(10000):
        if planted:
            xs = list(range(1, q + 1))
            ys = list(range(1, q + 1))
            rng.shuffle(xs)
            rng.shuffle(ys)
            M = {(i + 1, xs[i], ys[i]) for i in range(q)}
            rest = [t for t in universe if t not in M]
            M |= set(rng.sample(rest, min(decoys, len(rest))))
        else:
            M = set(rng.sample(universe, min(len(universe), q + decoys)))
        M = sorted(M)
        if not _covers_all(M, q):
            continue
        if bool(perfect_matchings(M, q)) == planted:
            return gen_3dm_instance(M, q)
    raise RuntimeError("could not draw a triple set")


# ---------------------------------------------------------------------------
# integrality gap

GAP_INSTANCE_TEXT = """\
root v1
arc v2 v1
arc v3 v2
arc v2 v7
arc v7 v6
arc v8 v7
link v1 v3 1
link v6 v2 1
link v7 v3 1
link v1 v8 1
link v6 v8 1
"""


def integrality_gap_instance() -> RootedInstance:
    """Six vertices, five unit links whose coverage matrix is a 5-cycle.

    All-1/2 is an LP solution of cost 5/2; every integral cover costs 3.
    """
    from .instance import parse_instance
    return parse_instance(GAP_INSTANCE_TEXT)
