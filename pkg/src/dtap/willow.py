"""Willows: recognition, the Ghouila-Houri signing, and exact solving.

A vertex v is up-independent w.r.t. a link set if no link covers up-arcs
inside T_v while also covering arcs outside T_v (down-independence is the
same with down-arcs). An instance is a willow if every link is an up-link,
a down-link, or has its apex in a set W of vertices that are each up- or
down-independent. Coverage matrices of willows are totally unimodular.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

from .errors import NotWillow, PropertyViolation, TooLarge
from .instance import Link, RootedInstance, Solution
from .lp import CoverageMatrix, assert_integral, solve_lp


def _pairs(inst, links):
    if links is None:
        return inst.link_pairs()
    return [l.pair if isinstance(l, Link) else tuple(l) for l in links]


def _independent(inst: RootedInstance, v, links, up: bool) -> bool:
    for p in _pairs(inst, links):
        fwd = inst.path_view(p).fwd_low
        inside = [w for w in fwd if w != v and inst.is_ancestor(v, w)]
        if len(inside) == len(fwd):
            continue
        if any(inst.is_up[w] == up for w in inside):
            return False
    return True


def is_up_independent(inst: RootedInstance, v, links=None) -> bool:
    return _independent(inst, v, links, True)


def is_down_independent(inst: RootedInstance, v, links=None) -> bool:
    return _independent(inst, v, links, False)


@dataclass
class WillowCertificate:
    W: tuple
    up_independent: dict
    down_independent: dict
    kinds: dict = field(default_factory=dict)


def _w_order(inst, verts):
    return tuple(sorted(verts, key=lambda v: (inst.depth[v], v)))


def recognize_willow(inst: RootedInstance, links=None) -> WillowCertificate:
    """Certificate with the minimal W, or NotWillow naming a violating apex."""
    pairs = _pairs(inst, links)
    kinds = {p: inst.link_kind(p) for p in pairs}
    W0 = {inst.root} | {inst.apex(p) for p, k in kinds.items() if k == "cross"}
    W = _w_order(inst, W0)
    up, down = {}, {}
    for v in W:
        up[v] = is_up_independent(inst, v, pairs)
        down[v] = is_down_independent(inst, v, pairs)
        if not (up[v] or down[v]):
            raise NotWillow(v)
    return WillowCertificate(W, up, down, kinds)


def is_willow(inst: RootedInstance, links=None) -> bool:
    try:
        recognize_willow(inst, links)
    except NotWillow:
        return False
    return True


@dataclass
class GHSigning:
    B: frozenset
    sigma: dict
    phi_up: dict
    phi_down: dict
    mu: dict

    def column_sum(self, inst: RootedInstance, pair) -> int:
        return sum(self.sigma[a] for a in inst.path_view(pair).fwd if a in self.B)

    def check(self, inst: RootedInstance, links=None) -> bool:
        return all(abs(self.column_sum(inst, p)) <= 1 for p in _pairs(inst, links))


def gh_signing(inst: RootedInstance, cert: WillowCertificate, B) -> GHSigning:
    """Signing of the rows B under which every link column sums to -1, 0 or 1."""
    B = frozenset(tuple(a) for a in B)
    lowB = {inst.arc_low(a) for a in B}
    Wset = set(cert.W)

    def next_w(u):  # nearest strict ancestor in W
        x = inst.parent[u]
        while x not in Wset:
            x = inst.parent[x]
        return x

    def dist(u, v, up):  # arcs of B with the given orientation on the u..v path
        d = 0
        while u != v:
            if u in lowB and inst.is_up[u] == up:
                d += 1
            u = inst.parent[u]
        return d

    phi_up = {inst.root: 1}
    phi_down = {inst.root: -1}
    for u in _w_order(inst, Wset):
        if u == inst.root:
            continue
        v = next_w(u)
        if cert.up_independent[u]:
            phi_down[u] = phi_down[v] * (-1) ** dist(u, v, False)
            phi_up[u] = -phi_down[u]
        else:
            phi_up[u] = phi_up[v] * (-1) ** dist(u, v, True)
            phi_down[u] = -phi_up[u]
    sigma, mu = {}, {}
    for a in B:
        low = inst.arc_low(a)
        top = inst.parent[low]
        m = top
        while m not in Wset:
            m = inst.parent[m]
        mu[a] = m
        if inst.is_up[low]:
            sigma[a] = phi_up[m] * (-1) ** dist(top, m, True)
        else:
            sigma[a] = phi_down[m] * (-1) ** dist(top, m, False)
    sig = GHSigning(B, sigma, phi_up, phi_down, mu)
    if not sig.check(inst):
        raise PropertyViolation("signing violates the Ghouila-Houri condition")
    return sig


def solve_willow(inst: RootedInstance) -> Solution:
    """Optimal solution of a willow from an LP vertex (integral by TU)."""
    cert = recognize_willow(inst)
    x = solve_lp(inst)
    links = assert_integral(x)
    return Solution.of(inst, links, W=list(cert.W))


def _det(rows) -> int:
    """Integer determinant by fraction-free elimination."""
    a = [list(r) for r in rows]
    n = len(a)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1] if n else 1


def verify_tu_bruteforce(M, max_dim: int = 8) -> bool:
    """True iff every square submatrix has determinant -1, 0 or 1."""
    rows = M.dense() if isinstance(M, CoverageMatrix) else [list(r) for r in M]
    m = len(rows)
    n = len(rows[0]) if rows else 0
    if m > max_dim or n > max_dim:
        raise TooLarge(f"{m}x{n} matrix exceeds {max_dim}x{max_dim}")
    for k in range(1, min(m, n) + 1):
        for ri in combinations(range(m), k):
            for ci in combinations(range(n), k):
                if _det([[rows[i][j] for j in ci] for i in ri]) not in (-1, 0, 1):
                    return False
    return True
