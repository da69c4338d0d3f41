"""Approximation algorithms for WDTAP with bounded cost ratio.

The pipeline takes an LP solution x, contracts the zeta1-covered arcs,
splits light links (phase 1) and core links (phase 2), partitions the
support, and builds three candidate solutions: one by the bounded-width
DP, one on a willow, and one on a block-diagonal TU instance. The best of
them costs at most 7/4 c(x**) unless the DP optimum exceeds c(x1), in
which case a modification inequality violated by x is returned instead.

The driver replaces the ellipsoid method by an LP-with-cuts loop inside a
binary search over the cost guess c*. ``approx_2`` is the simple baseline:
solve the up-arc and down-arc instances separately and take the union.

Runtime checks of the structural properties are counted by a ``Checker``;
any failure raises PropertyViolation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (BudgetExceeded, Infeasible, IterationBudgetExceeded, NotWillow,
                     PreconditionViolation, PropertyViolation)
from .instance import (Link, RootedInstance, Solution, as_fraction, contract_arcs,
                       fmt_fraction, generic_shadow, is_shadow, is_shadow_complete,
                       shadow_complete, uncovered_arcs)
from .lp import ExtraConstraint, FractionalSolution, assert_integral, covers, solve_lp
from .splitting import (Splitting, apply, compose, coverage_masses, split_at_apex,
                        split_at_vertex)
from .viwidth import lift_shadow, solve_n_thin, viwidth
from .willow import is_down_independent, is_up_independent, recognize_willow


class Checker:
    """Counts property checks; raises PropertyViolation on the first failure.

    With ``enabled=False`` the expensive checks are skipped by the callers.
    """

    def __init__(self, enabled: bool = True):
        self.enabled = enabled
        self.count = 0

    def __call__(self, cond, msg):
        self.count += 1
        if not cond:
            raise PropertyViolation(msg)


# ---------------------------------------------------------------------------
# constants

@dataclass(frozen=True)
class ApproxConstants:
    eps_user: Fraction
    eps_bar: Fraction
    eps: Fraction
    delta: Fraction
    gamma: Fraction
    zeta1: Fraction
    zeta2: Fraction
    k: int

    @classmethod
    def from_user(cls, eps_user, delta) -> "ApproxConstants":
        eps_user = _rational(eps_user)
        if eps_user <= 0:
            raise ValueError("epsilon must be positive")
        return cls.from_eps_bar(min(Fraction(1), eps_user / 10), delta, eps_user)

    @classmethod
    def from_eps_bar(cls, eps_bar, delta, eps_user=None) -> "ApproxConstants":
        eps_bar = _rational(eps_bar)
        delta = _rational(delta)
        if eps_bar <= 0:
            raise ValueError("epsilon must be positive")
        if delta < 1:
            raise ValueError("the cost ratio is at least 1")
        eps = min(Fraction(1), eps_bar) / 7
        gamma = eps / (2 * delta)
        z1 = 2 / eps
        z2 = 6 * z1 * delta / (eps * (1 - eps))
        k = math.ceil((1 + 1 / gamma) * z2)
        return cls(eps_user if eps_user is not None else eps_bar * 10, eps_bar, eps,
                   delta, gamma, z1, z2, k)

    def inequalities(self) -> dict:
        e, d = self.eps, self.delta
        return {
            "2*delta*gamma <= eps": 2 * d * self.gamma <= e,
            "2/eps <= zeta1": 2 / e <= self.zeta1,
            "zeta1 < eps*zeta2": self.zeta1 < e * self.zeta2,
            "3*zeta1*delta <= eps*(1-eps)*zeta2/2": 3 * self.zeta1 * d <= e * (1 - e) * self.zeta2 / 2,
            "(1+1/gamma)*zeta2 <= k": (1 + 1 / self.gamma) * self.zeta2 <= self.k,
        }

    def check(self) -> None:
        bad = [name for name, ok in self.inequalities().items() if not ok]
        if bad:
            raise PropertyViolation(f"constants violate {bad}")


def _rational(v) -> Fraction:
    if isinstance(v, float):
        return Fraction(str(v))
    return as_fraction(v)


# ---------------------------------------------------------------------------
# small helpers

def _points_into(inst, v, p) -> bool:
    u, w = p
    return w != v and inst.is_ancestor(v, w) and not inst.is_ancestor(v, u)


def _points_out_of(inst, v, p) -> bool:
    u, w = p
    return u != v and inst.is_ancestor(v, u) and not inst.is_ancestor(v, w)


def _visible_lows(inst, v, pairs, gs_cache) -> set:
    out = set()
    for p in pairs:
        if p not in gs_cache:
            gs_cache[p] = generic_shadow(inst, p)
        s = gs_cache[p]
        if s is None or v not in inst.path_view(s).inner:
            continue
        out.update(w for w in inst.path_view(p).fwd_low if w != v and inst.is_ancestor(v, w))
    return out


def _image_solution(inst_c, vmap, x) -> FractionalSolution:
    vals = {}
    for p, v in x.x.items():
        q = (vmap[p[0]], vmap[p[1]])
        if q[0] != q[1] and q in inst_c.cost:
            vals[q] = vals.get(q, Fraction(0)) + v
    return FractionalSolution(vals, {q: inst_c.cost[q] for q in vals})


def _preimage_map(inst, vmap) -> dict:
    """Contracted pair -> cheapest original link mapping onto it."""
    best = {}
    for ln in inst.links:
        q = (vmap[ln.tail], vmap[ln.head])
        if q[0] != q[1] and (q not in best or ln.cost < inst.cost[best[q]]):
            best[q] = ln.pair
    return best


def _uncontract(inst, inst_c, vmap, pairs) -> list:
    pre = _preimage_map(inst, vmap)
    out = []
    for q in pairs:
        q = tuple(q)
        if q in pre:
            out.append(pre[q])
            continue
        # q is a shadow of an image; use the cheapest such original link
        best = None
        for ln in inst.links:
            img = (vmap[ln.tail], vmap[ln.head])
            if img[0] != img[1] and is_shadow(inst_c, q, img) and (
                    best is None or ln.cost < inst.cost[best]):
                best = ln.pair
        if best is None:
            raise KeyError(f"no preimage for {q}")
        out.append(best)
    return out


def _instance_on(inst, x: FractionalSolution) -> RootedInstance:
    """The instance (T, supp(x)) with the costs carried by x."""
    return inst.with_links([Link(p[0], p[1], x.costs[p]) for p in x.x
                            if inst.path_view(p).fwd])


def _solve_tu(inst) -> Solution:
    """Exact solve of an instance whose coverage matrix is TU."""
    return Solution.of(inst, assert_integral(solve_lp(inst)))


# ---------------------------------------------------------------------------
# heavy arcs and the zeta1 contraction

@dataclass
class HeavyFlags:
    covered: dict  # arc -> bool (alpha-covered)
    heavy: dict  # arc -> bool (alpha-heavy)
    involved: dict  # link pair -> bool (alpha-heavily involved)


def classify_heavy(inst: RootedInstance, x: FractionalSolution, alpha) -> HeavyFlags:
    alpha = Fraction(alpha)
    m = coverage_masses(inst, x)
    covered = {a: m[a][0] >= alpha for a in inst.arcs}
    heavy = {a: m[a][1] >= alpha for a in inst.arcs}
    involved = {p: any(heavy[a] for a in inst.path_view(p).bwd) for p in inst.link_pairs()}
    return HeavyFlags(covered, heavy, involved)


@dataclass
class Contraction:
    instance: RootedInstance  # T / A'
    x: FractionalSolution  # image of x on T / A'
    vmap: dict
    contracted: tuple  # A', the zeta1-covered arcs
    cover: tuple  # F'', original links covering A'
    cover_cost: Fraction


def contract_and_cover_zeta1(inst: RootedInstance, x: FractionalSolution,
                             consts: ApproxConstants, check: Checker = None) -> Contraction:
    chk = check or Checker()
    m = coverage_masses(inst, x)
    A1 = tuple(a for a in inst.arcs if m[a][0] >= consts.zeta1)
    if not A1:
        vmap = {v: v for v in inst.vertices}
        return Contraction(inst, x, vmap, (), (), Fraction(0))
    # cover A' cheaply: x / zeta1 on the tree where everything else is contracted
    keep = set(A1)
    tt, vm2 = contract_arcs(inst, [a for a in inst.arcs if a not in keep])
    xt = _image_solution(tt, vm2, x).scaled(1 / consts.zeta1)
    chk(covers(tt, xt), "x/zeta1 does not cover the zeta1-covered arcs")
    xs = apply(xt, split_at_apex(tt, xt.x), tt)
    wil = _instance_on(tt, xs)
    try:
        recognize_willow(wil)
    except NotWillow as exc:
        raise PropertyViolation(f"apex-split cover instance is not a willow: {exc}") from exc
    sol = _solve_tu(wil)
    F2 = tuple(sorted(set(_uncontract(inst, tt, vm2, sol.links))))
    cost = sum((inst.cost[p] for p in F2), Fraction(0))
    chk(cost <= consts.eps * x.cost, "c(F'') > eps c(x)")
    left = uncovered_arcs(inst, F2)
    chk(not (left & keep), "F'' misses a zeta1-covered arc")
    ic, vmap = contract_arcs(inst, A1)
    xi = _image_solution(ic, vmap, x)
    chk(covers(ic, xi), "contracted x is infeasible")
    return Contraction(ic, xi, vmap, A1, F2, cost)


# ---------------------------------------------------------------------------
# phase 1: light link splitting

@dataclass
class Phase1Result:
    sigma: Splitting
    x_star: FractionalSolution
    W_up: tuple
    W_down: tuple
    W_star: tuple
    snapshots: dict  # v -> x*,v (value of x* when v was considered)
    charged_up: dict  # v in W_up -> links charged at v
    charged_down: dict
    universe: frozenset  # every piece of every link under sigma


def phase1_light_splitting(inst: RootedInstance, x: FractionalSolution,
                           consts: ApproxConstants, check: Checker = None) -> Phase1Result:
    chk = check or Checker()
    m = coverage_masses(inst, x)
    if any(m[a][0] >= consts.zeta1 for a in inst.arcs):
        raise PreconditionViolation("there are zeta1-covered arcs")
    universe = set(inst.link_pairs()) | set(x.x)
    sigma = Splitting()
    xs = x
    W_up, W_down = [], []
    snaps, ch_up, ch_down = {}, {}, {}
    gs = {}
    order = sorted((v for v in inst.vertices if v != inst.root),
                   key=lambda v: (-inst.depth[v], v))
    for v in order:
        snaps[v] = xs
        for up in (True, False):
            test = _points_into if up else _points_out_of
            Lv = {p for p in x.x if test(inst, v, p)}
            vis = _visible_lows(inst, v, list(xs.x), gs)
            vis = {w for w in vis if inst.is_up[w] == up}
            others = {p for p in x.x if p not in Lv and inst.path_view(p).fwd_low & vis}
            if x.mass(Lv) <= consts.gamma * x.mass(others):
                sv = split_at_vertex(inst, v, [q for q in universe if test(inst, v, q)])
                sigma = compose(sv, sigma)
                xs = apply(xs, sv, inst)
                universe = sv.support(universe)
                if up:
                    W_up.append(v)
                    ch_up[v] = frozenset(others)
                else:
                    W_down.append(v)
                    ch_down[v] = frozenset(others)
    W_star = tuple(sorted(set(W_up) | set(W_down) | {inst.root},
                          key=lambda v: (inst.depth[v], v)))
    res = Phase1Result(sigma, xs, tuple(W_up), tuple(W_down), W_star, snaps,
                       ch_up, ch_down, frozenset(universe))
    _check_phase1(inst, x, res, consts, chk)
    return res


def _check_phase1(inst, x, res, consts, chk):
    xs = res.x_star
    chk(xs.cost <= (1 + consts.eps) * x.cost, "phase 1: c(x*) > (1+eps) c(x)")
    chk(covers(inst, xs), "phase 1: x* is infeasible")
    for v in res.W_up:
        chk(xs.mass(p for p in xs.x if _points_into(inst, v, p)) == 0,
            f"phase 1: x*(L_down) > 0 at {v}")
    for v in res.W_down:
        chk(xs.mass(p for p in xs.x if _points_out_of(inst, v, p)) == 0,
            f"phase 1: x*(L_up) > 0 at {v}")
    for charged in (res.charged_up, res.charged_down):
        count = {}
        for links in charged.values():
            for p in links:
                count[p] = count.get(p, 0) + 1
        chk(all(c <= 1 for c in count.values()), "phase 1: a link is charged twice")
    if not chk.enabled:
        return
    supp = list(xs.x)
    for v in res.W_up:
        chk(is_up_independent(inst, v, supp), f"phase 1: {v} is not up-independent")
    for v in res.W_down:
        chk(is_down_independent(inst, v, supp), f"phase 1: {v} is not down-independent")
    W = set(res.W_star)
    crossing = [p for p in supp if inst.link_kind(p) == "cross" and inst.apex(p) in W]
    y = apply(xs, split_at_apex(inst, crossing), inst)
    rep = viwidth(inst, list(y.x))
    m = coverage_masses(inst, xs)
    heavy = {inst.arc_low(a) for a in inst.arcs if m[a][1] >= consts.zeta2}
    chk(rep.up[inst.root] == 0 and rep.down[inst.root] == 0, "phase 1: root sees arcs")
    for v in res.W_up:
        chk(rep.up[v] == 0, f"phase 1: {v} in W_up sees up-arcs")
    for v in res.W_down:
        chk(rep.down[v] == 0, f"phase 1: {v} in W_down sees down-arcs")
    for v in inst.vertices:
        chk(rep.forward(inst, v) <= consts.k, f"phase 1: forward width at {v} exceeds k")
        if v == inst.root or v not in heavy:
            chk(rep.backward(inst, v) <= consts.k, f"phase 1: backward width at {v} exceeds k")


# ---------------------------------------------------------------------------
# components, cores and trunks

@dataclass
class Trunk:
    vertices: tuple  # bottom to top
    top: str  # v_i
    top_arc: str  # lower endpoint of a_i
    sibling: str | None  # lower endpoint of s_i, None when v_i = r_C


@dataclass
class Core:
    kind: str  # "up" or "down"
    root: str  # r_C
    component: frozenset
    vertices: frozenset  # V(C) of the core
    arcs: frozenset  # lower endpoints of the core arcs A(C)
    bases: tuple  # lower endpoints of b_1 .. b_t
    trunks: tuple

    @property
    def t(self) -> int:
        return len(self.bases)

    def root_arcs(self, inst) -> frozenset:
        """Core arcs incident to r_C."""
        return frozenset(w for w in self.arcs if inst.parent[w] == self.root)


@dataclass
class CoreStructure:
    components_up: tuple  # (root, frozenset of vertices)
    components_down: tuple
    heavy: frozenset  # lower endpoints of zeta2-heavy arcs
    cores: tuple

    @property
    def X(self) -> frozenset:
        out = set()
        for c in self.cores:
            out |= c.vertices
        return frozenset(out)

    def core_of_arc(self) -> dict:
        return {w: i for i, c in enumerate(self.cores) for w in c.arcs}


def _components(inst, up: bool) -> list:
    adj = {v: [] for v in inst.vertices}
    for v in inst.vertices:
        if v != inst.root and inst.is_up[v] == up:
            adj[v].append(inst.parent[v])
            adj[inst.parent[v]].append(v)
    seen, out = set(), []
    for v in inst.preorder:
        if v in seen:
            continue
        comp, stack = {v}, [v]
        seen.add(v)
        while stack:
            a = stack.pop()
            for b in adj[a]:
                if b not in seen:
                    seen.add(b)
                    comp.add(b)
                    stack.append(b)
        out.append((v, frozenset(comp)))  # preorder: first vertex is the top
    return out


def build_core_structure(inst: RootedInstance, x_star: FractionalSolution,
                         consts: ApproxConstants, check: Checker = None) -> CoreStructure:
    chk = check or Checker()
    m = coverage_masses(inst, x_star)
    heavy = frozenset(inst.arc_low(a) for a in inst.arcs if m[a][1] >= consts.zeta2)
    comps = {"up": _components(inst, True), "down": _components(inst, False)}
    cores = []
    for kind in ("up", "down"):
        for root, comp in comps[kind]:
            H = [w for w in comp if w != root and w in heavy]
            if not H:
                continue
            bases = sorted((h for h in H if not any(h2 != h and inst.is_ancestor(h, h2)
                                                     for h2 in H)),
                           key=lambda w: (inst.depth[w], w))
            verts, arcs = {root}, set()
            for b in bases:
                w = b
                while w != root:
                    verts.add(w)
                    arcs.add(w)
                    w = inst.parent[w]
            trunks = []
            on_trunks = set()
            for i, b in enumerate(bases):
                path = [b]
                w = b
                while True:
                    w = inst.parent[w]
                    path.append(w)
                    if (i == 0 and w == root) or (i > 0 and w in on_trunks):
                        break
                on_trunks.update(path)
                top = path[-1]
                sib = None
                if top != root:
                    for tr in trunks:
                        if top in tr.vertices[:-1]:
                            sib = tr.vertices[tr.vertices.index(top) - 1]
                            break
                    chk(sib is not None, f"no parent trunk for {top}")
                trunks.append(Trunk(tuple(path), top, path[-2], sib))
            cores.append(Core(kind, root, comp, frozenset(verts), frozenset(arcs),
                              tuple(bases), tuple(trunks)))
    cores.sort(key=lambda c: (c.kind, inst.depth[c.root], c.root))
    cs = CoreStructure(tuple(comps["up"]), tuple(comps["down"]), heavy, tuple(cores))
    for c in cs.cores:
        chk(all(not inst.is_ancestor(a, b) for a in c.bases for b in c.bases if a != b),
            "base arcs are not ancestor-free")
        tarcs = [w for tr in c.trunks for w in tr.vertices[:-1]]
        chk(len(tarcs) == len(set(tarcs)), "trunks share an arc")
        chk(set(tarcs) == set(c.arcs), "trunks do not cover the core")
    in_core = set()
    for c in cs.cores:
        in_core |= c.arcs
    chk(heavy <= in_core, "a zeta2-heavy arc lies outside every core")
    return cs


# ---------------------------------------------------------------------------
# phase 2: core link splitting

@dataclass
class Phase2Result:
    sigma: Splitting  # sigma**
    x: FractionalSolution  # x**
    universe: frozenset


def phase2_core_splitting(inst: RootedInstance, x_star: FractionalSolution,
                          cores: CoreStructure, consts: ApproxConstants,
                          x: FractionalSolution = None, universe=None,
                          check: Checker = None) -> Phase2Result:
    """Algorithm 2. ``x`` is the solution before phase 1 (for the cost check)."""
    chk = check or Checker()
    universe = set(universe if universe is not None else inst.link_pairs()) | set(x_star.x)
    sigma = Splitting()
    xs = x_star

    def split(v, low):
        nonlocal sigma, xs, universe
        sv = split_at_vertex(inst, v, [q for q in universe
                                       if low in inst.path_view(q).fwd_low])
        if sv.map:
            sigma = compose(sv, sigma)
            xs = apply(xs, sv, inst)
            universe = sv.support(universe)

    for c in cores.cores:
        if c.root != inst.root:
            split(c.root, c.root)
        for tr in c.trunks:
            split(tr.top, tr.top_arc)
            if tr.sibling is not None:
                split(tr.top, tr.sibling)
    res = Phase2Result(sigma, xs, frozenset(universe))
    _check_phase2(inst, x if x is not None else x_star, x_star, res, cores, consts, chk)
    return res


def _check_phase2(inst, x, x_star, res, cores, consts, chk):
    xs = res.x
    chk(xs.cost <= (1 + consts.eps) ** 2 * x.cost, "(7.1) c(x**) > (1+eps)^2 c(x)")
    chk(covers(inst, xs), "phase 2: x** is infeasible")
    for c in cores.cores:
        mass = x_star.mass(p for p in x_star.x if inst.apex(p) in c.vertices)
        chk(mass >= (1 - consts.eps) * consts.zeta2 * c.t,
            f"phase 2: core at {c.root} has too little apex mass")
        ra = c.root_arcs(inst)
        for p in xs.x:
            pv = inst.path_view(p)
            f, b = pv.fwd_low & c.arcs, pv.bwd_low & c.arcs
            chk(not (f and b), f"(7.2) {p} covers a core both ways")
            if c.root != inst.root:
                into, out = _points_into(inst, c.root, p), _points_out_of(inst, c.root, p)
                enter, leave = (into, out) if c.kind == "up" else (out, into)
                chk(not leave, f"(7.3) {p} leaves the subtree at {c.root}")
                chk(not (enter and (f or b)), f"(7.3) {p} enters the core at {c.root}")
            if pv.fwd_low & ra:
                chk(c.root in p, f"(7.4) {p} covers a root arc without ending at r_C")


# ---------------------------------------------------------------------------
# link partition

@dataclass
class LinkPartition:
    forward: frozenset  # ->L within supp(x**)
    backward: frozenset  # <-L
    cross: frozenset  # L_cross
    rest: frozenset  # L_rest
    core_of: dict  # link in ->L -> index of its core C_l
    WX: frozenset  # W* union X


def _core_hits(inst, cores: CoreStructure, p):
    pv = inst.path_view(p)
    f = [i for i, c in enumerate(cores.cores) if pv.fwd_low & c.arcs]
    b = [i for i, c in enumerate(cores.cores) if pv.bwd_low & c.arcs]
    return f, b


def _is_rest(inst, cores, WX, p) -> bool:
    f, b = _core_hits(inst, cores, p)
    return not f and not b and not (inst.link_kind(p) == "cross" and inst.apex(p) in WX)


def partition_links(inst: RootedInstance, x2: FractionalSolution, W_star,
                    cores: CoreStructure, check: Checker = None) -> LinkPartition:
    chk = check or Checker()
    WX = frozenset(W_star) | cores.X
    fw, bw, cr, rs, core_of = set(), set(), set(), set(), {}
    for p in x2.x:
        f, b = _core_hits(inst, cores, p)
        chk(not (f and b), f"{p} covers cores in both directions")
        if f:
            chk(len(f) == 1, f"{p} covers {len(f)} cores in the right direction")
            fw.add(p)
            core_of[p] = f[0]
        elif b:
            bw.add(p)
        elif inst.link_kind(p) == "cross" and inst.apex(p) in WX:
            cr.add(p)
        else:
            rs.add(p)
    return LinkPartition(frozenset(fw), frozenset(bw), frozenset(cr), frozenset(rs),
                         core_of, WX)


# ---------------------------------------------------------------------------
# modification inequalities

@dataclass
class ModificationInequality:
    """sum_l (sum_{l' in sigma(l)} c(l')) x_l >= c(OPT(T/A', supp(sigma)/A'))."""

    sigma: Splitting
    contracted: tuple  # A'
    coeffs: dict
    rhs: Fraction
    meta: dict = field(default_factory=dict)

    @property
    def constraint(self) -> ExtraConstraint:
        return ExtraConstraint(self.coeffs, self.rhs, {"kind": "modification"})

    def lhs(self, x) -> Fraction:
        return self.constraint.lhs(x)

    def violated_by(self, x) -> bool:
        return self.lhs(x) < self.rhs

    def to_json(self) -> dict:
        return {"splitting": self.sigma.to_json(),
                "contracted": [list(a) for a in self.contracted],
                "rhs": fmt_fraction(self.rhs),
                "coeffs": [{"tail": p[0], "head": p[1], "coeff": fmt_fraction(v)}
                           for p, v in sorted(self.coeffs.items())]}


@dataclass
class CutContext:
    """What best_of_three needs to turn a failed DP bound into a cut on the base instance."""

    base: RootedInstance  # the instance before the zeta1 contraction
    xbar: FractionalSolution
    vmap: dict
    contracted: tuple
    prefix: Splitting  # sigma** o sigma* on the contracted instance
    universe: frozenset  # links of the contracted instance under the prefix
    bf_budget: int = 200000


def _lift_splitting(base, inst_c, vmap, sigma_c: Splitting) -> Splitting:
    out = {}
    for ln in base.links:
        p = ln.pair
        q = (vmap[p[0]], vmap[p[1]])
        if q[0] == q[1] or q not in inst_c.cost:
            continue
        pieces = sigma_c(q)
        if len(pieces) == 1:
            continue
        path = base.path_view(p).vertices
        pts, i = [], 0
        for s, _ in pieces[1:]:
            while vmap[path[i]] != s:
                i += 1
            pts.append(path[i])
        verts = [p[0]] + pts + [p[1]]
        out[p] = list(zip(verts, verts[1:]))
    sig = Splitting(out)
    sig.validate(base)
    return sig


def modification_inequality(ctx: CutContext, inst_c: RootedInstance,
                            sigma_c: Splitting) -> ModificationInequality:
    """The inequality for (sigma lifted to the base instance, A')."""
    from .oracle import brute_force_opt

    base = ctx.base
    sig = _lift_splitting(base, inst_c, ctx.vmap, sigma_c)
    coeffs = {p: sum((base.pair_cost(q) for q in sig(p)), Fraction(0))
              for p in base.link_pairs()}
    pieces = sig.support(base.link_pairs())
    inst_p = base.with_links([Link(a, b, base.pair_cost((a, b))) for a, b in pieces
                              if base.path_view((a, b)).fwd])
    red, _ = contract_arcs(inst_p, ctx.contracted)
    rhs = brute_force_opt(red, ctx.bf_budget).cost if red.arcs else Fraction(0)
    return ModificationInequality(sig, tuple(ctx.contracted), coeffs, rhs,
                                  {"viwidth": viwidth(red).max})


# ---------------------------------------------------------------------------
# best of three

@dataclass
class BestOfThree:
    solution: Solution | None  # S*, None when a cut is returned
    cut: ModificationInequality | None
    candidates: dict  # name -> Solution
    bounds: dict  # name -> c(x_i)
    certified: bool  # S1 satisfies c(S1) <= c(x1)


def _sigma3(inst, x2, part: LinkPartition, cores: CoreStructure) -> Splitting:
    out = {}
    for p in x2.x:
        u, v = p
        ap = inst.apex(p)
        if p in part.forward:
            c = cores.cores[part.core_of[p]]
            if c.kind == "up":
                side = inst.tree_path(ap, v)  # apex .. v
                w = [y for y in side if y in c.vertices][-1]
                verts = [u, ap, w, v]
            else:
                side = inst.tree_path(u, ap)  # u .. apex
                w = [y for y in side if y in c.vertices][0]
                verts = [u, w, ap, v]
        elif p in part.cross or p in part.rest:
            verts = [u, ap, v]
        else:
            continue
        dedup = [verts[0]]
        for y in verts[1:]:
            if y != dedup[-1]:
                dedup.append(y)
        out[p] = list(zip(dedup, dedup[1:]))
    return Splitting(out)


def _check_blocks(inst, L3, cores: CoreStructure, chk):
    seen = {}
    noncore = set()
    for c in cores.cores:
        noncore |= c.arcs
    noncore = {w for w in inst.vertices if w != inst.root} - noncore
    for i, c in enumerate(cores.cores):
        for p in L3:
            pv = inst.path_view(p)
            if pv.fwd_low & c.arcs:
                chk(p not in seen, f"x3: {p} lies in two core blocks")
                seen[p] = i
                chk(inst.link_kind(p) in ("up", "down"), f"x3: core column {p} is a cross-link")
                chk(not (pv.fwd_low & noncore), f"x3: core column {p} covers a non-core arc")


def _dp_solution(inst_c, inst1, N, budget) -> Solution:
    full = inst1 if is_shadow_complete(inst1) else shadow_complete(inst1)
    generic = [ln.pair for ln in full.links if generic_shadow(full, ln.pair) == ln.pair]
    sol = solve_n_thin(full, N, generic, budget)
    return Solution.of(inst_c, sol.links, states=sol.meta.get("states"))


def best_of_three(inst: RootedInstance, x2: FractionalSolution, part: LinkPartition,
                  consts: ApproxConstants, cores: CoreStructure, k: int = None,
                  ctx: CutContext = None, dp_budget: int = 200000,
                  check: Checker = None) -> BestOfThree:
    """Three candidate solutions from x**; a cut when the DP bound fails.

    ``k`` is the width parameter handed to the DP (N = 2k); it defaults to
    the theoretical constant. ``ctx`` enables cut construction.
    """
    chk = check or Checker()
    k = consts.k if k is None else k
    cands, bounds = {}, {}

    # x1: split everything outside L_rest at its apex; bounded visible width
    x1 = apply(x2, split_at_apex(inst, [p for p in x2.x if p not in part.rest]), inst)
    bounds["x1"] = x1.cost
    inst1 = _instance_on(inst, x1)
    if chk.enabled:
        chk(viwidth(inst1).max <= consts.k, "x1: visible width exceeds k")
    s1 = _dp_solution(inst, inst1, 2 * k, dp_budget)
    cands["S1"] = s1
    certified = s1.cost <= x1.cost
    cut = None
    if not certified and ctx is not None:
        def pieces(q):
            if _is_rest(inst, cores, part.WX, q):
                return (q,)
            return split_at_apex(inst, [q])(q)

        sig_c = Splitting({p: [r for q in ctx.prefix(p) for r in pieces(q)]
                           for p in inst.link_pairs()})
        try:
            mi = modification_inequality(ctx, inst, sig_c)
        except BudgetExceeded:
            mi = None
        if mi is not None:
            mi.meta["lhs"] = mi.lhs(ctx.xbar)
            mi.meta["dp"] = s1.cost
            mi.meta["x1"] = x1.cost
            if mi.violated_by(ctx.xbar):
                cut = mi

    # x2: split <-L and L_rest at the apex; a willow
    x_2 = apply(x2, split_at_apex(inst, [p for p in x2.x if p in part.backward
                                        or p in part.rest]), inst)
    bounds["x2"] = x_2.cost
    inst2 = _instance_on(inst, x_2)
    try:
        recognize_willow(inst2)
    except NotWillow as exc:
        raise PropertyViolation(f"x2: support is not a willow ({exc})") from exc
    s2 = _solve_tu(inst2)
    chk(s2.cost <= x_2.cost, "x2: willow optimum exceeds c(x2)")
    cands["S2"] = s2

    # x3: the three-way split; block-diagonal TU
    x3 = apply(x2, _sigma3(inst, x2, part, cores), inst)
    bounds["x3"] = x3.cost
    inst3 = _instance_on(inst, x3)
    _check_blocks(inst, inst3.link_pairs(), cores, chk)
    s3 = _solve_tu(inst3)
    chk(s3.cost <= x3.cost, "x3: LP optimum exceeds c(x3)")
    cands["S3"] = s3

    combo = bounds["x1"] / 4 + bounds["x2"] / 2 + bounds["x3"] / 4
    chk(combo <= Fraction(7, 4) * x2.cost, "1/4 c(x1) + 1/2 c(x2) + 1/4 c(x3) > 7/4 c(x**)")
    if cut is not None:
        return BestOfThree(None, cut, cands, bounds, False)
    pool = cands if certified else {n: s for n, s in cands.items() if n != "S1"}
    name = min(pool, key=lambda n: (pool[n].cost, n))
    best = cands[name]
    if certified:
        chk(best.cost <= combo, "c(S*) > 1/4 c(x1) + 1/2 c(x2) + 1/4 c(x3)")
    elif s1.cost < best.cost:
        name, best = "S1", s1
    best = Solution(best.links, best.cost, {"candidate": name})
    for s in cands.values():
        chk(not uncovered_arcs(inst, s.links), "a candidate solution is infeasible")
    return BestOfThree(best, None, cands, bounds, certified)


# ---------------------------------------------------------------------------
# partial separation oracle

@dataclass
class OracleResult:
    solution: Solution | None
    cut: ModificationInequality | None
    certified: bool
    instance: RootedInstance  # the (shadow-complete) instance the result refers to
    details: dict = field(default_factory=dict)


def partial_separation_oracle(inst: RootedInstance, x: FractionalSolution, eps_bar,
                              delta=None, k: int = None, dp_budget: int = 200000,
                              bf_budget: int = 200000,
                              check: Checker = None) -> OracleResult:
    """Either a solution of cost <= (1.75 + eps_bar) c(x) or a violated cut.

    Costs must lie in [1, delta]. The instance is shadow-completed first if
    needed; cuts and solutions then refer to the completed instance (links
    missing from x get value 0). When the DP bound fails but no violated cut
    exists, the best remaining candidate is returned with ``certified``
    False.
    """
    chk = check or Checker()
    base = inst if is_shadow_complete(inst) else shadow_complete(inst)
    costs = [ln.cost for ln in base.links]
    delta = max(costs) if delta is None else _rational(delta)
    if costs and (min(costs) < 1 or max(costs) > delta):
        raise PreconditionViolation("link costs must lie in [1, delta]")
    consts = ApproxConstants.from_eps_bar(eps_bar, delta)
    consts.check()
    xbar = FractionalSolution({p: v for p, v in x.x.items()},
                              {p: base.pair_cost(p) for p in x.x})
    if not covers(base, xbar):
        raise PreconditionViolation("x is not a feasible LP solution")
    con = contract_and_cover_zeta1(base, xbar, consts, chk)
    ic, xc = con.instance, con.x
    details = {"contracted": len(con.contracted), "cover_cost": con.cover_cost}
    if not ic.arcs:
        sol = Solution.of(base, con.cover, candidate="cover")
        return OracleResult(sol, None, True, base, details)
    p1 = phase1_light_splitting(ic, xc, consts, chk)
    cs = build_core_structure(ic, p1.x_star, consts, chk)
    p2 = phase2_core_splitting(ic, p1.x_star, cs, consts, x=xc, universe=p1.universe,
                               check=chk)
    part = partition_links(ic, p2.x, p1.W_star, cs, chk)
    ctx = CutContext(base, xbar, con.vmap, con.contracted, compose(p2.sigma, p1.sigma),
                     p2.universe, bf_budget)
    bot = best_of_three(ic, p2.x, part, consts, cs, k=k, ctx=ctx, dp_budget=dp_budget,
                        check=chk)
    details.update({"W_star": p1.W_star, "cores": len(cs.cores), "bounds": bot.bounds,
                    "x_star": p1.x_star.cost, "x_2star": p2.x.cost,
                    "partition": {"forward": len(part.forward), "backward": len(part.backward),
                                  "cross": len(part.cross), "rest": len(part.rest)}})
    if bot.cut is not None:
        return OracleResult(None, bot.cut, False, base, details)
    links = sorted(set(_uncontract(base, ic, con.vmap, bot.solution.links)) | set(con.cover))
    sol = Solution.of(base, links, candidate=bot.solution.meta.get("candidate"))
    chk(not uncovered_arcs(base, sol.links), "oracle solution is infeasible")
    chk(sol.cost <= bot.solution.cost + con.cover_cost, "uncontraction increased the cost")
    if bot.certified:
        e = consts.eps
        chk(sol.cost <= (Fraction(7, 4) * (1 + e) ** 2 + e) * xbar.cost,
            "oracle: c(S) > (7/4 (1+eps)^2 + eps) c(x)")
        chk(sol.cost <= (Fraction(7, 4) + consts.eps_bar) * xbar.cost,
            "oracle: c(S) > (1.75 + eps_bar) c(x)")
    return OracleResult(sol, None, bot.certified, base, details)


# ---------------------------------------------------------------------------
# drivers

def approx_2(inst: RootedInstance) -> Solution:
    """Union of the exact optima of the up-arc and down-arc instances."""
    if uncovered_arcs(inst):
        raise Infeasible("some arc is covered by no link")
    chosen = set()
    for up in (True, False):
        drop = [a for a in inst.arcs if inst.is_up_arc(a) == up]
        if len(drop) == len(inst.arcs):
            continue
        ic, vmap = contract_arcs(inst, drop)
        sol = _solve_tu(ic)
        chosen.update(_uncontract(inst, ic, vmap, sol.links))
    return Solution.of(inst, chosen, method="approx_2")


def approx_175(inst: RootedInstance, eps_user=Fraction(1, 2), mode: str = "engineering",
               k: int = None, max_cuts: int = 50, dp_budget: int = 200000,
               bf_budget: int = 200000, check: bool = True) -> Solution:
    """The (1.75 + eps) driver: binary search on c*, LP with accumulated cuts.

    Modes: "theoretical" uses the constant k from the analysis (the DP is
    then usually too large and the driver falls back to approx_2);
    "engineering" passes ``k`` (default 3) to the DP and returns the better
    of the pipeline result and approx_2. ``meta`` carries the LP lower
    bound, the cuts, the number of checks and whether the result is
    certified, i.e. cost <= (1.75 + eps) * lp_lower_bound.
    """
    if mode not in ("theoretical", "engineering"):
        raise ValueError(f"unknown mode {mode!r}")
    if uncovered_arcs(inst):
        raise Infeasible("some arc is covered by no link")
    eps_user = _rational(eps_user)
    if mode == "engineering" and k is None:
        k = 3
    chk = Checker(check)
    if not inst.arcs:
        return Solution((), 0, {"lp_lower_bound": Fraction(0), "cuts_emitted": 0,
                                "mode": mode, "assertions_checked": 0, "certified": True,
                                "fallback": None, "cuts": []})
    cmin = min(ln.cost for ln in inst.links)
    scaled = inst.with_links([Link(ln.tail, ln.head, ln.cost / cmin) for ln in inst.links])
    work = shadow_complete(scaled)
    delta = max(ln.cost for ln in work.links)
    consts = ApproxConstants.from_user(eps_user, delta)
    consts.check()
    k_dp = consts.k if mode == "theoretical" else k
    if mode == "theoretical":
        warnings.warn(f"theoretical mode: DP width k = {consts.k}; the DP is only "
                      "tractable on small instances", UserWarning, stacklevel=2)

    cuts = []
    lp_cache, oracle_cache = {}, {}

    def lp():
        n = len(cuts)
        if n not in lp_cache:
            lp_cache[n] = solve_lp(work, [c.constraint for c in cuts])
        return lp_cache[n]

    def oracle():
        n = len(cuts)
        if n not in oracle_cache:
            oracle_cache[n] = partial_separation_oracle(
                work, lp(), consts.eps_bar, delta, k=k_dp, dp_budget=dp_budget,
                bf_budget=bf_budget, check=chk)
        return oracle_cache[n]

    def probe(i):
        cap = (1 + consts.eps_bar) ** (i + 1)
        added = 0
        while True:
            if lp().cost > cap:
                return None
            res = oracle()
            if res.solution is not None:
                return res
            cuts.append(res.cut)
            added += 1
            if added > max_cuts:
                raise IterationBudgetExceeded(f"more than {max_cuts} cuts in one probe")

    fallback = None
    found = None
    try:
        n = len(work.vertices)
        M = 0
        while (1 + consts.eps_bar) ** M < n * n * delta:
            M += 1
        lo, hi = 0, M
        found = probe(hi)
        while found is not None and lo < hi:
            mid = (lo + hi) // 2
            res = probe(mid)
            if res is None:
                lo = mid + 1
            else:
                hi, found = mid, res
        if found is None:
            fallback = "no-solution"
    except IterationBudgetExceeded:
        fallback = "iteration-budget"
    except BudgetExceeded:
        fallback = "dp-budget"
    lb = lp().cost * cmin
    base2 = approx_2(inst)
    if found is None:
        sol, certified_pipe = base2, False
    else:
        links = sorted({lift_shadow(inst, p) for p in found.solution.links})
        sol = Solution.of(inst, links)
        chk(sol.cost <= found.solution.cost * cmin, "lifting the solution increased its cost")
        certified_pipe = found.certified
        if mode == "engineering" and base2.cost < sol.cost:
            sol = base2
    for c in cuts:
        chk(c.rhs <= c.lhs(lp()), "the final LP violates an emitted cut")
    certified = sol.cost <= (Fraction(7, 4) + eps_user) * lb
    meta = {"lp_lower_bound": lb, "cuts_emitted": len(cuts), "mode": mode,
            "assertions_checked": chk.count, "certified": certified,
            "pipeline_certified": certified_pipe, "fallback": fallback,
            "k": k_dp, "cuts": cuts, "work": work, "scale": cmin,
            "method": "approx_2" if sol is base2 else "approx_175"}
    return Solution(sol.links, sol.cost, meta)
