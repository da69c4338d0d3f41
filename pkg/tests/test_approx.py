import math
import random
from fractions import Fraction

import pytest

from dtap.approx import (ApproxConstants, Checker, approx_2, approx_175, best_of_three,
                         build_core_structure, classify_heavy, contract_and_cover_zeta1,
                         partial_separation_oracle, partition_links,
                         phase1_light_splitting, phase2_core_splitting)
from dtap.errors import Infeasible, PreconditionViolation, PropertyViolation
from dtap.instance import Link, RootedInstance, parse_instance, shadow_complete, uncovered_arcs
from dtap.lp import FractionalSolution, covers, solve_lp
from dtap.oracle import brute_force_opt
from dtap.splitting import apply

from conftest import data, nx_path, rand_inst, random_x


# constants

def test_constants_inequalities_grid():
    for eb in (Fraction(1, 100), Fraction(1, 20), Fraction(1, 3), Fraction(7, 10), 1, 5):
        for d in (1, Fraction(3, 2), 4, 100):
            c = ApproxConstants.from_eps_bar(eb, d)
            assert all(c.inequalities().values())
            c.check()
            assert c.eps == min(Fraction(1), Fraction(eb)) / 7
            assert c.k == math.ceil((1 + 1 / c.gamma) * c.zeta2)


def test_constants_worked_example():
    # internal eps = 1/10 and delta = 1
    c = ApproxConstants.from_eps_bar(Fraction(7, 10), 1)
    assert c.eps == Fraction(1, 10)
    assert c.gamma == Fraction(1, 20)
    assert c.zeta1 == 20
    assert c.zeta2 == Fraction(6 * 20, 1) / (Fraction(1, 10) * Fraction(9, 10))
    assert c.k == 21 * c.zeta2 == 28000


def test_constants_from_user():
    c = ApproxConstants.from_user(Fraction(1, 2), 2)
    assert c.eps_bar == Fraction(1, 20)
    assert ApproxConstants.from_user(50, 1).eps_bar == 1
    assert ApproxConstants.from_user(0.5, 1).eps_user == Fraction(1, 2)
    with pytest.raises(ValueError):
        ApproxConstants.from_user(0, 1)
    with pytest.raises(ValueError):
        ApproxConstants.from_eps_bar(1, Fraction(1, 2))


def test_checker():
    chk = Checker()
    chk(True, "fine")
    with pytest.raises(PropertyViolation):
        chk(False, "boom")
    assert chk.count == 2


# heavy classification and the zeta1 contraction

def test_classify_heavy_matches_path_oracle():
    for seed in range(15):
        rng = random.Random(seed)
        inst = rand_inst(seed)
        x = random_x(inst, rng)
        alpha = Fraction(rng.randint(1, 6), 2)
        fl = classify_heavy(inst, x, alpha)
        fwd = {a: Fraction(0) for a in inst.arcs}
        bwd = dict(fwd)
        for p, v in x.x.items():
            for a, cov in nx_path(inst, *p)[1]:
                (fwd if cov else bwd)[a] += v
        for a in inst.arcs:
            assert fl.covered[a] == (fwd[a] >= alpha)
            assert fl.heavy[a] == (bwd[a] >= alpha)
        for p in inst.link_pairs():
            exp = any(fl.heavy[a] for a, cov in nx_path(inst, *p)[1] if not cov)
            assert fl.involved[p] == exp


def test_zeta1_nothing_to_contract():
    inst = shadow_complete(rand_inst(3))
    x = solve_lp(inst)
    c = ApproxConstants.from_eps_bar(1, 4)
    con = contract_and_cover_zeta1(inst, x, c)
    assert con.cover == () and con.cover_cost == 0
    assert con.instance is inst and all(k == v for k, v in con.vmap.items())


def test_zeta1_everything_contracted():
    inst = parse_instance("root r\narc a r\narc r b\narc b c\nlink r a 1\nlink c r 2\n")
    x = FractionalSolution.from_instance(inst, {("r", "a"): 200, ("c", "r"): 200})
    c = ApproxConstants.from_eps_bar(1, 2)
    con = contract_and_cover_zeta1(inst, x, c)
    assert not con.instance.arcs
    assert not uncovered_arcs(inst, con.cover)
    assert con.cover_cost == 3 <= c.eps * x.cost


def test_zeta1_random_heavy():
    c = ApproxConstants.from_eps_bar(1, 4)
    seen = 0
    for seed in range(20):
        rng = random.Random(seed)
        inst = shadow_complete(rand_inst(seed))
        x = solve_lp(inst).scaled(rng.choice([5, 10, 20, 40]))
        con = contract_and_cover_zeta1(inst, x, c)
        recount = sum((inst.cost[p] for p in con.cover), Fraction(0))
        assert recount == con.cover_cost <= c.eps * x.cost
        left = uncovered_arcs(inst, con.cover)
        assert not (left & set(con.contracted))
        assert len(con.instance.arcs) == len(inst.arcs) - len(con.contracted)
        seen += bool(con.contracted)
    assert seen > 5


# phase 1, cores, phase 2

def _phase_inputs(seed):
    inst = shadow_complete(rand_inst(seed, n=9))
    x = solve_lp(inst)
    c = ApproxConstants.from_eps_bar(1, max(ln.cost for ln in inst.links))
    return inst, x, c


def test_phase1_random():
    for seed in range(25):
        inst, x, c = _phase_inputs(seed)
        chk = Checker()
        res = phase1_light_splitting(inst, x, c, chk)
        assert chk.count > 0
        assert apply(x, res.sigma, inst).x == res.x_star.x
        assert res.x_star.cost <= (1 + c.eps) * x.cost
        assert covers(inst, res.x_star)
        assert inst.root in res.W_star
        assert set(res.W_star) == set(res.W_up) | set(res.W_down) | {inst.root}


def test_phase1_precondition():
    inst = parse_instance("root r\narc a r\nlink r a 1\n")
    x = FractionalSolution.from_instance(inst, {("r", "a"): 100})
    with pytest.raises(PreconditionViolation):
        phase1_light_splitting(inst, x, ApproxConstants.from_eps_bar(1, 1))


def test_no_heavy_arcs_no_cores():
    inst, x, c = _phase_inputs(1)
    cs = build_core_structure(inst, x, c)
    assert cs.heavy == frozenset() and cs.cores == () and cs.X == frozenset()


def test_three_trunks():
    inst = data("trunks")
    vals = {p: 1 for p in inst.link_pairs()}
    for p in [("v8", "z"), ("v11", "z"), ("v7", "z")]:
        vals[p] = 700
    x = FractionalSolution.from_instance(inst, vals)
    cs = build_core_structure(inst, x, ApproxConstants.from_eps_bar(1, 1))
    assert len(cs.cores) == 1
    core = cs.cores[0]
    assert core.kind == "up" and core.root == "v1"
    assert core.bases == ("v7", "v8", "v11")
    assert [t.vertices for t in core.trunks] == [("v7", "v3", "v1"),
                                                 ("v8", "v5", "v2", "v1"),
                                                 ("v11", "v9", "v5")]
    assert [t.top for t in core.trunks] == ["v1", "v1", "v5"]
    assert [t.sibling for t in core.trunks] == [None, None, "v8"]
    assert core.vertices == {"v1", "v2", "v3", "v5", "v7", "v8", "v9", "v11"}
    assert core.root_arcs(inst) == {"v2", "v3"}


def test_core_structure_random_invariants():
    found = 0
    for seed in range(30):
        rng = random.Random(seed)
        inst = rand_inst(seed, n=10)
        x = random_x(inst, rng).scaled(rng.choice([100, 300, 700]))
        c = ApproxConstants.from_eps_bar(1, 1)
        cs = build_core_structure(inst, x, c)
        for core in cs.cores:
            found += 1
            arcs = [w for t in core.trunks for w in t.vertices[:-1]]
            assert len(arcs) == len(set(arcs)) and set(arcs) == core.arcs
            for a in core.bases:
                assert not any(a != b and inst.is_ancestor(a, b) for b in core.bases)
        assert cs.heavy <= set().union(*[cc.arcs for cc in cs.cores])
    assert found > 5


def test_star_core_pipeline():
    # a down-core whose single trunk is shared by many backward links
    n = 700
    verts = ["w", "v"] + [f"l{i}" for i in range(n)]
    arcs = [("w", "v")] + [(f"l{i}", "v") for i in range(n)]
    links = [Link("v", "w", 1)] + [Link("w", f"l{i}", 1) for i in range(n)]
    inst = RootedInstance(verts, arcs, links, "w")
    x = FractionalSolution.from_instance(inst, {ln.pair: 1 for ln in links})
    c = ApproxConstants.from_eps_bar(1, 1)
    assert c.zeta2 == 686
    chk = Checker()
    p1 = phase1_light_splitting(inst, x, c, chk)
    assert len(p1.W_star) == n + 2
    cs = build_core_structure(inst, p1.x_star, c, chk)
    assert len(cs.cores) == 1
    core = cs.cores[0]
    assert (core.kind, core.root, core.bases) == ("down", "w", ("v",))
    assert core.trunks[0].vertices == ("v", "w")
    p2 = phase2_core_splitting(inst, p1.x_star, cs, c, x=x, universe=p1.universe, check=chk)
    part = partition_links(inst, p2.x, p1.W_star, cs, chk)
    assert (len(part.forward), len(part.backward), len(part.cross), len(part.rest)) == (1, n, 0, 0)
    bot = best_of_three(inst, p2.x, part, c, cs, k=0, check=chk)
    assert bot.certified and bot.solution.cost == n + 1
    assert chk.count > 1000


def test_phase2_and_partition_random():
    for seed in range(15):
        inst, x, c = _phase_inputs(seed)
        chk = Checker()
        p1 = phase1_light_splitting(inst, x, c, chk)
        cs = build_core_structure(inst, p1.x_star, c, chk)
        p2 = phase2_core_splitting(inst, p1.x_star, cs, c, x=x, universe=p1.universe,
                                   check=chk)
        assert p2.x.cost <= (1 + c.eps) ** 2 * x.cost
        part = partition_links(inst, p2.x, p1.W_star, cs, chk)
        blocks = [part.forward, part.backward, part.cross, part.rest]
        assert sum(map(len, blocks)) == len(set().union(*blocks)) == len(p2.x.x)
        bot = best_of_three(inst, p2.x, part, c, cs, k=3, check=chk)
        if bot.solution is not None:
            assert not uncovered_arcs(inst, bot.solution.links)
            combo = bot.bounds["x1"] / 4 + bot.bounds["x2"] / 2 + bot.bounds["x3"] / 4
            assert combo <= Fraction(7, 4) * p2.x.cost
            if bot.certified:
                assert bot.solution.cost <= combo


# oracle

def test_engineered_cut_is_valid():
    inst = data("cut")
    vals = {ln.pair: Fraction(1, 2) for ln in inst.links}
    vals[("v6", "v1")] = Fraction(1, 10)
    x = FractionalSolution.from_instance(inst, vals)
    assert covers(inst, x) and x.cost == Fraction(13, 5)
    r = partial_separation_oracle(inst, x, Fraction(1, 20), k=3)
    assert r.solution is None and r.cut is not None
    assert r.cut.lhs(x) == Fraction(13, 5) < r.cut.rhs == 3
    opt = brute_force_opt(r.instance)
    assert r.cut.lhs({p: 1 for p in opt.links}) >= r.cut.rhs
    assert r.cut.to_json()["rhs"] == "3/1"


def test_oracle_on_gap(gap):
    x = solve_lp(gap)
    assert x.cost == Fraction(5, 2)
    r = partial_separation_oracle(gap, x, Fraction(1, 20), k=3)
    if r.solution is not None:
        assert not uncovered_arcs(r.instance, r.solution.links)
        if r.certified:
            assert r.solution.cost <= (Fraction(7, 4) + Fraction(1, 20)) * x.cost
    else:
        assert r.cut.violated_by(x)
        opt = brute_force_opt(r.instance)
        assert r.cut.lhs({p: 1 for p in opt.links}) >= r.cut.rhs


def test_oracle_integral_x(gap):
    opt = brute_force_opt(gap)
    x = FractionalSolution.from_instance(gap, {p: 1 for p in opt.links})
    r = partial_separation_oracle(gap, x, Fraction(1, 20), k=3)
    assert r.solution is not None and r.certified
    assert r.solution.cost <= Fraction(7, 4) * opt.cost + Fraction(1, 20) * opt.cost


def test_oracle_preconditions(gap):
    x = FractionalSolution.from_instance(gap, {})
    with pytest.raises(PreconditionViolation):
        partial_separation_oracle(gap, x, Fraction(1, 20))
    cheap = gap.with_links([Link(ln.tail, ln.head, Fraction(1, 2)) for ln in gap.links])
    with pytest.raises(PreconditionViolation):
        partial_separation_oracle(cheap, solve_lp(cheap), Fraction(1, 20))


# drivers

def test_approx_2_ratio():
    for seed in range(40):
        inst = rand_inst(seed, n=9)
        opt = brute_force_opt(inst).cost
        s = approx_2(inst)
        assert not uncovered_arcs(inst, s.links)
        assert opt <= s.cost <= 2 * opt


def test_single_arc():
    inst = parse_instance("root r\narc r a\nlink a r 3\nlink a r 2\n")
    assert approx_2(inst).cost == 2
    s = approx_175(inst)
    assert s.cost == 2 and s.meta["certified"]


def test_no_arcs_and_infeasible():
    inst = parse_instance("root r\n")
    assert approx_175(inst).cost == 0
    bad = parse_instance("root r\narc r a\n")
    with pytest.raises(Infeasible):
        approx_2(bad)
    with pytest.raises(Infeasible):
        approx_175(bad)
    with pytest.raises(ValueError):
        approx_175(data("gap"), mode="fast")


def test_approx_175_gap(gap):
    s = approx_175(gap)
    assert s.cost == 3
    assert s.meta["lp_lower_bound"] <= 3
    assert s.meta["assertions_checked"] > 0


def test_approx_175_random():
    for seed in range(20):
        inst = rand_inst(seed, n=8)
        opt = brute_force_opt(inst).cost
        s = approx_175(inst, Fraction(1, 2), k=3)
        assert not uncovered_arcs(inst, s.links)
        assert opt <= s.cost <= 2 * opt
        assert s.meta["lp_lower_bound"] <= opt
        if s.meta["certified"]:
            assert s.cost <= (Fraction(7, 4) + Fraction(1, 2)) * s.meta["lp_lower_bound"]
        work = s.meta["work"]
        if s.meta["cuts"]:
            z = brute_force_opt(work)
            for cut in s.meta["cuts"]:
                assert cut.lhs({p: 1 for p in z.links}) >= cut.rhs


def test_theoretical_mode():
    inst = rand_inst(2, n=7)
    with pytest.warns(UserWarning, match="theoretical mode"):
        s = approx_175(inst, mode="theoretical")
    assert s.meta["k"] == ApproxConstants.from_user(Fraction(1, 2), s.meta["work"].cost_ratio()).k
    assert not uncovered_arcs(inst, s.links)
    assert s.cost <= 2 * brute_force_opt(inst).cost
