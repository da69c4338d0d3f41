import json
import random
from fractions import Fraction

import pytest

from dtap.errors import InstanceError
from dtap.instance import (Link, RootedInstance, contract_arcs, generic_shadow,
                           is_feasible, is_shadow_complete, parse_instance,
                           shadow_complete, shadows, uncovered_arcs)

from conftest import data, nx_path, rand_inst


def test_parse_smallest():
    inst = parse_instance("root r\narc a r\nlink r a 1\n")
    assert inst.n == 2 and len(inst.arcs) == 1 and len(inst.links) == 1


def test_parse_gap_file(gap):
    assert len(gap.vertices) == 6 and len(gap.arcs) == 5 and len(gap.links) == 5
    assert all(ln.cost == 1 for ln in gap.links)


def test_parse_rationals_and_comments():
    inst = parse_instance("# c\nroot r\narc a r  # tail\nlink r a 1.5\n")
    assert inst.cost[("r", "a")] == Fraction(3, 2)
    inst = parse_instance("root r\narc a r\nlink r a 7/3\n")
    assert inst.cost[("r", "a")] == Fraction(7, 3)


@pytest.mark.parametrize("text,frag", [
    ("root r\narc a r\narc a r\nlink r a 1\n", "not a tree"),
    ("root r\narc a r\nlink r a 0\n", "non-positive"),
    ("root r\narc a r\nlink r b 1\n", "unknown vertex"),
    ("root r\narc a r\nlinky r a 1\n", "malformed"),
    ("arc a r\n", "missing root"),
])
def test_parse_errors(text, frag):
    with pytest.raises(InstanceError) as ei:
        parse_instance(text)
    assert frag in str(ei.value)


def test_parse_error_has_line_number():
    with pytest.raises(InstanceError) as ei:
        parse_instance("root r\narc a r\nlink r a -1\n")
    assert ei.value.line == 3


def test_non_tree_cycle():
    with pytest.raises(InstanceError):
        RootedInstance(["r", "a", "b"], [("a", "r"), ("b", "a"), ("r", "b")], [], "r")


def test_json_round_trip():
    inst = rand_inst(3)
    again = parse_instance(json.dumps(inst.to_json()))
    assert again == inst
    assert parse_instance(inst.to_text()) == inst


def test_self_loops_and_empty_links_dropped():
    with pytest.warns(UserWarning):
        inst = RootedInstance(["r", "a"], [("a", "r")], [("a", "a", 1), ("a", "r", 1),
                                                          ("r", "a", 2)], "r")
    assert inst.link_pairs() == [("r", "a")]


def test_parallel_links_keep_cheapest():
    inst = RootedInstance(["r", "a"], [("a", "r")], [("r", "a", 5), ("r", "a", 2)], "r")
    assert inst.cost[("r", "a")] == 2 and len(inst.links) == 1


def test_path_view_single_arc():
    inst = parse_instance("root r\narc a r\nlink r a 1\n")
    pv = inst.path_view(("r", "a"))
    assert pv.fwd == {("a", "r")} and pv.apex == "r" and not pv.bwd


def test_path_view_chain_of_up_arcs():
    inst = parse_instance("root r\narc b r\narc c b\nlink r c 1\n")
    pv = inst.path_view(("r", "c"))
    assert pv.fwd == {("b", "r"), ("c", "b")} and pv.bwd == frozenset()


def test_path_view_against_networkx():
    for seed in range(15):
        inst = rand_inst(seed, n=10)
        rng = random.Random(seed)
        for _ in range(20):
            u, v = rng.sample(inst.vertices, 2)
            pv = inst.path_view((u, v))
            path, arcs = nx_path(inst, u, v)
            assert list(pv.vertices) == path
            assert pv.fwd == {a for a, cov in arcs if cov}
            assert pv.bwd == {a for a, cov in arcs if not cov}
            assert pv.fwd.isdisjoint(pv.bwd)
            assert pv.apex == min(path, key=lambda w: inst.depth[w])


def _cover_set(inst, p):
    return inst.path_view(p).fwd


def test_generic_shadow_is_minimal_equal_cover():
    for seed in range(15):
        inst = rand_inst(seed, n=9)
        rng = random.Random(seed)
        for _ in range(15):
            u, v = rng.sample(inst.vertices, 2)
            cov = _cover_set(inst, (u, v))
            gs = generic_shadow(inst, (u, v))
            if not cov:
                assert gs is None
                continue
            same = [s for s in shadows(inst, (u, v)) if _cover_set(inst, s) == cov]
            shortest = min(same, key=lambda s: len(inst.path_view(s).vertices))
            assert gs == shortest
            assert len(inst.path_view(gs).vertices) <= len(inst.path_view((u, v)).vertices)


def test_generic_shadow_trims_wrong_first_arc():
    inst = parse_instance("root r\narc a r\narc b r\nlink a b 1\n")
    # a->r traverses (a,r) forward (wrong), r->b traverses (b,r) backward
    assert generic_shadow(inst, ("a", "b")) == ("r", "b")


def test_shadow_complete_chain():
    inst = parse_instance("root r\narc b r\narc c b\nlink r c 5\n")
    full = shadow_complete(inst)
    assert full.cost == {("r", "c"): 5, ("r", "b"): 5, ("b", "c"): 5}
    assert is_shadow_complete(full)
    assert shadow_complete(full).cost == full.cost


def test_shadow_complete_min_rule():
    inst = parse_instance("root r\narc b r\narc c b\nlink r c 3\nlink b c 7\n")
    assert shadow_complete(inst).cost[("b", "c")] == 3


def test_shadow_complete_never_increases_costs():
    for seed in range(10):
        inst = rand_inst(seed)
        full = shadow_complete(inst)
        for p, c in inst.cost.items():
            assert full.cost[p] <= c
        assert shadow_complete(full).cost == full.cost


def test_contract_trivial_cases():
    inst = rand_inst(1)
    c, vmap = contract_arcs(inst, [])
    assert set(c.arcs) == set(inst.arcs) and all(vmap[v] == v for v in inst.vertices)
    c, vmap = contract_arcs(inst, inst.arcs)
    assert c.n == 1 and not c.links


def test_contract_coverage_oracle():
    for seed in range(15):
        inst = rand_inst(seed, n=9)
        rng = random.Random(seed)
        A = [a for a in inst.arcs if rng.random() < 0.4]
        c, vmap = contract_arcs(inst, A)
        for ln in inst.links:
            img = (vmap[ln.tail], vmap[ln.head])
            left = {(vmap[t], vmap[h]) for t, h in inst.path_view(ln.pair).fwd
                    if (t, h) not in A}
            if img[0] == img[1] or not left:
                assert img not in c.cost
                continue
            _, arcs = nx_path(c, *img)
            assert {a for a, cov in arcs if cov} == left
            assert c.cost[img] <= ln.cost


def test_is_feasible():
    assert is_feasible(data("example"))
    inst = RootedInstance(["r", "a"], [("a", "r")], [], "r")
    assert not is_feasible(inst)
    with pytest.warns(UserWarning):
        inst = parse_instance("root r\narc r a\nlink r a 1\n")  # wrong direction only
    assert not is_feasible(inst)


def test_is_feasible_scan():
    for seed in range(10):
        inst = rand_inst(seed, feasible=False, m=5)
        scan = all(any(a in inst.path_view(p).fwd for p in inst.link_pairs())
                   for a in inst.arcs)
        assert is_feasible(inst) == scan == (not uncovered_arcs(inst))


def test_example_solution_is_feasible():
    inst = data("example")
    sol = [("v2", "v11"), ("v4", "v3"), ("v6", "v7"), ("v12", "v8"), ("v9", "v10")]
    assert is_feasible(inst, sol)
    assert not is_feasible(inst, sol[1:])


def test_subtree_view():
    inst = data("example")
    st = inst.subtree(inst.root)
    assert st.vertices == set(inst.vertices) and st.parent_arc is None
    st = inst.subtree("v3")
    assert st.parent_arc == ("v3", "v1")
    assert st.up_arcs == {("v7", "v3")} and st.down_arcs == {("v3", "v6"), ("v7", "v12")}


def test_link_kinds():
    inst = data("willow_small")
    assert inst.link_kind(("v11", "r")) == "up"
    assert inst.link_kind(("v15", "v6")) == "cross"
    assert inst.link_kind(Link("v3", "v4")) == "cross"
