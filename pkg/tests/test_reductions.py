from fractions import Fraction
from itertools import product

import networkx as nx
import pytest

from dtap.errors import InstanceError, NotACover
from dtap.instance import uncovered_arcs
from dtap.lp import solve_lp
from dtap.oracle import brute_force_opt
from dtap.reductions import (BiDirectedCoverInstance, Multi2TapInstance, bidirected_to_wdtap,
                             gen_3dm_instance, integrality_gap_instance, is_2cover,
                             is_bidirected_cover, m2tap_to_bidirected, m2tap_to_wdtap,
                             matching_solution, multiset_cost, opt_2cover, opt_bidirected,
                             orient_2cover, orient_exhaustive, perfect_matchings, random_3dm,
                             random_m2tap, wdtap_to_bidirected)

from conftest import rand_inst


def _crossed(inst, u, v):
    """Tree edges on the u-v path, via networkx."""
    G = nx.Graph(inst.edges)
    G.add_nodes_from(inst.vertices)
    path = nx.shortest_path(G, u, v)
    idx = {frozenset(e): i for i, e in enumerate(inst.edges)}
    return [idx[frozenset(e)] for e in zip(path, path[1:])]


def _opt_2cover_enum(inst):
    best = None
    for mult in product((0, 1, 2), repeat=len(inst.links)):
        cnt = [0] * len(inst.edges)
        for j, k in enumerate(mult):
            for i in _crossed(inst, *inst.links[j][:2]):
                cnt[i] += k
        if min(cnt, default=2) >= 2:
            c = sum((k * inst.links[j][2] for j, k in enumerate(mult)), Fraction(0))
            best = c if best is None else min(best, c)
    return best


def test_m2tap_validation():
    with pytest.raises(InstanceError):
        Multi2TapInstance(["a", "b"], [("a", "b")], [("a", "c", 1)])
    with pytest.raises(InstanceError):
        Multi2TapInstance(["a", "b"], [("a", "b")], [("a", "b", 0)])
    with pytest.raises(InstanceError):
        BiDirectedCoverInstance(["a", "b"], [("a", "b")], [("a", "b", -1)])


def test_json_round_trip():
    inst = random_m2tap(6, 1)
    back = Multi2TapInstance.from_json(inst.to_json())
    assert back.links == inst.links and back.edges == inst.edges


def test_is_2cover_small():
    inst = Multi2TapInstance(["a", "b", "c"], [("a", "b"), ("b", "c")],
                             [("a", "c", 1), ("a", "b", 1)])
    assert is_2cover(inst, [0, 0])
    assert not is_2cover(inst, [0, 1])
    assert multiset_cost(inst, [0, 0, 1]) == 3


def test_opt_2cover_matches_enumeration():
    for seed in range(12):
        inst = random_m2tap(5, seed, m=6)
        c, F = opt_2cover(inst)
        assert is_2cover(inst, F) and multiset_cost(inst, F) == c
        assert c == _opt_2cover_enum(inst)


def test_bidirected_cover_check():
    bd = BiDirectedCoverInstance(["a", "b"], [("a", "b")], [("a", "b", 1), ("b", "a", 1)])
    assert not is_bidirected_cover(bd, [("a", "b")])
    assert is_bidirected_cover(bd, [("a", "b"), ("b", "a")])


def test_reduction_structure():
    inst = random_m2tap(5, 3)
    bd = m2tap_to_bidirected(inst)
    assert len(bd.links) == 2 * len(inst.links)
    w = bidirected_to_wdtap(bd)
    assert len(w.vertices) == len(inst.vertices) + len(inst.edges)
    assert len(w.arcs) == 2 * len(inst.edges)
    assert w.root == inst.vertices[0]


def test_reduction_preserves_optimum_and_orientation():
    for seed in range(30):
        inst = random_m2tap(6, seed)
        c2, F = opt_2cover(inst)
        red = m2tap_to_wdtap(inst)
        opt = brute_force_opt(red.instance)
        assert opt.cost == c2
        bd = m2tap_to_bidirected(inst)
        picked = red.pull_back(opt.links)
        assert is_bidirected_cover(bd, [bd.links[j][:2] for j in picked])
        if len(bd.links) <= 12:
            assert opt_bidirected(bd)[0] == c2
        oriented = orient_2cover(inst, F)
        assert sorted(j for j, _, _ in oriented) == sorted(F)
        assert is_bidirected_cover(inst, [(u, v) for _, u, v in oriented])
        assert orient_exhaustive(inst, F) is not None


def test_orient_rejects_non_cover():
    inst = random_m2tap(5, 0)
    with pytest.raises(NotACover):
        orient_2cover(inst, [0])
    with pytest.raises(NotACover):
        orient_2cover(inst, [99])


def test_wdtap_round_trip():
    for seed in range(8):
        inst = rand_inst(seed, n=6, m=7)
        bd = wdtap_to_bidirected(inst)
        assert sum(1 for o in bd.origin if o[0] == "arc") == len(inst.arcs)
        red = bidirected_to_wdtap(bd)
        assert brute_force_opt(red).cost == brute_force_opt(inst).cost


def test_gap_instance():
    g = integrality_gap_instance()
    assert solve_lp(g).cost == Fraction(5, 2)
    assert brute_force_opt(g).cost == 3


def test_3dm_small_cases():
    M = [(1, 1, 1), (2, 2, 2), (1, 2, 1)]
    inst, key = gen_3dm_instance(M, 2)
    assert key["has_perfect_matching"] and key["target"] == 5
    sol = matching_solution(M, key["matching"])
    assert len(sol) == key["target"] and not uncovered_arcs(inst, sol)
    assert brute_force_opt(inst).cost == 5
    M = [(1, 1, 1), (2, 1, 2), (1, 2, 2)]
    inst, key = gen_3dm_instance(M, 2)
    assert not perfect_matchings(M, 2)
    assert brute_force_opt(inst).cost == 6 > key["target"]


def test_3dm_random():
    for q in (1, 2, 3):
        for seed in range(3):
            inst, key = random_3dm(q, seed, planted=True)
            assert brute_force_opt(inst).cost == key["target"]
            if q > 1:
                inst, key = random_3dm(q, seed, planted=False)
                assert not key["has_perfect_matching"]
                assert brute_force_opt(inst).cost > key["target"]
    with pytest.raises(ValueError):
        random_3dm(1, 0, planted=False)


def test_3dm_bad_triples():
    with pytest.raises(InstanceError):
        gen_3dm_instance([(1, 1, 3)], 2)
    with pytest.raises(InstanceError):
        gen_3dm_instance([(1, 1, 1), (1, 1, 1)], 1)
