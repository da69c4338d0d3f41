import random
from fractions import Fraction
from pathlib import Path

import networkx as nx
import pytest

from dtap.instance import load_instance
from dtap.oracle import GeneratorConfig, random_instance

DATA = Path(__file__).parent / "data"


def data(name):
    return load_instance(DATA / f"{name}.dtap")


@pytest.fixture
def gap():
    return data("gap")


def rand_inst(seed, n=8, delta=4, **kw):
    return random_instance(GeneratorConfig(n=n, delta=delta, seed=seed, **kw))


def nx_path(inst, u, v):
    """Arcs on the u-v path with a flag telling whether they are covered.

    Uses networkx on the undirected tree, independent of the instance's own
    ancestry tables.
    """
    G = nx.Graph()
    G.add_nodes_from(inst.vertices)
    G.add_edges_from(inst.arcs)
    arcs = set(inst.arcs)
    path = nx.shortest_path(G, u, v)
    out = []
    for a, b in zip(path, path[1:]):
        if (b, a) in arcs:
            out.append(((b, a), True))  # traversed against its direction
        else:
            out.append(((a, b), False))
    return path, out


def random_x(inst, rng, den=4):
    """Random nonnegative rational values on a random subset of the links."""
    from dtap.lp import FractionalSolution
    vals = {}
    for p in inst.link_pairs():
        if rng.random() < 0.7:
            vals[p] = Fraction(rng.randint(1, 2 * den), den)
    return FractionalSolution.from_instance(inst, vals)


def random_sigma(inst, rng, x):
    """A random composition of one to three vertex and apex splittings."""
    from dtap.splitting import IDENTITY, compose, split_at_apex, split_at_vertex
    sigma = IDENTITY
    for _ in range(rng.randint(1, 3)):
        sup = sorted(sigma.support(x.x))
        if rng.random() < 0.5:
            v = rng.choice(inst.vertices)
            step = split_at_vertex(inst, v, [p for p in sup if rng.random() < 0.6])
        else:
            step = split_at_apex(inst, [p for p in sup if rng.random() < 0.6])
        sigma = compose(step, sigma)
    return sigma


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
