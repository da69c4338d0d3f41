"""Ground truth: exact search solvers, seeded generators and a ratio harness.

The exact solvers here share no code with the LP or DP solvers; tests use
them as independent oracles.
"""

from __future__ import annotations

import random
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

from .errors import BudgetExceeded, Infeasible
from .instance import Link, RootedInstance, Solution, fmt_fraction


def _masks(inst: RootedInstance):
    aidx = {inst.arc_low(a): i for i, a in enumerate(inst.arcs)}
    pairs = inst.link_pairs()
    masks = []
    for p in pairs:
        m = 0
        for w in inst.path_view(p).fwd_low:
            m |= 1 << aidx[w]
        masks.append(m)
    return pairs, masks, [inst.cost[p] for p in pairs]


def exhaustive_opt(inst: RootedInstance, max_links: int = 18) -> Solution:
    """Optimum by enumerating every link subset."""
    pairs, masks, costs = _masks(inst)
    m = len(pairs)
    if m > max_links:
        raise BudgetExceeded(f"{m} links is too many for exhaustive enumeration")
    full = (1 << len(inst.arcs)) - 1
    cov = [0] * (1 << m)
    cst = [Fraction(0)] * (1 << m)
    best, arg = None, None
    for s in range(1 << m):
        if s:
            low = s & -s
            j = low.bit_length() - 1
            cov[s] = cov[s ^ low] | masks[j]
            cst[s] = cst[s ^ low] + costs[j]
        if cov[s] == full and (best is None or cst[s] < best):
            best, arg = cst[s], s
    if best is None:
        raise Infeasible("instance is infeasible")
    return Solution([pairs[j] for j in range(m) if arg >> j & 1], best)


def _lp_bound(masks, costs, avail, need, n_arcs):
    """Float LP bound on covering ``need`` with ``avail`` links, minus a safety margin."""
    cols = [j for j in avail if masks[j] & need]
    rows = [i for i in range(n_arcs) if need >> i & 1]
    if not rows:
        return 0.0
    A = np.zeros((len(rows), len(cols)))
    for c, j in enumerate(cols):
        for r, i in enumerate(rows):
            if masks[j] >> i & 1:
                A[r, c] = 1.0
    res = linprog([float(costs[j]) for j in cols], A_ub=-A, b_ub=-np.ones(len(rows)),
                  bounds=(0, None), method="highs")
    if res.status != 0:
        return float("inf") if res.status == 2 else 0.0
    return res.fun - 1e-6 * (1 + abs(res.fun))


def brute_force_opt(inst: RootedInstance, budget: int = 200000,
                    lp_bound: bool = True) -> Solution:
    """Exact optimum by branch and bound.

    Branches on the uncovered arc with the fewest candidate links, trying
    candidates in order of cost per newly covered arc; each later branch
    excludes the earlier candidates. Nodes are pruned by a packing bound
    and, near the top of the tree, by the LP relaxation (HiGHS, with a
    safety margin). ``budget`` counts explored nodes.
    """
    pairs, masks, costs = _masks(inst)
    n_arcs = len(inst.arcs)
    full = (1 << n_arcs) - 1
    union = 0
    for m in masks:
        union |= m
    if union != full:
        raise Infeasible("some arc is covered by no link")
    m = len(pairs)
    # drop dominated links
    keep = []
    for j in range(m):
        dominated = False
        for k in range(m):
            if k != j and masks[j] & ~masks[k] == 0 and (
                    costs[k] < costs[j] or (costs[k] == costs[j] and
                                            (masks[k] != masks[j] or k < j))):
                dominated = True
                break
        if not dominated:
            keep.append(j)
    by_arc = [[j for j in keep if masks[j] >> i & 1] for i in range(n_arcs)]
    best = [sum(costs[j] for j in keep) + 1, None]
    nodes = [0]

    def packing(need, banned):
        lb = Fraction(0)
        blocked = 0
        arcs = [i for i in range(n_arcs) if need >> i & 1]
        mins = {}
        for i in arcs:
            cands = [j for j in by_arc[i] if not banned >> j & 1]
            if not cands:
                return None
            mins[i] = (min(costs[j] for j in cands), cands)
        for i in sorted(arcs, key=lambda i: -mins[i][0]):
            if blocked >> i & 1:
                continue
            c, cands = mins[i]
            lb += c
            for j in cands:
                blocked |= masks[j]
        return lb

    def rec(covered, cost, chosen, banned, depth):
        nodes[0] += 1
        if nodes[0] > budget:
            raise BudgetExceeded(f"branch and bound exceeded {budget} nodes")
        need = full & ~covered
        if not need:
            if cost < best[0]:
                best[0], best[1] = cost, list(chosen)
            return
        lb = packing(need, banned)
        if lb is None or cost + lb >= best[0]:
            return
        if lp_bound and depth <= 3 and len(keep) > 12:
            avail = [j for j in keep if not banned >> j & 1]
            if cost + Fraction(_lp_bound(masks, costs, avail, need, n_arcs)) >= best[0]:
                return
        arc = min((i for i in range(n_arcs) if need >> i & 1),
                  key=lambda i: (sum(1 for j in by_arc[i] if not banned >> j & 1), i))
        cands = [j for j in by_arc[arc] if not banned >> j & 1]
        cands.sort(key=lambda j: (costs[j] / bin(masks[j] & need).count("1"), j))
        for j in cands:
            chosen.append(j)
            rec(covered | masks[j], cost + costs[j], chosen, banned, depth + 1)
            chosen.pop()
            banned |= 1 << j

    rec(0, Fraction(0), [], 0, 0)
    return Solution([pairs[j] for j in best[1]], best[0], {"nodes": nodes[0]})


# ---------------------------------------------------------------------------
# generators

@dataclass
class GeneratorConfig:
    n: int = 8
    bias: float = 0.5  # probability that an arc points toward the root
    m: int | None = None  # random links before feasibility injection; default 2n
    delta: int = 1  # costs are drawn from [1, delta]
    denominator: int = 1  # cost granularity
    seed: int = 0
    feasible: bool = True

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if not 0 <= self.bias <= 1:
            raise ValueError("bias must lie in [0, 1]")
        if self.delta < 1:
            raise ValueError("delta must be at least 1")


def random_tree(rng: random.Random, n: int, bias: float):
    verts = [f"v{i}" for i in range(n)]
    arcs = []
    for i in range(1, n):
        p = verts[rng.randrange(i)]
        arcs.append((verts[i], p) if rng.random() < bias else (p, verts[i]))
    return verts, arcs


def _cost(rng, cfg_delta, den):
    return Fraction(rng.randint(den, cfg_delta * den), den)


def direct_link(inst: RootedInstance, v) -> tuple:
    """The single-arc link covering a_v."""
    p = inst.parent[v]
    return (p, v) if inst.is_up[v] else (v, p)


def random_instance(cfg: GeneratorConfig) -> RootedInstance:
    """Seeded random instance; direct links are added for uncovered arcs."""
    rng = random.Random(cfg.seed)
    verts, arcs = random_tree(rng, cfg.n, cfg.bias)
    skeleton = RootedInstance(verts, arcs, [], verts[0])
    m = 2 * cfg.n if cfg.m is None else cfg.m
    links = []
    tries = 0
    while len(links) < m and tries < 50 * (m + 1):
        tries += 1
        u, v = rng.sample(verts, 2)
        if skeleton.path_view((u, v)).fwd:
            links.append(Link(u, v, _cost(rng, cfg.delta, cfg.denominator)))
    if cfg.feasible:
        covered = set()
        for ln in links:
            covered |= skeleton.path_view(ln.pair).fwd_low
        for w in verts[1:]:
            if w not in covered:
                t, h = direct_link(skeleton, w)
                links.append(Link(t, h, _cost(rng, cfg.delta, cfg.denominator)))
    return RootedInstance(verts, arcs, links, verts[0], quiet=True)


def random_willow(n: int = 8, delta: int = 1, seed: int = 0, m: int | None = None,
                  bias: float = 0.5) -> RootedInstance:
    """Seeded random willow: random candidate links are kept while the
    instance stays a willow; direct links then make it feasible."""
    from .willow import is_willow

    rng = random.Random(seed)
    verts, arcs = random_tree(rng, n, bias)
    inst = RootedInstance(verts, arcs, [], verts[0])
    m = 2 * n if m is None else m
    links = []
    for _ in range(6 * m):
        if len(links) >= m:
            break
        u, v = rng.sample(verts, 2)
        if not inst.path_view((u, v)).fwd:
            continue
        cand = links + [Link(u, v, _cost(rng, delta, 1))]
        if is_willow(inst, cand):
            links = cand
    covered = set()
    for ln in links:
        covered |= inst.path_view(ln.pair).fwd_low
    for w in verts[1:]:
        if w not in covered:
            t, h = direct_link(inst, w)
            links.append(Link(t, h, _cost(rng, delta, 1)))
    return RootedInstance(verts, arcs, links, verts[0], quiet=True)


def family_instance(family: str, seed: int, n: int = 8, delta: int = 4,
                    q: int = 2) -> RootedInstance:
    if family == "random":
        return random_instance(GeneratorConfig(n=n, delta=delta, seed=seed))
    if family == "willow":
        return random_willow(n=n, delta=delta, seed=seed)
    if family == "gap":
        from .reductions import integrality_gap_instance
        return integrality_gap_instance()
    if family == "3dm":
        from .reductions import random_3dm
        return random_3dm(q, seed)[0]
    raise ValueError(f"unknown family {family!r}")


# ---------------------------------------------------------------------------
# harness

def ratio_harness(solvers: dict, family, trials: int, seeds=None, workers: int = 1,
                  budget: int = 200000) -> dict:
    """Run every solver on ``trials`` instances and compare with brute force.

    ``solvers`` maps a name to a callable taking an instance and returning a
    Solution. ``family`` maps a seed to an instance. Returns
    ``{"rows": [...], "summary": {name: {min, mean, max}}}`` with exact
    rational ratios.
    """
    from .lp import solve_lp

    seeds = list(range(trials)) if seeds is None else list(seeds)[:trials]

    def one(seed):
        inst = family(seed)
        opt = brute_force_opt(inst, budget).cost
        lp = solve_lp(inst).cost
        rows = []
        for name, solver in solvers.items():
            sol = solver(inst)
            rows.append({"seed": seed, "n": inst.n, "m": len(inst.links),
                         "delta": inst.cost_ratio(), "opt": opt, "lp": lp,
                         "solver": name, "cost": sol.cost, "ratio": sol.cost / opt})
        return rows

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(one, seeds))
    else:
        results = [one(s) for s in seeds]
    rows = [r for rs in results for r in rs]
    summary = {}
    for name in solvers:
        rs = [r["ratio"] for r in rows if r["solver"] == name]
        if rs:
            summary[name] = {"min": min(rs), "mean": sum(rs, Fraction(0)) / len(rs),
                             "max": max(rs), "mean_float": statistics.fmean(map(float, rs))}
    return {"rows": rows, "summary": summary}


CSV_COLUMNS = ("seed", "n", "m", "Δ", "opt", "lp", "solver", "cost", "ratio")


def report_csv(report: dict) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for r in report["rows"]:
        lines.append(",".join([str(r["seed"]), str(r["n"]), str(r["m"]),
                               fmt_fraction(r["delta"]), fmt_fraction(r["opt"]),
                               fmt_fraction(r["lp"]), r["solver"],
                               fmt_fraction(r["cost"]), fmt_fraction(r["ratio"])]))
    return "\n".join(lines) + "\n"
