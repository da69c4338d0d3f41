"""Command-line entry point: ``dtap <command> [options]``.

Every command prints one JSON envelope
``{"command", "instance_hash", "result", "timings"}`` (or a plain text
rendering with ``--format text``). Rationals are written as "p/q" strings
unless ``--approx-decimals D`` asks for decimals.

Exit codes: 0 success, 2 usage or malformed input, 3 infeasible instance,
4 budget, iteration or width limit exceeded, 5 internal property violation.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from fractions import Fraction

from . import __version__
from .errors import (BudgetExceeded, Infeasible, InstanceError, IterationBudgetExceeded,
                     NotACover, NotWillow, PropertyViolation, WidthExceeded)
from .instance import RootedInstance, fmt_fraction, load_instance

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_BUDGET, EXIT_INTERNAL = 0, 2, 3, 4, 5


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# output

def _render(value, decimals):
    if isinstance(value, Fraction):
        if decimals is None:
            return fmt_fraction(value)
        return round(float(value), decimals)
    if isinstance(value, dict):
        return {str(k): _render(v, decimals) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_render(v, decimals) for v in value]
    return value


def _hash(inst) -> str | None:
    if inst is None:
        return None
    text = inst.to_text() if isinstance(inst, RootedInstance) else json.dumps(inst, sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _text(result, indent=0) -> list:
    lines = []
    pad = "  " * indent
    for k, v in result.items():
        if isinstance(v, dict):
            lines.append(f"{pad}{k}:")
            lines += _text(v, indent + 1)
        elif isinstance(v, list) and v and isinstance(v[0], dict):
            lines.append(f"{pad}{k}:")
            for item in v:
                lines.append(pad + "  - " + ", ".join(f"{a}={b}" for a, b in item.items()))
        else:
            lines.append(f"{pad}{k}: {v}")
    return lines


def _links(inst, links):
    return [{"tail": p[0], "head": p[1], "cost": inst.pair_cost(p)} for p in links]


# ---------------------------------------------------------------------------
# commands; each returns (instance or None, result dict)

def _seed(args):
    env = os.environ.get("DTAP_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"DTAP_SEED must be an integer, got {env!r}") from None
    return args.seed


def _load(args):
    if not args.file:
        raise UsageError("--file is required")
    return load_instance(args.file)


def cmd_solve(args):
    from .lp import solve_lp
    from .oracle import brute_force_opt
    inst = _load(args)
    if args.lp:
        x = solve_lp(inst)
        return inst, {"lp_value": x.cost,
                      "x": [{"tail": p[0], "head": p[1], "value": v}
                            for p, v in sorted(x.x.items())]}
    sol = brute_force_opt(inst, args.budget)
    return inst, {"solution": _links(inst, sol.links), "cost": sol.cost,
                  "nodes": sol.meta.get("nodes")}


def cmd_approx2(args):
    from .approx import approx_2
    from .lp import solve_lp
    inst = _load(args)
    sol = approx_2(inst)
    return inst, {"solution": _links(inst, sol.links), "cost": sol.cost,
                  "lp_lower_bound": solve_lp(inst).cost if inst.arcs else Fraction(0)}


def cmd_approx175(args):
    from .approx import approx_175
    inst = _load(args)
    sol = approx_175(inst, eps_user=Fraction(args.eps), mode=args.mode, k=args.k,
                     max_cuts=args.max_cuts, dp_budget=args.budget,
                     bf_budget=args.budget, check=args.assert_paper_properties)
    m = sol.meta
    return inst, {"solution": _links(inst, sol.links), "cost": sol.cost,
                  "lp_lower_bound": m["lp_lower_bound"], "cuts_emitted": m["cuts_emitted"],
                  "mode": m["mode"], "assertions_checked": m["assertions_checked"],
                  "certified": m["certified"], "fallback": m.get("fallback"),
                  "method": m.get("method")}


def cmd_dp(args):
    from .viwidth import solve_bounded_viwidth, solve_n_thin
    inst = _load(args)
    if args.N is not None:
        sol = solve_n_thin(inst, args.N, budget=args.budget)
    else:
        sol = solve_bounded_viwidth(inst, args.k, budget=args.budget)
    return inst, {"solution": _links(inst, sol.links), "cost": sol.cost,
                  "states": sol.meta.get("states"), "N": sol.meta.get("N")}


def cmd_check_willow(args):
    from .willow import recognize_willow, solve_willow
    inst = _load(args)
    try:
        cert = recognize_willow(inst)
    except NotWillow as exc:
        return inst, {"willow": False, "violator": str(exc.violator)}
    out = {"willow": True, "W": list(cert.W)}
    if args.solve:
        sol = solve_willow(inst)
        out["solution"] = _links(inst, sol.links)
        out["cost"] = sol.cost
    return inst, out


def cmd_viwidth(args):
    from .viwidth import viwidth
    inst = _load(args)
    rep = viwidth(inst)
    return inst, {"viwidth": rep.max,
                  "vertices": {v: {"up": rep.up[v], "down": rep.down[v]}
                               for v in inst.vertices}}


def cmd_gen(args):
    from .oracle import GeneratorConfig, random_instance, random_willow
    from .reductions import integrality_gap_instance, random_3dm
    seed = _seed(args)
    key = None
    if args.family == "gap":
        inst = integrality_gap_instance()
    elif args.family == "3dm":
        inst, key = random_3dm(args.q, seed, planted=not args.unplanted)
    elif args.family == "willow":
        inst = random_willow(n=args.n, delta=args.delta, seed=seed)
    else:
        inst = random_instance(GeneratorConfig(n=args.n, delta=args.delta, seed=seed,
                                               bias=args.bias))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(inst.to_text())
    return inst, {"family": args.family, "seed": seed, "path": args.out,
                  "instance": inst.to_json(), "key": key}


def _read_m2tap(path):
    from .reductions import Multi2TapInstance
    with open(path) as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        return Multi2TapInstance.from_json(json.loads(text))
    verts, edges, links = [], [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        parts = raw.split("#", 1)[0].split()
        if not parts:
            continue
        if parts[0] == "vertex" and len(parts) == 2:
            verts.append(parts[1])
        elif parts[0] == "edge" and len(parts) == 3:
            edges.append((parts[1], parts[2]))
            verts += [v for v in parts[1:] if v not in verts]
        elif parts[0] == "link" and len(parts) == 4:
            links.append((parts[1], parts[2], parts[3]))
        else:
            raise InstanceError(f"malformed line {raw.strip()!r}", lineno)
    seen = []
    for v in verts:
        if v not in seen:
            seen.append(v)
    return Multi2TapInstance(seen, edges, links)


def cmd_reduce(args):
    from .reductions import m2tap_to_bidirected, reduce_bidirected
    if not args.file:
        raise UsageError("--file is required")
    src = _read_m2tap(args.file)
    bd = m2tap_to_bidirected(src)
    red = reduce_bidirected(bd)
    inst = red.instance
    prov = []
    for p, j in sorted(red.provenance.items()):
        i, side = bd.origin[j]
        u, v, _ = src.links[i]
        prov.append({"tail": p[0], "head": p[1], "from_link": i,
                     "link": [u, v] if side == "+" else [v, u]})
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(inst.to_text())
    return inst, {"from": args.source, "instance": inst.to_json(), "provenance": prov,
                  "midpoints": {f"{a}-{b}": f"m({a},{b})" for a, b in src.edges}}


def cmd_bench(args):
    from .approx import approx_175, approx_2
    from .oracle import brute_force_opt, family_instance, ratio_harness, report_csv
    seed0 = _seed(args)
    known = {"exact": lambda i: brute_force_opt(i, args.budget),
             "approx2": approx_2,
             "approx175": lambda i: approx_175(i, mode="engineering", k=args.k,
                                               check=args.assert_paper_properties)}
    names = [s.strip() for s in args.solvers.split(",") if s.strip()]
    for s in names:
        if s not in known:
            raise UsageError(f"unknown solver {s!r}; choose from {sorted(known)}")
    rep = ratio_harness({s: known[s] for s in names},
                        lambda s: family_instance(args.family, s, n=args.n,
                                                  delta=args.delta, q=args.q),
                        args.trials, seeds=range(seed0, seed0 + args.trials),
                        workers=args.workers, budget=args.budget)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(report_csv(rep))
    summary = {k: {a: v[a] for a in ("min", "mean", "max")} for k, v in rep["summary"].items()}
    return None, {"family": args.family, "trials": args.trials, "path": args.out,
                  "summary": summary}


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--approx-decimals", type=int, default=None, metavar="D",
                        help="render rationals as decimals with D digits")
    common.add_argument("--assert-paper-properties", default=True,
                        action=argparse.BooleanOptionalAction,
                        help="run the runtime property checks (default on)")
    common.add_argument("--budget", type=int, default=200000,
                        help="node/state budget for exact searches")

    p = argparse.ArgumentParser(prog="dtap", description="Directed tree augmentation toolkit.")
    p.add_argument("--version", action="version", version=f"dtap {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", parents=[common], help="exact optimum or LP relaxation")
    s.add_argument("--file")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--exact", action="store_true", help="branch and bound (default)")
    g.add_argument("--lp", action="store_true", help="LP relaxation value and point")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("approx2", parents=[common], help="2-approximation")
    s.add_argument("--file")
    s.set_defaults(func=cmd_approx2)

    s = sub.add_parser("approx175", parents=[common], help="(1.75+eps) pipeline")
    s.add_argument("--file")
    s.add_argument("--epsilon", "--eps", dest="eps", default="1/2",
                   help="user epsilon, a rational")
    s.add_argument("--mode", choices=("engineering", "theoretical"), default="engineering")
    s.add_argument("--k", type=int, default=None, help="DP width (engineering default 3)")
    s.add_argument("--max-cuts", type=int, default=50)
    s.set_defaults(func=cmd_approx175)

    s = sub.add_parser("dp", parents=[common], help="bounded-width dynamic program")
    s.add_argument("--file")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--k", type=int, default=3, help="visible width bound")
    g.add_argument("--N", type=int, default=None, help="thinness bound for the raw DP")
    s.set_defaults(func=cmd_dp)

    s = sub.add_parser("check-willow", parents=[common], help="willow recognition")
    s.add_argument("--file")
    s.add_argument("--solve", action="store_true", help="also solve by LP")
    s.set_defaults(func=cmd_check_willow)

    s = sub.add_parser("viwidth", parents=[common], help="visible width per vertex")
    s.add_argument("--file")
    s.set_defaults(func=cmd_viwidth)

    s = sub.add_parser("gen", parents=[common], help="generate an instance")
    s.add_argument("--family", choices=("gap", "3dm", "random", "willow"), default="random")
    s.add_argument("--q", type=int, default=2)
    s.add_argument("--unplanted", action="store_true", help="3dm without a perfect matching")
    s.add_argument("--n", type=int, default=8)
    s.add_argument("--delta", type=int, default=4)
    s.add_argument("--bias", type=float, default=0.5)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("reduce", parents=[common], help="multi 2-TAP to WDTAP")
    s.add_argument("--from", dest="source", choices=("m2tap",), default="m2tap")
    s.add_argument("--file")
    s.add_argument("--out")
    s.set_defaults(func=cmd_reduce)

    s = sub.add_parser("bench", parents=[common], help="ratio harness against brute force")
    s.add_argument("--family", choices=("gap", "3dm", "random", "willow"), default="random")
    s.add_argument("--trials", type=int, default=20)
    s.add_argument("--solvers", default="approx2,approx175")
    s.add_argument("--n", type=int, default=8)
    s.add_argument("--delta", type=int, default=4)
    s.add_argument("--q", type=int, default=2)
    s.add_argument("--k", type=int, default=3)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out")
    s.set_defaults(func=cmd_bench)
    return p


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    t0 = time.perf_counter()
    try:
        inst, result = args.func(args)
    except (UsageError, InstanceError, NotACover, FileNotFoundError, ValueError) as exc:
        print(f"dtap: error: {exc}", file=stderr)
        return EXIT_USAGE
    except Infeasible as exc:
        print(f"dtap: infeasible: {exc}", file=stderr)
        return EXIT_INFEASIBLE
    except (BudgetExceeded, IterationBudgetExceeded, WidthExceeded) as exc:
        print(f"dtap: limit exceeded: {exc}", file=stderr)
        return EXIT_BUDGET
    except (PropertyViolation, AssertionError) as exc:
        print(f"dtap: internal property violation: {exc}", file=stderr)
        return EXIT_INTERNAL
    env = {"command": args.command, "instance_hash": _hash(inst),
           "result": _render(result, args.approx_decimals),
           "timings": {"total_s": round(time.perf_counter() - t0, 6)}}
    if args.format == "text":
        print(f"command: {env['command']}", file=stdout)
        print(f"instance_hash: {env['instance_hash']}", file=stdout)
        print("\n".join(_text(env["result"])), file=stdout)
        print(f"time: {env['timings']['total_s']}s", file=stdout)
    else:
        json.dump(env, stdout, indent=2)
        stdout.write("\n")
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
