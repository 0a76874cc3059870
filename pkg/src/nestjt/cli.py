"""Command-line front end.

    nestjt marginals NETWORK [--evidence NAME=STATE ...] [--method hugin|ss] [--gamma G]
    nestjt oracle    NETWORK [--evidence NAME=STATE ...]
    nestjt plan      NETWORK | --fixture NAME  [--gamma G] [--root R]
    nestjt costs     NETWORK | --fixture NAME  [--gamma G[,G...]] [--format text|json|tsv]

Exit status: 0 ok, 1 validation error, 2 inconsistency, 3 resource limit.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

import numpy as np

from nestjt import fixtures
from nestjt.cost import as_gamma, cost_distribute, flat_send_cost, saving_pct, table_size
from nestjt.errors import (
    DomainError,
    InconsistencyError,
    NestJTError,
    NetworkFormatError,
    ResourceLimitError,
    StructuralError,
)
from nestjt.graph import dump_tree, network_junction_tree
from nestjt.model import NetworkSpec, load_network, parse_evidence
from nestjt.nest import FlatPlan, NestingPolicy, Planner, dump_plan
from nestjt.oracle import oracle_posteriors
from nestjt.propagate import ARCHITECTURES, InferenceEngine

SCENARIO_FIXTURES = ("munin1", "munin1-reduced", "eq2")
NETWORK_FIXTURES = ("chain4", "random")
DEFAULT_SWEEP = "0,0.3,100"

EXIT_OK, EXIT_INVALID, EXIT_INCONSISTENT, EXIT_RESOURCE = 0, 1, 2, 3


def _gamma_list(text: str) -> list[Fraction]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if part:
            try:
                out.append(as_gamma(Fraction(part)))
            except (ValueError, ZeroDivisionError) as exc:
                raise DomainError(f"bad gamma {part!r}") from exc
    if not out:
        raise DomainError("no gamma given")
    return out


def _fmt_gamma(g: Fraction) -> str:
    return str(g.numerator) if g.denominator == 1 else repr(float(g))


def _fmt_num(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{float(x):.1f}"


def _fmt_pct(x: Fraction) -> str:
    # round half away from zero, as whole percentages
    sign = -1 if x < 0 else 1
    return f"{sign * int(abs(x) + Fraction(1, 2))}%"


def _load_source(args):
    """Return ('network', name, spec) or ('scenario', name, Scenario)."""
    fx = getattr(args, "fixture", None)
    if fx:
        if fx in SCENARIO_FIXTURES:
            return "scenario", fx, fixtures.SCENARIOS[fx](args.seed)
        if fx == "chain4":
            return "network", fx, fixtures.chain4()
        if fx == "random":
            rng = np.random.default_rng(args.seed)
            return "network", f"random-{args.seed}", fixtures.random_network(rng, 10)
        bundled = fixtures.bundled_networks()
        if fx in bundled:
            return "network", fx, load_network(bundled[fx])
        raise DomainError(f"unknown fixture {fx!r}")
    if not args.network:
        raise DomainError("give a network file or --fixture")
    try:
        spec = load_network(args.network)
    except OSError as exc:
        raise NetworkFormatError(f"cannot read file: {exc.strerror}", args.network) from exc
    return "network", os.path.splitext(os.path.basename(args.network))[0], spec


def _require_network(kind, name):
    if kind != "network":
        raise DomainError(f"fixture {name!r} is a single-message scenario; this command needs a network")


def _state_names(spec: NetworkSpec, v: int):
    var = spec.variables[v]
    return list(var.states) or [str(s) for s in range(var.cardinality)]


def _render_marginals(spec, post, fmt, header):
    if fmt == "json":
        doc = dict(header)
        doc["marginals"] = {
            spec.variables[v].name: dict(zip(_state_names(spec, v), map(float, post[v]))) for v in sorted(post)
        }
        return json.dumps(doc, indent=2, sort_keys=True)
    lines = []
    for v in sorted(post):
        cells = " ".join(f"{s}={p:.10f}" for s, p in zip(_state_names(spec, v), post[v]))
        lines.append(f"{spec.variables[v].name}: {cells}")
    return "\n".join(lines)


def _selected(spec, names):
    if not names:
        return None
    return [spec.var(n).id for n in names]


def cmd_marginals(args, out):
    kind, name, spec = _load_source(args)
    _require_network(kind, name)
    evidence = parse_evidence(spec, args.evidence or [])
    gamma = None if args.gamma is None else _gamma_list(args.gamma)[0]
    eng = InferenceEngine(spec, args.method, gamma, evidence)
    eng.run(args.root)
    post = eng.posteriors(_selected(spec, args.variables))
    if args.trace:
        for line in eng.state.trace:
            print(line, file=sys.stderr)
    header = {
        "network": name,
        "method": args.method,
        "gamma": None if gamma is None else float(gamma),
        "evidence": {spec.variables[v].name: _state_names(spec, v)[s] for v, s in sorted(evidence.items())},
    }
    print(_render_marginals(spec, post, args.format, header), file=out)
    return EXIT_OK


def cmd_oracle(args, out):
    kind, name, spec = _load_source(args)
    _require_network(kind, name)
    evidence = parse_evidence(spec, args.evidence or [])
    post = oracle_posteriors(spec, evidence)
    sel = _selected(spec, args.variables)
    if sel is not None:
        post = {v: post[v] for v in sel}
    header = {
        "network": name,
        "method": "oracle",
        "gamma": None,
        "evidence": {spec.variables[v].name: _state_names(spec, v)[s] for v, s in sorted(evidence.items())},
    }
    print(_render_marginals(spec, post, args.format, header), file=out)
    return EXIT_OK


def plan_to_dict(plan) -> dict:
    if isinstance(plan, FlatPlan):
        return {
            "kind": "flat",
            "variables": list(plan.variables),
            "target": list(plan.target),
            "potentials": len(plan.domains),
            "space": plan.cost.space,
            "time": plan.cost.time,
        }
    return {
        "kind": "nested",
        "target": list(plan.target),
        "root": plan.root,
        "root_variables": list(plan.root_vars),
        "configurations": plan.n_configs,
        "cliques": [sorted(c) for c in plan.tree.cliques],
        "space": plan.cost.space,
        "time": plan.cost.time,
        "sends": [
            {
                "clique": s.clique,
                "to": s.parent,
                "separator": list(s.target),
                "messages": plan.n_configs,
                "plan": plan_to_dict(s.plan),
            }
            for s in plan.sends
        ],
    }


def cmd_plan(args, out):
    kind, name, src = _load_source(args)
    gamma = _gamma_list(args.gamma)[0]
    policy = NestingPolicy(gamma)
    if kind == "scenario":
        planner = Planner(src.cards, policy)
        plan = planner.plan(src.potentials, src.target)
        conv = flat_send_cost(len(src.potentials), table_size(src.cards, src.cards), table_size(src.target, src.cards))
        if args.format == "json":
            doc = {"scenario": name, "gamma": float(gamma), "conventional": vars(conv), "plan": plan_to_dict(plan)}
            print(json.dumps(doc, indent=2, sort_keys=True), file=out)
        else:
            print(f"scenario {name} gamma={_fmt_gamma(gamma)} depth={plan.depth}", file=out)
            print(f"conventional space={conv.space} time={conv.time}", file=out)
            print(dump_plan(plan), file=out)
        return EXIT_OK
    spec = src
    tree = network_junction_tree(spec)
    planner = Planner(tree.cards, policy)
    names = lambda v: spec.variables[v].name  # noqa: E731
    root = args.root
    parent, post = tree.rooted(root)
    sends = []
    for c in post:
        if c == root:
            continue
        p = parent[c]
        doms = [tree.domain_of(k) for k in tree.assignment[c]] + [tuple(sorted(tree.separator(w, c))) for w in tree.children(c, parent)]
        covered = set().union(*doms)
        sends.append((c, p, planner.plan(doms, sorted(tree.separator(c, p) & covered))))
    if args.format == "json":
        doc = {
            "network": name,
            "gamma": float(gamma),
            "root": root,
            "cliques": [sorted(c) for c in tree.cliques],
            "separators": [[i, j, sorted(s)] for i, j, s in tree.edges],
            "sends": [{"clique": c, "to": p, "plan": plan_to_dict(pl)} for c, p, pl in sends],
        }
        print(json.dumps(doc, indent=2, sort_keys=True), file=out)
        return EXIT_OK
    print(f"network {name} gamma={_fmt_gamma(gamma)} root=C{root}", file=out)
    print(dump_tree(tree, names), file=out)
    for c, p, pl in sends:
        print(f"send C{c} -> C{p}", file=out)
        print(dump_plan(pl, names, 1), file=out)
    return EXIT_OK


def cost_rows(kind, name, src, gammas) -> list[dict]:
    """One row per gamma: conventional vs nested space/time and savings."""
    if kind == "scenario":
        conv = flat_send_cost(len(src.potentials), table_size(src.cards, src.cards), table_size(src.target, src.cards))
        conv_s, conv_t = Fraction(conv.space), Fraction(conv.time)
        nested = {}
        for g in gammas:
            c = Planner(src.cards, NestingPolicy(g)).plan(src.potentials, src.target).cost
            nested[g] = (Fraction(c.space), Fraction(c.time))
    else:
        tree = network_junction_tree(src)
        n = len(tree.cliques)

        def avg(totals):
            s = sum(t.space for t in totals.values())
            t = sum(t.time for t in totals.values())
            return Fraction(s, n), Fraction(t, n)

        conv_s, conv_t = avg(cost_distribute(tree, 0, None))
        nested = {g: avg(cost_distribute(tree, 0, NestingPolicy(g))) for g in gammas}
    rows = []
    for g in gammas:
        ns, nt = nested[g]
        rows.append({
            "network": name,
            "conv_space": conv_s,
            "conv_time": conv_t,
            "nested_space": ns,
            "nested_time": nt,
            "space_saving_pct": saving_pct(conv_s, ns),
            "time_saving_pct": saving_pct(conv_t, nt),
            "gamma": g,
        })
    return rows


TSV_COLUMNS = ("network", "conv_space", "conv_time", "nested_space", "nested_time",
               "space_saving_pct", "time_saving_pct", "gamma")


def cmd_costs(args, out):
    kind, name, src = _load_source(args)
    gammas = _gamma_list(args.gamma)
    rows = cost_rows(kind, name, src, gammas)
    if args.format == "json":
        doc = [
            {k: (float(r[k]) if isinstance(r[k], Fraction) else r[k]) for k in TSV_COLUMNS}
            for r in rows
        ]
        print(json.dumps(doc, indent=2, sort_keys=True), file=out)
    elif args.format == "tsv":
        print("\t".join(TSV_COLUMNS), file=out)
        for r in rows:
            print("\t".join([
                r["network"], _fmt_num(r["conv_space"]), _fmt_num(r["conv_time"]),
                _fmt_num(r["nested_space"]), _fmt_num(r["nested_time"]),
                _fmt_pct(r["space_saving_pct"]), _fmt_pct(r["time_saving_pct"]), _fmt_gamma(r["gamma"]),
            ]), file=out)
    else:
        print(f"{'network':<16} {'conv space':>12} {'conv time':>14} {'gamma':>6} "
              f"{'nested space':>20} {'nested time':>22}", file=out)
        for r in rows:
            ns = f"{_fmt_num(r['nested_space'])} ({_fmt_pct(r['space_saving_pct'])})"
            nt = f"{_fmt_num(r['nested_time'])} ({_fmt_pct(r['time_saving_pct'])})"
            print(f"{r['network']:<16} {_fmt_num(r['conv_space']):>12} {_fmt_num(r['conv_time']):>14} "
                  f"{_fmt_gamma(r['gamma']):>6} {ns:>20} {nt:>22}", file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nestjt", description="Nested junction tree inference and cost reports.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, fmts=("text", "json")):
        p.add_argument("network", nargs="?", help="network JSON file")
        p.add_argument("--fixture", help="bundled fixture name instead of a file")
        p.add_argument("--format", choices=fmts, default=fmts[0])
        p.add_argument("--seed", type=int, default=0, help="seed for randomized fixtures")

    p = sub.add_parser("marginals", help="posterior marginals by junction tree propagation")
    common(p)
    p.add_argument("--evidence", action="append", metavar="NAME=STATE")
    p.add_argument("--method", choices=ARCHITECTURES, default="hugin")
    p.add_argument("--gamma", help="enable nested messages with this time factor")
    p.add_argument("--root", type=int, default=0)
    p.add_argument("--trace", action="store_true", help="print one line per message to stderr")
    p.add_argument("--var", dest="variables", action="append", metavar="NAME")
    p.set_defaults(func=cmd_marginals)

    p = sub.add_parser("oracle", help="posterior marginals from the brute-force joint")
    common(p, ("json", "text"))
    p.add_argument("--evidence", action="append", metavar="NAME=STATE")
    p.add_argument("--var", dest="variables", action="append", metavar="NAME")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("plan", help="junction tree and nested message plans")
    common(p)
    p.add_argument("--gamma", default="0")
    p.add_argument("--root", type=int, default=0)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("costs", help="conventional vs nested space/time report")
    common(p, ("text", "json", "tsv"))
    p.add_argument("--gamma", default=DEFAULT_SWEEP, help="comma-separated sweep")
    p.set_defaults(func=cmd_costs)
    return ap


def run(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except ResourceLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except InconsistencyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except (NetworkFormatError, DomainError, StructuralError, NestJTError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
