"""Nested junction trees: planning and executing clique messages.

A message over target variables T is computed from a list of potentials.
The conventional way multiplies them all into one table and sums out the
rest. When the potentials' induced graph breaks into several cliques, the
message can instead be computed in an inner junction tree: for every
configuration of the target variables missing from the inner root, the
potentials are sliced, messages flow inward to the root, and the root's
marginal fills one slice of the output. Each inner clique's own send may
in turn be nested. The planner picks, at every level, whatever minimizes
``space + gamma * time`` under the worst-case cost model.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from nestjt.cost import (
    CostPair,
    as_gamma,
    flat_send_cost,
    marg_cost,
    mult_cost,
    table_size,
)
from nestjt.errors import StructuralError
from nestjt.graph import JunctionTree, junction_tree_for
from nestjt.model import Potential, marginalize, multiply_all, restrict


@dataclass(frozen=True)
class NestingPolicy:
    gamma: Fraction = Fraction(0)
    enabled: bool = True

    def __post_init__(self):
        object.__setattr__(self, "gamma", as_gamma(self.gamma))

    @classmethod
    def conventional(cls) -> NestingPolicy:
        return cls(Fraction(0), enabled=False)


@dataclass(frozen=True, eq=False)
class FlatPlan:
    domains: tuple[tuple[int, ...], ...]
    target: tuple[int, ...]
    variables: tuple[int, ...]
    cards: Mapping[int, int] = field(repr=False)
    cost: CostPair = CostPair()

    depth = 1


@dataclass(frozen=True, eq=False)
class InnerSend:
    clique: int
    parent: int
    target: tuple[int, ...]
    local: tuple[int, ...]
    incoming: tuple[int, ...]
    plan: object


@dataclass(frozen=True, eq=False)
class NestedPlan:
    domains: tuple[tuple[int, ...], ...]
    target: tuple[int, ...]
    variables: tuple[int, ...]
    cards: Mapping[int, int] = field(repr=False)
    tree: JunctionTree = field(repr=False, default=None)
    root: int = 0
    root_local: tuple[int, ...] = ()
    root_incoming: tuple[int, ...] = ()
    root_vars: tuple[int, ...] = ()
    loop_vars: tuple[int, ...] = ()
    sends: tuple[InnerSend, ...] = ()
    n_configs: int = 1
    cost: CostPair = CostPair()

    @property
    def depth(self) -> int:
        return 1 + max((s.plan.depth for s in self.sends), default=0)


def _canon(domains) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(sorted(p.domain if hasattr(p, "domain") else p)) for p in domains)


def _union(doms) -> tuple[int, ...]:
    return tuple(sorted(set().union(*doms))) if doms else ()


class Planner:
    """Builds plans under one policy; memoized per (domains, target).

    ``gate_log`` records (flat score, adopted score) for every plan built,
    so callers can audit that nesting never scored worse than the flat
    alternative.
    """

    def __init__(self, cards: Mapping[int, int], policy: NestingPolicy | None = None):
        self.cards = dict(cards)
        self.policy = policy if policy is not None else NestingPolicy.conventional()
        self._memo: dict = {}
        self.gate_log: list[tuple[Fraction, Fraction]] = []

    def _key(self, c: CostPair, root: int = -1):
        return (c.score(self.policy.gamma), c.time, root)

    def flat(self, doms, target) -> FlatPlan:
        variables = _union(doms)
        if not doms:
            # nothing to combine: the message is the unit potential
            return FlatPlan(doms, target, variables, self.cards, CostPair(0, 0))
        cost = flat_send_cost(len(doms), table_size(variables, self.cards), table_size(target, self.cards))
        return FlatPlan(doms, target, variables, self.cards, cost)

    def plan(self, domains: Sequence, target: Sequence[int]):
        doms = _canon(domains)
        target = tuple(sorted(target))
        key = (doms, target)
        if key in self._memo:
            return self._memo[key]
        if not set(target) <= set(_union(doms)):
            raise StructuralError(f"target {target} not covered by the potentials")
        flat = self.flat(doms, target)
        best = flat
        if self.policy.enabled and len(doms) >= 2:
            cands = self.candidates(doms, target)
            if cands:
                nested = min(cands, key=lambda c: self._key(c.cost, c.root))
                if nested.cost.score(self.policy.gamma) < flat.cost.score(self.policy.gamma):
                    best = nested
        g = self.policy.gamma
        self.gate_log.append((flat.cost.score(g), best.cost.score(g)))
        self._memo[key] = best
        return best

    def inner_tree(self, doms) -> JunctionTree:
        return junction_tree_for(list(doms), self.cards)

    def candidates(self, doms, target) -> list[NestedPlan]:
        """One nested candidate per inner root (empty if no break-down)."""
        tree = self.inner_tree(doms)
        if len(tree.cliques) < 2:
            return []
        return [self.nested(doms, target, tree, r) for r in range(len(tree.cliques))]

    def select_root(self, tree: JunctionTree, doms, target) -> int:
        if len(tree.cliques) == 1:
            return 0
        cands = [self.nested(_canon(doms), tuple(sorted(target)), tree, r) for r in range(len(tree.cliques))]
        return min(cands, key=lambda c: self._key(c.cost, c.root)).root

    def nested(self, doms, target, tree: JunctionTree, root: int, child_plan=None) -> NestedPlan:
        """Candidate plan rooted at `root`; children chosen by `child_plan`
        (default: this planner's best plan)."""
        child_plan = child_plan or self.plan
        parent, post = tree.rooted(root)
        msg_dom: dict[int, tuple[int, ...]] = {}
        sends = []
        per = 0
        space = 0
        for c in post:
            if c == root:
                continue
            local = tuple(tree.assignment[c])
            incoming = tuple(tree.children(c, parent))
            child_doms = [doms[k] for k in local] + [msg_dom[w] for w in incoming]
            covered = set(_union(child_doms))
            tgt = tuple(sorted(tree.separator(c, parent[c]) & covered))
            sub = child_plan(child_doms, tgt)
            msg_dom[c] = tgt
            sends.append(InnerSend(c, parent[c], tgt, local, incoming, sub))
            per += sub.cost.time
            space += sub.cost.space + table_size(tgt, self.cards)
        root_local = tuple(tree.assignment[root])
        root_incoming = tuple(tree.children(root, parent))
        root_doms = [doms[k] for k in root_local] + [msg_dom[w] for w in root_incoming]
        root_vars = _union(root_doms)
        loop_vars = tuple(v for v in target if v not in root_vars)
        n = table_size(loop_vars, self.cards)
        r_size = table_size(root_vars, self.cards)
        t_size = table_size(target, self.cards)
        per += mult_cost(len(root_doms), r_size) + marg_cost(r_size, t_size)
        space += r_size
        return NestedPlan(
            doms, target, _union(doms), self.cards, tree, root, root_local, root_incoming,
            root_vars, loop_vars, tuple(sends), n, CostPair(space, n * per),
        )

    def gate_violations(self) -> int:
        return sum(1 for flat, adopted in self.gate_log if adopted > flat)


def build_nested_plan(potentials: Sequence, target: Sequence[int], policy: NestingPolicy, cards: Mapping[int, int] | None = None):
    if not potentials:
        raise StructuralError("a message needs at least one potential")
    if cards is None:
        cards = {}
        for p in potentials:
            cards.update(p.card_map())
    return Planner(cards, policy).plan(potentials, target)


def select_root(inner: JunctionTree, target: Sequence[int], policy: NestingPolicy) -> int:
    doms = [inner.domain_of(k) for k in range(len(inner.potentials))]
    return Planner(inner.cards, policy).select_root(inner, doms, target)


def enumerate_plans(domains: Sequence, target: Sequence[int], cards: Mapping[int, int]):
    """Every plan reachable by root and flat/nested choices at every level."""
    planner = Planner(cards, NestingPolicy(0))
    memo: dict = {}

    def rec(doms, tgt):
        doms, tgt = _canon(doms), tuple(sorted(tgt))
        key = (doms, tgt)
        if key in memo:
            return memo[key]
        out = [planner.flat(doms, tgt)]
        if len(doms) >= 2:
            tree = planner.inner_tree(doms)
            if len(tree.cliques) >= 2:
                for r in range(len(tree.cliques)):
                    out.extend(_expand(doms, tgt, tree, r))
        memo[key] = out
        return out

    def _expand(doms, tgt, tree, r):
        # resolve the child structure once, then take the cartesian product
        probe: list = []

        def record(cd, ct):
            probe.append((cd, ct))
            return rec(cd, ct)[0]

        planner.nested(doms, tgt, tree, r, child_plan=record)
        options = [rec(cd, ct) for cd, ct in probe]
        for combo in itertools.product(*options):
            it = {(_canon(cd), tuple(sorted(ct))): p for (cd, ct), p in zip(probe, combo)}
            yield planner.nested(doms, tgt, tree, r, child_plan=lambda cd, ct: it[(_canon(cd), tuple(sorted(ct)))])

    return rec(domains, target)


# -- execution ----------------------------------------------------------------


@dataclass
class ExecutionStats:
    """Counts gathered while executing plans.

    ``model_time`` charges each executed combine/marginalize at the plan's
    nominal (unsliced) table sizes; ``actual_entries`` sums the sizes of the
    tables really built.
    """

    configurations: list = field(default_factory=list)  # (plan, executed, predicted)
    combines: int = 0
    marginalizations: int = 0
    model_time: int = 0
    actual_entries: int = 0

    def configs_for(self, plan) -> list[int]:
        return [n for p, n, _ in self.configurations if p is plan]


def _combine_and_sum(inputs, nominal_vars, keep_nominal, cards, stats):
    table = multiply_all(inputs)
    keep = [v for v in keep_nominal if v in table.domain]
    out = marginalize(table, keep)
    if stats is not None:
        n = table_size(nominal_vars, cards)
        stats.combines += 1
        stats.marginalizations += 1
        stats.model_time += mult_cost(len(inputs), n) + marg_cost(n, table_size(keep_nominal, cards))
        stats.actual_entries += table.size
    return out


def compute_message_nested(plan, potentials: Sequence[Potential], stats: ExecutionStats | None = None,
                           worst_case: bool = False) -> Potential:
    """Evaluate `plan` on `potentials` (positionally matching plan.domains).

    Variables already fixed by an enclosing level are absent from the
    potentials; by default their configurations are skipped. With
    ``worst_case=True`` every configuration of the plan's loop variables
    is executed anyway, so the executed work matches the cost model.
    """
    if len(potentials) != len(plan.domains):
        raise StructuralError(f"plan expects {len(plan.domains)} potentials, got {len(potentials)}")
    cards = plan.cards
    free = set()
    for p in potentials:
        free.update(p.domain)
    if isinstance(plan, FlatPlan):
        if not potentials:
            return Potential.unit()
        return _combine_and_sum(list(potentials), plan.variables, plan.target, cards, stats)

    loop = [v for v in plan.loop_vars if worst_case or v in free]
    out_dom = [v for v in plan.target if v in free]
    out_cards = [cards[v] for v in out_dom]
    out = np.zeros(out_cards if out_cards else ())
    ranges = [range(cards[v]) for v in loop]
    count = 0
    for config in itertools.product(*ranges):
        asg = dict(zip(loop, config))
        sliced = [restrict(p, asg) for p in potentials]
        msgs: dict[int, Potential] = {}
        for send in plan.sends:
            inputs = [sliced[k] for k in send.local] + [msgs[w] for w in send.incoming]
            msgs[send.clique] = compute_message_nested(send.plan, inputs, stats, worst_case)
        root_inputs = [sliced[k] for k in plan.root_local] + [msgs[w] for w in plan.root_incoming]
        part = _combine_and_sum(root_inputs, plan.root_vars, plan.target, cards, stats)
        index = tuple(asg[v] if v in asg else slice(None) for v in out_dom)
        out[index] = part.table
        count += 1
    if stats is not None:
        stats.configurations.append((plan, count, plan.n_configs))
    return Potential._raw(out_dom, out_cards, np.ascontiguousarray(out).ravel())


def flat_message(potentials: Sequence[Potential], target: Sequence[int]) -> Potential:
    return marginalize(multiply_all(list(potentials)), target)


# -- text dump ----------------------------------------------------------------


def _fmt_set(vs, name_of):
    return "{" + ",".join(name_of(v) for v in sorted(vs)) + "}"


def dump_plan(plan, name_of=str, indent: int = 0) -> str:
    """Indented plan tree in the style of an annotated nested junction tree.

    Each non-root clique line carries the time of one message it sends and
    how many messages the level above asks of it.
    """
    pad = "  " * indent
    cards = plan.cards
    t = _fmt_set(plan.target, name_of)
    if isinstance(plan, FlatPlan):
        return (f"{pad}flat {_fmt_set(plan.variables, name_of)} size={table_size(plan.variables, cards)} "
                f"potentials={len(plan.domains)} -> {t} space={plan.cost.space} time={plan.cost.time}")
    lines = [
        f"{pad}nested -> {t} root=C{plan.root} configurations={plan.n_configs} "
        f"space={plan.cost.space} time={plan.cost.time}",
        f"{pad}  root C{plan.root} {_fmt_set(plan.root_vars, name_of)} size={table_size(plan.root_vars, cards)} "
        f"potentials={len(plan.root_local)} messages_in={len(plan.root_incoming)}",
    ]
    for send in plan.sends:
        lines.append(
            f"{pad}  clique C{send.clique} {_fmt_set(plan.tree.cliques[send.clique], name_of)} "
            f"-> C{send.parent} via {_fmt_set(send.target, name_of)} size={table_size(send.target, cards)} "
            f"time/message={send.plan.cost.time} messages={plan.n_configs}"
        )
        lines.append(dump_plan(send.plan, name_of, indent + 2))
    return "\n".join(lines)
