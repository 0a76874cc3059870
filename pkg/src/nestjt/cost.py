"""Worst-case space/time cost model and cost propagation over junction trees.

Costs are integers in table-entry units. Multiplying k >= 2 potentials
onto a table of size n costs k*n; a single potential needs no
multiplication. Marginalizing costs the larger of the source and target
table sizes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from nestjt.errors import DomainError


@dataclass(frozen=True)
class CostPair:
    space: int = 0
    time: int = 0

    def __add__(self, other: CostPair) -> CostPair:
        return CostPair(self.space + other.space, self.time + other.time)

    def score(self, gamma) -> Fraction:
        """space + gamma * time, exactly."""
        return self.space + as_gamma(gamma) * self.time


ZERO = CostPair()


def as_gamma(gamma) -> Fraction:
    if isinstance(gamma, Fraction):
        g = gamma
    elif isinstance(gamma, float):
        g = Fraction(repr(gamma))
    else:
        g = Fraction(gamma)
    if g < 0:
        raise DomainError(f"gamma must be nonnegative, got {gamma}")
    return g


def table_size(variables: Iterable[int], cards: Mapping[int, int]) -> int:
    return math.prod(cards[v] for v in variables)


def mult_cost(k: int, size: int) -> int:
    return k * size if k >= 2 else 0


def marg_cost(size: int, target_size: int) -> int:
    return max(size, target_size)


def flat_send_cost(k: int, clique_size: int, target_size: int) -> CostPair:
    if k < 1:
        raise DomainError("a send needs at least one potential")
    if clique_size < 1 or target_size < 1:
        raise DomainError("table sizes must be >= 1")
    return CostPair(clique_size, mult_cost(k, clique_size) + marg_cost(clique_size, target_size))


def plan_cost(plan, target: Sequence[int] | None = None) -> CostPair:
    """Recompute a plan's cost from its structure (ignores the cached cost)."""
    from nestjt.nest import FlatPlan

    if target is not None and tuple(sorted(target)) != plan.target:
        raise DomainError(f"plan was built for target {plan.target}, not {tuple(sorted(target))}")
    cards = plan.cards
    t_size = table_size(plan.target, cards)
    if isinstance(plan, FlatPlan):
        if not plan.domains:
            return ZERO
        return flat_send_cost(len(plan.domains), table_size(plan.variables, cards), t_size)
    per = 0
    space = 0
    for send in plan.sends:
        child = plan_cost(send.plan)
        per += child.time
        space += child.space + table_size(send.target, cards)
    r_size = table_size(plan.root_vars, cards)
    k_root = len(plan.root_local) + len(plan.root_incoming)
    per += mult_cost(k_root, r_size) + marg_cost(r_size, t_size)
    space += r_size
    return CostPair(space, plan.n_configs * per)


def peeling_cost(domains: Sequence[Iterable[int]], steps: Sequence[Iterable[int]], cards: Mapping[int, int]) -> CostPair:
    """Cost of summing out variable groups one step at a time.

    Each step combines every current potential that mentions a variable in
    the step and sums those variables out. Space is the largest table
    built; time uses the same multiplication/marginalization rules.
    """
    pool = [frozenset(d) for d in domains]
    space = time = 0
    for step in steps:
        step = frozenset(step)
        hit = [d for d in pool if d & step]
        if not hit:
            continue
        table = frozenset().union(*hit)
        result = table - step
        n = table_size(table, cards)
        space = max(space, n)
        time += mult_cost(len(hit), n) + marg_cost(n, table_size(result, cards))
        pool = [d for d in pool if not d & step] + [result]
    return CostPair(space, time)


# -- cost propagation over an outer junction tree -----------------------------


@dataclass
class CollectCost:
    root: int
    messages: dict  # (sender, receiver) -> accumulated CostPair
    sends: dict  # (sender, receiver) -> CostPair of that single send
    plans: dict  # (sender, receiver) -> plan used
    combine: CostPair
    total: CostPair


def _send_inputs(tree, c: int, p: int | None):
    doms = [tuple(sorted(tree.domain_of(k))) for k in tree.assignment.get(c, [])]
    doms += [tuple(sorted(tree.separator(w, c))) for w in tree.neighbors(c) if w != p]
    return doms


def send_target(tree, c: int, p: int, doms) -> tuple[int, ...]:
    covered = set().union(*doms) if doms else set()
    return tuple(sorted(tree.separator(c, p) & covered))


def root_combine_cost(tree, root: int) -> CostPair:
    doms = _send_inputs(tree, root, None)
    size = table_size(set().union(*doms) if doms else (), tree.cards)
    return CostPair(size, mult_cost(len(doms), size) + size)


class _EdgeCosts:
    """Memoized per-direction send costs for one tree and policy."""

    def __init__(self, tree, policy):
        from nestjt.nest import Planner

        self.tree = tree
        self.planner = Planner(tree.cards, policy)
        self.own: dict = {}
        self.plans: dict = {}
        self.acc: dict = {}

    def send(self, c, p):
        key = (c, p)
        if key not in self.own:
            doms = _send_inputs(self.tree, c, p)
            plan = self.planner.plan(doms, send_target(self.tree, c, p, doms))
            self.plans[key] = plan
            self.own[key] = plan.cost
        return self.own[key]

    def message(self, c, p):
        """Accumulated cost message c -> p (iterative post-order)."""
        if (c, p) in self.acc:
            return self.acc[(c, p)]
        stack = [(c, p, False)]
        while stack:
            u, par, ready = stack.pop()
            if (u, par) in self.acc:
                continue
            kids = [w for w in self.tree.neighbors(u) if w != par]
            if not ready:
                stack.append((u, par, True))
                stack.extend((w, u, False) for w in kids if (w, u) not in self.acc)
                continue
            total = self.send(u, par)
            for w in kids:
                total = total + self.acc[(w, u)]
            self.acc[(u, par)] = total
        return self.acc[(c, p)]


def cost_collect(tree, root: int, policy=None) -> CollectCost:
    """Cost messages toward `root` and the total inward-propagation cost.

    ``policy=None`` prices every send conventionally (one flat table).
    """
    ec = _EdgeCosts(tree, policy)
    total = ZERO
    for w in tree.neighbors(root):
        total = total + ec.message(w, root)
    combine = root_combine_cost(tree, root)
    return CollectCost(root, dict(ec.acc), dict(ec.own), dict(ec.plans), combine, total + combine)


def cost_distribute(tree, root: int = 0, policy=None) -> dict[int, CostPair]:
    """Inward-propagation totals for every clique as root.

    One inward pass of cost messages to `root`, then one outward pass; each
    directed message is computed once and reused.
    """
    ec = _EdgeCosts(tree, policy)
    parent, post = tree.rooted(root)
    for u in post:
        if parent[u] is not None:
            ec.message(u, parent[u])
    for u in reversed(post):
        for w in tree.neighbors(u):
            if w != parent[u]:
                ec.message(u, w)
    totals = {}
    for d in range(len(tree.cliques)):
        t = ZERO
        for w in tree.neighbors(d):
            t = t + ec.acc[(w, d)]
        totals[d] = t + root_combine_cost(tree, d)
    return totals


def saving_pct(conventional: int | Fraction, nested: int | Fraction) -> Fraction:
    """Relative saving in percent; negative when nesting costs more."""
    if conventional == 0:
        return Fraction(0)
    return Fraction(conventional - nested) * 100 / Fraction(conventional)
