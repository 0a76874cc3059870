from fractions import Fraction

import numpy as np
import pytest

from nestjt.cost import CostPair, plan_cost
from nestjt.errors import StructuralError
from nestjt.fixtures import eq2, munin1, random_network
from nestjt.graph import junction_tree_for, network_junction_tree
from nestjt.model import apply_evidence
from nestjt.nest import (
    ExecutionStats,
    FlatPlan,
    NestedPlan,
    NestingPolicy,
    Planner,
    build_nested_plan,
    compute_message_nested,
    dump_plan,
    enumerate_plans,
    flat_message,
    select_root,
)
from nestjt.propagate import SHAFER_SHENOY, HUGIN, collect, initialize

from helpers import rel_err

GAMMAS = [Fraction(0), Fraction(3, 10), Fraction(100)]


def inner_plans(plan):
    yield plan
    if isinstance(plan, NestedPlan):
        for send in plan.sends:
            yield from inner_plans(send.plan)


def test_policy_validates_gamma():
    with pytest.raises(ValueError):
        NestingPolicy(-1)
    assert NestingPolicy(0.3).gamma == Fraction(3, 10)
    assert not NestingPolicy.conventional().enabled


@pytest.mark.parametrize("gamma", GAMMAS)
def test_reduced_fixture_nested_equals_flat(gamma):
    s = munin1(seed=1, reduced=True)
    plan = build_nested_plan(s.potentials, s.target, NestingPolicy(gamma), s.cards)
    got = compute_message_nested(plan, s.potentials)
    want = flat_message(s.potentials, s.target)
    assert got.domain == want.domain
    assert rel_err(got.values, want.values) < 1e-9


def test_eq2_two_stage_equals_flat():
    s = eq2(seed=4)
    plan = build_nested_plan(s.potentials, s.target, NestingPolicy("0.3"), s.cards)
    assert isinstance(plan, NestedPlan)
    got = compute_message_nested(plan, s.potentials)
    assert rel_err(got.values, flat_message(s.potentials, s.target).values) < 1e-12


@pytest.mark.parametrize("seed", range(12))
def test_every_send_exact_on_random_networks(seed):
    rng = np.random.default_rng(400 + seed)
    spec = random_network(rng, int(rng.integers(4, 12)))
    tree = network_junction_tree(spec)
    for gamma in GAMMAS:
        state = collect(initialize(tree, SHAFER_SHENOY, NestingPolicy(gamma)), 0)
        flat = collect(initialize(tree, SHAFER_SHENOY), 0)
        for key, msg in state.messages.items():
            assert rel_err(msg.values, flat.messages[key].values) < 1e-9
        assert state.planner.gate_violations() == 0


@pytest.mark.parametrize("seed", range(20))
def test_planner_picks_minimum_over_all_plans(seed):
    rng = np.random.default_rng(500 + seed)
    n = int(rng.integers(4, 8))
    cards = {v: int(rng.integers(2, 5)) for v in range(n)}
    doms = []
    for _ in range(int(rng.integers(2, 5))):
        k = int(rng.integers(1, 4))
        doms.append(tuple(sorted(int(v) for v in rng.choice(n, size=min(k, n), replace=False))))
    covered = sorted(set().union(*doms))
    target = tuple(int(v) for v in rng.choice(covered, size=int(rng.integers(0, min(3, len(covered)) + 1)), replace=False))
    plans = enumerate_plans(doms, target, cards)
    for gamma in GAMMAS + [Fraction(10**6)]:
        best = min(p.cost.score(gamma) for p in plans)
        got = Planner(cards, NestingPolicy(gamma)).plan(doms, target)
        # per-level greedy choice can only lose to the global optimum
        assert got.cost.score(gamma) >= best
        assert got.cost.score(gamma) <= plans[0].cost.score(gamma)  # never worse than flat
    huge = Fraction(10**9)
    got = Planner(cards, NestingPolicy(huge)).plan(doms, target)
    assert got.cost.time == min(p.cost.time for p in plans) or isinstance(got, FlatPlan)


def test_enumeration_contains_known_fixture_plans():
    s = munin1()
    costs = {(p.cost.space, p.cost.time) for p in enumerate_plans(s.domains, s.target, s.cards)}
    assert {(81_730, 872_750_000), (381_000, 14_211_750), (2_625_000, 13_125_000)} <= costs


def test_fixture_plan_shapes():
    s = munin1()
    deep = build_nested_plan(s.potentials, s.target, NestingPolicy(0), s.cards)
    mid = build_nested_plan(s.potentials, s.target, NestingPolicy("0.3"), s.cards)
    flat = build_nested_plan(s.potentials, s.target, NestingPolicy(100), s.cards)
    assert (deep.depth, mid.depth, flat.depth) == (4, 2, 1)
    assert [p.n_configs for p in inner_plans(deep) if isinstance(p, NestedPlan)] == [500, 5, 20]
    assert mid.n_configs == 7 and isinstance(mid.sends[0].plan, FlatPlan)
    for plan in inner_plans(deep):
        assert plan_cost(plan) == plan.cost


def test_select_root_fixture_levels():
    s = munin1()
    pol = NestingPolicy(0)
    # innermost: {22,26,97} and {94,95,97}; T = {22,26,94,95}
    inner = junction_tree_for([(94, 95, 97), (22, 26, 97)], s.cards)
    r = select_root(inner, (22, 26, 94, 95), pol)
    assert inner.cliques[r] == frozenset({94, 95, 97})
    pl = Planner(s.cards, pol)
    times = {inner.cliques[k]: pl.nested(pl_doms(inner), (22, 26, 94, 95), inner, k).cost.time for k in range(2)}
    assert times == {frozenset({94, 95, 97}): 17_000, frozenset({22, 26, 97}): 20_625}


def pl_doms(tree):
    return tuple(tuple(sorted(tree.domain_of(k))) for k in range(len(tree.potentials)))


def test_select_root_single_clique():
    tree = junction_tree_for([(0, 1)], {0: 2, 1: 2})
    assert select_root(tree, (0,), NestingPolicy(0)) == 0


class TestInstrumentation:
    def test_configuration_counts_worst_case(self):
        s = munin1(reduced=True)
        plan = build_nested_plan(s.potentials, s.target, NestingPolicy(0), s.cards)
        stats = ExecutionStats()
        compute_message_nested(plan, s.potentials, stats, worst_case=True)
        assert stats.model_time == plan.cost.time
        for p, executed, predicted in stats.configurations:
            assert executed == predicted

    def test_counts_per_level(self):
        s = munin1(reduced=True)
        for plan in inner_plans(build_nested_plan(s.potentials, s.target, NestingPolicy(0), s.cards)):
            if isinstance(plan, NestedPlan):
                stats = ExecutionStats()
                pots = [p for p in s.potentials if p.domain in plan.domains]
                if len(pots) == len(plan.domains):
                    compute_message_nested(plan, pots, stats, worst_case=True)
                    assert stats.configs_for(plan) == [plan.n_configs]


def test_gate_is_strict():
    s = eq2()
    # flat 16/64 against nested 16/56: equal space, so gamma=0 keeps the flat plan
    pol = {g: build_nested_plan(s.potentials, s.target, NestingPolicy(g), s.cards) for g in GAMMAS}
    assert isinstance(pol[Fraction(0)], FlatPlan)
    assert pol[Fraction(3, 10)].cost == CostPair(16, 56)
    s = munin1()
    assert isinstance(build_nested_plan(s.potentials, s.target, NestingPolicy(3), s.cards), FlatPlan)


def test_gate_log_never_violated():
    s = munin1()
    for g in GAMMAS:
        pl = Planner(s.cards, NestingPolicy(g))
        pl.plan(s.domains, s.target)
        assert pl.gate_log and pl.gate_violations() == 0


def test_disabled_policy_is_flat():
    s = munin1()
    plan = Planner(s.cards, NestingPolicy.conventional()).plan(s.domains, s.target)
    assert isinstance(plan, FlatPlan) and plan.cost == CostPair(2_625_000, 13_125_000)


def test_uncovered_target():
    with pytest.raises(StructuralError):
        Planner({0: 2, 1: 2}).plan([(0,)], (1,))


def test_plan_requires_matching_potentials():
    s = eq2()
    plan = build_nested_plan(s.potentials, s.target, NestingPolicy(0), s.cards)
    with pytest.raises(StructuralError):
        compute_message_nested(plan, s.potentials[:2])


def test_evidence_agnostic():
    spec = random_network(np.random.default_rng(77), 9)
    ev = {2: 0}
    tree = network_junction_tree(spec, apply_evidence(spec, ev))
    a = collect(initialize(tree, HUGIN, NestingPolicy(0)), 0)
    b = collect(initialize(tree, HUGIN), 0)
    assert rel_err(a.phi[0].values, b.phi[0].values) < 1e-9


def test_dump_mentions_each_level():
    s = munin1()
    text = dump_plan(build_nested_plan(s.potentials, s.target, NestingPolicy(0), s.cards))
    for needle in ("configurations=500", "configurations=5 ", "configurations=20", "space=81730",
                   "time/message=1210000", "time/message=17000", "space=75730"):
        assert needle in text
