"""Bundled scenarios and random network generation.

``munin1`` is the message from clique C16 to C13 of the Munin1 subnet: nine
variables and four potential domains whose table sizes match every
known figure of that example. Potential values are seeded random
positives; only structure and sizes come from the original network.
"""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from nestjt.graph import JunctionTree
from nestjt.model import CPT, NetworkSpec, Potential, Variable

MUNIN1_CARDS = {22: 4, 26: 5, 83: 5, 84: 5, 94: 5, 95: 5, 97: 5, 164: 7, 168: 6}
MUNIN1_DOMAINS = {
    "S1": (22, 26, 83, 84, 94, 95, 168),  # message from C19
    "S2": (83, 84, 97, 164, 168),  # message from C26
    "S3": (94, 95, 97),  # message from C63
    "V1": (22, 26, 97),  # P(97 | 22, 26)
}
MUNIN1_TARGET = (22, 26, 84, 94, 95, 97, 164, 168)  # separator C16-C13

# clique labels of the annotated nested tree, by variable set
MUNIN1_CLIQUES = {
    "C16": frozenset(MUNIN1_CARDS),
    "Ca": frozenset({83, 84, 97, 164, 168}),
    "Cb": frozenset({22, 26, 83, 84, 94, 95, 97, 168}),
    "Cc": frozenset({22, 26, 83, 84, 94, 95, 168}),
    "Cd": frozenset({22, 26, 94, 95, 97}),
    "Ce": frozenset({22, 26, 97}),
    "Cf": frozenset({94, 95, 97}),
}


@dataclass
class Scenario:
    """A single message computation: potentials, cardinalities, target."""

    name: str
    cards: dict
    potentials: list
    target: tuple
    labels: tuple = ()

    @property
    def domains(self):
        return [p.domain for p in self.potentials]


def reduced_cards(cards):
    return {v: (max(2, c // 2) if c > 2 else c) for v, c in cards.items()}


def _random_potential(rng, domain, cards):
    cs = [cards[v] for v in domain]
    return Potential(domain, cs, rng.uniform(0.1, 1.0, size=int(np.prod(cs))))


def munin1(seed: int = 0, reduced: bool = False) -> Scenario:
    cards = reduced_cards(MUNIN1_CARDS) if reduced else dict(MUNIN1_CARDS)
    rng = np.random.default_rng(seed)
    pots = [_random_potential(rng, d, cards) for d in MUNIN1_DOMAINS.values()]
    return Scenario("munin1" + ("-reduced" if reduced else ""), cards, pots, MUNIN1_TARGET, tuple(MUNIN1_DOMAINS))


def eq2(seed: int = 0) -> Scenario:
    """Four binary variables; messages over {X1,X2}, {X2,X3}; local {X3,X4}."""
    cards = {1: 2, 2: 2, 3: 2, 4: 2}
    rng = np.random.default_rng(seed)
    doms = [(1, 2), (2, 3), (3, 4)]
    return Scenario("eq2", cards, [_random_potential(rng, d, cards) for d in doms], (1, 4), ("phi12", "phi23", "phi34"))


SCENARIOS = {"munin1": munin1, "munin1-reduced": lambda seed=0: munin1(seed, reduced=True), "eq2": eq2}


def munin1_outer_tree(seed: int = 0, reduced: bool = False) -> JunctionTree:
    """Outer tree around C16: C13 (root side), C16, C19, C26, C63.

    Each neighbour gets one private binary variable so that it is a proper
    maximal clique; its single potential covers the whole clique. Clique
    indices: C13=0, C16=1, C19=2, C26=3, C63=4.
    """
    cards = reduced_cards(MUNIN1_CARDS) if reduced else dict(MUNIN1_CARDS)
    extra = {"C13": 1013, "C19": 1019, "C26": 1026, "C63": 1063}
    cards.update({v: 2 for v in extra.values()})
    core = frozenset(MUNIN1_CARDS)
    cliques = [
        frozenset(MUNIN1_TARGET) | {extra["C13"]},
        core,
        frozenset(MUNIN1_DOMAINS["S1"]) | {extra["C19"]},
        frozenset(MUNIN1_DOMAINS["S2"]) | {extra["C26"]},
        frozenset(MUNIN1_DOMAINS["S3"]) | {extra["C63"]},
    ]
    rng = np.random.default_rng(seed)
    pots = [
        _random_potential(rng, tuple(sorted(cliques[0])), cards),
        _random_potential(rng, MUNIN1_DOMAINS["V1"], cards),
        _random_potential(rng, tuple(sorted(cliques[2])), cards),
        _random_potential(rng, tuple(sorted(cliques[3])), cards),
        _random_potential(rng, tuple(sorted(cliques[4])), cards),
    ]
    # explicit star: C63 ties between C13 and C16 on intersection size,
    # and V1 would otherwise land in C13, the lowest containing clique
    edges = [(0, 1, cliques[0] & cliques[1])] + [(1, j, cliques[1] & cliques[j]) for j in (2, 3, 4)]
    tree = JunctionTree(cliques, edges, {i: [i] for i in range(5)}, pots, cards)
    return tree


# -- networks -----------------------------------------------------------------


def random_network(rng: np.random.Generator, n_vars: int, max_parents: int = 3, cards=(2, 3)) -> NetworkSpec:
    """Random DAG over a random topological order with Dirichlet(1) CPTs."""
    lo, hi = cards
    variables = [Variable(i, f"V{i}", int(rng.integers(lo, hi + 1))) for i in range(n_vars)]
    variables = [Variable(v.id, v.name, v.cardinality, tuple(f"s{k}" for k in range(v.cardinality))) for v in variables]
    perm = rng.permutation(n_vars)
    cpts = []
    for pos, child in enumerate(perm):
        earlier = perm[:pos]
        k = int(rng.integers(0, min(max_parents, len(earlier)) + 1))
        parents = tuple(int(p) for p in rng.choice(earlier, size=k, replace=False)) if k else ()
        kc = variables[child].cardinality
        npa = int(np.prod([variables[p].cardinality for p in parents])) if parents else 1
        table = rng.dirichlet(np.ones(kc), size=npa).ravel()
        cpts.append(CPT(int(child), parents, table))
    cpts.sort(key=lambda c: c.child)
    return NetworkSpec(variables, cpts)


def chain4() -> NetworkSpec:
    """X1 -> X2 -> X3 -> X4, all binary."""
    vs = [Variable(i, f"X{i + 1}", 2, ("0", "1")) for i in range(4)]
    cpts = [
        CPT(0, (), np.array([0.6, 0.4])),
        CPT(1, (0,), np.array([0.7, 0.3, 0.2, 0.8])),
        CPT(2, (1,), np.array([0.9, 0.1, 0.4, 0.6])),
        CPT(3, (2,), np.array([0.5, 0.5, 0.25, 0.75])),
    ]
    return NetworkSpec(vs, cpts)


def bundled_networks() -> dict[str, str]:
    """Names and paths of the example network files shipped with the package."""
    root = resources.files("nestjt") / "data"
    return {p.name.rsplit(".", 1)[0]: str(p) for p in root.iterdir() if p.name.endswith(".json")}
