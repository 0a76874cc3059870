"""Hugin and Shafer-Shenoy propagation on a junction tree.

Inward messages (and Shafer-Shenoy outward messages) are computed through
a :class:`~nestjt.nest.Planner`, so with a nesting policy they run as
nested junction trees. Hugin's outward pass always works on the full
clique tables: once a clique has heard from every neighbour its
separators induce a complete graph and there is nothing to nest.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from nestjt.cost import table_size
from nestjt.errors import InconsistentEvidenceError, PropagationError, StructuralError
from nestjt.graph import JunctionTree, network_junction_tree
from nestjt.model import (
    NetworkSpec,
    Potential,
    apply_evidence,
    divide,
    extend,
    marginalize,
    multiply,
    multiply_all,
)
from nestjt.nest import ExecutionStats, NestingPolicy, Planner, compute_message_nested

HUGIN = "hugin"
SHAFER_SHENOY = "ss"
ARCHITECTURES = (HUGIN, SHAFER_SHENOY)


@dataclass(frozen=True)
class Message:
    sender: int
    receiver: int
    payload: Potential


@dataclass
class PropagationState:
    tree: JunctionTree
    architecture: str
    policy: NestingPolicy | None
    factors: dict[int, tuple[Potential, ...]]
    phi: dict[int, Potential]
    sep: dict[tuple[int, int], Potential]
    messages: dict[tuple[int, int], Potential] = field(default_factory=dict)
    root: int | None = None
    status: str = "initialized"
    trace: list[str] = field(default_factory=list)
    stats: ExecutionStats = field(default_factory=ExecutionStats)
    planner: Planner = None
    root_belief: Potential | None = None

    def separator(self, i: int, j: int) -> Potential:
        return self.sep[_edge(i, j)]


def _edge(i, j):
    return (i, j) if i < j else (j, i)


def initialize(tree: JunctionTree, architecture: str = HUGIN, policy: NestingPolicy | None = None) -> PropagationState:
    """phi_C = psi_C (product of the clique's potentials), phi_S = 1."""
    if architecture not in ARCHITECTURES:
        raise ValueError(f"architecture must be one of {ARCHITECTURES}, got {architecture!r}")
    cards = tree.cards
    factors, phi, sep = {}, {}, {}
    for i, clique in enumerate(tree.cliques):
        fs = tuple(tree.potentials[k] for k in tree.assignment.get(i, []))
        factors[i] = fs
        dom = sorted(clique)
        if architecture == HUGIN:
            phi[i] = extend(multiply_all(list(fs)), dom, cards)
    for i, j, s in tree.edges:
        dom = sorted(s)
        sep[_edge(i, j)] = Potential.unit(dom, [cards[v] for v in dom])
    return PropagationState(tree, architecture, policy, factors, phi, sep, planner=Planner(cards, policy))


def _children(state: PropagationState, c: int, exclude: int | None) -> list[int]:
    return [w for w in state.tree.neighbors(c) if w != exclude]


def _plan_send(state: PropagationState, i: int, j: int):
    """Plan and inputs for the message i -> j from i's factors and the
    messages i holds from its other neighbours."""
    inputs = list(state.factors[i]) + [state.messages[(w, i)] for w in _children(state, i, j)]
    covered = set()
    for p in inputs:
        covered.update(p.domain)
    target = sorted(state.tree.separator(i, j) & covered)
    return state.planner.plan(inputs, target), inputs


def _nested_send(state: PropagationState, i: int, j: int) -> Potential:
    plan, inputs = _plan_send(state, i, j)
    msg = compute_message_nested(plan, inputs, state.stats)
    s = sorted(state.tree.separator(i, j))
    state.trace.append(f"{_phase(state)} C{i} -> C{j} {table_size(s, state.tree.cards)} {plan.cost.time}")
    return extend(msg, s, state.tree.cards)


def _phase(state):
    return "inward" if state.status == "initialized" else "outward"


def absorb_hugin(state: PropagationState, c: int, senders: Iterable[int]) -> PropagationState:
    """Clique `c` absorbs from `senders`: phi_C *= phi*_S / phi_S."""
    nested = state.policy is not None and state.policy.enabled and state.status == "initialized"
    for i in senders:
        s = sorted(state.tree.separator(i, c))
        if nested:
            new = _nested_send(state, i, c)
        else:
            new = marginalize(state.phi[i], s)
            if state.status == "initialized":
                plan, _ = _plan_send(state, i, c)
                cost = plan.cost.time
            else:
                cost = table_size(state.tree.cliques[i], state.tree.cards)
            state.trace.append(f"{_phase(state)} C{i} -> C{c} {table_size(s, state.tree.cards)} {cost}")
        old = state.sep[_edge(i, c)]
        state.phi[c] = multiply(state.phi[c], divide(new, old))
        state.sep[_edge(i, c)] = new
        state.messages[(i, c)] = new
    return state


def absorb_ss(state: PropagationState, c: int, senders: Iterable[int]) -> PropagationState:
    """Clique `c` absorbs from `senders`; psi_C is never overwritten."""
    for i in senders:
        new = _nested_send(state, i, c)
        state.sep[_edge(i, c)] = new
        state.messages[(i, c)] = new
    return state


def _absorb(state, c, senders):
    if state.architecture == HUGIN:
        return absorb_hugin(state, c, senders)
    return absorb_ss(state, c, senders)


def collect(state: PropagationState, root: int = 0) -> PropagationState:
    """Inward pass: leaves first, children in ascending clique index."""
    if state.status != "initialized":
        raise PropagationError(f"collect needs an initialized state, not {state.status!r}")
    parent, post = state.tree.rooted(root)
    for u in post:
        _absorb(state, u, state.tree.children(u, parent))
    state.root = root
    state.root_belief = _belief(state, root, charge=True)
    state.status = "collected"
    return state


def distribute(state: PropagationState) -> PropagationState:
    """Outward pass from the collect root."""
    if state.status != "collected":
        raise PropagationError(f"distribute needs a collected state, not {state.status!r}")
    state.status = "distributing"
    parent, post = state.tree.rooted(state.root)
    for u in reversed(post):
        for j in state.tree.children(u, parent):
            _absorb(state, j, [u])
    state.status = "distributed"
    return state


def propagate(tree: JunctionTree, architecture: str = HUGIN, root: int = 0,
              policy: NestingPolicy | None = None, outward: bool = True) -> PropagationState:
    state = collect(initialize(tree, architecture, policy), root)
    return distribute(state) if outward else state


def _belief(state: PropagationState, i: int, charge: bool = False) -> Potential:
    dom = sorted(state.tree.cliques[i])
    if state.architecture == HUGIN:
        return state.phi[i]
    inputs = list(state.factors[i]) + [state.messages[(w, i)] for w in state.tree.neighbors(i)]
    table = extend(multiply_all(inputs), dom, state.tree.cards)
    if charge:
        n = table_size(set().union(*(p.domain for p in inputs)) if inputs else (), state.tree.cards)
        state.stats.combines += 1
        state.stats.marginalizations += 1
        state.stats.model_time += (len(inputs) * n if len(inputs) >= 2 else 0) + n
    return table


def clique_belief(state: PropagationState, i: int) -> Potential:
    """Unnormalized posterior table of clique `i`."""
    if state.status == "distributed" or i == state.root:
        return _belief(state, i)
    raise PropagationError(f"clique {i} is not calibrated; run distribute or collect to it")


def query_marginal(state: PropagationState, variable: int) -> Potential:
    """Normalized posterior of `variable`."""
    tree = state.tree
    if state.root is not None and variable in tree.cliques[state.root]:
        i = state.root
    elif state.status == "distributed":
        hits = [k for k, c in enumerate(tree.cliques) if variable in c]
        if not hits:
            raise StructuralError(f"variable {variable} is in no clique")
        i = hits[0]
    else:
        raise PropagationError(f"variable {variable} is not in the root clique; distribute first")
    m = marginalize(clique_belief(state, i), [variable])
    total = m.values.sum()
    if not total > 0:
        raise InconsistentEvidenceError("evidence has zero probability")
    return Potential._raw(m.domain, m.cards, m.values / total)


class InferenceEngine:
    """Network-level convenience wrapper: build, propagate, query."""

    def __init__(self, spec: NetworkSpec, method: str = HUGIN, gamma=None,
                 evidence: Mapping[int, int] | None = None):
        self.spec = spec
        self.method = method
        self.policy = None if gamma is None else NestingPolicy(gamma)
        self.evidence = dict(evidence or {})
        self.tree = network_junction_tree(spec, apply_evidence(spec, self.evidence))
        self.state: PropagationState | None = None

    def run(self, root: int = 0) -> PropagationState:
        self.state = propagate(self.tree, self.method, root, self.policy)
        return self.state

    def marginal(self, variable: int) -> np.ndarray:
        if self.state is None:
            self.run()
        return query_marginal(self.state, variable).values

    def posteriors(self, variables: Sequence[int] | None = None) -> dict[int, np.ndarray]:
        vs = range(len(self.spec.variables)) if variables is None else variables
        return {v: self.marginal(v) for v in vs}
