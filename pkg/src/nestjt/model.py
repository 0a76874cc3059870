"""Discrete variables, Bayesian networks and the potential algebra.

A :class:`Potential` is a nonnegative table over an ordered tuple of
variable ids. Values are stored flat in row-major order, the last domain
variable varying fastest. Every operation returns its result over the
canonical (ascending id) ordering of the result domain.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from nestjt import kernels
from nestjt.errors import (
    DomainError,
    InconsistencyError,
    NetworkFormatError,
    PotentialOverflowError,
)


@dataclass(frozen=True)
class Variable:
    id: int
    name: str
    cardinality: int
    states: tuple[str, ...] = ()

    def state_index(self, state: str | int) -> int:
        if isinstance(state, int):
            idx = state
        elif state in self.states:
            idx = self.states.index(state)
        elif str(state).isdigit():
            idx = int(state)
        else:
            raise DomainError(f"variable {self.name!r} has no state {state!r}")
        if not 0 <= idx < self.cardinality:
            raise DomainError(f"state {idx} out of range for {self.name!r} (cardinality {self.cardinality})")
        return idx


@dataclass(frozen=True)
class CPT:
    """p(child | parents); table layout: first parent slowest, child fastest."""

    child: int
    parents: tuple[int, ...]
    table: np.ndarray = field(repr=False)

    @property
    def family(self) -> tuple[int, ...]:
        return self.parents + (self.child,)


@dataclass
class NetworkSpec:
    variables: list[Variable]
    cpts: list[CPT]

    @property
    def cards(self) -> dict[int, int]:
        return {v.id: v.cardinality for v in self.variables}

    def var(self, key: int | str) -> Variable:
        if isinstance(key, int):
            return self.variables[key]
        for v in self.variables:
            if v.name == key:
                return v
        raise DomainError(f"unknown variable {key!r}")

    def cpt_potentials(self) -> list[Potential]:
        cards = self.cards
        return [
            Potential(c.family, [cards[v] for v in c.family], c.table)
            for c in self.cpts
        ]


def _prod(xs: Iterable[int]) -> int:
    return math.prod(int(x) for x in xs)


class Potential:
    """Immutable table over ``domain`` with matching ``cards``."""

    __slots__ = ("domain", "cards", "values")

    def __init__(self, domain: Sequence[int], cards: Sequence[int], values, *, check: bool = True):
        domain = tuple(int(v) for v in domain)
        cards = tuple(int(c) for c in cards)
        vals = np.array(values, dtype=np.float64).ravel()
        if check:
            if len(set(domain)) != len(domain):
                raise DomainError(f"duplicate variables in domain {domain}")
            if len(cards) != len(domain):
                raise DomainError("domain and cardinality lists differ in length")
            if any(c < 1 for c in cards):
                raise DomainError(f"cardinalities must be >= 1, got {cards}")
            if vals.size != _prod(cards):
                raise DomainError(f"expected {_prod(cards)} values over {domain}, got {vals.size}")
            if not np.all(np.isfinite(vals)):
                raise DomainError("potential values must be finite")
            if np.any(vals < 0):
                raise DomainError("potential values must be nonnegative")
        vals.flags.writeable = False
        self.domain = domain
        self.cards = cards
        self.values = vals

    @classmethod
    def _raw(cls, domain, cards, values) -> Potential:
        obj = cls.__new__(cls)
        values.flags.writeable = False
        obj.domain = tuple(domain)
        obj.cards = tuple(cards)
        obj.values = values
        return obj

    @classmethod
    def unit(cls, domain: Sequence[int] = (), cards: Sequence[int] = ()) -> Potential:
        return cls(domain, cards, np.ones(_prod(cards)))

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def table(self) -> np.ndarray:
        return self.values.reshape(self.cards) if self.cards else self.values.reshape(())

    def card_map(self) -> dict[int, int]:
        return dict(zip(self.domain, self.cards))

    def canonical(self) -> Potential:
        if list(self.domain) == sorted(self.domain):
            return self
        return marginalize(self, self.domain)

    def __repr__(self):
        return f"Potential(domain={self.domain}, cards={self.cards})"


def _strides(domain, cards) -> dict[int, int]:
    out, s = {}, 1
    for v, c in zip(reversed(domain), reversed(cards)):
        out[v] = s
        s *= c
    return out


def multiply(a: Potential, b: Potential) -> Potential:
    cm = a.card_map()
    for v, c in zip(b.domain, b.cards):
        if cm.setdefault(v, c) != c:
            raise DomainError(f"variable {v} has cardinality {cm[v]} in one factor and {c} in the other")
    dom = tuple(sorted(cm))
    cards = tuple(cm[v] for v in dom)
    sa, sb = _strides(a.domain, a.cards), _strides(b.domain, b.cards)
    vals = kernels.impl.multiply(
        a.values, np.array([sa.get(v, 0) for v in dom], dtype=np.intp),
        b.values, np.array([sb.get(v, 0) for v in dom], dtype=np.intp),
        np.array(cards, dtype=np.intp),
    )
    if not np.all(np.isfinite(vals)):
        bad = int(np.flatnonzero(~np.isfinite(vals))[0])
        raise PotentialOverflowError(f"product overflowed at entry {bad} of domain {dom}")
    return Potential._raw(dom, cards, vals)


def multiply_all(potentials: Sequence[Potential]) -> Potential:
    if not potentials:
        return Potential.unit()
    out = potentials[0]
    for p in potentials[1:]:
        out = multiply(out, p)
    return out.canonical()


def marginalize(p: Potential, keep: Iterable[int]) -> Potential:
    keep = set(keep)
    missing = keep - set(p.domain)
    if missing:
        raise DomainError(f"cannot keep {sorted(missing)}: not in domain {p.domain}")
    dom = tuple(sorted(keep))
    axes = np.array([p.domain.index(v) for v in dom], dtype=np.intp)
    vals = kernels.impl.marginalize(p.values, np.array(p.cards, dtype=np.intp), axes)
    cm = p.card_map()
    return Potential._raw(dom, tuple(cm[v] for v in dom), vals)


def divide(a: Potential, b: Potential) -> Potential:
    """a / b with 0/0 = 0; b's domain must be contained in a's."""
    if not set(b.domain) <= set(a.domain):
        raise DomainError(f"divisor domain {b.domain} not contained in {a.domain}")
    a = a.canonical()
    bx = multiply(Potential.unit(a.domain, a.cards), b)
    num, den = a.values, bx.values
    zero = den == 0
    bad = zero & (num != 0)
    if np.any(bad):
        raise InconsistencyError(
            f"nonzero entry {int(np.flatnonzero(bad)[0])} divided by zero over {a.domain}"
        )
    out = np.divide(num, den, out=np.zeros_like(num), where=~zero)
    return Potential._raw(a.domain, a.cards, out)


def slice_(p: Potential, assignment: Mapping[int, int]) -> Potential:
    """Fix the assigned variables; result is over the remaining ones."""
    extra = set(assignment) - set(p.domain)
    if extra:
        raise DomainError(f"cannot slice on {sorted(extra)}: not in domain {p.domain}")
    return restrict(p, assignment)


def restrict(p: Potential, assignment: Mapping[int, int]) -> Potential:
    """Like :func:`slice_` but ignores assigned variables outside the domain."""
    if not any(v in assignment for v in p.domain):
        return p.canonical()
    index = []
    for v, c in zip(p.domain, p.cards):
        if v in assignment:
            s = int(assignment[v])
            if not 0 <= s < c:
                raise DomainError(f"state {s} out of range for variable {v} (cardinality {c})")
            index.append(s)
        else:
            index.append(slice(None))
    rest = [(v, c) for v, c in zip(p.domain, p.cards) if v not in assignment]
    sub = np.ascontiguousarray(p.table[tuple(index)]).ravel()
    out = Potential._raw([v for v, _ in rest], [c for _, c in rest], sub)
    return out.canonical()


def extend(p: Potential, domain: Sequence[int], cards: Mapping[int, int]) -> Potential:
    """Broadcast `p` (constant along new variables) to cover `domain`."""
    new = [v for v in domain if v not in p.domain]
    if not new:
        return p.canonical()
    return multiply(p, Potential.unit(new, [cards[v] for v in new]))


def normalize(p: Potential) -> Potential:
    total = p.values.sum()
    if total <= 0:
        raise InconsistencyError("potential has zero total mass")
    return Potential._raw(p.domain, p.cards, p.values / total)


# -- networks ---------------------------------------------------------------


def validate_network(spec: NetworkSpec) -> list[str]:
    """Return one message per violated network invariant (empty if valid)."""
    problems = []
    n = len(spec.variables)
    names = set()
    for i, v in enumerate(spec.variables):
        if v.id != i:
            problems.append(f"variables[{i}]: id {v.id} is not the dense index {i}")
        if v.name in names:
            problems.append(f"variables[{i}]: duplicate name {v.name!r}")
        names.add(v.name)
        if v.cardinality < 1:
            problems.append(f"variables[{i}] ({v.name}): cardinality {v.cardinality} < 1")
    children = {}
    parents_of = {}
    for j, c in enumerate(spec.cpts):
        ids = (c.child,) + tuple(c.parents)
        if any(not (0 <= x < n) for x in ids):
            problems.append(f"cpts[{j}]: variable id out of range")
            continue
        label = f"cpts[{j}] ({spec.variables[c.child].name})"
        if c.child in c.parents:
            problems.append(f"{label}: child listed among its parents")
        if len(set(c.parents)) != len(c.parents):
            problems.append(f"{label}: duplicate parents")
        if c.child in children:
            problems.append(f"{label}: second CPT for the same child (first is cpts[{children[c.child]}])")
        children[c.child] = j
        parents_of[c.child] = set(c.parents)
        kc = spec.variables[c.child].cardinality
        npa = _prod(spec.variables[p].cardinality for p in c.parents)
        tab = np.asarray(c.table, dtype=np.float64).ravel()
        if tab.size != kc * npa:
            problems.append(f"{label}: table has {tab.size} entries, expected {kc * npa}")
            continue
        if not np.all(np.isfinite(tab)) or np.any(tab < 0):
            problems.append(f"{label}: table entries must be finite and nonnegative")
            continue
        sums = tab.reshape(npa, kc).sum(axis=1)
        for row in np.flatnonzero(np.abs(sums - 1.0) > 1e-9):
            problems.append(f"{label}: parent configuration {int(row)} sums to {sums[row]:.12g}, not 1")
    for v in spec.variables:
        if v.id not in children and 0 <= v.id < n:
            problems.append(f"variables[{v.id}] ({v.name}): no CPT")
    cycle = _find_cycle(parents_of, n)
    if cycle:
        names_ = " -> ".join(spec.variables[i].name for i in cycle)
        problems.append(f"directed cycle: {names_}")
    return problems


def _find_cycle(parents_of, n):
    color = [0] * n
    stack_path = []

    def visit(u):
        color[u] = 1
        stack_path.append(u)
        for p in sorted(parents_of.get(u, ())):
            if color[p] == 1:
                return stack_path[stack_path.index(p):] + [p]
            if color[p] == 0:
                found = visit(p)
                if found:
                    return found
        stack_path.pop()
        color[u] = 2
        return None

    for u in range(n):
        if color[u] == 0:
            found = visit(u)
            if found:
                return list(reversed(found))
    return None


def apply_evidence(spec: NetworkSpec, evidence: Mapping[int, int]) -> list[Potential]:
    """CPT potentials with the rows inconsistent with `evidence` zeroed."""
    pots = spec.cpt_potentials()
    out = []
    for c, p in zip(spec.cpts, pots):
        if c.child in evidence:
            k = spec.variables[c.child].cardinality
            state = spec.variables[c.child].state_index(evidence[c.child])
            mask = np.zeros(k)
            mask[state] = 1.0
            vals = (p.values.reshape(-1, k) * mask).ravel()
            p = Potential(p.domain, p.cards, vals)
        out.append(p)
    return out


def parse_evidence(spec: NetworkSpec, items: Iterable[str] | Mapping) -> dict[int, int]:
    if isinstance(items, Mapping):
        pairs = items.items()
    else:
        pairs = []
        for item in items:
            if "=" not in item:
                raise DomainError(f"evidence {item!r} is not NAME=STATE")
            pairs.append(tuple(item.split("=", 1)))
    out = {}
    for name, state in pairs:
        v = spec.var(name)
        out[v.id] = v.state_index(state)
    return out


# -- JSON network format ------------------------------------------------------


def loads_network(text: str) -> NetworkSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(f"invalid JSON: {exc.msg}", f"line {exc.lineno} column {exc.colno}") from exc
    if not isinstance(doc, dict) or "variables" not in doc or "cpts" not in doc:
        raise NetworkFormatError("expected an object with 'variables' and 'cpts'", "$")
    variables = []
    index = {}
    for i, entry in enumerate(doc["variables"]):
        where = f"$.variables[{i}]"
        if not isinstance(entry, dict) or "name" not in entry or "states" not in entry:
            raise NetworkFormatError("variable needs 'name' and 'states'", where)
        name, states = str(entry["name"]), entry["states"]
        if not isinstance(states, list) or not states:
            raise NetworkFormatError("'states' must be a nonempty list", f"{where}.states")
        if len(set(map(str, states))) != len(states):
            raise NetworkFormatError("duplicate state names", f"{where}.states")
        if name in index:
            raise NetworkFormatError(f"duplicate variable name {name!r}", f"{where}.name")
        index[name] = i
        variables.append(Variable(i, name, len(states), tuple(map(str, states))))
    cpts = []
    for j, entry in enumerate(doc["cpts"]):
        where = f"$.cpts[{j}]"
        if not isinstance(entry, dict) or "child" not in entry or "table" not in entry:
            raise NetworkFormatError("cpt needs 'child' and 'table'", where)
        try:
            child = index[entry["child"]]
        except (KeyError, TypeError):
            raise NetworkFormatError(f"unknown child {entry['child']!r}", f"{where}.child") from None
        parents = []
        for k, pname in enumerate(entry.get("parents", [])):
            if pname not in index:
                raise NetworkFormatError(f"unknown parent {pname!r}", f"{where}.parents[{k}]")
            parents.append(index[pname])
        try:
            table = np.array(entry["table"], dtype=np.float64).ravel()
        except (TypeError, ValueError):
            raise NetworkFormatError("table must be a list of numbers", f"{where}.table") from None
        cpts.append(CPT(child, tuple(parents), table))
    spec = NetworkSpec(variables, cpts)
    problems = validate_network(spec)
    if problems:
        raise NetworkFormatError("; ".join(problems), _first_path(problems[0]))
    return spec


def _first_path(problem: str) -> str:
    head = problem.split(":", 1)[0].split(" ", 1)[0]
    return "$." + head if head.startswith(("cpts", "variables")) else "$"


def load_network(path) -> NetworkSpec:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return loads_network(text)
    except NetworkFormatError as exc:
        exc.source = str(path)
        raise


def dumps_network(spec: NetworkSpec) -> str:
    doc = {
        "variables": [
            {"name": v.name, "states": list(v.states) or [str(s) for s in range(v.cardinality)]}
            for v in spec.variables
        ],
        "cpts": [
            {
                "child": spec.variables[c.child].name,
                "parents": [spec.variables[p].name for p in c.parents],
                "table": [float(x) for x in np.asarray(c.table).ravel()],
            }
            for c in spec.cpts
        ],
    }
    return json.dumps(doc, indent=1)
