"""Brute-force ground truth over explicit full configurations.

Nothing here calls the potential algebra: the joint is built by visiting
every configuration and multiplying the matching CPT entries, and
marginals are accumulated the same way.
"""
from __future__ import annotations

import math
from typing import Iterable, Mapping, Sequence

import numpy as np

from nestjt import kernels
from nestjt.errors import InconsistentEvidenceError, ResourceLimitError
from nestjt.model import NetworkSpec, Potential

DEFAULT_LIMIT = 10**7


def joint_from_factors(factors: Sequence[tuple[Sequence[int], np.ndarray]], cards: Mapping[int, int],
                       limit: int = DEFAULT_LIMIT) -> Potential:
    """Joint over every variable in `cards` (ascending id).

    Each factor is (ordered domain, flat row-major table).
    """
    order = sorted(cards)
    n = math.prod(cards[v] for v in order)
    if n > limit:
        raise ResourceLimitError(f"joint table would have {n} entries (limit {limit})")
    pos = {v: i for i, v in enumerate(order)}
    kc = np.array([cards[v] for v in order], dtype=np.intp)
    positions = [np.array([pos[v] for v in dom], dtype=np.intp) for dom, _ in factors]
    tables = [np.ascontiguousarray(t, dtype=np.float64).ravel() for _, t in factors]
    vals = kernels.impl.joint_product(kc, positions, tables)
    return Potential(order, [cards[v] for v in order], vals, check=False)


def _evidence_factors(spec: NetworkSpec, evidence: Mapping[int, int]):
    out = []
    for v, state in evidence.items():
        var = spec.var(v)
        ind = np.zeros(var.cardinality)
        ind[var.state_index(state)] = 1.0
        out.append(((var.id,), ind))
    return out


def joint_table(spec: NetworkSpec, evidence: Mapping[int, int] | None = None,
                limit: int = DEFAULT_LIMIT) -> Potential:
    """Unnormalized joint p(V) with evidence-inconsistent entries zeroed."""
    factors = [(c.family, c.table) for c in spec.cpts]
    factors += _evidence_factors(spec, evidence or {})
    return joint_from_factors(factors, spec.cards, limit)


def marginal_of_joint(joint: Potential, keep: Iterable[int], reverse: bool = False) -> Potential:
    keep = sorted(set(keep))
    pos = [joint.domain.index(v) for v in keep]
    vals = kernels.impl.accumulate(
        joint.values, np.array(joint.cards, dtype=np.intp), np.array(pos, dtype=np.intp), bool(reverse)
    )
    cm = joint.card_map()
    return Potential(keep, [cm[v] for v in keep], vals, check=False)


def oracle_marginal(spec: NetworkSpec, variables: Iterable[int], evidence: Mapping[int, int] | None = None,
                    reverse: bool = False, limit: int = DEFAULT_LIMIT) -> Potential:
    m = marginal_of_joint(joint_table(spec, evidence, limit), variables, reverse)
    total = m.values.sum()
    if not total > 0:
        raise InconsistentEvidenceError("evidence has zero probability")
    return Potential(m.domain, m.cards, m.values / total, check=False)


def oracle_posteriors(spec: NetworkSpec, evidence: Mapping[int, int] | None = None,
                      limit: int = DEFAULT_LIMIT) -> dict[int, np.ndarray]:
    joint = joint_table(spec, evidence, limit)
    out = {}
    for v in range(len(spec.variables)):
        m = marginal_of_joint(joint, [v]).values
        total = m.sum()
        if not total > 0:
            raise InconsistentEvidenceError("evidence has zero probability")
        out[v] = m / total
    return out
