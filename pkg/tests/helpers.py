import itertools

import numpy as np

from nestjt.model import Potential


def random_potential(rng, domain, cards):
    cs = [cards[v] for v in domain]
    return Potential(domain, cs, rng.uniform(0.1, 2.0, size=int(np.prod(cs))))


def brute_value(p, assignment):
    """Entry of `p` at a full assignment, by explicit row-major indexing."""
    idx = 0
    for v, c in zip(p.domain, p.cards):
        idx = idx * c + assignment[v]
    return p.values[idx]


def configurations(domain, cards):
    for states in itertools.product(*[range(cards[v]) for v in domain]):
        yield dict(zip(domain, states))


def rel_err(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300))) if a.size else 0.0
