import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nestjt.errors import DomainError, InconsistencyError, NetworkFormatError, PotentialOverflowError
from nestjt.model import (
    CPT,
    NetworkSpec,
    Potential,
    Variable,
    divide,
    dumps_network,
    loads_network,
    marginalize,
    multiply,
    slice_,
    validate_network,
)

from helpers import brute_value, configurations, random_potential, rel_err


def pot(domain, cards, values):
    return Potential(domain, cards, values)


class TestMultiply:
    def test_same_domain(self, backend):
        r = multiply(pot([0], [2], [2, 3]), pot([0], [2], [5, 7]))
        assert r.domain == (0,)
        np.testing.assert_array_equal(r.values, [10, 21])

    def test_unit_identity(self, backend, rng):
        b = random_potential(rng, (3, 1), {1: 2, 3: 3})
        r = multiply(Potential.unit(), b)
        assert r.domain == (1, 3)
        np.testing.assert_array_equal(r.table, b.table.T)

    def test_against_brute_force(self, backend, rng):
        cards = {1: 2, 2: 2, 3: 2}
        a = random_potential(rng, (1, 2), cards)
        b = random_potential(rng, (2, 3), cards)
        r = multiply(a, b)
        assert r.domain == (1, 2, 3)
        for asg in configurations((1, 2, 3), cards):
            assert brute_value(r, asg) == brute_value(a, asg) * brute_value(b, asg)

    def test_noncanonical_inputs(self, backend, rng):
        cards = {0: 2, 1: 3, 2: 4}
        a = random_potential(rng, (2, 0), cards)
        b = random_potential(rng, (1, 2), cards)
        r = multiply(a, b)
        for asg in configurations((0, 1, 2), cards):
            assert brute_value(r, asg) == brute_value(a, asg) * brute_value(b, asg)

    def test_cardinality_clash(self):
        with pytest.raises(DomainError):
            multiply(pot([0], [2], [1, 1]), pot([0], [3], [1, 1, 1]))

    def test_overflow_reported(self):
        big = pot([0], [2], [1e300, 1.0])
        with pytest.raises(PotentialOverflowError, match="entry 0"):
            multiply(big, big)


class TestMarginalize:
    def test_full_sum(self, backend):
        r = marginalize(pot([0], [2], [10, 21]), [])
        assert r.domain == ()
        np.testing.assert_array_equal(r.values, [31])

    def test_keep_all_reorders(self, backend, rng):
        p = random_potential(rng, (4, 2), {2: 2, 4: 3})
        r = marginalize(p, p.domain)
        assert r.domain == (2, 4)
        np.testing.assert_array_equal(r.table, p.table.T)

    def test_not_in_domain(self):
        with pytest.raises(DomainError):
            marginalize(pot([0], [2], [1, 1]), [1])

    def test_two_stage_equals_one_stage(self, backend, rng):
        cards = {1: 2, 2: 2, 3: 2, 4: 2}
        f12 = random_potential(rng, (1, 2), cards)
        f23 = random_potential(rng, (2, 3), cards)
        f34 = random_potential(rng, (3, 4), cards)
        one = marginalize(multiply(multiply(f12, f23), f34), [1, 4])
        inner = marginalize(multiply(f23, f34), [2, 4])
        two = marginalize(multiply(f12, inner), [1, 4])
        assert rel_err(two.values, one.values) < 1e-12


class TestDivide:
    def test_elementwise(self, backend):
        r = divide(pot([0], [2], [10, 21]), pot([0], [2], [5, 7]))
        np.testing.assert_array_equal(r.values, [2, 3])

    def test_unit_divisor(self, backend, rng):
        a = random_potential(rng, (0, 1), {0: 2, 1: 3})
        np.testing.assert_array_equal(divide(a, Potential.unit()).values, a.values)

    def test_zero_over_zero(self, backend):
        r = divide(pot([0], [2], [0, 4]), pot([0], [2], [0, 2]))
        np.testing.assert_array_equal(r.values, [0, 2])

    def test_nonzero_over_zero(self):
        with pytest.raises(InconsistencyError):
            divide(pot([0], [2], [1, 4]), pot([0], [2], [0, 2]))

    def test_divisor_domain_must_be_contained(self):
        with pytest.raises(DomainError):
            divide(pot([0], [2], [1, 1]), pot([1], [2], [1, 1]))


class TestSlice:
    def test_row(self):
        r = slice_(pot([0, 1], [2, 2], [1, 2, 3, 4]), {0: 1})
        assert r.domain == (1,)
        np.testing.assert_array_equal(r.values, [3, 4])

    def test_empty_assignment(self, rng):
        p = random_potential(rng, (0, 1), {0: 2, 1: 3})
        np.testing.assert_array_equal(slice_(p, {}).values, p.values)

    def test_out_of_range(self):
        with pytest.raises(DomainError):
            slice_(pot([0], [2], [1, 2]), {0: 2})

    def test_commutes_with_marginalize(self, backend, rng):
        cards = {0: 2, 1: 3, 2: 2}
        p = random_potential(rng, (0, 1, 2), cards)
        for s in range(3):
            a = marginalize(slice_(p, {1: s}), [0])
            b = slice_(marginalize(p, [0, 1]), {1: s})
            assert rel_err(a.values, b.values) < 1e-12


def test_potential_rejects_bad_tables():
    with pytest.raises(DomainError):
        Potential([0, 0], [2, 2], np.ones(4))
    with pytest.raises(DomainError):
        Potential([0], [2], [1.0, -1.0])
    with pytest.raises(DomainError):
        Potential([0], [2], [1.0, np.inf])
    with pytest.raises(DomainError):
        Potential([0], [2], [1.0])


# -- properties ---------------------------------------------------------------

domains = st.lists(st.integers(0, 4), min_size=0, max_size=3, unique=True)
CARDS = {0: 2, 1: 3, 2: 2, 3: 1, 4: 3}


@settings(max_examples=40, deadline=None)
@given(da=domains, db=domains, dc=domains, seed=st.integers(0, 2**16))
def test_multiply_commutative_associative(da, db, dc, seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_potential(rng, d, CARDS) for d in (da, db, dc))
    ab, ba = multiply(a, b), multiply(b, a)
    assert ab.domain == ba.domain
    np.testing.assert_array_equal(ab.values, ba.values)
    left, right = multiply(multiply(a, b), c), multiply(a, multiply(b, c))
    assert left.domain == right.domain
    assert rel_err(left.values, right.values) < 1e-12


@settings(max_examples=40, deadline=None)
@given(d=domains, seed=st.integers(0, 2**16), data=st.data())
def test_marginalize_preserves_mass(d, seed, data):
    rng = np.random.default_rng(seed)
    p = random_potential(rng, d, CARDS)
    keep = data.draw(st.sets(st.sampled_from(d))) if d else set()
    assert abs(marginalize(p, keep).values.sum() - p.values.sum()) <= 1e-12 * p.values.sum()


@settings(max_examples=40, deadline=None)
@given(da=domains, db=domains, seed=st.integers(0, 2**16))
def test_divide_inverts_multiply(da, db, seed):
    rng = np.random.default_rng(seed)
    a, b = random_potential(rng, da, CARDS), random_potential(rng, db, CARDS)
    back = divide(multiply(a, b), b)
    expected = multiply(a, Potential.unit(back.domain, back.cards))
    assert rel_err(back.values, expected.values) < 1e-12


@settings(max_examples=30, deadline=None)
@given(cards=st.lists(st.integers(1, 5), min_size=1, max_size=5))
def test_index_round_trip(cards):
    n = int(np.prod(cards))
    for i in range(n):
        digits = np.unravel_index(i, cards)
        idx = 0
        for dgt, c in zip(digits, cards):
            idx = idx * c + int(dgt)
        assert idx == i


# -- networks -----------------------------------------------------------------


def two_chain():
    vs = [Variable(0, "X", 2, ("a", "b")), Variable(1, "Y", 2, ("a", "b"))]
    cpts = [CPT(0, (), np.array([0.3, 0.7])), CPT(1, (0,), np.array([0.9, 0.1, 0.2, 0.8]))]
    return NetworkSpec(vs, cpts)


def test_valid_chain():
    assert validate_network(two_chain()) == []


def test_normalization_violation():
    spec = two_chain()
    spec.cpts[1] = CPT(1, (0,), np.array([0.8, 0.1, 0.2, 0.8]))
    problems = validate_network(spec)
    assert len(problems) == 1 and "sums to 0.9" in problems[0]


def test_cycle_violation():
    spec = two_chain()
    spec.cpts[0] = CPT(0, (1,), np.array([0.3, 0.7, 0.5, 0.5]))
    problems = validate_network(spec)
    assert any("cycle" in p for p in problems)


def test_json_round_trip():
    spec = two_chain()
    again = loads_network(dumps_network(spec))
    assert [v.name for v in again.variables] == ["X", "Y"]
    np.testing.assert_array_equal(again.cpts[1].table, spec.cpts[1].table)


@pytest.mark.parametrize(
    "mutate, where",
    [
        (lambda d: d["cpts"][1].__setitem__("table", [0.5, 0.5, 0.5]), "$.cpts[1]"),
        (lambda d: d["cpts"][1].__setitem__("parents", ["Q"]), "$.cpts[1].parents[0]"),
        (lambda d: d["variables"][1].__setitem__("name", "X"), "$.variables[1].name"),
        (lambda d: d["cpts"][0].__setitem__("table", [0.5, 0.6]), "$.cpts[0]"),
    ],
)
def test_parser_reports_position(mutate, where):
    doc = json.loads(dumps_network(two_chain()))
    mutate(doc)
    with pytest.raises(NetworkFormatError) as info:
        loads_network(json.dumps(doc))
    assert info.value.where == where


def test_parser_reports_syntax_position():
    with pytest.raises(NetworkFormatError, match="line 1 column"):
        loads_network('{"variables": [}')
