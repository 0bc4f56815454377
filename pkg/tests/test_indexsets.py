import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from muntzkit.errors import InvalidArgument
from muntzkit.indexsets import (Arithmetic, Explicit, Geometric, PowerOfIndex, Sum, Union,
                                classify_ms, interval_case, parse_family, reciprocal_sum_diverges,
                                split_even_odd)
from muntzkit.realnum import Rational, sqrt


def test_split_even_odd_examples():
    parts = split_even_odd(Explicit((0, 1, 2, 3, 4)))
    assert parts.even.take(10) == [2, 4]
    assert parts.odd.take(10) == [0, 1, 3]
    parts = split_even_odd(Arithmetic(0, 2))
    assert parts.even.take(4) == [2, 4, 6, 8]
    assert parts.odd.take(4) == [0]
    parts = split_even_odd(Geometric(1, 2))
    assert parts.even.take(4) == [2, 4, 8, 16]
    assert parts.odd.take(4) == [1]
    assert split_even_odd(Geometric(1, 2), zero="always").odd.take(4) == [0, 1]


def test_reciprocal_sum_examples():
    assert reciprocal_sum_diverges(Arithmetic(1, 1)) is Sum.DIVERGES
    assert reciprocal_sum_diverges(PowerOfIndex(2)) is Sum.CONVERGES
    assert reciprocal_sum_diverges(Geometric(1, 2)) is Sum.CONVERGES
    assert reciprocal_sum_diverges(Explicit((0, 1, 2))) is Sum.CONVERGES
    assert reciprocal_sum_diverges(Union((Geometric(1, 3), Arithmetic(5, 7)))) is Sum.DIVERGES


def test_classify_examples():
    v = classify_ms(Arithmetic(0, 1), 0, 1)
    assert v.is_ms and v.reason.value == "harmonic-divergent" and v.interval_case.value == "touches-zero"
    v = classify_ms(parse_family("union:[explicit:[0];arith:2,2]"), -1, 1)
    assert not v.is_ms and v.reason.value == "odd-part-fails"
    v = classify_ms(PowerOfIndex(2), 1, 2)
    assert not v.is_ms and v.reason.value == "reciprocal-sum-convergent"
    v = classify_ms(parse_family("union:[explicit:[0];arith:1,2]"), -1, 1)
    assert not v.is_ms and v.reason.value == "even-part-fails"
    v = classify_ms(Arithmetic(1, 1), 0, 1)
    assert not v.is_ms and v.reason.value == "missing-zero"
    assert classify_ms(Arithmetic(1, 1), -2, -1).is_ms


def test_interval_case_with_surd_endpoints():
    assert interval_case(sqrt(2) - 1, 1).value == "away-from-zero"
    assert interval_case(1 - sqrt(2), 1).value == "straddles-zero"
    assert interval_case(Rational(-1, 2), 0).value == "touches-zero"
    with pytest.raises(InvalidArgument):
        interval_case(1, 1)


# families built from parameters whose parity-class divergence is known in closed form
def _arith_parity(first, step, residue):
    if step % 2:
        return True
    return first % 2 == residue and not (residue == 0 and first == 0 and step == 0)


family_params = st.lists(
    st.one_of(
        st.tuples(st.just("arith"), st.integers(0, 6), st.integers(1, 5)),
        st.tuples(st.just("geom"), st.integers(1, 5), st.integers(2, 4)),
        st.tuples(st.just("powers"), st.integers(2, 4)),
        st.tuples(st.just("explicit"), st.lists(st.integers(0, 30), min_size=1, max_size=6)),
    ), min_size=1, max_size=3)


def _build(params):
    parts = []
    for p in params:
        if p[0] == "arith":
            parts.append(Arithmetic(p[1], p[2]))
        elif p[0] == "geom":
            parts.append(Geometric(p[1], p[2]))
        elif p[0] == "powers":
            parts.append(PowerOfIndex(p[1]))
        else:
            parts.append(Explicit(tuple(sorted(set(p[1])))))
    return parts[0] if len(parts) == 1 else Union(tuple(parts))


def _oracle_parity_divergent(params, residue):
    return any(p[0] == "arith" and _arith_parity(p[1], p[2], residue) for p in params)


def _oracle_contains_zero(params):
    return any((p[0] == "arith" and p[1] == 0) or (p[0] == "explicit" and 0 in p[1]) for p in params)


@settings(max_examples=50, deadline=None)
@given(family_params)
def test_straddles_verdict_matches_parity_oracle(params):
    fam = _build(params)
    expected = (_oracle_contains_zero(params) and _oracle_parity_divergent(params, 0)
                and _oracle_parity_divergent(params, 1))
    assert classify_ms(fam, -1, 1).is_ms == expected
    touches = _oracle_contains_zero(params) and any(p[0] == "arith" for p in params)
    assert classify_ms(fam, 0, 1).is_ms == touches


@settings(max_examples=50, deadline=None)
@given(family_params)
def test_touches_zero_is_symmetric(params):
    fam = _build(params)
    assert classify_ms(fam, 0, 1) == classify_ms(fam, -1, 0)


@settings(max_examples=50, deadline=None)
@given(family_params)
def test_enumeration_agrees_with_membership(params):
    fam = _build(params)
    first = fam.take(40)
    assert first == sorted(set(first))
    assert all(n in fam for n in first)
    if first:
        seen = set(first)
        missing = [n for n in range(min(first[-1], 5000) + 1) if n in fam and n not in seen]
        assert not missing


@settings(max_examples=50, deadline=None)
@given(family_params)
def test_split_then_union_reconstructs_membership(params):
    fam = _build(params)
    parts = split_even_odd(fam)
    for n in range(200):
        assert (n in fam) == (n in parts.even or n in parts.odd)
        if n in parts.even:
            assert n % 2 == 0 and n != 0


def test_filtered_finite_class_of_infinite_family_terminates():
    parts = split_even_odd(Geometric(1, 2))
    assert list(itertools.islice(parts.odd.iter(), 5)) == [1]
    assert parts.odd.is_finite()


def test_parse_family_round_trip_and_errors():
    for text in ("explicit:[0,1,2]", "arith:0,1", "geom:1,2", "powers:3",
                 "union:[explicit:[0];arith:2,2]"):
        fam = parse_family(text)
        assert parse_family(fam.text()).take(20) == fam.take(20)
    for bad in ("arith:0", "cheese:1", "explicit:[a]", "geom:0,2", "powers:1"):
        with pytest.raises(InvalidArgument):
            parse_family(bad)
