"""Hypothesis-driven invariants. The 10^4-case seeded sweeps live in test_acceptance.py."""
import random
from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

import props
from shardswap.amm import quote
from shardswap.fixed import SCALE, fmt, to_units
from shardswap.oracle import floor_units, rational_quote

units = st.integers(min_value=1, max_value=10**20)
gammas = st.integers(min_value=1, max_value=SCALE)
seeds = st.integers(min_value=0, max_value=2**63)


@given(units, units, st.integers(min_value=0, max_value=10**20), gammas)
def test_quote_is_floor_of_exact_value(r_in, r_out, d, g):
    exact = rational_quote(*(Fraction(v, SCALE) for v in (r_in, r_out, d, g)))
    assert quote(r_in, r_out, d, g) == floor_units(exact)


@given(units, units, units, gammas)
def test_quote_below_reserve_and_monotone(r_in, r_out, d, g):
    out = quote(r_in, r_out, d, g)
    assert 0 <= out < r_out
    assert quote(r_in, r_out, d + 1, g) >= out


@given(st.integers(min_value=0, max_value=10**30))
def test_fixed_point_round_trip(n):
    assert to_units(fmt(n)) == n


@given(seeds)
def test_constant_product(seed):
    props.check_constant_product(random.Random(seed))


@given(seeds)
def test_fee_monotonicity(seed):
    props.check_fee_monotonicity(random.Random(seed))


@given(seeds)
def test_ledger_consistency(seed):
    props.check_ledger_consistency(random.Random(seed))


@given(seeds)
def test_min_rule(seed):
    props.check_min_rule(random.Random(seed))


@given(seeds)
def test_resolution_commutativity(seed):
    props.check_resolution_commutativity(random.Random(seed))


@given(seeds)
def test_cancel_equivalence(seed):
    props.check_cancel_equivalence(random.Random(seed))


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_coordinator_under_load(seed):
    props.check_coordinator_under_load(random.Random(seed))


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_oracle_equivalence(seed):
    props.check_oracle_equivalence(random.Random(seed))
