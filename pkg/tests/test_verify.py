import dataclasses
import itertools

import pytest
from golden_polynomials import MAJORITY3, THREE_INPUT_NAMES, to_local

from qubocomp.patterns import Literal, encode_gf16_inv, encode_or, encode_range
from qubocomp.qubo_model import QuboBuilder, QuboInstance
from qubocomp.verify import (
    EnumerationBoundError,
    brute_force_zero_set,
    check_emission,
    exhaustive_nonnegativity,
    predicate_zero_set,
    sample_nonnegativity,
)

L = [Literal(i) for i in range(16)]


def test_empty_instance():
    rep = brute_force_zero_set(QuboInstance.empty(), [])
    assert rep.zero_set == {()} and rep.min_energy == 0 and not rep.negative


def test_majority3_zero_set():
    names = THREE_INPUT_NAMES[:4]
    q = QuboInstance.from_terms(4, to_local(MAJORITY3, names))
    rep = brute_force_zero_set(q, [0, 1, 2, 3])
    assert rep.zero_set == predicate_zero_set(4, lambda b: b[3] == int(sum(b[:3]) >= 2))
    assert rep.zero_set_size == 8


def test_or6_zero_set():
    e = encode_or(L[:6])
    rep = brute_force_zero_set(e.fragment, list(range(6)))
    assert rep.zero_set_size == 63 and not rep.negative


def test_bound_refused():
    q = QuboInstance.empty(27)
    with pytest.raises(EnumerationBoundError, match="26"):
        brute_force_zero_set(q, [0])
    with pytest.raises(ValueError):
        brute_force_zero_set(QuboInstance.empty(3), [0, 0])


def test_range_emission_passes():
    e = encode_range(L[:9], 2, 5)
    rep = check_emission(e, lambda v: 2 <= sum(v[i] for i in range(9)) <= 5)
    assert rep.passed and rep.to_json()["counterexample"] is None


def test_corrupted_coefficient_fails_with_counterexample():
    e = encode_range(L[:6], 1, 4)
    terms = e.fragment.terms()
    key = next(k for k in terms if len(k) == 2)
    terms[key] += 1
    e = dataclasses.replace(e, fragment=QuboInstance.from_terms(e.fragment.num_vars, terms))
    rep = check_emission(e, lambda v: 1 <= sum(v[i] for i in range(6)) <= 4)
    assert not rep.passed
    cx = rep.to_json()["counterexample"]
    assert cx is not None and cx["kind"] in ("negative", "zero-set", "witness")


def test_sub_count_mismatch_reported():
    rep = check_emission(encode_or(L[:5]), expected_subs=7)
    assert not rep.passed and rep.failures[-1]["kind"] == "sub-count"


def test_gf16_table_is_involution_both_routes():
    e = encode_gf16_inv(L[:4], L[4:8])
    rep = brute_force_zero_set(e.fragment, list(range(8)))
    table = {}
    for bits in rep.zero_set:
        x = sum(b << i for i, b in enumerate(bits[:4]))
        z = sum(b << i for i, b in enumerate(bits[4:]))
        table[x] = z
    assert len(table) == 16
    assert all(table[table[x]] == x for x in table)
    assert check_emission(e, lambda v: table[sum(v[i] << i for i in range(4))] == sum(v[4 + i] << i for i in range(4))).passed


def test_negative_energy_detected():
    b = QuboBuilder(4)
    b.add_linear(0, 1)
    b.add_linear(1, 1)
    b.add_quadratic(0, 1, -3)
    q = b.build()
    rep = sample_nonnegativity(q, 2000, seed=0)
    assert not rep.passed and rep.min_energy == -1
    assert sample_nonnegativity(q, 2000, seed=0, around=[1, 0, 0, 0], flip_prob=0.3).negative > 0
    assert brute_force_zero_set(q, [0, 1]).negative
    assert exhaustive_nonnegativity(QuboInstance.from_terms(3, {(1,): -1})) == -1


def test_sampling_deterministic():
    e = encode_range(L[:12], 3, 9).fragment
    a = sample_nonnegativity(e, 5000, seed=7)
    b = sample_nonnegativity(e, 5000, seed=7, batch=333)
    c = sample_nonnegativity(e, 5000, seed=7, jobs=3)
    assert a.to_json() == c.to_json()
    assert a.passed and b.passed


def test_brute_force_agrees_with_check_emission():
    for n in range(1, 8):
        for lo, hi in itertools.combinations_with_replacement(range(n + 1), 2):
            e = encode_range(L[:n], lo, hi)
            if e.fragment.num_vars == 0:
                continue
            zs = brute_force_zero_set(e.fragment, list(range(n))).zero_set
            expect = predicate_zero_set(n, lambda b: lo <= sum(b) <= hi)
            assert zs == expect
            assert check_emission(e, lambda v: lo <= sum(v[i] for i in range(n)) <= hi).zero_set_size == len(expect)
