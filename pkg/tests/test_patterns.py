import itertools
import math

import pytest

from golden_polynomials import (
    GF4_MULT,
    GF4_NAMES,
    GF16_INV,
    GF16_NAMES,
    MAJORITY3,
    MD5_I,
    TERNARY,
    THREE_INPUT_NAMES,
    XOR3,
    to_local,
)
from qubocomp.patterns import (
    Literal,
    RelaxedExpansion,
    encode_and,
    encode_gf4_mult,
    encode_gf16_inv,
    encode_majority3,
    encode_md5_i_aux,
    encode_modular_add,
    encode_nand,
    encode_or,
    encode_parity,
    encode_range,
    encode_ternary_select,
    encode_xor3_result,
    gf4_mult_table,
    gf16_inv_table,
    parity_subs,
    range_subs,
)
from qubocomp.verify import brute_force_zero_set, check_emission

L = [Literal(i) for i in range(48)]


def min_over_subs(e, port_bits):
    """Minimum fragment energy over the substitution bits for the given port bits."""
    return min(e.fragment.energy(list(port_bits) + list(s)) for s in itertools.product((0, 1), repeat=e.n_subs))


def three(enc):
    return enc(L[0], L[1], L[2], L[3])


def gf4():
    return encode_gf4_mult(L[0:2], L[2:4], L[4:6])


def gf16():
    return encode_gf16_inv(L[0:4], L[4:8])


# ---------------------------------------------------------------- reference polynomials

@pytest.mark.parametrize("enc, golden, names", [
    (gf4, GF4_MULT, GF4_NAMES),
    (gf16, GF16_INV, GF16_NAMES),
    (lambda: three(encode_ternary_select), TERNARY, THREE_INPUT_NAMES),
    (lambda: three(encode_majority3), MAJORITY3, THREE_INPUT_NAMES[:4]),
    (lambda: three(encode_md5_i_aux), MD5_I, THREE_INPUT_NAMES),
    (lambda: three(encode_xor3_result), XOR3, THREE_INPUT_NAMES),
])
def test_reference_coefficients(enc, golden, names):
    e = enc()
    assert e.fragment.terms() == to_local(golden, names)
    assert e.n_subs == len(names) - len(e.ports)


def test_xor3_examples():
    e = three(encode_xor3_result)
    assert e.fragment.energy([0, 0, 0, 0, 1]) == 0
    assert e.fragment.energy([1, 1, 1, 1, 1]) == 4
    assert e.fragment.energy([1, 1, 1, 1, 0]) == 0
    for bits in itertools.product((0, 1), repeat=4):
        assert (min_over_subs(e, bits) == 0) == (bits[3] == bits[0] ^ bits[1] ^ bits[2])


def test_ternary_examples():
    e = three(encode_ternary_select)
    assert min_over_subs(e, (0, 0, 0, 0)) == 0
    assert min_over_subs(e, (1, 1, 0, 1)) == 0
    assert min_over_subs(e, (1, 1, 0, 0)) >= 1
    for x0, x1, x2, z in itertools.product((0, 1), repeat=4):
        want = (x0 & x1) | ((1 - x0) & x2)
        assert (min_over_subs(e, (x0, x1, x2, z)) == 0) == (z == want)


def test_majority_examples():
    e = three(encode_majority3)
    assert e.fragment.energy([0, 0, 0, 0]) == 0
    assert e.fragment.energy([0, 0, 0, 1]) == 3
    assert e.fragment.energy([1, 1, 0, 1]) == 0
    for x0, x1, x2, z in itertools.product((0, 1), repeat=4):
        assert (e.fragment.energy([x0, x1, x2, z]) == 0) == (z == int(x0 + x1 + x2 >= 2))


def test_md5_aux_examples():
    e = three(encode_md5_i_aux)
    assert min_over_subs(e, (0, 0, 1, 0)) == 0
    assert min_over_subs(e, (0, 0, 0, 1)) == 0
    for x0, x1, x2, z in itertools.product((0, 1), repeat=4):
        assert (min_over_subs(e, (x0, x1, x2, z)) == 0) == (z == x0 ^ (x1 | (1 - x2)))


def recovered_gf4():
    """Zero set of the GF(4) polynomial as a map (x, y) -> z over 2-bit codes."""
    e = gf4()
    rep = brute_force_zero_set(e.fragment, list(range(6)))
    table = {}
    for b in rep.zero_set:
        x, y, z = b[0] | b[1] << 1, b[2] | b[3] << 1, b[4] | b[5] << 1
        assert (x, y) not in table
        table[(x, y)] = z
    return table, rep


def test_gf4_zero_set_is_a_field_multiplication():
    table, rep = recovered_gf4()
    assert rep.evaluations == 2**8 and not rep.negative
    assert len(table) == 16
    mul = lambda a, b: table[(a, b)]
    for a in range(4):
        assert mul(a, 0) == 0 == mul(0, a)
        for b in range(4):
            assert mul(a, b) == mul(b, a)
            for c in range(4):
                assert mul(mul(a, b), c) == mul(a, mul(b, c))
    for a in range(1, 4):
        assert sorted(mul(a, b) for b in range(1, 4)) == [1, 2, 3]
    ones = [u for u in range(1, 4) if all(mul(u, b) == b for b in range(4))]
    assert len(ones) == 1
    # distributes over XOR, which makes it GF(4) rather than any group table
    for a, b, c in itertools.product(range(4), repeat=3):
        assert mul(a, b ^ c) == mul(a, b) ^ mul(a, c)
    assert min_over_subs(gf4(), (0,) * 6) == 0


def test_gf4_table_helper_matches_enumeration():
    table, _ = recovered_gf4()
    helper = gf4_mult_table()
    assert {(x[0] | x[1] << 1, x[2] | x[3] << 1): z[0] | z[1] << 1 for x, z in helper.items()} == table


def test_gf16_zero_set_is_an_inversion():
    e = gf16()
    rep = brute_force_zero_set(e.fragment, list(range(8)))
    assert rep.evaluations == 2**9 and not rep.negative
    assert len(rep.zero_set) == 16
    inv = {}
    for b in rep.zero_set:
        x = sum(b[i] << i for i in range(4))
        z = sum(b[4 + i] << i for i in range(4))
        assert x not in inv
        inv[x] = z
    assert set(inv) == set(range(16)) and sorted(inv.values()) == list(range(16))
    for a in range(16):
        assert inv[inv[a]] == a
    assert inv[0] == 0
    assert {sum(x[i] << i for i in range(4)): sum(z[i] << i for i in range(4))
            for x, z in gf16_inv_table().items()} == inv


def _gf4_s_formula(x0, x1, y0, y1, z0, z1):
    n = lambda v: 1 - v
    s0 = (y0 and n(y1) and (x0 or x1) and (n(x1) or n(z0) or n(z1)) and (x0 or z0) and (n(x0) or z1)
          and (x1 or z0))
    s1 = (z1 and (n(x1) or n(z0)) and (n(y1) or n(z0)) and (n(x0) or y0 or y1) and (x1 or n(y0) or z0)
          and (x0 or n(z0)) and (x0 or n(x1)) and (n(x1) or n(y1)) and (x0 or n(y1)))
    return int(bool(s0)), int(bool(s1))


def _gf16_s_formula(x0, x1, x2, x3, z0, z1, z2, z3):
    n = lambda v: 1 - v
    s = (n(x0) and n(x1) and n(z2) and n(z3) and (n(x2) or n(z1)) and (n(x2) or z0) and (z0 or n(z1))
         and (x2 or x3 or n(z0)) and (n(x3) or z1))
    return (int(bool(s)),)


@pytest.mark.parametrize("enc, formula, n_ports", [(gf4, _gf4_s_formula, 6), (gf16, _gf16_s_formula, 8)])
def test_reference_substitution_formulas_reach_zero(enc, formula, n_ports):
    # the closed-form substitution formulas number the primary bit-string from the
    # opposite end to the polynomials: formula x0 is the polynomial's last port
    e = enc()
    rep = brute_force_zero_set(e.fragment, list(range(n_ports)))
    assert len(rep.zero_set) == 16
    for b in rep.zero_set:
        assert e.fragment.energy(list(b) + list(formula(*b[::-1]))) == 0


@pytest.mark.parametrize("enc", [gf4, gf16, lambda: three(encode_ternary_select), lambda: three(encode_majority3),
                                 lambda: three(encode_md5_i_aux), lambda: three(encode_xor3_result)])
def test_reference_patterns_pass_emission_check(enc):
    rep = check_emission(enc())
    assert rep.passed, rep.failures[:3]


# ---------------------------------------------------------------- parity

def test_parity_single_literal():
    e = encode_parity([L[0]])
    assert e.n_subs == 0
    assert e.fragment.terms() == {(): 1, (0,): -1}


def test_parity_n4_subs():
    assert encode_parity(L[:4]).n_subs == 1
    assert parity_subs(4) == 1


def test_parity_with_result_n7():
    e = encode_parity(L[:7], L[7])
    for bits in itertools.product((0, 1), repeat=8):
        want = bits[7] == sum(bits[:7]) % 2
        assert (min_over_subs(e, bits) == 0) == want
    assert check_emission(e).passed


@pytest.mark.parametrize("n", range(1, 13))
def test_parity_zero_set(n):
    e = encode_parity(L[:n])
    assert check_emission(e, lambda v: sum(v[i] for i in range(n)) % 2 == 1).passed


# ---------------------------------------------------------------- OR / NAND / AND / range

def test_or_single_literal():
    e = encode_or([L[0]])
    assert e.n_subs == 0
    assert e.fragment.energy([1]) == 0 and e.fragment.energy([0]) >= 1


def test_or_n10_subs():
    assert encode_or(L[:10]).n_subs == 3
    assert encode_range(L[:10], 1, 10).n_subs == 3


def test_or_n10_alternative_coefficients():
    # f1 = 5s3+3s2+2s1 and f2 = 5s3+2s2+s1+1 as given: never negative, but
    # s = 000 gives f1 = 0, so the all-false input is also a root
    values = set()
    for s1, s2, s3 in itertools.product((0, 1), repeat=3):
        f1 = 5 * s3 + 3 * s2 + 2 * s1
        f2 = 5 * s3 + 2 * s2 + s1 + 1
        for S in range(11):
            assert (S - f1) * (S - f2) >= 0
            if (S - f1) * (S - f2) == 0:
                values.add(S)
    assert values == set(range(0, 11))


def test_or_with_result_n5():
    e = encode_or(L[:5], L[5])
    # ports are (r, x0..x4)
    for bits in itertools.product((0, 1), repeat=6):
        assert (min_over_subs(e, bits) == 0) == (bits[0] == int(any(bits[1:])))


def test_range_degenerate_forms():
    e = encode_range(L[:5], 3, 3)
    assert e.n_subs == 0
    for bits in itertools.product((0, 1), repeat=5):
        assert e.fragment.energy(list(bits)) == (sum(bits) - 3) ** 2
    assert encode_range(L[:5], 0, 5).fragment.terms() == {}


def test_range_contract():
    with pytest.raises(ValueError):
        encode_range(L[:3], 2, 1)
    with pytest.raises(ValueError):
        encode_range(L[:3], 0, 4)


def test_range_strict_bounds():
    e = encode_range(L[:6], 1, 5, strict_low=True, strict_high=True)
    assert check_emission(e, lambda v: 2 <= sum(v[i] for i in range(6)) <= 4).passed


def test_and_square_form():
    e = encode_and(L[:2])
    assert [e.fragment.energy(list(b)) for b in [(1, 1), (0, 1), (1, 0), (0, 0)]] == [0, 1, 1, 4]


def test_and_low_coeff_form():
    e = encode_and(L[:4], low_coeff=True)
    assert e.fragment.terms() == {(): 2, (0, 1): -1, (2, 3): -1}
    odd = encode_and(L[:3], low_coeff=True)
    assert set(abs(c) for k, c in odd.fragment.terms().items() if k) == {1}
    assert check_emission(odd, lambda v: v[0] & v[1] & v[2] == 1).passed


def test_and_with_result_n4():
    e = encode_and(L[:4], L[4])
    for bits in itertools.product((0, 1), repeat=5):
        assert (min_over_subs(e, bits) == 0) == (bits[0] == int(all(bits[1:])))


def test_negated_literals_expand():
    e = encode_and([L[0], ~L[1]])
    assert e.fragment.energy([1, 0]) == 0
    assert e.fragment.energy([1, 1]) == 1


@pytest.mark.parametrize("n", range(1, 13))
def test_or_nand_and_zero_sets(n):
    pop = lambda v: sum(v[i] for i in range(n))
    assert check_emission(encode_or(L[:n]), lambda v: pop(v) >= 1, range_subs(1, n)).passed
    assert check_emission(encode_nand(L[:n]), lambda v: pop(v) <= n - 1).passed
    assert check_emission(encode_and(L[:n]), lambda v: pop(v) == n).passed
    assert check_emission(encode_and(L[:n], low_coeff=True), lambda v: pop(v) == n).passed


@pytest.mark.parametrize("n", [1, 3, 6, 9, 11])
def test_result_forms(n):
    pop = lambda v: sum(v[i] for i in range(n))
    r = n
    assert check_emission(encode_or(L[:n], L[r]), lambda v: v[r] == int(pop(v) >= 1)).passed
    assert check_emission(encode_and(L[:n], L[r]), lambda v: v[r] == int(pop(v) == n)).passed
    assert check_emission(encode_parity(L[:n], L[r]), lambda v: v[r] == pop(v) % 2).passed


@pytest.mark.parametrize("n", range(0, 10))
def test_range_all_bounds(n):
    for lo in range(n + 1):
        for hi in range(lo, n + 1):
            e = encode_range(L[:n], lo, hi)
            # the full range is a tautology and emits nothing
            subs = 0 if (lo, hi) == (0, n) else max(0, math.ceil(math.log2(hi - lo + 1)) - 1)
            rep = check_emission(e, lambda v: lo <= sum(v[i] for i in range(n)) <= hi, subs)
            assert rep.passed, (n, lo, hi, rep.failures[:2])


# ---------------------------------------------------------------- relaxed expansion

@pytest.mark.parametrize("t_max", range(1, 40))
def test_counter_expansion_covers(t_max):
    r = RelaxedExpansion.counter(t_max)
    assert r.well_formed()
    assert r.values() == list(range(1, t_max + 1))
    assert r.n_subs == math.ceil(math.log2(t_max)) if t_max > 1 else r.n_subs == 0


@pytest.mark.parametrize("lo, hi", [(0, 1), (1, 10), (2, 9), (0, 16), (3, 20), (1, 33)])
def test_range_root_covers_with_pairing(lo, hi):
    r = RelaxedExpansion.range_root(lo, hi)
    assert r.well_formed()
    covered = set(r.values()) | {v + 1 for v in r.values()}
    assert covered == set(range(lo, hi + 1))
    assert all(b - a <= 2 for a, b in zip(r.values(), r.values()[1:]))
    assert r.coefficients == tuple(sorted(r.coefficients))


# ---------------------------------------------------------------- modular addition

def adder(k, B, w):
    ins = [L[i * w:(i + 1) * w] for i in range(k)]
    return encode_modular_add(ins, L[k * w:(k + 1) * w], B, w)


def test_adder_single_block_form():
    e = adder(2, 4, 4)
    # one block: (a + b - c - 16 s)^2 with a single top carry
    assert e.n_subs == 1
    for code in range(1 << 12):
        a, b, c = code & 15, (code >> 4) & 15, code >> 8
        bits = [(code >> i) & 1 for i in range(12)]
        assert (min_over_subs(e, bits) == 0) == ((a + b) % 16 == c)


def test_adder_k4_b2_w4():
    e = adder(4, 2, 4)
    for code in range(1 << 16):
        vals = [(code >> (4 * i)) & 15 for i in range(4)]
        x = sum(vals) % 16
        w = e.witness({i: (code >> i) & 1 for i in range(16)} | {16 + j: (x >> j) & 1 for j in range(4)})
        bits = [(code >> i) & 1 for i in range(16)] + [(x >> j) & 1 for j in range(4)]
        assert e.fragment.energy(bits + list(w)) == 0


def test_adder_witness_paths_agree():
    e = adder(5, 2, 6)
    import random
    rng = random.Random(3)
    for _ in range(200):
        vals = [rng.randrange(64) for _ in range(5)]
        out = sum(vals) % 64
        v = {i * 6 + j: (vals[i] >> j) & 1 for i in range(5) for j in range(6)}
        v |= {30 + j: (out >> j) & 1 for j in range(6)}
        fast = e.fast_witness(v)
        slow = e.witness_exhaustive(v)
        assert e.local_energy(v, fast) == 0 == e.local_energy(v, slow)


def test_adder_contract():
    with pytest.raises(ValueError):
        encode_modular_add([L[:4]], L[4:8], 2, 4)
    with pytest.raises(ValueError):
        encode_modular_add([L[:4]] * 8, L[4:8], 2, 4)


@pytest.mark.parametrize("k,B,w", [(3, 1, 5), (5, 2, 6), (4, 3, 6)])
def test_adder_local_min_on_wrong_output(k, B, w):
    e = adder(k, B, w)
    import random
    rng = random.Random(k * 10 + B)
    for _ in range(100):
        vals = [rng.randrange(1 << w) for _ in range(k)]
        out = rng.randrange(1 << w)
        v = {i * w + j: (vals[i] >> j) & 1 for i in range(k) for j in range(w)}
        v |= {k * w + j: (out >> j) & 1 for j in range(w)}
        got = e.local_energy(v, e.witness(v))
        assert got == e.min_over_subs(v)
        assert (got == 0) == (sum(vals) % (1 << w) == out)
