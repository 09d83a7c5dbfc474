import itertools
import random

import pytest

from qubocomp.circuit_ir import (
    BINARY_OPS,
    Circuit,
    CircuitError,
    CircuitParseError,
    MarkerPolicy,
    Op,
    XorClause,
    flatten,
    literal_count,
    load_circuit,
    parse_bristol_text,
    parse_sexpr,
    place_markers,
    xor_reuse,
)
from qubocomp.patterns import Literal


def named(*names):
    c = Circuit()
    return c, [c.add_input(n)[0] for n in names]


def same_function(c1, c2):
    # flatten keeps the input node ids first and in order
    ins1, ins2 = c1.input_nodes(), c2.input_nodes()
    assert len(ins1) == len(ins2)
    for bits in itertools.product((0, 1), repeat=len(ins1)):
        if c1.output_values(dict(zip(ins1, bits))) != c2.output_values(dict(zip(ins2, bits))):
            return False
    return True


def random_circuit(rng, n_inputs, n_gates, n_outputs=2):
    c = Circuit()
    for i in range(n_inputs):
        c.add_input(f"i{i}")
    ops = sorted(BINARY_OPS, key=lambda o: o.value) + [Op.NOT, Op.CONST0, Op.CONST1]
    for _ in range(n_gates):
        op = rng.choice(ops)
        pick = lambda: Literal(rng.randrange(len(c.nodes)), rng.random() < 0.2)
        if op is Op.NOT:
            c.add_gate(op, pick())
        elif op in (Op.CONST0, Op.CONST1):
            c.add_gate(op)
        else:
            c.add_gate(op, pick(), pick())
    n = len(c.nodes)
    c.outputs = [Literal(rng.randrange(n_inputs, n), rng.random() < 0.3) for _ in range(n_outputs)]
    return c


# ---------------------------------------------------------------- flatten

def test_flatten_conjunction_with_nimply():
    c, (a, b, d) = named("a", "b", "c")
    c.outputs = [Literal(c.add_gate(Op.AND, a, c.add_gate(Op.NIMPLY, b, d)))]
    f = flatten(c)
    (g,) = [g for g in f.nodes if g.op is not Op.INPUT]
    assert g.op is Op.AND and g.operands == (Literal(0), Literal(1), ~Literal(2))


def test_flatten_xnor_pair_cancels_constants():
    c, (a, b, d, e) = named("a", "b", "c", "d")
    x, y = c.add_gate(Op.XNOR, a, b), c.add_gate(Op.XNOR, d, e)
    c.outputs = [Literal(c.add_gate(Op.XOR, x, y))]
    (g,) = [g for g in flatten(c).nodes if g.op is not Op.INPUT]
    assert g.op is Op.XOR and len(g.operands) == 4 and g.constant == 0


def test_flatten_single_xnor():
    c, (a, b) = named("a", "b")
    c.outputs = [Literal(c.add_gate(Op.XNOR, a, b))]
    (g,) = [g for g in flatten(c).nodes if g.op is not Op.INPUT]
    assert g.op is Op.XOR and g.constant == 1


def test_flatten_class_rules():
    c, (a, b) = named("a", "b")
    contradiction = c.add_gate(Op.AND, a, c.add_gate(Op.NOT, a))
    tautology = c.add_gate(Op.OR, b, c.add_gate(Op.NOT, b))
    cancel = c.add_gate(Op.XOR, c.add_gate(Op.XOR, a, b), b)
    dup = c.add_gate(Op.AND, a, a)
    c.outputs = [Literal(contradiction), Literal(tautology), Literal(cancel), Literal(dup)]
    f = flatten(c)
    assert f.outputs[:2] == [0, 1]
    assert f.outputs[2] == Literal(0) and f.outputs[3] == Literal(0)


def test_flatten_respects_markers():
    c, (a, b, d) = named("a", "b", "c")
    inner = c.add_gate(Op.AND, a, b)
    c.outputs = [Literal(c.add_gate(Op.AND, inner, d))]
    c.markers = frozenset({inner})
    f = flatten(c)
    gates = [g for g in f.nodes if g.op is not Op.INPUT]
    assert [len(g.operands) for g in gates] == [2, 2]
    assert same_function(c, f)


def test_cyclic_reference_is_structural_error():
    c, (a,) = named("a")
    with pytest.raises(CircuitError):
        c.add_gate(Op.AND, a, 5)


@pytest.mark.parametrize("seed", range(200))
def test_flatten_preserves_function_and_is_idempotent(seed):
    rng = random.Random(seed)
    c = random_circuit(rng, rng.randint(2, 8), rng.randint(3, 25))
    f = flatten(c)
    assert f.is_flat()
    assert same_function(c, f)
    assert flatten(f) == f
    m = place_markers(c, MarkerPolicy.fanout_threshold(2))
    fm = flatten(m)
    assert same_function(c, fm)


def test_differential_on_wide_circuit():
    rng = random.Random(99)
    c = random_circuit(rng, 24, 120, 4)
    f = flatten(c)
    ins = c.input_nodes()
    for _ in range(1000):
        bits = {i: rng.randrange(2) for i in ins}
        assert c.output_values(bits) == f.output_values(bits)


# ---------------------------------------------------------------- markers

def test_root_xor_needs_no_marker():
    c, xs = named(*"abcde")
    g = c.add_gate(Op.XOR, *xs)
    c.outputs = [Literal(g)]
    f = place_markers(flatten(c), "every-multi-input")
    assert f.markers == frozenset()


def test_inner_xor_feeding_and_is_marked():
    c, xs = named(*"abcde")
    x = c.add_gate(Op.XOR, *xs[:4])
    c.outputs = [Literal(c.add_gate(Op.AND, x, xs[4]))]
    c.markers = frozenset({x})
    f = flatten(c)
    for policy in ("every-multi-input", MarkerPolicy.explicit([]), MarkerPolicy.fanout_threshold(9)):
        m = place_markers(f, policy)
        inner = [i for i, g in enumerate(m.nodes) if g.op is Op.XOR]
        assert set(inner) <= m.markers


# ---------------------------------------------------------------- XOR clauses

def test_xor_clause_algebra():
    a, b = Literal(0), Literal(1)
    assert XorClause.of([a, a]) == XorClause(frozenset(), 0)
    assert XorClause.of([~a]) == XorClause(frozenset({0}), 1)
    assert XorClause.of([a, ~a]) == XorClause(frozenset(), 1)
    assert (XorClause.of([a, b]) ^ XorClause.of([b], 1)) == XorClause(frozenset({0}), 1)


def test_xor_clause_against_bit_oracle():
    rng = random.Random(4)
    for _ in range(300):
        lits = [Literal(rng.randrange(6), rng.random() < 0.5) for _ in range(rng.randrange(9))]
        const = rng.randrange(2)
        cl = XorClause.of(lits, const)
        vals = [rng.randrange(2) for _ in range(6)]
        expect = const
        for x in lits:
            expect ^= vals[x.var] ^ int(x.negated)
        assert cl.value(vals) == expect


def _check_reuse(clauses, new, defs, n_vars, rng, trials=200):
    for _ in range(trials):
        vals = {v: rng.randrange(2) for v in range(n_vars)}
        for d in defs:
            vals[d.var] = d.clause.value(vals)
        assert [c.value(vals) for c in clauses] == [c.value(vals) for c in new]


def test_reuse_shared_prefix():
    a, b, c, d, e = range(5)
    cls = [XorClause(frozenset({a, b, c, d})), XorClause(frozenset({a, b, c, e}), 1)]
    new, defs = xor_reuse(cls, next_var=5)
    assert len(defs) == 1 and defs[0].clause.vars == {a, b, c}
    assert new == [XorClause(frozenset({5, d})), XorClause(frozenset({5, e}), 1)]
    assert literal_count(new, defs) <= literal_count(cls)
    _check_reuse(cls, new, defs, 5, random.Random(1))


def test_reuse_disjoint_unchanged():
    cls = [XorClause(frozenset({0, 1, 2})), XorClause(frozenset({3, 4, 5}))]
    new, defs = xor_reuse(cls, next_var=6)
    assert new == cls and defs == []


def test_reuse_three_clauses_sharing_pair():
    cls = [XorClause(frozenset({0, 1, k})) for k in (2, 3, 4)]
    new, defs = xor_reuse(cls, next_var=5, threshold=2)
    assert len(defs) == 1 and defs[0].clause.vars == {0, 1}
    assert all(5 in c.vars and len(c) == 2 for c in new)
    _check_reuse(cls, new, defs, 5, random.Random(2))


def test_reuse_never_increases_literals():
    rng = random.Random(8)
    for _ in range(60):
        cls = [XorClause(frozenset(rng.sample(range(12), rng.randint(2, 9))), rng.randrange(2)) for _ in range(6)]
        new, defs = xor_reuse(cls, next_var=12)
        before, after = literal_count(cls), literal_count(new, defs)
        assert after <= before
        if defs:
            assert after < before
        _check_reuse(cls, new, defs, 12, rng, 50)


# ---------------------------------------------------------------- Bristol

XOR_FILE = "1 3\n2 1 1\n1 1\n\n2 1 0 1 2 XOR\n"


def test_bristol_single_xor():
    c = parse_bristol_text(XOR_FILE)
    assert len(c.input_nodes()) == 2 and len(c.outputs) == 1
    for a, b in itertools.product((0, 1), repeat=2):
        assert c.output_values({"in0": [a], "in1": [b]}) == [a ^ b]


def test_bristol_inv():
    c = parse_bristol_text("1 2\n1 1\n1 1\n1 1 0 1 INV\n")
    assert c.nodes[-1].op is Op.NOT
    assert c.output_values({"in0": [0]}) == [1]


def test_bristol_full_adder_and_mand():
    # wires 0..2 = a, b, cin; MAND gives 4 = a&b and 5 = cin&(a^b)
    text = """4 8
3 1 1 1
2 1 1
2 1 0 1 3 XOR
4 2 0 2 1 3 4 5 MAND
2 1 4 5 6 XOR
2 1 3 2 7 XOR
"""
    c = parse_bristol_text(text)
    for a, b, cin in itertools.product((0, 1), repeat=3):
        carry, total = c.output_values({"in0": [a], "in1": [b], "in2": [cin]})
        assert 2 * carry + total == a + b + cin


@pytest.mark.parametrize("text,line", [
    ("1 3\n2 1 1\n1 1\n2 1 0 1 2 FOO\n", 4),
    ("1 3\n2 1 1\n1 1\n2 1 0 5 2 XOR\n", 4),
    ("2 3\n2 1 1\n1 1\n2 1 0 1 2 XOR\n", 4),
    ("x 3\n2 1 1\n1 1\n2 1 0 1 2 XOR\n", 1),
    ("1 3\n2 1 1\n1 1\n2 1 0 1 XOR\n", 4),
])
def test_bristol_errors_carry_line_numbers(text, line):
    with pytest.raises(CircuitParseError) as ei:
        parse_bristol_text(text)
    assert ei.value.line == line


def test_bristol_truncated():
    with pytest.raises(CircuitParseError):
        parse_bristol_text("1 3\n")


# ---------------------------------------------------------------- S-expressions

def test_sexpr_parse_and_evaluate(tmp_path):
    text = "; comment\n(inputs a b c)\n(define t (and a b))\n(outputs (xor t (not c)) (or a b c))\n"
    p = tmp_path / "c.sx"
    p.write_text(text)
    c = load_circuit(p, "sexpr")
    for a, b, d in itertools.product((0, 1), repeat=3):
        assert c.output_values({"a": [a], "b": [b], "c": [d]}) == [(a & b) ^ (1 - d), a | b | d]
    assert same_function(c, flatten(c))


@pytest.mark.parametrize("text", ["(inputs a) (outputs (and a))", "(inputs a) (outputs b)",
                                  "(inputs a (b))", "(inputs a) (outputs (foo a a))", "(inputs a",
                                  "(inputs a b c) (outputs (imply a b c))", "(frob)"])
def test_sexpr_errors(text):
    with pytest.raises(CircuitParseError):
        parse_sexpr(text)


def test_load_circuit_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        load_circuit(tmp_path / "x", "verilog")
