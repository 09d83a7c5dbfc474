import itertools
import random

import pytest
from test_circuit_ir import random_circuit

from qubocomp.circuit_ir import Circuit, Op, parse_sexpr
from qubocomp.compile import Assembler, CompileError, LowerOptions, XorForm, lower, witness_eval
from qubocomp.patterns import Literal
from qubocomp.qubo_model import VarKind
from qubocomp.verify import brute_force_zero_set, sample_nonnegativity


def satisfying_inputs(c, wants):
    ins = c.input_nodes()
    out = set()
    for bits in itertools.product((0, 1), repeat=len(ins)):
        if c.output_values(dict(zip(ins, bits))) == list(wants):
            out.add(bits)
    return out


def root_xor(n):
    c = Circuit()
    xs = [c.add_input(f"x{i}")[0] for i in range(n)]
    c.outputs = [Literal(c.add_gate(Op.XOR, *xs))]
    return c


def test_root_xor_single_parity_fragment():
    res = lower(root_xor(3))
    assert len(res.plan.patterns) == 1
    rep = brute_force_zero_set(res.qubo, [0, 1, 2])
    assert not rep.negative
    assert rep.zero_set == {b for b in itertools.product((0, 1), repeat=3) if sum(b) % 2 == 1}


def test_eight_input_xor_with_limit_five():
    res = lower(root_xor(8), LowerOptions(clause_length_limit=5))
    kinds = res.plan.registry.kind_counts()
    assert kinds.get(VarKind.INTERMEDIATE.value, 0) == 1
    assert len(res.plan.patterns) == 2
    rep = brute_force_zero_set(res.qubo, list(range(8)))
    assert rep.zero_set_size == 128 and not rep.negative


def test_single_and_witness():
    c = parse_sexpr("(inputs a b) (outputs (and a b))")
    res = lower(c)
    full = witness_eval(res.plan, {"a": 1, "b": 1})
    assert res.qubo.energy(full) == 0
    assert res.qubo.energy([0] + full[1:]) >= 1


def test_witness_eval_missing_input():
    res = lower(parse_sexpr("(inputs a b) (outputs (and a b))"))
    with pytest.raises(KeyError):
        witness_eval(res.plan, {"a": 1})


def test_output_values_and_negated_roots():
    c = parse_sexpr("(inputs a b c) (outputs (or a b c) (xor a b))")
    res = lower(c, LowerOptions(output_values=(0, 1)))
    rep = brute_force_zero_set(res.qubo, [0, 1, 2])
    assert rep.zero_set == satisfying_inputs(c, (0, 1)) == set()
    res = lower(c, LowerOptions(output_values=(1, 0)))
    assert brute_force_zero_set(res.qubo, [0, 1, 2]).zero_set == satisfying_inputs(c, (1, 0))
    with pytest.raises(CompileError):
        lower(c, LowerOptions(output_values=(1,)))


def test_unmarked_consumed_gate_is_error():
    from qubocomp.circuit_ir import Gate
    c = Circuit()
    a, b, d = (c.add_input(n)[0] for n in "abc")
    # hand-built flat circuit that skips flatten's class merging
    c.nodes.append(Gate(Op.XOR, (Literal(a), Literal(b))))
    c.nodes.append(Gate(Op.AND, (Literal(3), Literal(d))))
    c.outputs = [Literal(4)]
    res = lower(c)  # lowering places the required marker itself
    assert brute_force_zero_set(res.qubo, [0, 1, 2]).zero_set == satisfying_inputs(c, (1,))


@pytest.mark.parametrize("seed", range(60))
def test_zero_set_soundness_random(seed):
    rng = random.Random(1000 + seed)
    for _ in range(50):
        c = random_circuit(rng, rng.randint(2, 7), rng.randint(3, 14), rng.randint(1, 2))
        wants = tuple(rng.randrange(2) for _ in c.outputs)
        limit = rng.choice([None, 3, 4])
        res = lower(c, LowerOptions(clause_length_limit=limit, and_low_coeff=rng.random() < 0.5,
                                    output_values=wants))
        if res.qubo.num_vars <= 20:
            break
    else:
        pytest.skip("no small instance drawn")
    n = len(c.input_nodes())
    rep = brute_force_zero_set(res.qubo, list(range(n)))
    assert not rep.negative
    sat = satisfying_inputs(c, wants)
    assert rep.zero_set == sat
    for bits in sat:
        full = witness_eval(res.plan, dict(zip(range(n), bits)))
        assert res.qubo.energy(full) == 0


def test_variable_accounting():
    c = parse_sexpr("(inputs a b c d e) (define t (xor a b c d)) (outputs (and t e) (or a e))")
    res = lower(c)
    reg = res.plan.registry
    counts = reg.kind_counts()
    assert sum(counts.values()) == res.qubo.num_vars == len(reg)
    n_subs = sum(em.n_subs for em, _ in res.plan.patterns)
    assert counts.get(VarKind.SUBSTITUTION.value, 0) == n_subs
    assert counts[VarKind.CIRCUIT_INPUT.value] == 5


def test_limit_lowers_parity_coefficients():
    prev = None
    for k in (None, 13, 8, 5, 3):
        q = lower(root_xor(24), LowerOptions(clause_length_limit=k)).qubo
        if prev is not None:
            assert q.max_abs() <= prev
        prev = q.max_abs()


def test_nonnegative_at_scale():
    rng = random.Random(5)
    c = random_circuit(rng, 30, 200, 6)
    res = lower(c)
    assert sample_nonnegativity(res.qubo, 20_000, seed=1).passed


def test_assembler_materialize_reuses_forms():
    asm = Assembler()
    vs = [asm.input_var(f"v{i}") for i in range(4)]
    f = XorForm(vs)
    t1 = asm.materialize(f)
    t2 = asm.materialize(~f)
    assert t2 == ~t1
    assert asm.materialize(XorForm([vs[0]], 1)) == ~Literal(vs[0])
    with pytest.raises(ValueError):
        Assembler(clause_length_limit=2)
