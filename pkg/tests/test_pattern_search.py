import itertools
import json

import pytest

from qubocomp.pattern_search import (
    Budget,
    EncodingCertificate,
    IlpProblem,
    NotFound,
    TruthSpec,
    add_symmetry_breaking,
    and2_result_spec,
    build_ilp,
    discover,
    export_lp_text,
    import_lp_text,
    load_spec,
    majority3_spec,
    solve_feasibility,
    ternary_select_spec,
    xor3_result_spec,
)


def exhaustive_ok(cert, spec):
    """Independent of ``recheck``: evaluate every (x, s) through the QUBO."""
    q = cert.to_qubo()
    n, ns = cert.n_primary, cert.n_subs
    for x in itertools.product((0, 1), repeat=n):
        es = [q.energy(list(x) + list(s)) for s in itertools.product((0, 1), repeat=ns)]
        if min(es) < 0:
            return False
        if (min(es) == 0) != (x in spec.min_terms):
            return False
    return True


def test_single_variable_relation():
    spec = TruthSpec.from_min_terms(1, ["1"])
    c = discover(spec, max_subs=0)
    assert c.n_subs == 0
    assert exhaustive_ok(c, spec)


def test_and2_within_small_bound():
    c = discover(and2_result_spec(), coeff_bound=3, escalate=False)
    assert c.n_subs == 0
    assert max(abs(v) for v in c.coefficients.values()) <= 3
    assert exhaustive_ok(c, and2_result_spec())


def test_xor3_needs_one_sub():
    spec = xor3_result_spec()
    res = discover(spec, max_subs=0, escalate=False)
    assert isinstance(res, NotFound)
    assert all(e["status"] == "infeasible" for e in res.evidence)
    c = discover(spec, max_subs=1)
    assert c.n_subs == 1 and exhaustive_ok(c, spec)


@pytest.mark.parametrize("make", [majority3_spec, and2_result_spec, xor3_result_spec, ternary_select_spec])
@pytest.mark.parametrize("method,cegar", [("zero-branch", True), ("ilp", True), ("ilp", False)])
def test_methods_agree_on_minimum(make, method, cegar):
    spec = make()
    c = discover(spec, method=method, cegar=cegar)
    assert c.n_subs == {"majority3_spec": 0, "and2_result_spec": 0}.get(make.__name__, 1)
    assert c.recheck(spec) and exhaustive_ok(c, spec)


def test_strong_search():
    c = discover(xor3_result_spec(), strong=True)
    assert c.strength == "strong"
    assert all(len(v) == 1 for v in c.subst_map.values())


def test_pre_constrained_substitution():
    base = xor3_result_spec()
    m = base.ordered()[0]
    spec = TruthSpec(base.n_primary, base.min_terms, {m: (1,)})
    c = discover(spec, max_subs=1)
    assert c.strength == "pre-constrained"
    assert (1,) in c.subst_map[m]


def test_solve_feasibility_trivial():
    p = IlpProblem()
    assert solve_feasibility(p).feasible
    p.add_row({}, ">=", 1)
    assert solve_feasibility(p).status == "infeasible"
    q = IlpProblem()
    a = q.add_unknown("a", -3, 3)
    b = q.add_unknown("b", -3, 3)
    q.add_row({a: 2, b: 2}, "=", 3)
    for backend in ("bnb", "highs"):
        assert solve_feasibility(q, backend=backend).status == "infeasible"
    q.add_row({a: 1}, ">=", 2)
    r = IlpProblem()
    x = r.add_unknown("x", 0, 5)
    r.add_row({x: 3}, "=", 6)
    for backend in ("bnb", "highs"):
        res = solve_feasibility(r, backend=backend)
        assert res.feasible and res.assignment == [2]


def test_bad_row_sense_and_unknown():
    p = IlpProblem()
    with pytest.raises(ValueError):
        p.add_row({0: 1}, ">=", 0)
    p.add_unknown("a", 0, 1)
    with pytest.raises(ValueError):
        p.add_row({0: 1}, ">", 0)


def test_symmetry_breaking_keeps_feasibility():
    spec = ternary_select_spec()
    p = build_ilp(spec, 2, 8)
    q = add_symmetry_breaking(p, spec)
    assert len(q.rows) == len(p.rows) + 1
    assert solve_feasibility(q, Budget(nodes=200_000), backend="highs").feasible


def test_budget_exhaustion_reported():
    p = build_ilp(ternary_select_spec(), 1, 20)
    res = solve_feasibility(p, Budget(nodes=1), backend="bnb")
    assert res.status in ("budget-exhausted", "feasible")


def test_lp_round_trip():
    p = build_ilp(majority3_spec(), 0, 4)
    p.objective = {0: 1, 2: -3}
    text = export_lp_text(p)
    back = import_lp_text(text)
    assert [u[1:] for u in back.unknowns] == [u[1:] for u in p.unknowns]
    assert [(r.coeffs, r.sense, r.rhs) for r in back.rows] == [(r.coeffs, r.sense, r.rhs) for r in p.rows]
    assert back.objective == p.objective
    assert export_lp_text(back).splitlines()[2:] == text.splitlines()[2:]


def test_truth_table_json(tmp_path):
    spec = ternary_select_spec()
    p = tmp_path / "t.json"
    p.write_text(json.dumps(spec.to_json()))
    assert load_spec(p) == spec
    with pytest.raises(ValueError):
        TruthSpec.from_min_terms(2, ["01", "01"])
    with pytest.raises(ValueError):
        TruthSpec.from_min_terms(2, ["012"])


def test_certificate_json_round_trip():
    c = discover(xor3_result_spec())
    back = EncodingCertificate.from_json(json.loads(json.dumps(c.to_json())))
    assert back.coefficients == {k: v for k, v in c.coefficients.items() if v}
    assert back.recheck(xor3_result_spec())


def test_recheck_rejects_corruption():
    spec = majority3_spec()
    c = discover(spec)
    bad = EncodingCertificate.from_json(c.to_json())
    bad.coefficients["h"] = bad.coefficients.get("h", 0) - 1
    assert not bad.recheck(spec)


def test_too_large_request():
    spec = TruthSpec.from_min_terms(18, ["0" * 18])
    with pytest.raises(ValueError):
        discover(spec, max_subs=3)
