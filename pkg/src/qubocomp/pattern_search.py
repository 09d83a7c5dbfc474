"""ILP search for small-substitution QUBO encodings of boolean relations.

A relation over ``n`` primary bits is given by its min-terms. We look for a
quadratic polynomial ``g(x, s)`` over the primary bits and ``n_subs``
substitution bits such that ``min_s g(x, s) == 0`` on the min-terms and
``g >= 1`` everywhere else. Coefficients are named after their monomial:

``h`` constant, ``c{i}`` linear in ``x``, ``f{j}`` linear in ``s``,
``d{i}_{k}`` for ``x_i x_k``, ``e{i}_{j}`` for ``x_i s_j`` and ``g{j}_{l}`` for
``s_j s_l``.

Two search methods are available. ``"ilp"`` builds the indicator/big-M
program and hands it to a feasibility backend (HiGHS through SciPy, or the
internal branch and bound). ``"zero-branch"`` (the default) branches on which
substitution string is the zero of each min-term; once those are fixed every
remaining condition is linear and homogeneous, so LP feasibility decides the
branch and the last step only needs a small integer program.
"""
from __future__ import annotations

import json
import math
import re
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

from .qubo_model import QuboBuilder, QuboInstance

Bits = tuple[int, ...]

DEFAULT_COEFF_BOUND = 100
MAX_COEFF_BOUND = 400
DEFAULT_NODE_BUDGET = 10 ** 7


def _bits(code: int, n: int) -> Bits:
    return tuple((code >> i) & 1 for i in range(n))


def _bitstr(b: Bits) -> str:
    return "".join(map(str, b))


def _parse_bitstr(s: str) -> Bits:
    if not re.fullmatch(r"[01]*", s):
        raise ValueError(f"not a bit string: {s!r}")
    return tuple(int(ch) for ch in s)


# --------------------------------------------------------------------------- specs

@dataclass(frozen=True)
class TruthSpec:
    """Min-terms over ``n_primary`` bits (result bits included).

    ``pre_constrained`` optionally fixes the zero-energy substitution string
    of some min-terms in advance.
    """

    n_primary: int
    min_terms: frozenset[Bits]
    pre_constrained: Mapping[Bits, Bits] | None = None

    def __post_init__(self):
        if self.n_primary < 0:
            raise ValueError("n_primary must be non-negative")
        if not self.min_terms:
            raise ValueError("a relation needs at least one min-term")
        for m in self.min_terms:
            if len(m) != self.n_primary or any(b not in (0, 1) for b in m):
                raise ValueError(f"bad min-term {m!r} for n_primary={self.n_primary}")

    @classmethod
    def from_min_terms(cls, n: int, terms: Iterable[Sequence[int] | str], pre_constrained=None) -> "TruthSpec":
        seen: list[Bits] = []
        for t in terms:
            b = _parse_bitstr(t) if isinstance(t, str) else tuple(int(v) for v in t)
            if b in seen:
                raise ValueError(f"duplicate min-term {_bitstr(b)}")
            seen.append(b)
        return cls(n, frozenset(seen), pre_constrained)

    @classmethod
    def from_function(cls, n_inputs: int, fn: Callable[[Bits], Sequence[int] | int]) -> "TruthSpec":
        """Relation ``z = fn(x)``; min-terms are ``x`` followed by the output bits."""
        terms = []
        n_out = None
        for code in range(1 << n_inputs):
            x = _bits(code, n_inputs)
            z = fn(x)
            z = (z,) if isinstance(z, int) else tuple(z)
            n_out = len(z)
            terms.append(x + tuple(int(v) for v in z))
        return cls.from_min_terms(n_inputs + n_out, terms)

    def ordered(self) -> list[Bits]:
        return sorted(self.min_terms)

    def to_json(self) -> dict:
        out = {"n": self.n_primary, "min_terms": [_bitstr(m) for m in self.ordered()]}
        if self.pre_constrained:
            out["pre_constrained"] = {_bitstr(k): _bitstr(v) for k, v in sorted(self.pre_constrained.items())}
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> "TruthSpec":
        pre = data.get("pre_constrained")
        if pre:
            pre = {_parse_bitstr(k): _parse_bitstr(v) for k, v in pre.items()}
        return cls.from_min_terms(int(data["n"]), data["min_terms"], pre)


def majority3_spec() -> TruthSpec:
    return TruthSpec.from_function(3, lambda x: int(sum(x) >= 2))


def and2_result_spec() -> TruthSpec:
    return TruthSpec.from_function(2, lambda x: x[0] & x[1])


def xor3_result_spec() -> TruthSpec:
    return TruthSpec.from_function(3, lambda x: x[0] ^ x[1] ^ x[2])


def ternary_select_spec() -> TruthSpec:
    return TruthSpec.from_function(3, lambda x: (x[0] & x[1]) | ((1 - x[0]) & x[2]))


def gf4_mult_spec() -> TruthSpec:
    """GF(2^2) multiplication, min-terms read off the reference polynomial's zero set."""
    from .patterns import gf4_mult_table

    return TruthSpec.from_min_terms(6, [x + z for x, z in gf4_mult_table().items()])


# --------------------------------------------------------------------------- monomials

def monomials(n: int, n_subs: int) -> list[tuple[str, tuple[int, ...]]]:
    """Named monomials over ``x_0..x_{n-1}, s_0..``; variable ``n + j`` is ``s_j``.

    Listed lowest degree first: ``h``, ``c``, ``f``, then the quadratics.
    """
    out = [("h", ())]
    out += [(f"c{i}", (i,)) for i in range(n)]
    out += [(f"f{j}", (n + j,)) for j in range(n_subs)]
    out += [(f"d{i}_{k}", (i, k)) for i in range(n) for k in range(i + 1, n)]
    out += [(f"e{i}_{j}", (i, n + j)) for i in range(n) for j in range(n_subs)]
    out += [(f"g{j}_{l}", (n + j, n + l)) for j in range(n_subs) for l in range(j + 1, n_subs)]
    return out


def _design_matrix(mons, n: int, n_subs: int) -> np.ndarray:
    """Row ``xcode + (scode << n)`` holds the monomial values at that point."""
    N = n + n_subs
    codes = np.arange(1 << N)
    bits = ((codes[:, None] >> np.arange(N)[None, :]) & 1).astype(np.int64)
    G = np.ones((1 << N, len(mons)), dtype=np.int64)
    for col, (_, vs) in enumerate(mons):
        for v in vs:
            G[:, col] *= bits[:, v]
    return G


def _code(a: Bits) -> int:
    return sum(b << i for i, b in enumerate(a))


# --------------------------------------------------------------------------- ILP model

@dataclass(frozen=True)
class Row:
    coeffs: tuple[tuple[int, int], ...]
    sense: str
    rhs: int

    def holds(self, values: Sequence[int]) -> bool:
        v = sum(c * values[j] for j, c in self.coeffs)
        return v >= self.rhs if self.sense == ">=" else v <= self.rhs if self.sense == "<=" else v == self.rhs


@dataclass
class IlpProblem:
    """Integer program over bounded unknowns with sparse rows."""

    unknowns: list[tuple[str, int, int]] = field(default_factory=list)
    rows: list[Row] = field(default_factory=list)
    objective: dict[int, int] | None = None
    spec: TruthSpec | None = None
    n_subs: int = 0
    coeff_bound: int = 0
    strong: bool = False
    n_coeffs: int = 0
    indicator: dict[tuple[Bits, Bits], int] = field(default_factory=dict)

    def add_unknown(self, name: str, lo: int, hi: int) -> int:
        self.unknowns.append((name, int(lo), int(hi)))
        return len(self.unknowns) - 1

    def add_row(self, coeffs: Mapping[int, int] | Iterable[tuple[int, int]], sense: str, rhs: int) -> None:
        if sense not in (">=", "<=", "="):
            raise ValueError(f"unknown row sense {sense!r}")
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        row = tuple((int(j), int(c)) for j, c in items if c)
        for j, _ in row:
            if not 0 <= j < len(self.unknowns):
                raise ValueError(f"row references undeclared unknown {j}")
        self.rows.append(Row(row, sense, int(rhs)))

    def check(self, values: Sequence[int]) -> bool:
        if len(values) != len(self.unknowns):
            return False
        if any(not lo <= v <= hi for v, (_, lo, hi) in zip(values, self.unknowns)):
            return False
        return all(r.holds(values) for r in self.rows)

    def copy(self) -> "IlpProblem":
        return IlpProblem(list(self.unknowns), list(self.rows), dict(self.objective) if self.objective else None,
                          self.spec, self.n_subs, self.coeff_bound, self.strong, self.n_coeffs, dict(self.indicator))

    def dense(self):
        n = len(self.unknowns)
        A = np.zeros((len(self.rows), n))
        lo = np.full(len(self.rows), -np.inf)
        hi = np.full(len(self.rows), np.inf)
        for r, row in enumerate(self.rows):
            for j, c in row.coeffs:
                A[r, j] = c
            if row.sense in (">=", "="):
                lo[r] = row.rhs
            if row.sense in ("<=", "="):
                hi[r] = row.rhs
        lb = np.array([u[1] for u in self.unknowns], dtype=float)
        ub = np.array([u[2] for u in self.unknowns], dtype=float)
        return A, lo, hi, lb, ub


def _g_row(G: np.ndarray, code: int) -> dict[int, int]:
    return {j: int(v) for j, v in enumerate(G[code]) if v}


def build_ilp(spec: TruthSpec, n_subs: int, coeff_bound: int = DEFAULT_COEFF_BOUND, strong: bool = False,
              blocks: Sequence[Bits] | None = None) -> IlpProblem:
    """Indicator formulation; ``blocks`` restricts which min-terms get their disjunction rows.

    Indicator ``k = 1`` marks a substitution string with ``g >= 1``;
    ``k = 0`` forces ``g = 0``. Min-terms outside ``blocks`` still get ``g >= 0``.
    """
    if n_subs < 0 or coeff_bound < 1:
        raise ValueError("n_subs must be >= 0 and coeff_bound >= 1")
    n = spec.n_primary
    mons = monomials(n, n_subs)
    G = _design_matrix(mons, n, n_subs)
    p = IlpProblem(spec=spec, n_subs=n_subs, coeff_bound=coeff_bound, strong=strong, n_coeffs=len(mons))
    for name, _ in mons:
        p.add_unknown(name, -coeff_bound, coeff_bound)
    pre = dict(spec.pre_constrained or {})
    active = set(spec.min_terms) if blocks is None else set(blocks)
    S = [_bits(sc, n_subs) for sc in range(1 << n_subs)]
    for xc in range(1 << n):
        x = _bits(xc, n)
        is_min = x in spec.min_terms
        for s in S:
            code = xc | (_code(s) << n)
            g = _g_row(G, code)
            if not is_min:
                p.add_row(g, ">=", 1)
            elif x in pre:
                if s == pre[x]:
                    p.add_row(g, "=", 0)
                else:
                    p.add_row(g, ">=", 1 if strong else 0)
            elif x not in active:
                p.add_row(g, ">=", 0)
            else:
                k = p.add_unknown(f"k{_bitstr(x)}_{_bitstr(s)}", 0, 1)
                p.indicator[(x, s)] = k
                big_m = coeff_bound * len(g)
                p.add_row({**g, k: -1}, ">=", 0)
                p.add_row({**g, k: -big_m}, "<=", 0)
        if is_min and x in active and x not in pre:
            ks = {p.indicator[(x, s)]: 1 for s in S}
            p.add_row(ks, "=" if strong else "<=", (1 << n_subs) - 1)
    return p


def add_symmetry_breaking(p: IlpProblem, spec: TruthSpec | None = None) -> IlpProblem:
    """Order the substitution columns by a weighted sum so that permuted twins are cut.

    Any linear functional of a substitution column can be sorted by relabelling
    the substitution bits, so the rows keep one member of each orbit.
    """
    spec = spec or p.spec
    ns = p.n_subs
    if ns < 2:
        return p
    if spec is not None and spec.pre_constrained:
        # pre-constrained strings are not invariant under relabelling
        return p
    q = p.copy()
    n = spec.n_primary
    names = {name: j for j, (name, _, _) in enumerate(p.unknowns[: p.n_coeffs])}

    def column(j: int) -> dict[int, int]:
        col = {names[f"f{j}"]: n + 1}
        for i in range(n):
            col[names[f"e{i}_{j}"]] = i + 1
        return col

    for j in range(ns - 1):
        row = dict(column(j))
        for k, w in column(j + 1).items():
            row[k] = row.get(k, 0) - w
        q.add_row(row, "<=", 0)
    return q


# --------------------------------------------------------------------------- solvers

@dataclass
class SolveResult:
    status: str  # "feasible" | "infeasible" | "budget-exhausted"
    assignment: list[int] | None = None
    nodes: int = 0
    elapsed: float = 0.0

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"


@dataclass(frozen=True)
class Budget:
    nodes: int = DEFAULT_NODE_BUDGET
    seconds: float | None = None


def solve_feasibility(p: IlpProblem, budget: Budget | int | None = None, backend: str = "bnb") -> SolveResult:
    """Decide feasibility of ``p``; a returned assignment is always rechecked in integers."""
    if isinstance(budget, int):
        budget = Budget(nodes=budget)
    budget = budget or Budget()
    t0 = time.monotonic()
    if not p.unknowns:
        ok = all(r.holds([]) for r in p.rows)
        return SolveResult("feasible" if ok else "infeasible", [] if ok else None, 0, 0.0)
    if backend == "highs":
        res = _solve_highs(p, budget)
    elif backend == "bnb":
        res = _BranchAndBound(p, budget).run()
    else:
        raise ValueError(f"unknown backend {backend!r}")
    res.elapsed = time.monotonic() - t0
    if res.status == "feasible" and not p.check(res.assignment):
        raise RuntimeError("solver returned an assignment that fails the integer recheck")
    return res


def _solve_highs(p: IlpProblem, budget: Budget) -> SolveResult:
    A, lo, hi, lb, ub = p.dense()
    c = np.zeros(len(p.unknowns))
    if p.objective:
        for j, w in p.objective.items():
            c[j] = w
    opts = {"node_limit": budget.nodes}
    if budget.seconds is not None:
        opts["time_limit"] = budget.seconds
    cons = [LinearConstraint(A, lo, hi)] if len(p.rows) else []
    r = milp(c, constraints=cons, integrality=np.ones(len(c)), bounds=Bounds(lb, ub), options=opts)
    if r.status == 0 and r.x is not None:
        x = [int(round(v)) for v in r.x]
        if p.check(x):
            return SolveResult("feasible", x)
        return SolveResult("budget-exhausted")
    if r.status == 2:
        return SolveResult("infeasible")
    return SolveResult("budget-exhausted")


class _BranchAndBound:
    """Depth-first branch and bound with LP relaxations.

    Branching prefers indicator unknowns, then coefficients in declaration
    order (lowest degree first); the child holding the smaller magnitude is
    explored first.
    """

    def __init__(self, p: IlpProblem, budget: Budget):
        self.p = p
        self.budget = budget
        self.A, self.lo, self.hi, self.lb, self.ub = p.dense()
        fin_lo = np.isfinite(self.lo)
        fin_hi = np.isfinite(self.hi)
        self.A_ub = np.vstack([self.A[fin_hi], -self.A[fin_lo]]) if len(p.rows) else None
        self.b_ub = np.concatenate([self.hi[fin_hi], -self.lo[fin_lo]]) if len(p.rows) else None
        n = len(p.unknowns)
        ind = sorted(p.indicator.values())
        rest = [j for j in range(n) if j not in set(ind)]
        self.order = ind + rest
        self.nodes = 0
        self.t0 = time.monotonic()

    def _out_of_budget(self) -> bool:
        if self.nodes >= self.budget.nodes:
            return True
        return self.budget.seconds is not None and time.monotonic() - self.t0 > self.budget.seconds

    def _relax(self, lb, ub):
        c = np.zeros(len(lb))
        r = linprog(c, A_ub=self.A_ub, b_ub=self.b_ub, bounds=list(zip(lb, ub)), method="highs")
        return r.x if r.status == 0 else None

    def run(self) -> SolveResult:
        stack = [(self.lb.copy(), self.ub.copy())]
        while stack:
            if self._out_of_budget():
                return SolveResult("budget-exhausted", nodes=self.nodes)
            lb, ub = stack.pop()
            self.nodes += 1
            x = self._relax(lb, ub)
            if x is None:
                continue
            frac = None
            for j in self.order:
                if abs(x[j] - round(x[j])) > 1e-6:
                    frac = j
                    break
            if frac is None:
                cand = [int(round(v)) for v in x]
                if self.p.check(cand):
                    return SolveResult("feasible", cand, self.nodes)
                frac = self._rounding_culprit(x)
                if frac is None:
                    continue
            v = x[frac]
            lo_child = (lb.copy(), ub.copy())
            lo_child[1][frac] = math.floor(v)
            hi_child = (lb.copy(), ub.copy())
            hi_child[0][frac] = math.ceil(v) if math.ceil(v) != math.floor(v) else math.floor(v) + 1
            kids = []
            if lo_child[0][frac] <= lo_child[1][frac]:
                kids.append(lo_child)
            if hi_child[0][frac] <= hi_child[1][frac]:
                kids.append(hi_child)
            # explore the side nearer zero first (it is pushed last)
            kids.sort(key=lambda k: -min(abs(k[0][frac]), abs(k[1][frac])))
            stack.extend(kids)
        return SolveResult("infeasible", nodes=self.nodes)

    def _rounding_culprit(self, x) -> int | None:
        # rounded LP point violates a row only through tolerance noise; split the first unfixed unknown
        for j in self.order:
            if self.lb[j] < self.ub[j] and abs(x[j] - round(x[j])) > 1e-12:
                return j
        return None


# --------------------------------------------------------------------------- certificates

@dataclass
class EncodingCertificate:
    """A verified polynomial ``g(x, s)`` for a relation."""

    n_primary: int
    n_subs: int
    coefficients: dict[str, int]
    subst_map: dict[Bits, list[Bits]]
    strength: str
    coeff_bound: int = DEFAULT_COEFF_BOUND
    evidence: list[dict] = field(default_factory=list)
    found: bool = True

    def monomial_table(self) -> list[tuple[str, tuple[int, ...], int]]:
        return [(name, vs, self.coefficients.get(name, 0)) for name, vs in monomials(self.n_primary, self.n_subs)]

    def energy(self, x: Sequence[int], s: Sequence[int] = ()) -> int:
        a = list(x) + list(s)
        return sum(c * all(a[v] for v in vs) for _, vs, c in self.monomial_table())

    def energy_table(self) -> np.ndarray:
        tab = self.monomial_table()
        G = _design_matrix([(n, vs) for n, vs, _ in tab], self.n_primary, self.n_subs)
        return G @ np.array([c for _, _, c in tab], dtype=np.int64)

    def recheck(self, spec: TruthSpec) -> bool:
        """Exhaustive ``(x, s)`` check of non-negativity and the zero set."""
        if spec.n_primary != self.n_primary:
            return False
        E = self.energy_table().reshape(1 << self.n_subs, 1 << self.n_primary)
        if (E < 0).any():
            return False
        for xc in range(1 << self.n_primary):
            x = _bits(xc, self.n_primary)
            zeros = [_bits(sc, self.n_subs) for sc in range(1 << self.n_subs) if E[sc, xc] == 0]
            if (x in spec.min_terms) != bool(zeros):
                return False
            if x in spec.min_terms:
                if sorted(self.subst_map.get(x, [])) != sorted(zeros):
                    return False
                if spec.pre_constrained and x in spec.pre_constrained and spec.pre_constrained[x] not in zeros:
                    return False
        is_strong = all(len(v) == 1 for v in self.subst_map.values())
        return self.strength != "strong" or is_strong

    def to_qubo(self) -> QuboInstance:
        b = QuboBuilder(self.n_primary + self.n_subs)
        for _, vs, c in self.monomial_table():
            b.add_term(vs, c)
        return b.build()

    def polynomial(self) -> str:
        def sym(v):
            return f"x{v}" if v < self.n_primary else f"s{v - self.n_primary}"

        parts = []
        for _, vs, c in self.monomial_table():
            if c:
                parts.append(f"{c:+d}{''.join(sym(v) for v in vs)}")
        return "".join(parts) or "0"

    def to_json(self) -> dict:
        return {
            "found": self.found,
            "n_primary": self.n_primary,
            "n_subs": self.n_subs,
            "strength": self.strength,
            "coeff_bound": self.coeff_bound,
            "coefficients": {k: v for k, v in self.coefficients.items() if v},
            "polynomial": self.polynomial(),
            "subst_map": {_bitstr(k): [_bitstr(s) for s in v] for k, v in sorted(self.subst_map.items())},
            "evidence": self.evidence,
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "EncodingCertificate":
        return cls(
            int(data["n_primary"]), int(data["n_subs"]), {k: int(v) for k, v in data["coefficients"].items()},
            {_parse_bitstr(k): [_parse_bitstr(s) for s in v] for k, v in data["subst_map"].items()},
            data["strength"], int(data.get("coeff_bound", DEFAULT_COEFF_BOUND)), list(data.get("evidence", [])),
        )


@dataclass
class NotFound:
    """No encoding within the searched substitution counts and coefficient bounds."""

    spec: TruthSpec
    max_subs: int
    coeff_bound: int
    evidence: list[dict]
    found: bool = False

    def to_json(self) -> dict:
        return {"found": False, "max_subs": self.max_subs, "coeff_bound": self.coeff_bound, "evidence": self.evidence}


def certificate_from_coefficients(spec: TruthSpec, n_subs: int, coeffs: Mapping[str, int], coeff_bound: int,
                                  pre_constrained: bool = False) -> EncodingCertificate:
    cert = EncodingCertificate(spec.n_primary, n_subs, dict(coeffs), {}, "weak", coeff_bound)
    E = cert.energy_table().reshape(1 << n_subs, 1 << spec.n_primary)
    for x in spec.min_terms:
        xc = _code(x)
        cert.subst_map[x] = [_bits(sc, n_subs) for sc in range(1 << n_subs) if E[sc, xc] == 0]
    if pre_constrained:
        cert.strength = "pre-constrained"
    elif all(len(v) == 1 for v in cert.subst_map.values()):
        cert.strength = "strong"
    return cert


# --------------------------------------------------------------------------- discovery

def discover(spec: TruthSpec, max_subs: int = 3, coeff_bound: int = DEFAULT_COEFF_BOUND, strong: bool = False,
             cegar: bool = True, method: str = "zero-branch", backend: str = "highs",
             budget: Budget | None = None, escalate: bool = True) -> EncodingCertificate | NotFound:
    """Smallest substitution count in ``0..max_subs`` admitting an encoding.

    On failure at every count the coefficient bound is doubled (up to
    ``MAX_COEFF_BOUND``) when ``escalate`` is set.
    """
    if spec.n_primary + max_subs > 20:
        raise ValueError("n_primary + max_subs must be at most 20 for the exhaustive recheck")
    budget = budget or Budget()
    evidence: list[dict] = []
    bound = coeff_bound
    while True:
        for ns in range(max_subs + 1):
            t0 = time.monotonic()
            if spec.pre_constrained and any(len(s) != ns for s in spec.pre_constrained.values()):
                # a fixed string of another length cannot be honoured at this count
                status, coeffs, nodes = "infeasible", None, 0
            elif method not in ("zero-branch", "ilp"):
                raise ValueError(f"unknown method {method!r}")
            elif method == "zero-branch":
                status, coeffs, nodes = _zero_branch(spec, ns, bound, strong, budget)
            else:
                status, coeffs, nodes = _ilp_search(spec, ns, bound, strong, cegar, backend, budget)
            evidence.append({"n_subs": ns, "coeff_bound": bound, "status": status, "nodes": nodes,
                             "seconds": round(time.monotonic() - t0, 4), "method": method})
            if status == "feasible":
                cert = certificate_from_coefficients(spec, ns, coeffs, bound, bool(spec.pre_constrained))
                if not cert.recheck(spec):
                    raise RuntimeError("discovered coefficients failed the exhaustive recheck")
                if strong and cert.strength != "strong":
                    raise RuntimeError("strong search returned a weak certificate")
                cert.evidence = evidence
                return cert
        if not escalate or bound * 2 > MAX_COEFF_BOUND:
            return NotFound(spec, max_subs, bound, evidence)
        bound *= 2


def _ilp_search(spec, ns, bound, strong, cegar, backend, budget):
    ordered = spec.ordered()
    free = [m for m in ordered if not (spec.pre_constrained and m in spec.pre_constrained)]
    blocks = free[:1] if cegar else free
    nodes = 0
    while True:
        p = add_symmetry_breaking(build_ilp(spec, ns, bound, strong, blocks=blocks), spec)
        res = solve_feasibility(p, budget, backend)
        nodes += res.nodes
        if res.status != "feasible":
            return res.status, None, nodes
        coeffs = {name: v for (name, _, _), v in zip(p.unknowns[: p.n_coeffs], res.assignment)}
        cert = EncodingCertificate(spec.n_primary, ns, coeffs, {}, "weak", bound)
        bad = None
        for m in free:
            if m in blocks:
                continue
            e = [cert.energy(m, _bits(sc, ns)) for sc in range(1 << ns)]
            if min(e) != 0 or (strong and e.count(0) != 1):
                bad = m
                break
        if bad is None:
            return "feasible", coeffs, nodes
        blocks = blocks + [bad]


class _ZeroBranch:
    """Branch on the zero-energy substitution string of each min-term.

    With those strings fixed the conditions are ``g = 0`` / ``g >= 0`` /
    ``g >= 1`` rows, checked by an LP. The first min-term is pinned to the
    all-zero string (complementing a substitution bit is an affine change of
    variables) and the second to a string with its ones first (relabelling).
    Counterexamples from the LP point pick the next min-term to branch on.
    """

    def __init__(self, spec: TruthSpec, ns: int, bound: int, strong: bool, budget: Budget):
        self.spec, self.ns, self.bound, self.strong, self.budget = spec, ns, bound, strong, budget
        n = spec.n_primary
        self.mons = monomials(n, ns)
        self.G = _design_matrix(self.mons, n, ns).astype(float)
        self.S = [_bits(sc, ns) for sc in range(1 << ns)]
        self.base_rows = []
        self.base_rhs = []
        for xc in range(1 << n):
            x = _bits(xc, n)
            for s in self.S:
                self.base_rows.append(xc | (_code(s) << n))
                self.base_rhs.append(0.0 if x in spec.min_terms else 1.0)
        self.min_terms = spec.ordered()
        self.nodes = 0
        self.t0 = time.monotonic()

    def code(self, x: Bits, s: Bits) -> int:
        return _code(x) | (_code(s) << self.spec.n_primary)

    def _lp(self, choice: dict[Bits, Bits]):
        self.nodes += 1
        lo = np.array(self.base_rhs)
        rows = list(self.base_rows)
        if self.strong:
            lo = lo.copy()
            idx = {c: i for i, c in enumerate(rows)}
            for x, s0 in choice.items():
                for s in self.S:
                    if s != s0:
                        lo[idx[self.code(x, s)]] = 1.0
        A_ub = -self.G[rows]
        eq = [self.code(x, s) for x, s in choice.items()]
        A_eq = self.G[eq] if eq else None
        b_eq = np.zeros(len(eq)) if eq else None
        r = linprog(np.zeros(len(self.mons)), A_ub=A_ub, b_ub=-lo, A_eq=A_eq, b_eq=b_eq,
                    bounds=[(-self.bound, self.bound)] * len(self.mons), method="highs")
        return r.x if r.status == 0 else None

    def _realize(self, choice: dict[Bits, Bits]) -> dict[str, int] | None:
        """Integer coefficients within the bound minimising the largest magnitude."""
        nm = len(self.mons)
        rows, lo, hi = [], [], []
        for xc in range(1 << self.spec.n_primary):
            x = _bits(xc, self.spec.n_primary)
            for s in self.S:
                g = np.r_[self.G[self.code(x, s)], 0.0]
                if x not in self.spec.min_terms:
                    rows.append(g); lo.append(1); hi.append(np.inf)
                elif choice[x] == s:
                    rows.append(g); lo.append(0); hi.append(0)
                else:
                    rows.append(g); lo.append(1 if self.strong else 0); hi.append(np.inf)
        for j in range(nm):
            e = np.zeros(nm + 1); e[j] = 1; e[nm] = -1
            rows.append(e); lo.append(-np.inf); hi.append(0)
            e = np.zeros(nm + 1); e[j] = -1; e[nm] = -1
            rows.append(e); lo.append(-np.inf); hi.append(0)
        obj = np.zeros(nm + 1); obj[nm] = 1
        lb = np.r_[[-self.bound] * nm, 0]
        ub = np.r_[[self.bound] * nm, self.bound]
        r = milp(obj, constraints=LinearConstraint(np.array(rows), lo, hi), integrality=np.ones(nm + 1),
                 bounds=Bounds(lb, ub))
        if r.status != 0 or r.x is None:
            return None
        return {name: int(round(v)) for (name, _), v in zip(self.mons, r.x[:nm])}

    def _violated(self, x_lp, choice):
        for m in self.min_terms:
            if m in choice:
                continue
            g = [float(self.G[self.code(m, s)] @ x_lp) for s in self.S]
            if min(g) > 1e-7:
                return m, g
        return None, None

    def _options(self, m, g, depth):
        if depth == 0:
            return [self.S[0]]
        opts = self.S
        if depth == 1:
            # relabelling symmetry: ones first
            opts = [s for s in self.S if list(s) == sorted(s, reverse=True)]
        if g is None:
            return list(opts)
        gi = {s: g[i] for i, s in enumerate(self.S)}
        return sorted(opts, key=lambda s: gi[s])

    def run(self):
        pre = dict(self.spec.pre_constrained or {})
        self.pinned = bool(pre)
        found = self._dfs(pre, 0 if not pre else 2)
        if found == "budget":
            return "budget-exhausted", None, self.nodes
        if found is None:
            return "infeasible", None, self.nodes
        return "feasible", found, self.nodes

    def _dfs(self, choice, depth):
        if self.nodes >= self.budget.nodes or (
                self.budget.seconds is not None and time.monotonic() - self.t0 > self.budget.seconds):
            return "budget"
        x_lp = self._lp(choice)
        if x_lp is None:
            return None
        m, g = self._violated(x_lp, choice)
        if m is None:
            full = dict(choice)
            for mt in self.min_terms:
                if mt not in full:
                    gv = [float(self.G[self.code(mt, s)] @ x_lp) for s in self.S]
                    full[mt] = self.S[int(np.argmin(gv))]
            coeffs = self._realize(full)
            if coeffs is not None:
                return coeffs
            rest = [mt for mt in self.min_terms if mt not in choice]
            if not rest:
                return None
            m = rest[0]
            g = [float(self.G[self.code(m, s)] @ x_lp) for s in self.S]
        for s in self._options(m, g, depth):
            r = self._dfs({**choice, m: s}, depth + 1)
            if r is not None:
                return r
        return None


def _zero_branch(spec, ns, bound, strong, budget):
    return _ZeroBranch(spec, ns, bound, strong, budget).run()


# --------------------------------------------------------------------------- LP file I/O

def _lp_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_]", "_", name)


def _lp_expr(coeffs: Iterable[tuple[int, int]], names: Sequence[str]) -> str:
    parts = []
    for j, c in coeffs:
        sign = "-" if c < 0 else "+"
        parts.append(f"{sign} {abs(c)} {names[j]}")
    if not parts:
        return "0 " + names[0] if names else "0"
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def export_lp(p: IlpProblem, path) -> None:
    """Write ``p`` in CPLEX LP format. All unknowns are general integers."""
    with open(path, "w") as fh:
        fh.write(export_lp_text(p))


def export_lp_text(p: IlpProblem) -> str:
    names = [_lp_name(n) for n, _, _ in p.unknowns]
    out = ["\\ qubocomp encoding search", "Minimize"]
    obj = sorted(p.objective.items()) if p.objective else []
    out.append(" obj: " + (_lp_expr(obj, names) if obj else (f"0 {names[0]}" if names else "0")))
    out.append("Subject To")
    sense = {">=": ">=", "<=": "<=", "=": "="}
    for r, row in enumerate(p.rows):
        body = _lp_expr(row.coeffs, names) if row.coeffs else (f"0 {names[0]}" if names else "0")
        out.append(f" r{r}: {body} {sense[row.sense]} {row.rhs}")
    out.append("Bounds")
    for (name, lo, hi), nm in zip(p.unknowns, names):
        out.append(f" {lo} <= {nm} <= {hi}")
    if names:
        out.append("Generals")
        out.append(" " + " ".join(names))
    out.append("End")
    return "\n".join(out) + "\n"


def import_lp_text(text: str) -> IlpProblem:
    """Read back the subset of LP format produced by :func:`export_lp_text`."""
    p = IlpProblem()
    section = None
    names: dict[str, int] = {}
    pending_rows = []
    term = re.compile(r"([+-]?)\s*(\d+)\s+([A-Za-z_][A-Za-z0-9_]*)")
    obj = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("\\"):
            continue
        low = line.lower()
        if low in ("minimize", "subject to", "bounds", "generals", "end"):
            section = low
            continue
        if section == "minimize":
            body = line.split(":", 1)[1]
            obj = [(s, int(c), v) for s, c, v in term.findall(body)]
        elif section == "subject to":
            body = line.split(":", 1)[1]
            m = re.match(r"(.*?)(>=|<=|=)\s*(-?\d+)\s*$", body)
            lhs, sense, rhs = m.groups()
            pending_rows.append(([(s, int(c), v) for s, c, v in term.findall(lhs)], sense, int(rhs)))
        elif section == "bounds":
            m = re.match(r"(-?\d+)\s*<=\s*(\S+)\s*<=\s*(-?\d+)", line)
            lo, nm, hi = m.groups()
            names[nm] = p.add_unknown(nm, int(lo), int(hi))
    for terms, sense, rhs in pending_rows:
        p.add_row([(names[v], -c if s == "-" else c) for s, c, v in terms], sense, rhs)
    obj_d = {names[v]: (-c if s == "-" else c) for s, c, v in obj if c}
    p.objective = obj_d or None
    return p


def import_lp(path) -> IlpProblem:
    with open(path) as fh:
        return import_lp_text(fh.read())


def load_spec(path) -> TruthSpec:
    with open(path) as fh:
        return TruthSpec.from_json(json.load(fh))


__all__ = [
    "Budget", "EncodingCertificate", "IlpProblem", "NotFound", "Row", "SolveResult", "TruthSpec",
    "add_symmetry_breaking", "and2_result_spec", "build_ilp", "certificate_from_coefficients", "discover",
    "export_lp", "export_lp_text", "gf4_mult_spec", "import_lp", "import_lp_text", "load_spec", "majority3_spec",
    "monomials", "solve_feasibility", "ternary_select_spec", "xor3_result_spec",
]
