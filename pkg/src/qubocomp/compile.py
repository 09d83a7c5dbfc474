"""Lowering of circuits to a single QUBO, plus the witness plan that solves it.

:class:`Assembler` is the shared plumbing: it allocates registry variables,
adds pattern fragments to one builder and records, for every variable, how
its witness value is derived. Circuit lowering and the crypto builders both
go through it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence, Union

from .circuit_ir import Circuit, CircuitError, Op, XorClause, flatten, place_markers, xor_reuse
from .patterns import (
    Literal,
    PatternEmission,
    bit_value,
    encode_and,
    encode_or,
    encode_parity,
    encode_xor3_result,
)
from .qubo_model import QuboBuilder, QuboInstance, VarKind, VarRegistry


class CompileError(CircuitError):
    pass


class XorForm:
    """Affine GF(2) form ``XOR(vars) ^ const`` over registry variables."""

    __slots__ = ("vars", "const")

    def __init__(self, vars: Iterable[int] = (), const: int = 0):
        self.vars = vars if isinstance(vars, frozenset) else frozenset(vars)
        self.const = const & 1

    @classmethod
    def of(cls, b: "Literal | int | XorForm") -> "XorForm":
        if isinstance(b, XorForm):
            return b
        if isinstance(b, Literal):
            return cls(frozenset((b.var,)), int(b.negated))
        return cls(frozenset(), int(b))

    def __xor__(self, other) -> "XorForm":
        o = XorForm.of(other)
        return XorForm(self.vars ^ o.vars, self.const ^ o.const)

    __rxor__ = __xor__

    def __invert__(self) -> "XorForm":
        return XorForm(self.vars, self.const ^ 1)

    def __eq__(self, other) -> bool:
        return isinstance(other, XorForm) and self.vars == other.vars and self.const == other.const

    def __hash__(self) -> int:
        return hash((self.vars, self.const))

    def __len__(self) -> int:
        return len(self.vars)

    def __repr__(self) -> str:
        return f"XorForm({sorted(self.vars)}, {self.const})"

    def value(self, values) -> int:
        v = self.const
        for x in self.vars:
            v ^= values[x]
        return v

    def literal(self) -> Literal | int | None:
        """The form as a single literal or constant, if it is one."""
        if not self.vars:
            return self.const
        if len(self.vars) == 1:
            (v,) = self.vars
            return Literal(v, bool(self.const))
        return None


def xor_all(items: Iterable) -> XorForm:
    acc_vars: set[int] = set()
    const = 0
    for it in items:
        f = XorForm.of(it)
        acc_vars ^= f.vars
        const ^= f.const
    return XorForm(frozenset(acc_vars), const)


Bit = Union[Literal, int]


@dataclass
class WitnessPlan:
    """Ordered recipe deriving every QUBO variable from the primary inputs.

    ``compute`` steps run first in insertion order, then the substitution bits
    of every pattern are filled by the pattern's own witness.
    """

    registry: VarRegistry
    primary: list[int] = field(default_factory=list)
    computes: list[tuple[int, Callable]] = field(default_factory=list)
    patterns: list[tuple[PatternEmission, tuple[int, ...]]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.computes) + len(self.patterns)


def witness_eval(plan: WitnessPlan, primary: Mapping[int, int] | Mapping[str, int]) -> list[int]:
    """Full assignment over all registry variables."""
    n = len(plan.registry)
    values = [-1] * n
    for k, v in primary.items():
        idx = plan.registry.index(k) if isinstance(k, str) else int(k)
        values[idx] = int(v)
    missing = [plan.registry.name(v) for v in plan.primary if values[v] < 0]
    if missing:
        raise KeyError(f"primary inputs missing: {missing[:5]}{'...' if len(missing) > 5 else ''}")
    for var, fn in plan.computes:
        values[var] = int(fn(values))
    for em, subs in plan.patterns:
        w = em.witness(values)
        for v, b in zip(subs, w):
            values[v] = int(b)
    unset = [plan.registry.name(i) for i, v in enumerate(values) if v < 0]
    if unset:
        raise RuntimeError(f"plan leaves variables unassigned: {unset[:5]}")
    return values


class Assembler:
    """Shared registry + builder + witness plan."""

    def __init__(self, clause_length_limit: int | None = None, and_low_coeff: bool = False):
        if clause_length_limit is not None and clause_length_limit < 3:
            raise ValueError("clause length limit must be at least 3")
        self.registry = VarRegistry()
        self.builder = QuboBuilder(0)
        self.plan = WitnessPlan(self.registry)
        self.limit = clause_length_limit
        self.and_low_coeff = and_low_coeff
        self._counter = 0
        self._materialized: dict[XorForm, Literal] = {}
        self.fragments = 0

    # variables -----------------------------------------------------------
    def _fresh(self, stem: str) -> str:
        self._counter += 1
        return f"{stem}#{self._counter}"

    def input_var(self, name: str, kind: VarKind = VarKind.CIRCUIT_INPUT, origin: str = "input") -> int:
        v = self.registry.add(name, kind, origin)
        self.builder.ensure(len(self.registry))
        self.plan.primary.append(v)
        return v

    def new_var(self, compute: Callable, origin: str, kind: VarKind = VarKind.INTERMEDIATE,
                name: str | None = None) -> int:
        v = self.registry.add(name or self._fresh(origin), kind, origin)
        self.builder.ensure(len(self.registry))
        self.plan.computes.append((v, compute))
        return v

    # fragments -----------------------------------------------------------
    def emit(self, em: PatternEmission, origin: str, sub_kind: VarKind = VarKind.SUBSTITUTION) -> list[int]:
        subs = []
        for _ in range(em.n_subs):
            v = self.registry.add(self._fresh(origin + ".s"), sub_kind, origin)
            subs.append(v)
        self.builder.ensure(len(self.registry))
        self.builder.add_instance(em.fragment, em.var_map(subs))
        self.plan.patterns.append((em, tuple(subs)))
        self.fragments += 1
        return subs

    def add_penalty(self, lit: Bit, origin: str) -> None:
        """Require ``lit`` to be true."""
        self.emit(encode_and([lit]), origin)

    # XOR machinery -------------------------------------------------------
    def _split(self, lits: list[Literal], room: int, origin: str) -> list[Literal]:
        """Chain prefixes into intermediates until at most ``room`` literals remain."""
        while self.limit is not None and len(lits) > room:
            head, rest = lits[: self.limit - 1], lits[self.limit - 1:]
            t = self._parity_var(head, 0, origin)
            lits = [t] + rest
        return lits

    def _parity_var(self, lits: Sequence[Literal], const: int, origin: str) -> Literal:
        form = xor_all(lits) ^ const
        v = self.new_var(form.value, origin)
        r = Literal(v)
        if len(lits) == 3 and const == 0:
            self.emit(encode_xor3_result(lits[0], lits[1], lits[2], r), origin)
        else:
            self.emit(encode_parity(lits, result=r, constant=const), origin)
        return r

    def _form_literals(self, form: XorForm) -> tuple[list[Literal], int]:
        return [Literal(v) for v in sorted(form.vars)], form.const

    def materialize(self, form: XorForm | Bit, origin: str = "xor") -> Bit:
        """A literal equal to ``form``; new variables only for multi-variable forms."""
        form = XorForm.of(form)
        lit = form.literal()
        if lit is not None:
            return lit
        base = XorForm(form.vars, 0)
        if base in self._materialized:
            t = self._materialized[base]
            return ~t if form.const else t
        lits, _ = self._form_literals(base)
        room = self.limit - 1 if self.limit is not None else len(lits)
        lits = self._split(lits, room, origin)
        t = self._parity_var(lits, 0, origin) if len(lits) > 1 else lits[0]
        self._materialized[base] = t
        return ~t if form.const else t

    def assert_xor(self, form: XorForm, value: int = 0, origin: str = "xor") -> None:
        """Require ``form == value``."""
        form = XorForm.of(form) ^ value
        if not form.vars:
            if form.const:
                self.builder.add_offset(1)
            return
        lits, const = self._form_literals(form)
        room = self.limit if self.limit is not None else len(lits)
        lits = self._split(lits, room, origin)
        self.emit(encode_parity(lits, constant=const ^ 1), origin)

    def define_xor(self, var: int, form: XorForm, origin: str = "xor") -> None:
        """Constrain an existing variable to equal ``form``."""
        self.assert_xor(form ^ Literal(var), 0, origin)

    # AND / OR ------------------------------------------------------------
    def _chain_and_or(self, cls: str, lits: list[Bit], origin: str, room: int) -> list[Bit]:
        while self.limit is not None and len(lits) > room:
            head, rest = lits[: self.limit - 1], lits[self.limit - 1:]
            lits = [self.gate_var(cls, head, origin)] + rest
        return lits

    def gate_var(self, cls: str, lits: Sequence[Bit], origin: str) -> Literal:
        """New variable ``r = AND(lits)`` or ``OR(lits)``."""
        lits = list(lits)
        room = self.limit - 1 if self.limit is not None else len(lits)
        lits = self._chain_and_or(cls, lits, origin, room)
        if len(lits) == 1:
            return lits[0]
        if cls == "and":
            fn = (lambda ls: lambda vals: int(all(bit_value(x, vals) for x in ls)))(tuple(lits))
            r = Literal(self.new_var(fn, origin))
            self.emit(encode_and(lits, result=r), origin)
        else:
            fn = (lambda ls: lambda vals: int(any(bit_value(x, vals) for x in ls)))(tuple(lits))
            r = Literal(self.new_var(fn, origin))
            self.emit(encode_or(lits, result=r), origin)
        return r

    def assert_and(self, lits: Sequence[Bit], origin: str = "and") -> None:
        lits = self._chain_and_or("and", list(lits), origin, self.limit or len(lits))
        self.emit(encode_and(lits, low_coeff=self.and_low_coeff), origin)

    def assert_or(self, lits: Sequence[Bit], origin: str = "or") -> None:
        lits = self._chain_and_or("or", list(lits), origin, self.limit or len(lits))
        self.emit(encode_or(lits), origin)

    def build(self) -> QuboInstance:
        self.builder.ensure(len(self.registry))
        return self.builder.build()


@dataclass(frozen=True)
class LowerOptions:
    clause_length_limit: int | None = None
    and_low_coeff: bool = False
    xor_reuse: bool = True
    reuse_threshold: int = 3
    output_values: tuple[int, ...] | None = None  # required value per output; default all true


@dataclass
class LowerResult:
    qubo: QuboInstance
    plan: WitnessPlan
    node_vars: dict[int, Literal]
    circuit: Circuit

    def __iter__(self):
        return iter((self.qubo, self.plan))


def lower(c: Circuit, opts: LowerOptions | None = None) -> LowerResult:
    """Flatten, mark and lower ``c`` so that zero energy means every output holds."""
    opts = opts or LowerOptions()
    flat = flatten(c)
    flat = place_markers(flat, "explicit")
    asm = Assembler(opts.clause_length_limit, opts.and_low_coeff)
    lit_of: dict[int, Literal] = {}
    for nid, g in enumerate(flat.nodes):
        if g.op is Op.INPUT:
            lit_of[nid] = Literal(asm.input_var(g.name or f"in{nid}"))

    def L(o: Literal) -> Literal:
        base = lit_of[o.var]
        return ~base if o.negated else base

    roots: dict[int, list[int]] = {}
    wants = opts.output_values or tuple(1 for _ in flat.outputs)
    if len(wants) != len(flat.outputs):
        raise CompileError("output_values must give one value per output")

    consumed = {o.var for g in flat.nodes for o in g.operands}
    xor_clauses: list[XorClause] = []
    for nid, g in enumerate(flat.nodes):
        if g.op is Op.INPUT:
            continue
        if nid not in flat.markers:
            if nid in consumed:
                raise CompileError(f"gate {nid} is consumed but carries no marker")
            continue
        ops = [L(o) for o in g.operands]
        if g.op is Op.XOR:
            form = xor_all(ops) ^ g.constant
            v = asm.new_var(form.value, "gate", name=g.name and asm._fresh(g.name))
            lit_of[nid] = Literal(v)
            xor_clauses.append(XorClause.of(list(ops) + [Literal(v)], g.constant))
        else:
            lit_of[nid] = asm.gate_var(g.op.value, ops, "gate")

    for o, want in zip(flat.outputs, wants):
        if not isinstance(o, Literal):
            if int(o) != want:
                asm.builder.add_offset(1)
            continue
        g = flat.nodes[o.var]
        w = want ^ int(o.negated)
        if o.var in lit_of:
            x = lit_of[o.var]
            asm.add_penalty(x if w else ~x, "output")
            continue
        ops = [L(x) for x in g.operands]
        if g.op is Op.XOR:
            xor_clauses.append(XorClause.of(ops, g.constant ^ w))
        elif g.op is Op.AND:
            if w:
                asm.assert_and(ops, "output")
            else:
                asm.assert_or([~x for x in ops], "output")
        elif g.op is Op.OR:
            if w:
                asm.assert_or(ops, "output")
            else:
                asm.assert_and([~x for x in ops], "output")
        roots.setdefault(o.var, []).append(w)

    defs = []
    if opts.xor_reuse and xor_clauses:
        xor_clauses, defs = xor_reuse(xor_clauses, len(asm.registry), opts.reuse_threshold)
        for d in defs:
            form = XorForm(d.clause.vars)
            v = asm.new_var(form.value, "xor-reuse")
            if v != d.var:
                raise CompileError("reuse intermediate numbering out of sync")
    for cl in xor_clauses:
        asm.assert_xor(XorForm(cl.vars, cl.constant), 0, "xor")
    for d in defs:
        asm.define_xor(d.var, XorForm(d.clause.vars), "xor-reuse")
    return LowerResult(asm.build(), asm.plan, lit_of, flat)
