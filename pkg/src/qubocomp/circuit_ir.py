"""Boolean circuit IR: gates, flattening into multi-input classes, markers, XOR reuse.

Nodes are numbered in topological order. Gate operands are :class:`Literal`
references to earlier nodes, so negation lives on the edge. Flattened
circuits contain only ``INPUT`` nodes and multi-input ``AND``/``OR``/``XOR``
gates (the latter with a constant).
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence, Union

from .patterns import Literal


class CircuitError(ValueError):
    pass


class CircuitParseError(CircuitError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class Op(enum.Enum):
    INPUT = "input"
    CONST0 = "const0"
    CONST1 = "const1"
    NOT = "not"
    AND = "and"
    OR = "or"
    NAND = "nand"
    NOR = "nor"
    XOR = "xor"
    XNOR = "xnor"
    IMPLY = "imply"
    NIMPLY = "nimply"
    CIMPLY = "cimply"
    CNIMPLY = "cnimply"


BINARY_OPS = {Op.AND, Op.OR, Op.NAND, Op.NOR, Op.XOR, Op.XNOR, Op.IMPLY, Op.NIMPLY, Op.CIMPLY, Op.CNIMPLY}

# class, negate first operand, negate second operand, negate the result
_TABLE1 = {
    Op.AND: ("and", False, False, False),
    Op.NOR: ("and", True, True, False),
    Op.NIMPLY: ("and", False, True, False),   # a & ~b
    Op.CNIMPLY: ("and", True, False, False),  # ~a & b
    Op.OR: ("or", False, False, False),
    Op.NAND: ("or", True, True, False),
    Op.IMPLY: ("or", True, False, False),     # ~a | b
    Op.CIMPLY: ("or", False, True, False),    # a | ~b
    Op.XOR: ("xor", False, False, False),
    Op.XNOR: ("xor", False, False, True),
}

Ref = Union[Literal, int]


@dataclass(frozen=True)
class Gate:
    op: Op
    operands: tuple[Literal, ...] = ()
    constant: int = 0
    name: str | None = None


@dataclass
class Circuit:
    nodes: list[Gate] = field(default_factory=list)
    inputs: dict[str, list[int]] = field(default_factory=dict)
    outputs: list[Ref] = field(default_factory=list)
    markers: frozenset[int] = frozenset()

    # construction -------------------------------------------------------
    def add_input(self, group: str, width: int = 1) -> list[int]:
        ids = []
        for i in range(width):
            nm = group if width == 1 else f"{group}[{i}]"
            self.nodes.append(Gate(Op.INPUT, (), 0, nm))
            ids.append(len(self.nodes) - 1)
        self.inputs.setdefault(group, []).extend(ids)
        return ids

    def add_gate(self, op: Op, *operands: Ref, constant: int = 0, name: str | None = None) -> int:
        ops = tuple(o if isinstance(o, Literal) else Literal(int(o)) for o in operands)
        for o in ops:
            if not 0 <= o.var < len(self.nodes):
                raise CircuitError(f"operand {o.var} does not precede the gate")
        if op in BINARY_OPS and len(ops) < 2:
            raise CircuitError(f"{op.value} needs at least two operands")
        if op is Op.NOT and len(ops) != 1:
            raise CircuitError("not takes exactly one operand")
        self.nodes.append(Gate(op, ops, constant, name))
        return len(self.nodes) - 1

    def const(self, bit: int) -> int:
        return self.add_gate(Op.CONST1 if bit else Op.CONST0)

    # queries --------------------------------------------------------------
    def input_nodes(self) -> list[int]:
        return [i for i, g in enumerate(self.nodes) if g.op is Op.INPUT]

    def fanout(self) -> list[int]:
        f = [0] * len(self.nodes)
        for g in self.nodes:
            for o in g.operands:
                f[o.var] += 1
        for o in self.outputs:
            if isinstance(o, Literal):
                f[o.var] += 1
        return f

    def validate(self) -> None:
        for i, g in enumerate(self.nodes):
            for o in g.operands:
                if o.var >= i:
                    raise CircuitError(f"node {i} references node {o.var}, which does not precede it")

    def evaluate(self, assignment: Mapping[int, int] | Mapping[str, Sequence[int]]) -> list[int]:
        """Values of every node; ``assignment`` maps input nodes (or group names) to bits."""
        vals: list[int] = [0] * len(self.nodes)
        given: dict[int, int] = {}
        for k, v in assignment.items():
            if isinstance(k, str):
                for nid, b in zip(self.inputs[k], v):
                    given[nid] = int(b)
            else:
                given[int(k)] = int(v)
        for i, g in enumerate(self.nodes):
            ins = [vals[o.var] ^ o.negated for o in g.operands]
            if g.op is Op.INPUT:
                if i not in given:
                    raise CircuitError(f"missing value for input node {i} ({g.name})")
                v = given[i]
            elif g.op is Op.CONST0:
                v = 0
            elif g.op is Op.CONST1:
                v = 1
            elif g.op is Op.NOT:
                v = 1 - ins[0]
            else:
                cls, na, nb, nr = _TABLE1[g.op]
                if len(ins) > 2 and (na or nb):
                    raise CircuitError(f"{g.op.value} is binary")
                if len(ins) == 2:
                    ins = [ins[0] ^ na, ins[1] ^ nb]
                if cls == "and":
                    v = int(all(ins))
                elif cls == "or":
                    v = int(any(ins))
                else:
                    v = sum(ins) & 1
                v ^= nr ^ g.constant
            vals[i] = v
        return vals

    def output_values(self, assignment) -> list[int]:
        vals = self.evaluate(assignment)
        return [vals[o.var] ^ o.negated if isinstance(o, Literal) else int(o) for o in self.outputs]

    def is_flat(self) -> bool:
        return all(g.op in (Op.INPUT, Op.AND, Op.OR, Op.XOR) for g in self.nodes)


# --------------------------------------------------------------------------- flattening

@dataclass(frozen=True)
class _Form:
    cls: str  # "lit" | "const" | "and" | "or" | "xor"
    items: tuple[Literal, ...] = ()
    const: int = 0

    def negate(self) -> "_Form":
        if self.cls == "lit":
            return _Form("lit", (~self.items[0],))
        if self.cls == "const":
            return _Form("const", (), 1 - self.const)
        if self.cls == "xor":
            return _Form("xor", self.items, 1 - self.const)
        dual = "or" if self.cls == "and" else "and"
        return _Form(dual, tuple(~x for x in self.items))


def _reduce(cls: str, items: list[Literal], const: int = 0) -> _Form:
    if cls == "xor":
        count: dict[int, int] = {}
        for x in items:
            const ^= int(x.negated)
            count[x.var] = count.get(x.var, 0) ^ 1
        lits = tuple(Literal(v) for v in sorted(count) if count[v])
        if not lits:
            return _Form("const", (), const)
        if len(lits) == 1:
            return _Form("lit", (Literal(lits[0].var, bool(const)),))
        return _Form("xor", lits, const)
    absorbing = 0 if cls == "and" else 1
    seen: dict[int, bool] = {}
    for x in items:
        if x.var in seen and seen[x.var] != x.negated:
            return _Form("const", (), absorbing)
        seen[x.var] = x.negated
    lits = tuple(Literal(v, n) for v, n in sorted(seen.items()))
    if not lits:
        return _Form("const", (), 1 - absorbing)
    if len(lits) == 1:
        return _Form("lit", lits)
    return _Form(cls, lits)


def flatten(c: Circuit) -> Circuit:
    """Collapse same-class regions into multi-input AND/OR/XOR gates over literals.

    A node is merged into a consumer of the same class unless it is marked or
    is a circuit output; merged nodes disappear unless some other consumer
    still needs their value.
    """
    c.validate()
    n = len(c.nodes)
    keep_boundary = set(c.markers) | {o.var for o in c.outputs if isinstance(o, Literal)}
    forms: list[_Form] = [None] * n  # type: ignore[list-item]
    seen_as: list[_Form] = [None] * n  # type: ignore[list-item]

    def operand_form(o: Literal) -> _Form:
        f = seen_as[o.var]
        return f.negate() if o.negated else f

    def settle(i: int, f: _Form) -> None:
        forms[i] = f
        boundary = i in keep_boundary and f.cls in ("and", "or", "xor")
        seen_as[i] = _Form("lit", (Literal(i),)) if boundary else f

    for i, g in enumerate(c.nodes):
        if g.op is Op.INPUT:
            settle(i, _Form("lit", (Literal(i),)))
            continue
        if g.op is Op.CONST0 or g.op is Op.CONST1:
            settle(i, _Form("const", (), int(g.op is Op.CONST1)))
            continue
        if g.op is Op.NOT:
            settle(i, operand_form(g.operands[0]).negate())
            continue
        if g.op in (Op.AND, Op.OR, Op.XOR) and len(g.operands) != 2:
            cls, flips, nr = g.op.value, [False] * len(g.operands), False
        else:
            cls, na, nb, nr = _TABLE1[g.op]
            flips = [na, nb]
        items: list[Literal] = []
        const = g.constant
        absorbing = None
        for o, flip in zip(g.operands, flips):
            lit_o = ~o if flip else o
            f = operand_form(lit_o)
            if f.cls == "const":
                if cls == "xor":
                    const ^= f.const
                elif (cls == "and") == (f.const == 0):
                    absorbing = f.const
                continue
            if f.cls == "lit":
                items.append(f.items[0])
            elif f.cls == cls:
                items.extend(f.items)
                const ^= f.const if cls == "xor" else 0
            else:
                items.append(lit_o)
        if absorbing is not None:
            red = _Form("const", (), absorbing)
        else:
            red = _reduce(cls, items, const)
            if red.cls == "lit":
                # a surviving single operand may itself be a gate; carry its form on
                red = operand_form(red.items[0])
        settle(i, red.negate() if nr else red)

    # which nodes are referenced as values
    needed: set[int] = set()
    stack = [o.var for o in c.outputs if isinstance(o, Literal)] + [m for m in c.markers]
    while stack:
        v = stack.pop()
        if v in needed:
            continue
        needed.add(v)
        f = forms[v]
        for x in f.items:
            if x.var != v:
                stack.append(x.var)

    out = Circuit()
    remap: dict[int, int] = {}
    for i, g in enumerate(c.nodes):
        if g.op is Op.INPUT:
            out.nodes.append(g)
            remap[i] = len(out.nodes) - 1
    for name, ids in c.inputs.items():
        out.inputs[name] = [remap[i] for i in ids]

    def ref(o: Literal) -> Ref:
        f = operand_form(o)
        if f.cls == "const":
            return f.const
        if f.cls == "lit":
            x = f.items[0]
            return Literal(remap[x.var], x.negated)
        return Literal(remap[o.var], o.negated)

    new_markers = set()
    for i, g in enumerate(c.nodes):
        f = forms[i]
        if g.op is Op.INPUT or i not in needed or f.cls in ("lit", "const"):
            continue
        ops = tuple(Literal(remap[x.var], x.negated) for x in f.items)
        out.nodes.append(Gate(Op(f.cls), ops, f.const if f.cls == "xor" else 0, g.name))
        remap[i] = len(out.nodes) - 1
        if i in c.markers:
            new_markers.add(remap[i])
    out.outputs = [ref(o) if isinstance(o, Literal) else int(o) for o in c.outputs]
    out.markers = frozenset(new_markers)
    return out


# --------------------------------------------------------------------------- markers

@dataclass(frozen=True)
class MarkerPolicy:
    kind: str = "every-multi-input"  # | "fanout-threshold" | "explicit"
    threshold: int = 2
    nodes: tuple[int, ...] = ()

    @classmethod
    def every_multi_input(cls) -> "MarkerPolicy":
        return cls("every-multi-input")

    @classmethod
    def fanout_threshold(cls, k: int) -> "MarkerPolicy":
        return cls("fanout-threshold", k)

    @classmethod
    def explicit(cls, nodes: Iterable[int]) -> "MarkerPolicy":
        return cls("explicit", nodes=tuple(nodes))


def required_markers(c: Circuit) -> set[int]:
    """Gates whose value is consumed by another gate need a result bit."""
    req = set()
    for g in c.nodes:
        for o in g.operands:
            if c.nodes[o.var].op is not Op.INPUT:
                req.add(o.var)
    return req


def place_markers(c: Circuit, policy: MarkerPolicy | str = "every-multi-input") -> Circuit:
    """Add substitution markers by policy, always including the structurally required ones.

    On an unflattened circuit the markers act as merge barriers for
    :func:`flatten`; root gates never need one.
    """
    if isinstance(policy, str):
        policy = MarkerPolicy(policy)
    roots = {o.var for o in c.outputs if isinstance(o, Literal)}
    fan = c.fanout()
    gates = [i for i, g in enumerate(c.nodes) if g.op not in (Op.INPUT, Op.CONST0, Op.CONST1, Op.NOT)]
    if policy.kind == "every-multi-input":
        chosen = {i for i in gates if fan[i] > 0}
    elif policy.kind == "fanout-threshold":
        chosen = {i for i in gates if fan[i] >= policy.threshold}
    elif policy.kind == "explicit":
        chosen = set(policy.nodes)
    else:
        raise ValueError(f"unknown marker policy {policy.kind!r}")
    consumed_elsewhere = {o.var for g in c.nodes for o in g.operands}
    chosen = {i for i in chosen if i not in roots or i in consumed_elsewhere}
    if c.is_flat():
        chosen |= required_markers(c)
    return replace(c, nodes=list(c.nodes), inputs=dict(c.inputs), outputs=list(c.outputs),
                   markers=frozenset(set(c.markers) | chosen))


# --------------------------------------------------------------------------- XOR clauses

@dataclass(frozen=True)
class XorClause:
    """``XOR(vars) ^ constant``; negated literals fold into the constant."""

    vars: frozenset[int]
    constant: int = 0

    @classmethod
    def of(cls, literals: Iterable[Literal | int], constant: int = 0) -> "XorClause":
        acc: set[int] = set()
        for x in literals:
            if isinstance(x, Literal):
                constant ^= int(x.negated)
                acc ^= {x.var}
            else:
                constant ^= int(x)
        return cls(frozenset(acc), constant)

    def __xor__(self, other: "XorClause") -> "XorClause":
        return XorClause(self.vars ^ other.vars, self.constant ^ other.constant)

    def value(self, values) -> int:
        return (sum(values[v] for v in self.vars) + self.constant) & 1

    def literals(self) -> list[Literal]:
        return [Literal(v) for v in sorted(self.vars)]

    def __len__(self) -> int:
        return len(self.vars)


@dataclass(frozen=True)
class ReuseDefinition:
    var: int
    clause: XorClause  # var == XOR(clause.vars)


def literal_count(clauses: Iterable[XorClause], definitions: Iterable[ReuseDefinition] = ()) -> int:
    """Literals over all clauses plus the inputs of every intermediate definition."""
    return sum(len(c) for c in clauses) + sum(len(d.clause) for d in definitions)


def xor_reuse(clauses: Sequence[XorClause], next_var: int, threshold: int = 3,
              max_rounds: int | None = None) -> tuple[list[XorClause], list[ReuseDefinition]]:
    """Greedy extraction of shared XOR sub-sums.

    Picks the largest variable set contained in at least two clauses (ties:
    more containing clauses, then lexicographically smallest), defines a new
    variable ``next_var`` for it and rewrites every containing clause. Stops
    when no shared set of size ``threshold`` or more remains.
    """
    work = list(clauses)
    defs: list[ReuseDefinition] = []
    rounds = 0
    while max_rounds is None or rounds < max_rounds:
        best = _best_shared(work, threshold)
        if best is None:
            break
        subset = best
        t = next_var
        next_var += 1
        defs.append(ReuseDefinition(t, XorClause(subset, 0)))
        work = [XorClause((c.vars - subset) | {t}, c.constant) if subset <= c.vars else c for c in work]
        rounds += 1
    return work, defs


def _best_shared(work: Sequence[XorClause], threshold: int) -> frozenset[int] | None:
    best_key = None
    best = None
    sets = [c.vars for c in work]
    by_var: dict[int, list[int]] = {}
    for i, s in enumerate(sets):
        for v in s:
            by_var.setdefault(v, []).append(i)
    seen_pairs: set[tuple[int, int]] = set()
    candidates: set[frozenset[int]] = set()
    for i, s in enumerate(sets):
        if len(s) < threshold:
            continue
        partners = set()
        for v in s:
            partners.update(j for j in by_var[v] if j > i)
        for j in partners:
            if (i, j) in seen_pairs:
                continue
            seen_pairs.add((i, j))
            inter = s & sets[j]
            if len(inter) >= threshold:
                candidates.add(frozenset(inter))
    for cand in candidates:
        count = sum(1 for s in sets if cand <= s)
        key = (-len(cand), -count, tuple(sorted(cand)))
        if best_key is None or key < best_key:
            best_key, best = key, cand
    return best


# --------------------------------------------------------------------------- Bristol fashion

def parse_bristol_text(text: str) -> Circuit:
    lines = [(i + 1, ln.split()) for i, ln in enumerate(text.splitlines())]
    lines = [(n, t) for n, t in lines if t]
    if len(lines) < 3:
        raise CircuitParseError("truncated Bristol header")
    try:
        (ln0, h0), (ln1, h1), (ln2, h2) = lines[:3]
        n_gates, n_wires = int(h0[0]), int(h0[1])
        niv = int(h1[0])
        in_widths = [int(x) for x in h1[1: 1 + niv]]
        nov = int(h2[0])
        out_widths = [int(x) for x in h2[1: 1 + nov]]
    except (ValueError, IndexError) as exc:
        raise CircuitParseError(f"malformed header: {exc}", lines[0][0]) from None
    if len(in_widths) != niv or len(out_widths) != nov:
        raise CircuitParseError("header value counts do not match", ln1)
    c = Circuit()
    wire: dict[int, Ref] = {}
    w = 0
    for gi, width in enumerate(in_widths):
        ids = c.add_input(f"in{gi}", width)
        for nid in ids:
            wire[w] = Literal(nid)
            w += 1
    body = lines[3:]
    if len(body) != n_gates:
        raise CircuitParseError(f"expected {n_gates} gates, found {len(body)}", body[-1][0] if body else ln2)
    for ln, tok in body:
        try:
            nin, nout = int(tok[0]), int(tok[1])
            args = [int(t) for t in tok[2: 2 + nin + nout]]
            kind = tok[2 + nin + nout]
        except (ValueError, IndexError):
            raise CircuitParseError("malformed gate line", ln) from None
        if len(tok) != 3 + nin + nout:
            raise CircuitParseError("wrong number of fields", ln)
        ins, outs = args[:nin], args[nin:]

        def get(x):
            if x not in wire:
                raise CircuitParseError(f"wire {x} used before definition", ln)
            return wire[x]

        def bind(out_wire, node):
            if not 0 <= out_wire < n_wires:
                raise CircuitParseError(f"wire {out_wire} out of range", ln)
            wire[out_wire] = node

        if kind == "XOR" and (nin, nout) == (2, 1):
            bind(outs[0], Literal(c.add_gate(Op.XOR, *_as_nodes(c, [get(ins[0]), get(ins[1])]))))
        elif kind == "AND" and (nin, nout) == (2, 1):
            bind(outs[0], Literal(c.add_gate(Op.AND, *_as_nodes(c, [get(ins[0]), get(ins[1])]))))
        elif kind == "INV" and (nin, nout) == (1, 1):
            bind(outs[0], Literal(c.add_gate(Op.NOT, *_as_nodes(c, [get(ins[0])]))))
        elif kind == "EQ" and (nin, nout) == (1, 1):
            if ins[0] not in (0, 1):
                raise CircuitParseError("EQ takes a constant 0 or 1", ln)
            bind(outs[0], ins[0])
        elif kind == "EQW" and (nin, nout) == (1, 1):
            bind(outs[0], get(ins[0]))
        elif kind == "MAND" and nin == 2 * nout:
            for a, b, o in zip(ins[:nout], ins[nout:], outs):
                bind(o, Literal(c.add_gate(Op.AND, *_as_nodes(c, [get(a), get(b)]))))
        else:
            raise CircuitParseError(f"unknown gate {kind} with {nin} inputs / {nout} outputs", ln)
    total_out = sum(out_widths)
    for x in range(n_wires - total_out, n_wires):
        if x not in wire:
            raise CircuitParseError(f"output wire {x} never assigned")
        c.outputs.append(wire[x])
    return c


def _as_nodes(c: Circuit, refs: Sequence[Ref]) -> list[Literal]:
    out = []
    for r in refs:
        out.append(r if isinstance(r, Literal) else Literal(c.const(int(r))))
    return out


def parse_bristol(path) -> Circuit:
    with open(path) as fh:
        return parse_bristol_text(fh.read())


# --------------------------------------------------------------------------- S-expression DSL

_TOKEN = re.compile(r"\(|\)|[^\s()]+")
_SEXPR_OPS = {op.value: op for op in Op if op not in (Op.INPUT, Op.CONST0, Op.CONST1)}


def _read_sexprs(text: str):
    text = re.sub(r";[^\n]*", "", text)
    tokens = _TOKEN.findall(text)
    pos = 0

    def read():
        nonlocal pos
        if pos >= len(tokens):
            raise CircuitParseError("unexpected end of input")
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            out = []
            while pos < len(tokens) and tokens[pos] != ")":
                out.append(read())
            if pos >= len(tokens):
                raise CircuitParseError("unbalanced parentheses")
            pos += 1
            return out
        if tok == ")":
            raise CircuitParseError("unexpected ')'")
        return tok

    forms = []
    while pos < len(tokens):
        forms.append(read())
    return forms


def parse_sexpr(text: str) -> Circuit:
    """``(inputs a b c) (define t (and a b)) (outputs (xor t (not c)))``."""
    c = Circuit()
    env: dict[str, Literal] = {}

    def build(e) -> Literal:
        if isinstance(e, str):
            if e in ("0", "1"):
                return Literal(c.const(int(e)))
            if e not in env:
                raise CircuitParseError(f"unknown name {e!r}")
            return env[e]
        if not e or not isinstance(e[0], str):
            raise CircuitParseError(f"malformed expression {e!r}")
        head = e[0].lower()
        if head not in _SEXPR_OPS:
            raise CircuitParseError(f"unknown operator {e[0]!r}")
        op = _SEXPR_OPS[head]
        args = [build(a) for a in e[1:]]
        if op is Op.NOT:
            if len(args) != 1:
                raise CircuitParseError("not takes one argument")
            return Literal(c.add_gate(Op.NOT, args[0]))
        if len(args) < 2:
            raise CircuitParseError(f"{head} takes at least two arguments")
        if len(args) > 2 and op not in (Op.AND, Op.OR, Op.XOR):
            raise CircuitParseError(f"{head} is binary")
        acc = args[0]
        for a in args[1:]:
            acc = Literal(c.add_gate(op, acc, a))
        return acc

    for form in _read_sexprs(text):
        if not isinstance(form, list) or not form:
            raise CircuitParseError(f"top-level form must be a list, got {form!r}")
        head = form[0]
        if head == "inputs":
            for nm in form[1:]:
                if not isinstance(nm, str) or nm in env:
                    raise CircuitParseError(f"bad input name {nm!r}")
                env[nm] = Literal(c.add_input(nm)[0])
        elif head == "define":
            if len(form) != 3 or not isinstance(form[1], str):
                raise CircuitParseError("define takes a name and an expression")
            env[form[1]] = build(form[2])
        elif head == "outputs":
            c.outputs.extend(build(e) for e in form[1:])
        else:
            raise CircuitParseError(f"unknown top-level form {head!r}")
    return c


def load_circuit(path, fmt: str) -> Circuit:
    if fmt == "bristol":
        return parse_bristol(path)
    if fmt == "sexpr":
        with open(path) as fh:
            return parse_sexpr(fh.read())
    raise ValueError(f"unknown circuit format {fmt!r}")
