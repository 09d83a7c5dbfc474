"""Closed-form QUBO encodings of multi-input boolean predicates.

Every encoder returns a :class:`PatternEmission`: a fragment over local
indices (the distinct caller variables first, then the substitution bits)
together with the caller variables those locals stand for and a witness that
produces zero-energy substitution bits for satisfying inputs.

Inputs are *bits*: a :class:`Literal` or a Python ``0``/``1`` constant.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np

from .qubo_model import QuboBuilder, QuboInstance


@dataclass(frozen=True, order=True)
class Literal:
    var: int
    negated: bool = False

    def __invert__(self) -> "Literal":
        return Literal(self.var, not self.negated)

    def value(self, values: Mapping[int, int] | Sequence[int]) -> int:
        return values[self.var] ^ int(self.negated)

    def __repr__(self) -> str:
        return f"~x{self.var}" if self.negated else f"x{self.var}"


Bit = Union[Literal, int]


def lit(x: Bit | int, negated: bool = False) -> Literal:
    return x if isinstance(x, Literal) else Literal(int(x), negated)


def bit_value(b: Bit, values) -> int:
    return b.value(values) if isinstance(b, Literal) else int(b)


class LinExpr:
    """Integer affine form ``const + sum coef * x_var`` over caller variables."""

    __slots__ = ("coef", "const")

    def __init__(self, coef: dict[int, int] | None = None, const: int = 0):
        self.coef = coef if coef is not None else {}
        self.const = const

    @classmethod
    def of(cls, b: Bit, weight: int = 1) -> "LinExpr":
        e = cls()
        e.add_bit(b, weight)
        return e

    def add_bit(self, b: Bit, weight: int = 1) -> "LinExpr":
        if isinstance(b, Literal):
            if b.negated:
                self.const += weight
                self._add(b.var, -weight)
            else:
                self._add(b.var, weight)
        else:
            if b not in (0, 1):
                raise ValueError(f"constant bit must be 0 or 1, got {b!r}")
            self.const += weight * b
        return self

    def add_var(self, v: int, weight: int) -> "LinExpr":
        self._add(v, weight)
        return self

    def _add(self, v: int, w: int) -> None:
        c = self.coef.get(v, 0) + w
        if c:
            self.coef[v] = c
        else:
            self.coef.pop(v, None)

    def copy(self) -> "LinExpr":
        return LinExpr(dict(self.coef), self.const)

    def value(self, values) -> int:
        return self.const + sum(c * values[v] for v, c in self.coef.items())


def _add_product(b: QuboBuilder, p: LinExpr, q: LinExpr, scale: int = 1) -> None:
    """Accumulate ``scale * p * q`` (binary variables, so x*x = x)."""
    b.add_offset(scale * p.const * q.const)
    for v, c in p.coef.items():
        b.add_linear(v, scale * c * q.const)
    for v, c in q.coef.items():
        b.add_linear(v, scale * c * p.const)
    for (v, c), (u, d) in itertools.product(p.coef.items(), q.coef.items()):
        b.add_quadratic(v, u, scale * c * d)


def _add_linear_expr(b: QuboBuilder, p: LinExpr, scale: int = 1) -> None:
    b.add_offset(scale * p.const)
    for v, c in p.coef.items():
        b.add_linear(v, scale * c)


# --------------------------------------------------------------------------- relaxed expansion

@dataclass(frozen=True)
class RelaxedExpansion:
    """``base + sum c_i s_i`` with ascending coefficients; only the top one is relaxed.

    ``gap`` is the largest allowed distance between consecutive spanned values:
    1 for the parity counter ``t`` and 2 for the range root ``f1``.
    """

    base: int
    coefficients: tuple[int, ...]
    gap: int = 1

    @classmethod
    def counter(cls, t_max: int) -> "RelaxedExpansion":
        """Covers ``1..t_max`` contiguously with ``ceil(log2 t_max)`` bits."""
        if t_max < 1:
            raise ValueError("t_max must be positive")
        n = (t_max - 1).bit_length()
        coeffs = [1 << i for i in range(n - 1)]
        if n:
            coeffs.append(t_max - (1 << (n - 1)))
        coeffs.sort()
        return cls(1, tuple(coeffs), 1)

    @classmethod
    def range_root(cls, low: int, high: int) -> "RelaxedExpansion":
        """Even-stepped values from ``low`` to ``high - 1`` so that f1 / f1 + 1 cover ``[low, high]``."""
        T = high - low + 1
        if T < 2:
            raise ValueError("range root needs high > low")
        n = max(0, math.ceil(math.log2(T)) - 1)
        coeffs = [2 << i for i in range(n - 1)]
        if n:
            coeffs.append((T - 2) - sum(coeffs))
        return cls(low, tuple(sorted(coeffs)), 2)

    @property
    def n_subs(self) -> int:
        return len(self.coefficients)

    @property
    def t_max(self) -> int:
        return self.base + sum(self.coefficients)

    def values(self) -> list[int]:
        return sorted(self._table())

    def well_formed(self) -> bool:
        c = self.coefficients
        if list(c) != sorted(c) or any(x <= 0 for x in c):
            return False
        if c and c[0] > self.gap:
            return False
        return all(c[i] <= sum(c[:i]) + self.gap for i in range(len(c)))

    def _table(self) -> dict[int, tuple[int, ...]]:
        return _expansion_table(self.base, self.coefficients)

    def decompose(self, value: int) -> tuple[int, ...] | None:
        return self._table().get(value)


@lru_cache(maxsize=4096)
def _expansion_table(base: int, coeffs: tuple[int, ...]) -> dict[int, tuple[int, ...]]:
    table: dict[int, tuple[int, ...]] = {}
    for bits in itertools.product((0, 1), repeat=len(coeffs)):
        v = base + sum(b * c for b, c in zip(bits, coeffs))
        # prefer the lexicographically-smallest bit pattern (fewest high bits)
        if v not in table or bits[::-1] < table[v][::-1]:
            table[v] = bits
    return table


# --------------------------------------------------------------------------- emissions

@dataclass(frozen=True)
class PatternEmission:
    """A QUBO fragment over local indices plus its port binding and witness.

    Local index ``i < len(ports)`` stands for caller variable ``ports[i]``;
    the remaining locals are substitution bits (``subst_vars``).
    """

    name: str
    fragment: QuboInstance
    ports: tuple[int, ...]
    primary_vars: tuple[Bit, ...]
    result_var: Literal | None
    subst_vars: tuple[int, ...]
    predicate: Callable[[Mapping[int, int]], bool]
    fast_witness: Callable[[Mapping[int, int]], tuple[int, ...]] | None = field(default=None, repr=False)
    outputs: tuple[int, ...] = ()

    @property
    def n_subs(self) -> int:
        return len(self.subst_vars)

    @property
    def num_local(self) -> int:
        return self.fragment.num_vars

    def var_map(self, sub_ids: Sequence[int]) -> list[int]:
        if len(sub_ids) != self.n_subs:
            raise ValueError(f"{self.name}: expected {self.n_subs} substitution ids")
        return list(self.ports) + list(sub_ids)

    def holds(self, values: Mapping[int, int]) -> bool:
        return bool(self.predicate(values))

    def local_energy(self, values: Mapping[int, int], subs: Sequence[int]) -> int:
        a = [values[v] for v in self.ports] + list(subs)
        return self.fragment.energy(a)

    def _sub_energies(self, values: Mapping[int, int]) -> np.ndarray:
        ns = self.n_subs
        X = np.zeros((1 << ns, self.num_local), dtype=np.uint8)
        X[:, : len(self.ports)] = [values[v] for v in self.ports]
        if ns:
            codes = np.arange(1 << ns)
            X[:, len(self.ports):] = (codes[:, None] >> np.arange(ns)[None, :]) & 1
        return self.fragment.energies(X)

    def witness_exhaustive(self, values: Mapping[int, int]) -> tuple[int, ...]:
        e = self._sub_energies(values)
        code = int(np.argmin(e))
        return tuple((code >> i) & 1 for i in range(self.n_subs))

    def witness(self, values: Mapping[int, int]) -> tuple[int, ...]:
        if self.fast_witness is not None:
            w = self.fast_witness(values)
            if w is not None:
                return tuple(w)
        if self.n_subs == 0:
            return ()
        return self.witness_exhaustive(values)

    def min_over_subs(self, values: Mapping[int, int]) -> int:
        return int(self._sub_energies(values).min())

    def complete(self, values: Mapping[int, int]) -> tuple[dict[int, int], tuple[int, ...]]:
        """Fill the unassigned ``outputs`` ports and subs by exhaustive minimisation."""
        free = [v for v in self.outputs if v not in values]
        best = None
        for bits in itertools.product((0, 1), repeat=len(free)):
            vals = dict(values)
            vals.update(zip(free, bits))
            e = self._sub_energies(vals)
            code = int(np.argmin(e))
            if best is None or e[code] < best[0]:
                best = (int(e[code]), dict(zip(free, bits)), code)
        _, assigned, code = best
        return assigned, tuple((code >> i) & 1 for i in range(self.n_subs))


class _Fragment:
    """Local index bookkeeping shared by the encoders."""

    def __init__(self, bits: Iterable[Bit]):
        self.ports: list[int] = []
        self._local: dict[int, int] = {}
        for b in bits:
            if isinstance(b, Literal) and b.var not in self._local:
                self._local[b.var] = len(self.ports)
                self.ports.append(b.var)
        self.n_ports = len(self.ports)
        self.n_subs = 0
        self.qb = QuboBuilder(self.n_ports)

    def local_bit(self, b: Bit) -> Bit:
        return Literal(self._local[b.var], b.negated) if isinstance(b, Literal) else b

    def expr(self, bits: Iterable[Bit], weight: int = 1) -> LinExpr:
        e = LinExpr()
        for b in bits:
            e.add_bit(self.local_bit(b), weight)
        return e

    def new_subs(self, k: int) -> list[int]:
        out = list(range(self.n_ports + self.n_subs, self.n_ports + self.n_subs + k))
        self.n_subs += k
        self.qb.ensure(self.n_ports + self.n_subs)
        return out

    def emit(self, name, primary, result, predicate, fast_witness=None, outputs=()) -> PatternEmission:
        self.qb.ensure(self.n_ports + self.n_subs)
        subs = tuple(range(self.n_ports, self.n_ports + self.n_subs))
        return PatternEmission(name, self.qb.build(), tuple(self.ports), tuple(primary), result, subs,
                               predicate, fast_witness, tuple(outputs))


def _sum_bits(bits: Sequence[Bit], values) -> int:
    return sum(bit_value(b, values) for b in bits)


def _as_result(result) -> Literal | None:
    if result is None:
        return None
    return lit(result)


# --------------------------------------------------------------------------- parity

def parity_subs(n_terms: int) -> int:
    """Substitution bits of the parity pattern over ``n_terms`` summed terms."""
    return (math.ceil(n_terms / 2) - 1).bit_length() if n_terms > 0 else 0


def encode_parity(xs: Sequence[Bit], result: Literal | int | None = None, constant: int = 0) -> PatternEmission:
    """Zero iff ``XOR(xs) ^ constant`` is true, or equals ``result`` when given.

    Energy ``(S - 1 - 2 * (t - 1))**2`` where ``S`` sums the literals (and
    ``1 - r``) and ``t`` is a relaxed counter over ``1..ceil(N'/2)``.
    """
    xs = tuple(xs)
    if not xs and result is None:
        raise ValueError("parity needs at least one literal")
    r = _as_result(result)
    terms = list(xs) + ([~r] if r is not None else []) + ([1] if constant else [])
    frag = _Fragment(terms)
    n_terms = sum(1 for b in terms if isinstance(b, Literal)) + sum(int(b) for b in terms if not isinstance(b, Literal))
    t_max = max(1, math.ceil(n_terms / 2))
    exp = RelaxedExpansion.counter(t_max)
    subs = frag.new_subs(exp.n_subs)
    a = frag.expr(terms)
    a.const -= 1
    for s, c in zip(subs, exp.coefficients):
        a.add_var(s, -2 * c)
    _add_product(frag.qb, a, a)

    def predicate(values):
        p = (_sum_bits(xs, values) + constant) & 1
        return p == r.value(values) if r is not None else p == 1

    def fast(values):
        total = _sum_bits(terms, values)
        if total % 2 == 0:
            return None
        return exp.decompose((total + 1) // 2)

    return frag.emit("parity", xs, r, predicate, fast)


def encode_xor3_result(x0: Bit, x1: Bit, x2: Bit, z: Literal | int) -> PatternEmission:
    """``z <-> x0 ^ x1 ^ x2`` as ``(x0 + x1 + x2 - z + 2s - 2)**2``."""
    zl = lit(z)
    frag = _Fragment([x0, x1, x2, zl])
    (s,) = frag.new_subs(1)
    a = frag.expr([x0, x1, x2])
    a.add_bit(frag.local_bit(zl), -1)
    a.add_var(s, 2)
    a.const -= 2
    _add_product(frag.qb, a, a)

    def predicate(values):
        return (bit_value(x0, values) ^ bit_value(x1, values) ^ bit_value(x2, values)) == zl.value(values)

    def fast(values):
        v = 2 - (_sum_bits([x0, x1, x2], values) - zl.value(values))
        return (v // 2,) if v in (0, 2) else None

    return frag.emit("xor3", (x0, x1, x2), zl, predicate, fast)


# --------------------------------------------------------------------------- ranges, OR, AND

def range_subs(low: int, high: int) -> int:
    T = high - low + 1
    return max(0, math.ceil(math.log2(T)) - 1) if T >= 1 else 0


def _range_into(frag: _Fragment, bits: Sequence[Bit], low: int, high: int, n_max: int):
    """Add the product-form range penalty for ``low <= sum(bits) <= high``; returns a witness."""
    if low <= 0 and high >= n_max:
        return lambda values: ()
    low = max(low, 0)
    high = min(high, n_max)
    a = frag.expr(bits)
    if low == high:
        a.const -= low
        _add_product(frag.qb, a, a)
        return lambda values: ()
    exp = RelaxedExpansion.range_root(low, high)
    subs = frag.new_subs(exp.n_subs)
    a.const -= exp.base
    for s, c in zip(subs, exp.coefficients):
        a.add_var(s, -c)
    # (S - f1) * (S - f1 - 1) = A^2 - A
    _add_product(frag.qb, a, a)
    _add_linear_expr(frag.qb, a, -1)

    def fast(values):
        total = _sum_bits(bits, values)
        w = exp.decompose(total)
        return w if w is not None else exp.decompose(total - 1)

    return fast


def _bit_count(bits: Sequence[Bit]) -> int:
    return sum(1 if isinstance(b, Literal) else int(b) for b in bits)


def encode_range(xs: Sequence[Bit], low: int, high: int, *, strict_low: bool = False,
                 strict_high: bool = False) -> PatternEmission:
    """Zero iff ``low <= popcount(xs) <= high`` (strict bounds are normalised first)."""
    xs = tuple(xs)
    if strict_low:
        low += 1
    if strict_high:
        high -= 1
    n = len(xs)
    if not 0 <= low <= high <= n:
        raise ValueError(f"range needs 0 <= L <= H <= N, got L={low}, H={high}, N={n}")
    frag = _Fragment(xs)
    fast = _range_into(frag, xs, low, high, _bit_count(xs))

    def predicate(values):
        return low <= _sum_bits(xs, values) <= high

    return frag.emit("range", xs, None, predicate, fast)


def encode_or(xs: Sequence[Bit], result: Literal | int | None = None) -> PatternEmission:
    """Multi-input OR; with ``result`` encodes ``r <-> OR(xs)``.

    The result form is ``(~r | x_1 | ... | x_k)`` (a (k+1)-input range) plus the
    2-CNF part ``(r | ~x_i)`` summed to ``(1 - r) * sum x_i``.
    """
    xs = tuple(xs)
    if not xs:
        raise ValueError("OR needs at least one literal")
    r = _as_result(result)
    if r is None:
        frag = _Fragment(xs)
        fast = _range_into(frag, xs, 1, len(xs), _bit_count(xs))
        return frag.emit("or", xs, None, lambda v: _sum_bits(xs, v) >= 1, fast)
    clause = (~r,) + xs
    frag = _Fragment(clause)
    fast = _range_into(frag, clause, 1, len(clause), _bit_count(clause))
    _add_product(frag.qb, frag.expr([~r]), frag.expr(xs))

    def predicate(values):
        return int(_sum_bits(xs, values) >= 1) == r.value(values)

    return frag.emit("or", xs, r, predicate, fast)


def encode_nand(xs: Sequence[Bit]) -> PatternEmission:
    """Multi-input NAND: ``0 <= popcount <= N - 1``."""
    xs = tuple(xs)
    e = encode_range(xs, 0, len(xs) - 1)
    return PatternEmission("nand", e.fragment, e.ports, xs, None, e.subst_vars, e.predicate, e.fast_witness)


def encode_and(xs: Sequence[Bit], result: Literal | int | None = None, low_coeff: bool = False) -> PatternEmission:
    """Multi-input AND; ``low_coeff`` uses the pairwise form with unit coefficients."""
    xs = tuple(xs)
    if not xs:
        raise ValueError("AND needs at least one literal")
    r = _as_result(result)
    if r is None:
        frag = _Fragment(xs)
        if low_coeff:
            # N/2 - sum x_{2i+1} x_{2i}; odd N adds 1 - x_{N-1}
            for i in range(0, len(xs) - 1, 2):
                frag.qb.add_offset(1)
                _add_product(frag.qb, frag.expr([xs[i]]), frag.expr([xs[i + 1]]), -1)
            if len(xs) % 2:
                frag.qb.add_offset(1)
                _add_linear_expr(frag.qb, frag.expr([xs[-1]]), -1)
        else:
            a = frag.expr(xs)
            a.const -= len(xs)
            _add_product(frag.qb, a, a)
        return frag.emit("and", xs, None, lambda v: _sum_bits(xs, v) == len(xs), lambda v: ())
    negs = tuple(~lit(x) if isinstance(x, Literal) else 1 - x for x in xs)
    clause = (r,) + negs
    frag = _Fragment(clause)
    fast = _range_into(frag, clause, 1, len(clause), _bit_count(clause))
    # (~r | x_i) for every i: r * (k - sum x_i)
    _add_product(frag.qb, frag.expr([r]), frag.expr(negs))

    def predicate(values):
        return int(_sum_bits(xs, values) == len(xs)) == r.value(values)

    return frag.emit("and", xs, r, predicate, fast)


# --------------------------------------------------------------------------- reference polynomials

GF4_MULT_POLY = (
    "4x0+3z0+17z1-4x0x1-3x0y1-4x0z0+6x0z1+1x1y0+4x1y1+2x1z0-7x1z1-2y0z0-10y0z1"
    "+2y1z0-5y1z1-4z0z1+8s0x0-7s0x1+11s0y0-7s0y1-8s0z0-15s1x0+13s1x1+5s1y0+9s1y1"
    "+10s1z0-18s1z1+11s0+11s1-17s0s1"
)
GF16_INV_POLY = (
    "32x0-13x1+31x2+73x3-3z1-17z3+21x0x1-49x0x2-32x0x3+65x0z0+10x0z1-59x0z2"
    "-38x0z3-13x1x2-19x1x3+26x1z0+4x1z1-9x1z2+2x1z3+26x2x3-58x2z0-12x2z1"
    "+38x2z2+18x2z3-59x3z0-8x3z1-20x3z3+14z0z1-27z0z2-6z1z2+54z2z3+32sx1"
    "-72sx3+59sz0+10sz1+59sz2+75sz3-28s+28"
)
TERNARY_SELECT_POLY = "-2x0-2x1-1x2+5z+3x0x1+1x0x2-2x0z+2x1x2-4x1z-2x2z+4sx0+6sx1+2sx2-4sz-2s+2"
MAJORITY3_POLY = "3z+1x0x1+1x0x2-2x0z+1x1x2-2x1z-2x2z"
MD5_I_AUX_POLY = "-7x0-8x1-5x2-7z+4x0x1+2x0x2+4x0z+3x1x2+4x1z+2x2z+6sx0+8sx1+4sx2+6sz-10s+11"

_TERM = re.compile(r"([+-]?)(\d*)((?:[a-z]\d?)*)")
_SYM = re.compile(r"[a-z]\d?")


def parse_polynomial(text: str) -> dict[tuple[str, ...], int]:
    """Parse ``"3z+1x0x1-2s"`` style polynomials into ``{sorted symbols: coefficient}``."""
    out: dict[tuple[str, ...], int] = {}
    pos = 0
    text = text.replace(" ", "")
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m or m.end() == pos:
            raise ValueError(f"cannot parse polynomial at {text[pos:]!r}")
        sign, digits, syms = m.groups()
        c = int(digits) if digits else 1
        if sign == "-":
            c = -c
        key = tuple(sorted(_SYM.findall(syms)))
        if key in out:
            raise ValueError(f"duplicate term {key}")
        out[key] = c
        pos = m.end()
    return out


def _instantiate(name: str, poly: str, binding: dict[str, Bit], sub_names: Sequence[str],
                 port_order: Sequence[Bit], predicate, outputs=()) -> PatternEmission:
    frag = _Fragment(port_order)
    subs = frag.new_subs(len(sub_names))
    exprs = {k: frag.expr([b]) for k, b in binding.items()}
    exprs.update({s: LinExpr({idx: 1}) for s, idx in zip(sub_names, subs)})
    for key, c in parse_polynomial(poly).items():
        if len(key) == 0:
            frag.qb.add_offset(c)
        elif len(key) == 1:
            _add_linear_expr(frag.qb, exprs[key[0]], c)
        else:
            _add_product(frag.qb, exprs[key[0]], exprs[key[1]], c)
    primary = tuple(b for k, b in binding.items() if k not in ("z", "z0", "z1", "z2", "z3"))
    out_ports = tuple(b.var for b in outputs if isinstance(b, Literal))
    return frag.emit(name, primary, None, predicate, None, out_ports)


def encode_ternary_select(x0: Bit, x1: Bit, x2: Bit, z: Literal | int) -> PatternEmission:
    """``z <-> (x0 & x1) | (~x0 & x2)``."""
    z = lit(z)

    def predicate(v):
        a, b, c = (bit_value(x, v) for x in (x0, x1, x2))
        return ((a & b) | ((1 - a) & c)) == z.value(v)

    e = _instantiate("ternary_select", TERNARY_SELECT_POLY, {"x0": x0, "x1": x1, "x2": x2, "z": z},
                     ["s"], [x0, x1, x2, z], predicate, (z,))
    return _with_result(e, z)


def encode_majority3(x0: Bit, x1: Bit, x2: Bit, z: Literal | int) -> PatternEmission:
    z = lit(z)

    def predicate(v):
        return int(bit_value(x0, v) + bit_value(x1, v) + bit_value(x2, v) >= 2) == z.value(v)

    e = _instantiate("majority3", MAJORITY3_POLY, {"x0": x0, "x1": x1, "x2": x2, "z": z},
                     [], [x0, x1, x2, z], predicate, (z,))
    return _with_result(e, z)


def encode_md5_i_aux(x0: Bit, x1: Bit, x2: Bit, z: Literal | int) -> PatternEmission:
    """``z <-> x0 ^ (x1 | ~x2)``."""
    z = lit(z)

    def predicate(v):
        a, b, c = (bit_value(x, v) for x in (x0, x1, x2))
        return (a ^ (b | (1 - c))) == z.value(v)

    e = _instantiate("md5_i_aux", MD5_I_AUX_POLY, {"x0": x0, "x1": x1, "x2": x2, "z": z},
                     ["s"], [x0, x1, x2, z], predicate, (z,))
    return _with_result(e, z)


def _with_result(e: PatternEmission, z: Literal) -> PatternEmission:
    return PatternEmission(e.name, e.fragment, e.ports, e.primary_vars, z, e.subst_vars, e.predicate,
                           e.fast_witness, e.outputs)


@lru_cache(maxsize=None)
def _zero_table(poly: str, inputs: tuple[str, ...], outputs: tuple[str, ...], subs: tuple[str, ...]):
    """Input bits -> output bits, read off the zero set of a reference polynomial."""
    terms = parse_polynomial(poly)
    names = inputs + outputs + subs
    table: dict[tuple[int, ...], tuple[int, ...]] = {}
    for bits in itertools.product((0, 1), repeat=len(names)):
        a = dict(zip(names, bits))
        e = sum(c * all(a[s] for s in key) for key, c in terms.items())
        if e == 0:
            x = bits[: len(inputs)]
            z = bits[len(inputs): len(inputs) + len(outputs)]
            if table.setdefault(x, z) != z:
                raise ValueError("reference polynomial is not functional")
    return table


def gf4_mult_table() -> dict[tuple[int, ...], tuple[int, ...]]:
    """``(x0, x1, y0, y1) -> (z0, z1)`` from the GF(2^2) multiplication polynomial."""
    return _zero_table(GF4_MULT_POLY, ("x0", "x1", "y0", "y1"), ("z0", "z1"), ("s0", "s1"))


def gf16_inv_table() -> dict[tuple[int, ...], tuple[int, ...]]:
    """``(x0..x3) -> (z0..z3)`` from the GF(2^4) inverse polynomial."""
    return _zero_table(GF16_INV_POLY, ("x0", "x1", "x2", "x3"), ("z0", "z1", "z2", "z3"), ("s",))


def encode_gf4_mult(x: Sequence[Bit], y: Sequence[Bit], z: Sequence[Literal | int]) -> PatternEmission:
    """GF(2^2) product ``z = x * y`` (bit ``i`` of each operand is ``x_i``), two weak subs."""
    x0, x1 = x
    y0, y1 = y
    z0, z1 = (lit(b) for b in z)
    table = gf4_mult_table()

    def predicate(v):
        key = tuple(bit_value(b, v) for b in (x0, x1, y0, y1))
        return table[key] == (z0.value(v), z1.value(v))

    binding = {"x0": x0, "x1": x1, "y0": y0, "y1": y1, "z0": z0, "z1": z1}
    return _instantiate("gf4_mult", GF4_MULT_POLY, binding, ["s0", "s1"],
                        [x0, x1, y0, y1, z0, z1], predicate, (z0, z1))


def encode_gf16_inv(x: Sequence[Bit], z: Sequence[Literal | int]) -> PatternEmission:
    """GF(2^4) inverse ``z = x^-1`` (0 maps to 0), one substitution bit."""
    xs = tuple(x)
    zs = tuple(lit(b) for b in z)
    table = gf16_inv_table()

    def predicate(v):
        return table[tuple(bit_value(b, v) for b in xs)] == tuple(b.value(v) for b in zs)

    binding = {f"x{i}": b for i, b in enumerate(xs)}
    binding.update({f"z{i}": b for i, b in enumerate(zs)})
    return _instantiate("gf16_inv", GF16_INV_POLY, binding, ["s"], list(xs) + list(zs), predicate, zs)


# --------------------------------------------------------------------------- modular addition

Word = Union[Sequence[Bit], int]


def _word_bits(w: Word, width: int) -> list[Bit]:
    if isinstance(w, int):
        return [(w >> i) & 1 for i in range(width)]
    w = list(w)
    if len(w) != width:
        raise ValueError(f"operand has {len(w)} bits, expected {width}")
    return w


def adder_blocks(width: int, block: int) -> list[tuple[int, int]]:
    return [(lo, min(lo + block, width)) for lo in range(0, width, block)]


def encode_modular_add(inputs: Sequence[Word], output: Word, block_size: int, width: int,
                       carry_bits: int | None = None) -> PatternEmission:
    """``sum(inputs) == output  (mod 2**width)`` with block-wise carries.

    Operands are LSB-first bit sequences or integer constants. Each block of
    ``block_size`` bits contributes ``(sum_in + carry_in - out - 2**B * carry_out)**2``;
    the final carry is left free, which realises the modulus. A ragged last
    block is allowed when ``block_size`` does not divide ``width``.
    """
    k = len(inputs)
    if not 2 <= k <= 7:
        raise ValueError("modular addition supports 2..7 inputs")
    if block_size < 1 or width < 1:
        raise ValueError("block size and width must be positive")
    ops = [_word_bits(w, width) for w in inputs]
    out = _word_bits(output, width)
    blocks = adder_blocks(width, block_size)
    frag = _Fragment([b for op in ops for b in op] + out)

    # carry width per boundary from the largest attainable block total
    carries: list[list[int]] = []
    cin_max = 0
    plan = []
    for lo, hi in blocks:
        maxtot = cin_max
        for op in ops:
            maxtot += sum((1 << (i - lo)) * (1 if isinstance(b, Literal) else int(b)) for i, b in
                          enumerate(op[lo:hi], start=lo))
        cmax = maxtot >> (hi - lo)
        nb = carry_bits if carry_bits is not None else cmax.bit_length()
        plan.append(nb)
        cin_max = min(cmax, (1 << nb) - 1)
    for nb in plan:
        carries.append(frag.new_subs(nb))

    cin: list[int] = []
    for (lo, hi), cout in zip(blocks, carries):
        a = LinExpr()
        for op in ops:
            for i in range(lo, hi):
                a.add_bit(frag.local_bit(op[i]), 1 << (i - lo))
        for i in range(lo, hi):
            a.add_bit(frag.local_bit(out[i]), -(1 << (i - lo)))
        for m, c in enumerate(cin):
            a.add_var(c, 1 << m)
        for m, c in enumerate(cout):
            a.add_var(c, -(1 << (hi - lo + m)))
        _add_product(frag.qb, a, a)
        cin = cout

    def value(bits, values):
        return sum(bit_value(b, values) << i for i, b in enumerate(bits))

    def predicate(values):
        return sum(value(op, values) for op in ops) % (1 << width) == value(out, values)

    def block_totals(values):
        return [sum(bit_value(op[i], values) << (i - lo) for op in ops for i in range(lo, hi))
                - sum(bit_value(out[i], values) << (i - lo) for i in range(lo, hi)) for lo, hi in blocks]

    def local_min(totals):
        # exact minimum over carries: a chain DP keyed by the carry value
        best = {0: (0, ())}
        for (lo, hi), nb, t in zip(blocks, plan, totals):
            nxt = {}
            for cin, (cost, bits) in best.items():
                for c in range(1 << nb):
                    e = cost + (t + cin - (c << (hi - lo))) ** 2
                    if c not in nxt or e < nxt[c][0]:
                        nxt[c] = (e, bits + tuple((c >> m) & 1 for m in range(nb)))
            best = nxt
        return min(best.values())[1]

    def fast(values):
        totals = block_totals(values)
        w: list[int] = []
        carry = 0
        for (lo, hi), nb, t in zip(blocks, plan, totals):
            tot = carry + t
            if tot < 0 or tot % (1 << (hi - lo)) or (tot >> (hi - lo)) >= (1 << nb):
                return local_min(totals)
            carry = tot >> (hi - lo)
            w.extend((carry >> m) & 1 for m in range(nb))
        return tuple(w)

    prim = tuple(b for op in ops for b in op)
    return frag.emit("modular_add", prim, None, predicate, fast)
