"""MD5, SHA-1 and SHA-256 preimage instances over one padded block.

A word is a list of 32 bits, least significant first; each bit is a
:class:`Literal` or a constant. Rotations and shifts only permute that list.
Additions go through block-wise modular adders with every constant operand
folded into one. The step outputs that end up in the final state are fixed
to ``digest - IV`` directly, so they cost no variables.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Sequence

from ..compile import Assembler, xor_all
from ..patterns import (
    Literal,
    bit_value,
    encode_majority3,
    encode_md5_i_aux,
    encode_modular_add,
    encode_ternary_select,
)
from ..qubo_model import VarKind
from . import reference as ref

M32 = 0xFFFFFFFF
Word = list


@dataclass(frozen=True)
class HashOptions:
    block_size: int = 6
    clause_length_limit: int | None = None
    message_bytes: int = 55


def const_word(v: int) -> Word:
    return [(v >> i) & 1 for i in range(32)]


def rotl(w: Word, n: int) -> Word:
    n %= 32
    return w[32 - n:] + w[:32 - n]


def rotr(w: Word, n: int) -> Word:
    return rotl(w, 32 - n)


def shr(w: Word, n: int) -> Word:
    return w[n:] + [0] * n


def word_value(w: Word, values) -> int:
    return sum(bit_value(b, values) << i for i, b in enumerate(w))


def is_const(w: Word) -> bool:
    return all(isinstance(b, int) for b in w)


def const_value(w: Word) -> int:
    return sum(int(b) << i for i, b in enumerate(w))


_BOOL3 = {
    "ternary": (lambda a, b, c: (a & b) | ((1 - a) & c), encode_ternary_select),
    "majority": (lambda a, b, c: int(a + b + c >= 2), encode_majority3),
    "md5_i": (lambda a, b, c: a ^ (b | (1 - c)), encode_md5_i_aux),
}


class WordBuilder:
    """Word-level helpers over an :class:`Assembler`."""

    def __init__(self, asm: Assembler, block_size: int):
        self.asm = asm
        self.block_size = block_size

    def xor(self, words: Sequence[Word], origin: str) -> Word:
        return [self.asm.materialize(xor_all(ws), origin) for ws in zip(*words)]

    def bool3(self, kind: str, x: Word, y: Word, z: Word, origin: str) -> Word:
        if kind == "xor3":
            return self.xor([x, y, z], origin)
        fn, encoder = _BOOL3[kind]
        return [self._bool3_bit(fn, encoder, a, b, c, origin) for a, b, c in zip(x, y, z)]

    def _bool3_bit(self, fn, encoder, a, b, c, origin: str):
        ins = (a, b, c)
        free = sorted({x.var for x in ins if isinstance(x, Literal)})
        table = {}
        for code in range(1 << len(free)):
            vals = {v: (code >> k) & 1 for k, v in enumerate(free)}
            table[code] = fn(*(bit_value(x, vals) for x in ins))
        outs = set(table.values())
        if len(outs) == 1:
            return outs.pop()
        for k, v in enumerate(free):
            col = {code: (code >> k) & 1 for code in table}
            if all(table[c] == col[c] for c in table):
                return Literal(v)
            if all(table[c] != col[c] for c in table):
                return Literal(v, True)
        r = Literal(self.asm.new_var(lambda vals, ins=ins: fn(*(bit_value(x, vals) for x in ins)), origin))
        self.asm.emit(encoder(a, b, c, r), origin)
        return r

    def add(self, operands: Sequence[Word], origin: str, output: int | None = None) -> Word:
        """``sum(operands) mod 2**32`` as a new word (or the given constant)."""
        const = 0
        words = []
        for w in operands:
            if is_const(w):
                const = (const + const_value(w)) & M32
            else:
                words.append(list(w))
        total_fn = (lambda vals, ws=tuple(words), k=const: (sum(word_value(w, vals) for w in ws) + k) & M32)
        if not words:
            if output is not None and output != const:
                self.asm.builder.add_offset(1)
            return const_word(const)
        inputs: list = words + ([const] if const else [])
        if len(inputs) == 1:
            inputs.append(0)
        if output is None:
            # bit 0 is computed first by the witness plan and caches the sum
            cell = [0]

            def bit(vals, i):
                if i == 0:
                    cell[0] = total_fn(vals)
                return (cell[0] >> i) & 1

            out = [Literal(self.asm.new_var(lambda vals, i=i: bit(vals, i), origin)) for i in range(32)]
        else:
            out = const_word(output)
        em = encode_modular_add(inputs, out if output is None else output, self.block_size, 32)
        self.asm.emit(em, origin + "-carry", VarKind.CARRY)
        return out


def message_bits(asm: Assembler, n_bytes: int, big_endian: bool) -> tuple[list[Word], list[int]]:
    """Sixteen block words: ``n_bytes`` unknown message bytes, then padding constants."""
    if not 0 <= n_bytes <= 55:
        raise ValueError("single-block messages hold 0..55 bytes")
    pad = ref.pad_message(bytes(n_bytes), big_endian)
    byte_bits: list[list] = []
    mvars: list[int] = []
    for k in range(64):
        if k < n_bytes:
            vs = [asm.input_var(f"msg[{8 * k + j}]", VarKind.CIRCUIT_INPUT, "message") for j in range(8)]
            mvars.extend(vs)
            byte_bits.append([Literal(v) for v in vs])
        else:
            byte_bits.append([(pad[k] >> j) & 1 for j in range(8)])
    words = []
    for w in range(16):
        order = [4 * w + 3 - i for i in range(4)] if big_endian else [4 * w + i for i in range(4)]
        words.append(sum((byte_bits[k] for k in order), []))
    return words, mvars


@dataclass
class HashInstance:
    asm: Assembler
    message_vars: list[int]
    steps: int


def _targets(digest: bytes, iv: Sequence[int], big_endian: bool) -> list[int]:
    fmt = ">" if big_endian else "<"
    h = struct.unpack(f"{fmt}{len(iv)}I", digest)
    return [(x - y) & M32 for x, y in zip(h, iv)]


def _check_digest(digest: bytes, size: int) -> None:
    if len(digest) != size:
        raise ValueError(f"digest must be {size} bytes")


def build_md5_instance(digest: bytes, steps: int = 64, options: HashOptions | None = None) -> HashInstance:
    opts = options or HashOptions()
    _check_digest(digest, 16)
    if not 1 <= steps <= 64:
        raise ValueError("MD5 has 64 steps")
    asm = Assembler(opts.clause_length_limit)
    wb = WordBuilder(asm, opts.block_size)
    m, mvars = message_bits(asm, opts.message_bytes, big_endian=False)
    final = _targets(digest, ref.MD5_IV, big_endian=False)
    a, b, c, d = (const_word(x) for x in ref.MD5_IV)
    kinds = ["ternary"] * 16 + ["ternary"] * 16 + ["xor3"] * 16 + ["md5_i"] * 16
    fixed = [False] * 4
    for i in range(steps):
        if i < 16:
            f = wb.bool3("ternary", b, c, d, "boolean")
        elif i < 32:
            f = wb.bool3("ternary", d, b, c, "boolean")
        elif i < 48:
            f = wb.bool3("xor3", b, c, d, "boolean")
        else:
            f = wb.bool3(kinds[i], c, b, d, "boolean")
        t = wb.add([a, f, const_word(ref.MD5_K[i]), m[ref.md5_index(i)]], "addition")
        later = steps - 1 - i
        pos = (1, 2, 3, 0)[later] if later < 4 else None
        out = final[pos] if pos is not None else None
        if pos is not None:
            fixed[pos] = True
        nb = wb.add([b, rotl(t, ref.MD5_S[i])], "addition", output=out)
        a, b, c, d = d, nb, b, c
    for pos, w in enumerate((a, b, c, d)):
        if not fixed[pos] and const_value(w) != final[pos]:
            asm.builder.add_offset(1)
    return HashInstance(asm, mvars, steps)


def build_sha1_instance(digest: bytes, steps: int = 80, options: HashOptions | None = None) -> HashInstance:
    opts = options or HashOptions()
    _check_digest(digest, 20)
    if not 1 <= steps <= 80:
        raise ValueError("SHA-1 has 80 steps")
    asm = Assembler(opts.clause_length_limit)
    wb = WordBuilder(asm, opts.block_size)
    w, mvars = message_bits(asm, opts.message_bytes, big_endian=True)
    for t in range(16, steps):
        w.append(rotl(wb.xor([w[t - 3], w[t - 8], w[t - 14], w[t - 16]], "schedule"), 1))
    final = _targets(digest, ref.SHA1_IV, big_endian=True)
    a, b, c, d, e = (const_word(x) for x in ref.SHA1_IV)
    fixed = [False] * 5
    for t in range(steps):
        kind = "ternary" if t < 20 else "majority" if 40 <= t < 60 else "xor3"
        f = wb.bool3(kind, b, c, d, "boolean")
        later = steps - 1 - t
        out = None
        if later < 5:
            # final a, b are raw step outputs; c, d, e are rotated by 30
            fixed[later] = True
            out = final[later] if later < 2 else ref.rotr(final[later], 30)
        tmp = wb.add([rotl(a, 5), f, e, const_word(ref.SHA1_K[t // 20]), w[t]], "addition", output=out)
        a, b, c, d, e = tmp, a, rotl(b, 30), c, d
    for pos, x in enumerate((a, b, c, d, e)):
        if not fixed[pos] and const_value(x) != final[pos]:
            asm.builder.add_offset(1)
    return HashInstance(asm, mvars, steps)


def big_sigma(wb: WordBuilder, x: Word, r: tuple[int, int, int], origin: str) -> Word:
    return wb.xor([rotr(x, r[0]), rotr(x, r[1]), rotr(x, r[2])], origin)


def small_sigma(wb: WordBuilder, x: Word, r: tuple[int, int, int], origin: str) -> Word:
    return wb.xor([rotr(x, r[0]), rotr(x, r[1]), shr(x, r[2])], origin)


def build_sha256_instance(digest: bytes, steps: int = 64, options: HashOptions | None = None) -> HashInstance:
    opts = options or HashOptions()
    _check_digest(digest, 32)
    if not 1 <= steps <= 64:
        raise ValueError("SHA-256 has 64 steps")
    asm = Assembler(opts.clause_length_limit)
    wb = WordBuilder(asm, opts.block_size)
    w, mvars = message_bits(asm, opts.message_bytes, big_endian=True)
    for t in range(16, steps):
        s1 = small_sigma(wb, w[t - 2], (17, 19, 10), "schedule")
        s0 = small_sigma(wb, w[t - 15], (7, 18, 3), "schedule")
        w.append(wb.add([s1, w[t - 7], s0, w[t - 16]], "schedule"))
    final = _targets(digest, ref.SHA256_IV, big_endian=True)
    a, b, c, d, e, f, g, h = (const_word(x) for x in ref.SHA256_IV)
    fixed = [False] * 8
    for t in range(steps):
        S1 = big_sigma(wb, e, (6, 11, 25), "sigma")
        ch = wb.bool3("ternary", e, f, g, "boolean")
        S0 = big_sigma(wb, a, (2, 13, 22), "sigma")
        maj = wb.bool3("majority", a, b, c, "boolean")
        k = const_word(ref.SHA256_K[t])
        later = steps - 1 - t
        out_a = out_e = None
        if later < 4:
            fixed[later] = fixed[4 + later] = True
            out_a, out_e = final[later], final[4 + later]
        new_e = wb.add([d, h, S1, ch, k, w[t]], "addition", output=out_e)
        new_a = wb.add([h, S1, ch, k, w[t], S0, maj], "addition", output=out_a)
        a, b, c, d, e, f, g, h = new_a, a, b, c, new_e, e, f, g
    for pos, x in enumerate((a, b, c, d, e, f, g, h)):
        if not fixed[pos] and const_value(x) != final[pos]:
            asm.builder.add_offset(1)
    return HashInstance(asm, mvars, steps)
