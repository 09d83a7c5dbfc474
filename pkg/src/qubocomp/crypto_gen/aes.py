"""AES-128/192/256 key-recovery instances (encryption and decryption circuits).

Everything outside the S-box nonlinear core stays an affine GF(2) form over
registry variables: ShiftRows is a renaming, MixColumns, AddRoundKey and the
key schedule are XORs of forms. A form only becomes a variable when a
fragment needs a literal (the S-box inputs, the GF(2^2) operands) or when a
policy asks for it to keep forms short.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from ..compile import Assembler, XorForm, xor_all
from ..patterns import Literal, bit_value, encode_gf4_mult, encode_gf16_inv
from ..qubo_model import VarKind
from .reference import AES_ROUNDS, INV_MIX, MIX, RCON, gmul
from .tower import TowerBasis, default_basis, gf4_mul, gf16_inv, mat_from_function

Byte = list  # eight XorForm, least significant bit first


@dataclass(frozen=True)
class AesOptions:
    # materialize every S-box output bit: shorter MixColumns forms, more variables
    materialize_sbox_output: bool = False
    # round-key bits whose form has more variables than this become variables
    key_form_limit: int | None = None
    clause_length_limit: int | None = None


def const_byte(v: int) -> Byte:
    return [XorForm((), (v >> i) & 1) for i in range(8)]


def xor_bytes(a: Byte, b: Byte) -> Byte:
    return [x ^ y for x, y in zip(a, b)]


def linear_byte(rows, const: int, b: Byte) -> Byte:
    return [xor_all(b[j] for j in range(8) if (r >> j) & 1) ^ ((const >> i) & 1) for i, r in enumerate(rows)]


@lru_cache(maxsize=None)
def _mul_rows(c: int) -> tuple[int, ...]:
    return mat_from_function(lambda x: gmul(c, x), 8, 8)


def mix_columns_forms(state: list[Byte], matrix=MIX) -> list[Byte]:
    out = []
    for c in range(4):
        col = state[4 * c: 4 * c + 4]
        for r in range(4):
            acc = const_byte(0)
            for k in range(4):
                acc = xor_bytes(acc, linear_byte(_mul_rows(matrix[r][k]), 0, col[k]))
            out.append(acc)
    return out


def shift_rows_forms(s: list[Byte]) -> list[Byte]:
    return [s[4 * ((c + r) % 4) + r] for c in range(4) for r in range(4)]


def inv_shift_rows_forms(s: list[Byte]) -> list[Byte]:
    return [s[4 * ((c - r) % 4) + r] for c in range(4) for r in range(4)]


class SboxEncoder:
    """Emits tower-field S-boxes into an :class:`Assembler`."""

    def __init__(self, asm: Assembler, basis: TowerBasis | None = None, materialize_output: bool = False):
        self.asm = asm
        self.basis = basis or default_basis()
        self.materialize_output = materialize_output
        self._norm_sq = self.basis.norm_square_rows()
        self.count = 0

    # GF(2^2) operands are pairs of forms ---------------------------------
    def _gf4_mul(self, x, y, origin: str):
        asm = self.asm
        xl = [asm.materialize(f, origin + ".sum") for f in x]
        yl = [asm.materialize(f, origin + ".sum") for f in y]

        def prod(values, xl=xl, yl=yl):
            a = bit_value(xl[0], values) | bit_value(xl[1], values) << 1
            b = bit_value(yl[0], values) | bit_value(yl[1], values) << 1
            return gf4_mul(a, b)

        z = [asm.new_var(lambda v, i=i: (prod(v) >> i) & 1, origin + ".mul") for i in range(2)]
        asm.emit(encode_gf4_mult(xl, yl, [Literal(v) for v in z]), origin + ".mul")
        return [XorForm((v,)) for v in z]

    @staticmethod
    def _gf4_scale_n(m):
        # N * (m0 W + m1 W^2) with N = W^2: W^3 = 1, W^4 = W  -> (m0 + m1, m0)
        return [m[0] ^ m[1], m[0]]

    def _gf16_mul(self, a, b, origin: str):
        ah, al, bh, bl = a[:2], a[2:], b[:2], b[2:]
        hh = self._gf4_mul(ah, bh, origin)
        ll = self._gf4_mul(al, bl, origin)
        m = self._gf4_mul([p ^ q for p, q in zip(ah, al)], [p ^ q for p, q in zip(bh, bl)], origin)
        e = self._gf4_scale_n(m)
        return [hh[0] ^ e[0], hh[1] ^ e[1], ll[0] ^ e[0], ll[1] ^ e[1]]

    def _gf16_inv(self, d, origin: str):
        asm = self.asm
        dl = [asm.materialize(f, origin + ".norm") for f in d]

        def inv(values, dl=dl):
            return gf16_inv(sum(bit_value(b, values) << i for i, b in enumerate(dl)))

        z = [asm.new_var(lambda v, i=i: (inv(v) >> i) & 1, origin + ".inv") for i in range(4)]
        asm.emit(encode_gf16_inv(dl, [Literal(v) for v in z]), origin + ".inv")
        return [XorForm((v,)) for v in z]

    def tower_inverse(self, a: list[XorForm], origin: str) -> list[XorForm]:
        """Inverse in the tower GF(256) of eight literal-valued forms."""
        ah, al = a[:4], a[4:]
        s = [p ^ q for p, q in zip(ah, al)]
        prod = self._gf16_mul(ah, al, origin)
        sq = [xor_all(s[j] for j in range(4) if (r >> j) & 1) for r in self._norm_sq]
        d = [p ^ q for p, q in zip(sq, prod)]
        di = self._gf16_inv(d, origin)
        return self._gf16_mul(di, al, origin) + self._gf16_mul(di, ah, origin)

    def sbox(self, x: Byte, origin: str = "sbox", inverse: bool = False) -> Byte:
        b = self.basis
        rows_in, c_in = b.inv_sbox_in if inverse else b.sbox_in
        rows_out, c_out = b.inv_sbox_out if inverse else b.sbox_out
        a = linear_byte(rows_in, c_in, x)
        a = [XorForm.of(self.asm.materialize(f, origin + ".in")) for f in a]
        y = linear_byte(rows_out, c_out, self.tower_inverse(a, origin))
        if self.materialize_output:
            y = [XorForm.of(self.asm.materialize(f, origin + ".out")) for f in y]
        self.count += 1
        return y


def _rot_word(w: list[Byte]) -> list[Byte]:
    return w[1:] + w[:1]


def key_schedule_forms(enc: SboxEncoder, key: list[Byte], rounds: int, form_limit: int | None) -> list[list[Byte]]:
    nk = len(key) // 4
    words = [key[4 * i: 4 * i + 4] for i in range(nk)]
    for i in range(nk, 4 * (rounds + 1)):
        t = list(words[i - 1])
        if i % nk == 0:
            t = [enc.sbox(b, "key-sbox") for b in _rot_word(t)]
            t[0] = xor_bytes(t[0], const_byte(RCON[i // nk - 1]))
        elif nk > 6 and i % nk == 4:
            t = [enc.sbox(b, "key-sbox") for b in t]
        w = [xor_bytes(p, q) for p, q in zip(words[i - nk], t)]
        if form_limit is not None:
            w = [[XorForm.of(enc.asm.materialize(f, "key-schedule")) if len(f) > form_limit else f for f in byte]
                 for byte in w]
        words.append(w)
    return [sum(words[4 * r: 4 * r + 4], []) for r in range(rounds + 1)]


@dataclass
class AesInstance:
    asm: Assembler
    key_vars: list[int]
    sboxes: int
    rounds: int


def build_aes_instance(key_bits: int, decrypt: bool, known_in: bytes, known_out: bytes,
                       rounds: int | None = None, options: AesOptions | None = None) -> AesInstance:
    """Zero energy iff the key maps ``known_in`` to ``known_out``.

    For encryption ``known_in`` is the plaintext; for decryption it is the
    ciphertext and the circuit runs the inverse cipher.
    """
    opts = options or AesOptions()
    full = AES_ROUNDS.get(key_bits)
    if full is None:
        raise ValueError("key size must be 128, 192 or 256")
    nr = full if rounds is None else rounds
    if not 1 <= nr <= full:
        raise ValueError(f"rounds must lie in 1..{full}")
    if len(known_in) != 16 or len(known_out) != 16:
        raise ValueError("AES blocks are 16 bytes")
    asm = Assembler(opts.clause_length_limit)
    key_vars = [asm.input_var(f"key[{i}]", VarKind.KEY_BIT, "key") for i in range(key_bits)]
    key = [[XorForm((key_vars[8 * k + j],)) for j in range(8)] for k in range(key_bits // 8)]
    enc = SboxEncoder(asm, materialize_output=opts.materialize_sbox_output)
    rks = key_schedule_forms(enc, key, nr, opts.key_form_limit)
    s = [xor_bytes(const_byte(known_in[i]), rks[nr if decrypt else 0][i]) for i in range(16)]
    if not decrypt:
        for r in range(1, nr + 1):
            s = shift_rows_forms([enc.sbox(b, "sbox") for b in s])
            if r != nr:
                s = mix_columns_forms(s)
            s = [xor_bytes(a, k) for a, k in zip(s, rks[r])]
    else:
        for r in range(nr - 1, -1, -1):
            s = [enc.sbox(b, "sbox", inverse=True) for b in inv_shift_rows_forms(s)]
            s = [xor_bytes(a, k) for a, k in zip(s, rks[r])]
            if r != 0:
                s = mix_columns_forms(s, INV_MIX)
    for i in range(16):
        for j in range(8):
            asm.assert_xor(s[i][j], (known_out[i] >> j) & 1, "output")
    return AesInstance(asm, key_vars, enc.count, nr)
