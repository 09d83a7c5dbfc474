"""An 8-bit, one-round miniature of the AES round small enough to enumerate.

The state is two GF(16) nibbles in the tower representation of
:mod:`.tower`. One round is: add the key, invert each nibble, mix the
nibbles (``hi ^= lo``), add a round key obtained from the key by swapping
nibbles and adding a constant. The nonlinear step is the GF(16) inverse
fragment, the rest is the same XOR-form plumbing the AES builder uses, so
the instance stays within the 26-variable enumeration bound.
"""
from __future__ import annotations

from dataclasses import dataclass

from ..compile import Assembler, XorForm
from ..patterns import Literal, bit_value, encode_gf16_inv
from ..qubo_model import VarKind
from .tower import gf16_inv

TOY_RCON = 0x1B
TOY_BITS = 8


def toy_round_key(key: int) -> int:
    return (((key << 4) | (key >> 4)) & 0xFF) ^ TOY_RCON


def toy_encrypt(key: int, plaintext: int) -> int:
    u = plaintext ^ key
    hi, lo = gf16_inv(u & 15), gf16_inv(u >> 4)
    hi ^= lo
    return (hi | lo << 4) ^ toy_round_key(key)


def toy_preimages(plaintext: int, ciphertext: int) -> set[int]:
    return {k for k in range(256) if toy_encrypt(k, plaintext) == ciphertext}


@dataclass
class ToyInstance:
    asm: Assembler
    key_vars: list[int]


def build_toy_instance(plaintext: int, ciphertext: int, clause_length_limit: int | None = None) -> ToyInstance:
    """Zero energy iff the key maps ``plaintext`` to ``ciphertext``."""
    if not (0 <= plaintext < 256 and 0 <= ciphertext < 256):
        raise ValueError("toy blocks are single bytes")
    asm = Assembler(clause_length_limit)
    key = [asm.input_var(f"key[{i}]", VarKind.KEY_BIT, "key") for i in range(TOY_BITS)]
    # whitening leaves single-variable forms, i.e. literals
    u = [Literal(key[i], bool((plaintext >> i) & 1)) for i in range(TOY_BITS)]
    nib = []
    for half in (u[:4], u[4:]):
        def inv(values, half=half):
            return gf16_inv(sum(bit_value(b, values) << i for i, b in enumerate(half)))

        z = [asm.new_var(lambda v, i=i, f=inv: (f(v) >> i) & 1, "sbox.inv") for i in range(4)]
        asm.emit(encode_gf16_inv(half, [Literal(v) for v in z]), "sbox.inv")
        nib.append([XorForm((v,)) for v in z])
    hi = [a ^ b for a, b in zip(nib[0], nib[1])]
    state = hi + nib[1]
    rk = [XorForm((key[(i + 4) % 8],), (TOY_RCON >> i) & 1) for i in range(TOY_BITS)]
    for i in range(TOY_BITS):
        asm.assert_xor(state[i] ^ rk[i], (ciphertext >> i) & 1, "output")
    return ToyInstance(asm, key)
