"""Bit-exact reference implementations of AES, MD5, SHA-1 and SHA-256.

These are the oracles for ciphertexts, digests and round traces. They accept
a reduced round/step count so that reduced builds have something to agree
with; the hashes then feed the truncated state forward exactly like the full
compression function does.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

# --------------------------------------------------------------------------- AES

AES_ROUNDS = {128: 10, 192: 12, 256: 14}
RCON = (0x01, 0x02, 0x04, 0x08, 0x10, 0x20, 0x40, 0x80, 0x1B, 0x36)


def gmul(a: int, b: int) -> int:
    """Product in GF(2^8) modulo x^8 + x^4 + x^3 + x + 1."""
    p = 0
    while b:
        if b & 1:
            p ^= a
        a <<= 1
        if a & 0x100:
            a ^= 0x11B
        b >>= 1
    return p


def ginv(a: int) -> int:
    if a == 0:
        return 0
    r = 1
    for _ in range(254):  # a^254
        r = gmul(r, a)
    return r


def affine(b: int) -> int:
    r = 0
    for i in range(8):
        bit = ((b >> i) ^ (b >> ((i + 4) % 8)) ^ (b >> ((i + 5) % 8)) ^ (b >> ((i + 6) % 8))
               ^ (b >> ((i + 7) % 8))) & 1
        r |= bit << i
    return r ^ 0x63


SBOX = tuple(affine(ginv(x)) for x in range(256))
INV_SBOX = tuple(SBOX.index(y) for y in range(256))


def _sub_word(w: list[int]) -> list[int]:
    return [SBOX[b] for b in w]


def key_expansion(key: bytes, rounds: int | None = None) -> list[list[int]]:
    """Round keys as 16-byte lists, ``rounds + 1`` of them."""
    nk = len(key) // 4
    if len(key) * 8 not in AES_ROUNDS:
        raise ValueError("AES key must be 16, 24 or 32 bytes")
    nr = AES_ROUNDS[len(key) * 8] if rounds is None else rounds
    words = [list(key[4 * i: 4 * i + 4]) for i in range(nk)]
    for i in range(nk, 4 * (nr + 1)):
        t = list(words[i - 1])
        if i % nk == 0:
            t = _sub_word(t[1:] + t[:1])
            t[0] ^= RCON[i // nk - 1]
        elif nk > 6 and i % nk == 4:
            t = _sub_word(t)
        words.append([a ^ b for a, b in zip(words[i - nk], t)])
    return [sum(words[4 * r: 4 * r + 4], []) for r in range(nr + 1)]


def shift_rows(s: list[int]) -> list[int]:
    # column-major state: byte (row r, column c) sits at index 4c + r
    return [s[4 * ((c + r) % 4) + r] for c in range(4) for r in range(4)]


def inv_shift_rows(s: list[int]) -> list[int]:
    return [s[4 * ((c - r) % 4) + r] for c in range(4) for r in range(4)]


MIX = ((2, 3, 1, 1), (1, 2, 3, 1), (1, 1, 2, 3), (3, 1, 1, 2))
INV_MIX = ((14, 11, 13, 9), (9, 14, 11, 13), (13, 9, 14, 11), (11, 13, 9, 14))


def mix_columns(s: list[int], m=MIX) -> list[int]:
    out = []
    for c in range(4):
        col = s[4 * c: 4 * c + 4]
        for r in range(4):
            v = 0
            for k in range(4):
                v ^= gmul(m[r][k], col[k])
            out.append(v)
    return out


def add_round_key(s: list[int], k: list[int]) -> list[int]:
    return [a ^ b for a, b in zip(s, k)]


@dataclass
class Trace:
    output: bytes
    states: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)


def aes_encrypt(key: bytes, block: bytes, rounds: int | None = None, trace: bool = False):
    rks = key_expansion(key, rounds)
    nr = len(rks) - 1
    s = add_round_key(list(block), rks[0])
    states = [s]
    for r in range(1, nr + 1):
        s = shift_rows([SBOX[b] for b in s])
        if r != nr:
            s = mix_columns(s)
        s = add_round_key(s, rks[r])
        states.append(s)
    out = bytes(s)
    return Trace(out, states, {"round_keys": rks}) if trace else out


def aes_decrypt(key: bytes, block: bytes, rounds: int | None = None, trace: bool = False):
    rks = key_expansion(key, rounds)
    nr = len(rks) - 1
    s = add_round_key(list(block), rks[nr])
    states = [s]
    for r in range(nr - 1, -1, -1):
        s = [INV_SBOX[b] for b in inv_shift_rows(s)]
        s = add_round_key(s, rks[r])
        if r != 0:
            s = mix_columns(s, INV_MIX)
        states.append(s)
    out = bytes(s)
    return Trace(out, states, {"round_keys": rks}) if trace else out


# --------------------------------------------------------------------------- hashing helpers

M32 = 0xFFFFFFFF


def rotl(x: int, n: int) -> int:
    n %= 32
    return ((x << n) | (x >> (32 - n))) & M32


def rotr(x: int, n: int) -> int:
    return rotl(x, 32 - n)


def pad_message(msg: bytes, big_endian: bool) -> bytes:
    """Single-block padding; the message must fit (at most 55 bytes)."""
    if len(msg) > 55:
        raise ValueError("only single-block messages (at most 55 bytes) are supported")
    bitlen = (8 * len(msg)).to_bytes(8, "big" if big_endian else "little")
    return msg + b"\x80" + b"\x00" * (55 - len(msg)) + bitlen


# --------------------------------------------------------------------------- MD5

MD5_IV = (0x67452301, 0xEFCDAB89, 0x98BADCFE, 0x10325476)
MD5_S = ([7, 12, 17, 22] * 4 + [5, 9, 14, 20] * 4 + [4, 11, 16, 23] * 4 + [6, 10, 15, 21] * 4)
MD5_K = tuple(int(abs(math.sin(i + 1)) * 2 ** 32) & M32 for i in range(64))


def md5_index(i: int) -> int:
    if i < 16:
        return i
    if i < 32:
        return (5 * i + 1) % 16
    if i < 48:
        return (3 * i + 5) % 16
    return (7 * i) % 16


def md5_f(i: int, b: int, c: int, d: int) -> int:
    if i < 16:
        return (b & c) | (~b & d)
    if i < 32:
        return (d & b) | (~d & c)
    if i < 48:
        return b ^ c ^ d
    return c ^ (b | (~d & M32))


def md5_compress(block: bytes, steps: int = 64, iv=MD5_IV, trace: bool = False):
    m = struct.unpack("<16I", block)
    a, b, c, d = iv
    states = []
    for i in range(steps):
        f = md5_f(i, b, c, d) & M32
        t = (a + f + MD5_K[i] + m[md5_index(i)]) & M32
        a, b, c, d = d, (b + rotl(t, MD5_S[i])) & M32, b, c
        states.append((a, b, c, d))
    h = tuple((x + y) & M32 for x, y in zip(iv, (a, b, c, d)))
    out = struct.pack("<4I", *h)
    return Trace(out, states) if trace else out


def md5(msg: bytes, steps: int = 64) -> bytes:
    return md5_compress(pad_message(msg, big_endian=False), steps)


# --------------------------------------------------------------------------- SHA-1

SHA1_IV = (0x67452301, 0xEFCDAB89, 0x98BADCFE, 0x10325476, 0xC3D2E1F0)
SHA1_K = (0x5A827999, 0x6ED9EBA1, 0x8F1BBCDC, 0xCA62C1D6)


def sha1_schedule(m: tuple[int, ...], steps: int = 80) -> list[int]:
    w = list(m)
    for t in range(16, steps):
        w.append(rotl(w[t - 3] ^ w[t - 8] ^ w[t - 14] ^ w[t - 16], 1))
    return w


def sha1_f(t: int, b: int, c: int, d: int) -> int:
    if t < 20:
        return (b & c) | (~b & d)
    if 40 <= t < 60:
        return (b & c) | (b & d) | (c & d)
    return b ^ c ^ d


def sha1_compress(block: bytes, steps: int = 80, iv=SHA1_IV, trace: bool = False):
    w = sha1_schedule(struct.unpack(">16I", block), steps)
    a, b, c, d, e = iv
    states = []
    for t in range(steps):
        tmp = (rotl(a, 5) + (sha1_f(t, b, c, d) & M32) + e + SHA1_K[t // 20] + w[t]) & M32
        a, b, c, d, e = tmp, a, rotl(b, 30), c, d
        states.append((a, b, c, d, e))
    h = tuple((x + y) & M32 for x, y in zip(iv, (a, b, c, d, e)))
    out = struct.pack(">5I", *h)
    return Trace(out, states, {"schedule": w}) if trace else out


def sha1(msg: bytes, steps: int = 80) -> bytes:
    return sha1_compress(pad_message(msg, big_endian=True), steps)


# --------------------------------------------------------------------------- SHA-256

SHA256_IV = (0x6A09E667, 0xBB67AE85, 0x3C6EF372, 0xA54FF53A, 0x510E527F, 0x9B05688C, 0x1F83D9AB, 0x5BE0CD19)
SHA256_K = (
    0x428A2F98, 0x71374491, 0xB5C0FBCF, 0xE9B5DBA5, 0x3956C25B, 0x59F111F1, 0x923F82A4, 0xAB1C5ED5,
    0xD807AA98, 0x12835B01, 0x243185BE, 0x550C7DC3, 0x72BE5D74, 0x80DEB1FE, 0x9BDC06A7, 0xC19BF174,
    0xE49B69C1, 0xEFBE4786, 0x0FC19DC6, 0x240CA1CC, 0x2DE92C6F, 0x4A7484AA, 0x5CB0A9DC, 0x76F988DA,
    0x983E5152, 0xA831C66D, 0xB00327C8, 0xBF597FC7, 0xC6E00BF3, 0xD5A79147, 0x06CA6351, 0x14292967,
    0x27B70A85, 0x2E1B2138, 0x4D2C6DFC, 0x53380D13, 0x650A7354, 0x766A0ABB, 0x81C2C92E, 0x92722C85,
    0xA2BFE8A1, 0xA81A664B, 0xC24B8B70, 0xC76C51A3, 0xD192E819, 0xD6990624, 0xF40E3585, 0x106AA070,
    0x19A4C116, 0x1E376C08, 0x2748774C, 0x34B0BCB5, 0x391C0CB3, 0x4ED8AA4A, 0x5B9CCA4F, 0x682E6FF3,
    0x748F82EE, 0x78A5636F, 0x84C87814, 0x8CC70208, 0x90BEFFFA, 0xA4506CEB, 0xBEF9A3F7, 0xC67178F2,
)


def big_sigma0(x: int) -> int:
    return rotr(x, 2) ^ rotr(x, 13) ^ rotr(x, 22)


def big_sigma1(x: int) -> int:
    return rotr(x, 6) ^ rotr(x, 11) ^ rotr(x, 25)


def small_sigma0(x: int) -> int:
    return rotr(x, 7) ^ rotr(x, 18) ^ (x >> 3)


def small_sigma1(x: int) -> int:
    return rotr(x, 17) ^ rotr(x, 19) ^ (x >> 10)


def sha256_schedule(m: tuple[int, ...], steps: int = 64) -> list[int]:
    w = list(m)
    for t in range(16, steps):
        w.append((small_sigma1(w[t - 2]) + w[t - 7] + small_sigma0(w[t - 15]) + w[t - 16]) & M32)
    return w


def sha256_compress(block: bytes, steps: int = 64, iv=SHA256_IV, trace: bool = False):
    w = sha256_schedule(struct.unpack(">16I", block), steps)
    a, b, c, d, e, f, g, h = iv
    states = []
    for t in range(steps):
        ch = (e & f) ^ (~e & g)
        maj = (a & b) ^ (a & c) ^ (b & c)
        t1 = (h + big_sigma1(e) + ch + SHA256_K[t] + w[t]) & M32
        t2 = (big_sigma0(a) + maj) & M32
        a, b, c, d, e, f, g, h = (t1 + t2) & M32, a, b, c, (d + t1) & M32, e, f, g
        states.append((a, b, c, d, e, f, g, h))
    hv = tuple((x + y) & M32 for x, y in zip(iv, (a, b, c, d, e, f, g, h)))
    out = struct.pack(">8I", *hv)
    return Trace(out, states, {"schedule": w}) if trace else out


def sha256(msg: bytes, steps: int = 64) -> bytes:
    return sha256_compress(pad_message(msg, big_endian=True), steps)


# --------------------------------------------------------------------------- dispatch

def reference_cipher(algorithm: str, inputs: dict, rounds: int | None = None) -> Trace:
    """Outputs plus intermediate trace for any supported algorithm.

    AES takes ``{"key": bytes, "plaintext": bytes}`` (or ``"ciphertext"`` for
    the decryption variants); hashes take ``{"message": bytes}``.
    """
    alg = algorithm.lower()
    if alg.startswith("aes"):
        key = inputs["key"]
        if alg.endswith("e"):
            return aes_encrypt(key, inputs["plaintext"], rounds, trace=True)
        return aes_decrypt(key, inputs["ciphertext"], rounds, trace=True)
    if alg not in ("md5", "sha1", "sha256"):
        raise ValueError(f"unknown algorithm {algorithm!r}")
    msg = inputs["message"]
    if alg == "md5":
        return md5_compress(pad_message(msg, False), rounds or 64, trace=True)
    if alg == "sha1":
        return sha1_compress(pad_message(msg, True), rounds or 80, trace=True)
    return sha256_compress(pad_message(msg, True), rounds or 64, trace=True)
