"""Tower-field representation of GF(2^8) used by the S-box encoding.

GF(4) uses the normal basis (W, W^2); an element is ``b0 + 2*b1`` with b0 the
W coefficient, so 1 is ``3``. GF(16) = GF(4)[Z]/(Z^2 + Z + N) with N = W^2,
stored as ``high | low << 2`` over the normal basis (Z^4, Z). GF(256) repeats
the construction over GF(16) with a scalar ``lam`` and basis (Y^16, Y).
The GF(4) product and GF(16) inverse agree bit for bit with the zero
tables of the penalty polynomials in :mod:`qubocomp.patterns`.

The change of basis from the AES polynomial basis is derived, not copied:
for every usable ``lam`` and every root ``beta`` of x^8+x^4+x^3+x+1 the
matrices are built and the sparsest combination is kept. The composite is
then checked against the S-box table on all 256 inputs.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .reference import INV_SBOX, SBOX, affine

GF4_ONE = 3
GF16_ONE = 15
GF256_ONE = 255
GF4_N = 2  # W^2

_GF4 = ((0, 0, 0, 0), (0, 2, 3, 1), (0, 3, 1, 2), (0, 1, 2, 3))


def gf4_mul(a: int, b: int) -> int:
    return _GF4[a][b]


def gf16_mul(a: int, b: int) -> int:
    ah, al, bh, bl = a & 3, a >> 2, b & 3, b >> 2
    e = gf4_mul(GF4_N, gf4_mul(ah ^ al, bh ^ bl))
    return (gf4_mul(ah, bh) ^ e) | ((gf4_mul(al, bl) ^ e) << 2)


_GF16_INV = tuple(0 if a == 0 else next(b for b in range(16) if gf16_mul(a, b) == GF16_ONE) for a in range(16))


def gf16_inv(a: int) -> int:
    return _GF16_INV[a]


def gf256_mul(a: int, b: int, lam: int) -> int:
    ah, al, bh, bl = a & 15, a >> 4, b & 15, b >> 4
    e = gf16_mul(lam, gf16_mul(ah ^ al, bh ^ bl))
    return (gf16_mul(ah, bh) ^ e) | ((gf16_mul(al, bl) ^ e) << 4)


def gf256_norm_term(ah: int, al: int, lam: int) -> int:
    """``d = lam*(ah+al)^2 + ah*al``, the GF(16) value inverted on the way."""
    s = ah ^ al
    return gf16_mul(lam, gf16_mul(s, s)) ^ gf16_mul(ah, al)


def gf256_inv(a: int, lam: int) -> int:
    ah, al = a & 15, a >> 4
    di = gf16_inv(gf256_norm_term(ah, al, lam))
    return gf16_mul(di, al) | (gf16_mul(di, ah) << 4)


# --------------------------------------------------------------------------- GF(2) matrices
# A matrix is a tuple of row masks: output bit r = parity(rows[r] & x).

def mat_apply(rows: tuple[int, ...], x: int) -> int:
    return sum((bin(r & x).count("1") & 1) << i for i, r in enumerate(rows))


def mat_from_columns(cols: list[int], n: int) -> tuple[int, ...]:
    return tuple(sum(((c >> r) & 1) << j for j, c in enumerate(cols)) for r in range(n))


def mat_from_function(fn, n_in: int, n_out: int) -> tuple[int, ...]:
    return mat_from_columns([fn(1 << j) for j in range(n_in)], n_out)


def mat_mul(a: tuple[int, ...], b: tuple[int, ...], n: int) -> tuple[int, ...]:
    return mat_from_function(lambda x: mat_apply(a, mat_apply(b, x)), n, len(a))


def mat_inv(rows: tuple[int, ...]) -> tuple[int, ...] | None:
    n = len(rows)
    aug = [(r, 1 << i) for i, r in enumerate(rows)]
    for col in range(n):
        piv = next((i for i in range(col, n) if (aug[i][0] >> col) & 1), None)
        if piv is None:
            return None
        aug[col], aug[piv] = aug[piv], aug[col]
        for i in range(n):
            if i != col and (aug[i][0] >> col) & 1:
                aug[i] = (aug[i][0] ^ aug[col][0], aug[i][1] ^ aug[col][1])
    return tuple(a[1] for a in aug)


def mat_weight(rows: tuple[int, ...]) -> int:
    return sum(bin(r).count("1") for r in rows)


def _usable_lams() -> list[int]:
    out = []
    for lam in range(1, 16):
        # Y^2 + Y + lam irreducible over GF(16) iff it has no root there
        if all(gf16_mul(y, y) ^ y ^ lam for y in range(16)):
            out.append(lam)
    return out


def _pow(a: int, e: int, lam: int) -> int:
    r = GF256_ONE
    for _ in range(e):
        r = gf256_mul(r, a, lam)
    return r


@dataclass(frozen=True)
class TowerBasis:
    lam: int
    beta: int
    to_tower: tuple[int, ...]     # AES polynomial basis -> tower
    from_tower: tuple[int, ...]
    affine: tuple[int, ...]       # linear part of the AES affine map

    # forward S-box: y = out_rows * inv_tower(in_rows * x) ^ 0x63
    @property
    def sbox_in(self) -> tuple[tuple[int, ...], int]:
        return self.to_tower, 0

    @property
    def sbox_out(self) -> tuple[tuple[int, ...], int]:
        return mat_mul(self.affine, self.from_tower, 8), 0x63

    # inverse S-box: x = from_tower * inv_tower(to_tower * affine^-1 * (y ^ 0x63))
    @property
    def inv_sbox_in(self) -> tuple[tuple[int, ...], int]:
        rows = mat_mul(self.to_tower, mat_inv(self.affine), 8)
        return rows, mat_apply(rows, 0x63)

    @property
    def inv_sbox_out(self) -> tuple[tuple[int, ...], int]:
        return self.from_tower, 0

    def norm_square_rows(self) -> tuple[int, ...]:
        """Linear map s -> lam * s^2 on GF(16)."""
        return mat_from_function(lambda s: gf16_mul(self.lam, gf16_mul(s, s)), 4, 4)

    def sbox(self, x: int, inverse: bool = False) -> int:
        rows_in, c_in = self.inv_sbox_in if inverse else self.sbox_in
        rows_out, c_out = self.inv_sbox_out if inverse else self.sbox_out
        return mat_apply(rows_out, gf256_inv(mat_apply(rows_in, x) ^ c_in, self.lam)) ^ c_out

    def validate(self) -> None:
        for x in range(256):
            if self.sbox(x) != SBOX[x] or self.sbox(x, inverse=True) != INV_SBOX[x]:
                raise AssertionError(f"tower S-box disagrees with the table at {x:#04x}")

    def cost(self) -> int:
        return sum(mat_weight(m) for m, _ in (self.sbox_in, self.sbox_out, self.inv_sbox_in, self.inv_sbox_out))


@lru_cache(maxsize=None)
def candidate_bases() -> tuple[TowerBasis, ...]:
    aff = mat_from_function(lambda b: affine(b) ^ 0x63, 8, 8)
    out = []
    for lam in _usable_lams():
        for beta in range(2, 256):
            # x^8 + x^4 + x^3 + x + 1 evaluated at beta
            v = 0
            for e in (8, 4, 3, 1, 0):
                v ^= _pow(beta, e, lam)
            if v:
                continue
            cols = [_pow(beta, i, lam) for i in range(8)]
            to_t = mat_from_columns(cols, 8)
            inv = mat_inv(to_t)
            if inv is None:
                continue
            out.append(TowerBasis(lam, beta, to_t, inv, aff))
    return tuple(out)


@lru_cache(maxsize=None)
def default_basis() -> TowerBasis:
    """Sparsest validated basis (ties broken by smallest ``lam`` then ``beta``)."""
    best = min(candidate_bases(), key=lambda b: (b.cost(), b.lam, b.beta))
    best.validate()
    return best
