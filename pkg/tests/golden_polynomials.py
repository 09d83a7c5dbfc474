"""Hand-typed coefficient tables for the six closed-form patterns.

Keys are monomials written as ``"a*b"`` over the pattern's port names and
substitution names; ``"1"`` is the constant. These are transcribed term by
term and deliberately do not go through the package's polynomial parser.
"""

GF4_MULT = {
    "x0": 4, "z0": 3, "z1": 17,
    "x0*x1": -4, "x0*y1": -3, "x0*z0": -4, "x0*z1": 6,
    "x1*y0": 1, "x1*y1": 4, "x1*z0": 2, "x1*z1": -7,
    "y0*z0": -2, "y0*z1": -10, "y1*z0": 2, "y1*z1": -5, "z0*z1": -4,
    "s0*x0": 8, "s0*x1": -7, "s0*y0": 11, "s0*y1": -7, "s0*z0": -8,
    "s1*x0": -15, "s1*x1": 13, "s1*y0": 5, "s1*y1": 9, "s1*z0": 10, "s1*z1": -18,
    "s0": 11, "s1": 11, "s0*s1": -17,
}
GF4_NAMES = ("x0", "x1", "y0", "y1", "z0", "z1", "s0", "s1")

GF16_INV = {
    "x0": 32, "x1": -13, "x2": 31, "x3": 73, "z1": -3, "z3": -17,
    "x0*x1": 21, "x0*x2": -49, "x0*x3": -32, "x0*z0": 65, "x0*z1": 10, "x0*z2": -59, "x0*z3": -38,
    "x1*x2": -13, "x1*x3": -19, "x1*z0": 26, "x1*z1": 4, "x1*z2": -9, "x1*z3": 2,
    "x2*x3": 26, "x2*z0": -58, "x2*z1": -12, "x2*z2": 38, "x2*z3": 18,
    "x3*z0": -59, "x3*z1": -8, "x3*z3": -20,
    "z0*z1": 14, "z0*z2": -27, "z1*z2": -6, "z2*z3": 54,
    "s*x1": 32, "s*x3": -72, "s*z0": 59, "s*z1": 10, "s*z2": 59, "s*z3": 75,
    "s": -28, "1": 28,
}
GF16_NAMES = ("x0", "x1", "x2", "x3", "z0", "z1", "z2", "z3", "s")

TERNARY = {
    "x0": -2, "x1": -2, "x2": -1, "z": 5,
    "x0*x1": 3, "x0*x2": 1, "x0*z": -2, "x1*x2": 2, "x1*z": -4, "x2*z": -2,
    "s*x0": 4, "s*x1": 6, "s*x2": 2, "s*z": -4, "s": -2, "1": 2,
}
MAJORITY3 = {
    "z": 3, "x0*x1": 1, "x0*x2": 1, "x0*z": -2, "x1*x2": 1, "x1*z": -2, "x2*z": -2,
}
MD5_I = {
    "x0": -7, "x1": -8, "x2": -5, "z": -7,
    "x0*x1": 4, "x0*x2": 2, "x0*z": 4, "x1*x2": 3, "x1*z": 4, "x2*z": 2,
    "s*x0": 6, "s*x1": 8, "s*x2": 4, "s*z": 6, "s": -10, "1": 11,
}
# (x0 + x1 + x2 - z + 2s - 2)**2 expanded by hand
XOR3 = {
    "1": 4,
    "x0": -3, "x1": -3, "x2": -3, "z": 5, "s": -4,
    "x0*x1": 2, "x0*x2": 2, "x1*x2": 2,
    "x0*z": -2, "x1*z": -2, "x2*z": -2,
    "s*x0": 4, "s*x1": 4, "s*x2": 4, "s*z": -4,
}
THREE_INPUT_NAMES = ("x0", "x1", "x2", "z", "s")


def to_local(table: dict[str, int], names: tuple[str, ...]) -> dict[tuple[int, ...], int]:
    pos = {n: i for i, n in enumerate(names)}
    out = {}
    for mono, c in table.items():
        key = () if mono == "1" else tuple(sorted(pos[v] for v in mono.split("*")))
        out[key] = c
    return out
