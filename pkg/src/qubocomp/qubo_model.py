"""Sparse integer QUBO instances, the variable registry, and the ``.qubo`` file format.

An instance represents

    E(x) = sum_i c_i x_i + sum_{i<j} d_ij x_i x_j + h,   x in {0, 1}^n

with exact integer coefficients. Quadratic keys are stored upper-triangular
(``i < j``); zero coefficients are never stored.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from . import kernels

INT64_MAX = 2**63 - 1


class QuboError(Exception):
    """Base class for errors raised by this package."""


class DimensionError(QuboError, ValueError):
    pass


class MappingError(QuboError, KeyError):
    pass


class CoefficientOverflowError(QuboError, OverflowError):
    pass


class QuboParseError(QuboError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class VarKind(str, Enum):
    CIRCUIT_INPUT = "circuit-input"
    KEY_BIT = "key-bit"
    INTERMEDIATE = "intermediate"
    SUBSTITUTION = "substitution"
    CARRY = "carry"


@dataclass(frozen=True)
class VarEntry:
    name: str
    kind: VarKind
    origin: str = ""


class VarRegistry:
    """Ordered, name-unique list of variables; index ``i`` is the QUBO variable ``x_i``."""

    def __init__(self, entries: Iterable[VarEntry] = ()):
        self._entries: list[VarEntry] = []
        self._index: dict[str, int] = {}
        for e in entries:
            self.add(e.name, e.kind, e.origin)

    def add(self, name: str, kind: VarKind | str = VarKind.INTERMEDIATE, origin: str = "") -> int:
        if name in self._index:
            raise MappingError(f"duplicate variable name {name!r}")
        idx = len(self._entries)
        self._entries.append(VarEntry(name, VarKind(kind), origin))
        self._index[name] = idx
        return idx

    def lookup(self, key: str | int) -> int | VarEntry:
        """Name -> index, or index -> entry."""
        if isinstance(key, str):
            try:
                return self._index[key]
            except KeyError:
                raise MappingError(f"unknown variable {key!r}") from None
        try:
            return self._entries[key]
        except IndexError:
            raise MappingError(f"unknown variable index {key}") from None

    def index(self, name: str) -> int:
        return self.lookup(name)  # type: ignore[return-value]

    def name(self, idx: int) -> str:
        return self.lookup(idx).name  # type: ignore[union-attr]

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[VarEntry]:
        return iter(self._entries)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, VarRegistry) and self._entries == other._entries

    def kind_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for e in self._entries:
            out[e.kind.value] = out.get(e.kind.value, 0) + 1
        return out

    def origin_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for e in self._entries:
            out[e.origin] = out.get(e.origin, 0) + 1
        return out

    def to_json(self) -> dict[str, dict[str, str]]:
        return {
            str(i): {"name": e.name, "kind": e.kind.value, "origin": e.origin}
            for i, e in enumerate(self._entries)
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Mapping[str, str]]) -> "VarRegistry":
        reg = cls()
        for i in sorted(data, key=int):
            if int(i) != len(reg):
                raise QuboParseError(f"variable indices not contiguous at {i}")
            d = data[i]
            reg.add(d["name"], d.get("kind", VarKind.INTERMEDIATE), d.get("origin", ""))
        return reg


def _check(value: int) -> int:
    if not -INT64_MAX <= value <= INT64_MAX:
        raise CoefficientOverflowError(f"coefficient {value} exceeds 64-bit range")
    return value


@dataclass(frozen=True)
class QuboStats:
    num_vars: int
    density: Fraction
    max_abs_coeff: int
    offset: int
    num_linear: int = 0
    num_quadratic: int = 0

    def to_json(self) -> dict:
        return {
            "num_vars": self.num_vars,
            "density": float(self.density),
            "max_abs_coeff": self.max_abs_coeff,
            "offset": self.offset,
            "num_linear": self.num_linear,
            "num_quadratic": self.num_quadratic,
        }


class QuboInstance:
    """Immutable canonical QUBO. Build through :class:`QuboBuilder` or :meth:`from_terms`."""

    __slots__ = ("num_vars", "linear", "quadratic", "offset", "_prepared", "_arrays")

    def __init__(self, num_vars: int, linear: Mapping[int, int], quadratic: Mapping[tuple[int, int], int],
                 offset: int = 0):
        self.num_vars = int(num_vars)
        self.linear = {int(i): int(c) for i, c in linear.items() if c}
        self.quadratic = {}
        for (i, j), c in quadratic.items():
            if not c:
                continue
            if not i < j:
                raise ValueError(f"quadratic key {(i, j)} not upper-triangular")
            self.quadratic[(int(i), int(j))] = int(c)
        self.offset = int(offset)
        self._prepared = None
        self._arrays = None
        for i in self.linear:
            if not 0 <= i < self.num_vars:
                raise DimensionError(f"linear index {i} outside [0, {self.num_vars})")
        for i, j in self.quadratic:
            if not 0 <= i < j < self.num_vars:
                raise DimensionError(f"quadratic index {(i, j)} outside [0, {self.num_vars})")
        for c in (*self.linear.values(), *self.quadratic.values(), self.offset):
            _check(c)

    @classmethod
    def empty(cls, num_vars: int = 0) -> "QuboInstance":
        return cls(num_vars, {}, {}, 0)

    @classmethod
    def from_terms(cls, num_vars: int, terms: Mapping[tuple[int, ...], int]) -> "QuboInstance":
        """Build from monomials ``{(): h, (i,): c_i, (i, j): d_ij}`` in any index order."""
        b = QuboBuilder(num_vars)
        for key, c in terms.items():
            b.add_term(key, c)
        return b.build()

    def __setattr__(self, name, value):
        if name not in ("_arrays", "_prepared") and hasattr(self, "_arrays"):
            raise AttributeError("QuboInstance is immutable")
        object.__setattr__(self, name, value)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, QuboInstance)
            and self.num_vars == other.num_vars
            and self.offset == other.offset
            and self.linear == other.linear
            and self.quadratic == other.quadratic
        )

    def same_terms(self, other: "QuboInstance") -> bool:
        """Equality ignoring ``num_vars`` (trailing unused variables)."""
        return (self.offset, self.linear, self.quadratic) == (other.offset, other.linear, other.quadratic)

    def __repr__(self) -> str:
        return (f"QuboInstance(num_vars={self.num_vars}, linear={len(self.linear)}, "
                f"quadratic={len(self.quadratic)}, offset={self.offset})")

    def terms(self) -> dict[tuple[int, ...], int]:
        out: dict[tuple[int, ...], int] = {}
        if self.offset:
            out[()] = self.offset
        out.update({(i,): c for i, c in self.linear.items()})
        out.update(self.quadratic)
        return out

    def arrays(self):
        """``(lin[n], qi, qj, qw)`` as NumPy arrays (cached)."""
        if self._arrays is None:
            lin = np.zeros(self.num_vars, dtype=np.int64)
            for i, c in self.linear.items():
                lin[i] = c
            nq = len(self.quadratic)
            qi = np.fromiter((k[0] for k in self.quadratic), dtype=np.int32, count=nq)
            qj = np.fromiter((k[1] for k in self.quadratic), dtype=np.int32, count=nq)
            qw = np.fromiter(self.quadratic.values(), dtype=np.int64, count=nq)
            object.__setattr__(self, "_arrays", (lin, qi, qj, qw))
        return self._arrays

    def adjacency(self):
        """Symmetric CSR adjacency ``(indptr, indices, data)`` of the couplers."""
        _, qi, qj, qw = self.arrays()
        rows = np.concatenate([qi, qj]).astype(np.int64)
        cols = np.concatenate([qj, qi]).astype(np.int32)
        vals = np.concatenate([qw, qw])
        order = np.argsort(rows, kind="stable")
        counts = np.bincount(rows, minlength=self.num_vars)
        indptr = np.zeros(self.num_vars + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        return indptr, cols[order], vals[order].astype(np.int64)

    def energy(self, assignment: Sequence[int]) -> int:
        return energy(self, assignment)

    def energies(self, X) -> np.ndarray:
        """Energies of every row of the 0/1 matrix ``X`` (shape ``(samples, num_vars)``)."""
        X = np.ascontiguousarray(X, dtype=np.uint8)
        if X.ndim != 2 or X.shape[1] != self.num_vars:
            raise DimensionError(f"expected (samples, {self.num_vars}) array, got {X.shape}")
        if self._prepared is None:
            object.__setattr__(self, "_prepared", kernels.prepare_energy(*self.arrays()))
        return kernels.batch_energy_prepared(self._prepared, self.offset, X)

    def variables(self) -> set[int]:
        used = set(self.linear)
        for i, j in self.quadratic:
            used.add(i)
            used.add(j)
        return used

    def max_abs(self) -> int:
        return max(map(abs, (*self.linear.values(), *self.quadratic.values())), default=0)

    def add(self, fragment: "QuboInstance", var_map: Sequence[int] | Mapping[int, int] | None = None
            ) -> "QuboInstance":
        return add(self, fragment, var_map)

    def substitute_constant(self, v: int, bit: int) -> "QuboInstance":
        return substitute_constant(self, v, bit)

    def stats(self) -> QuboStats:
        return stats(self)

    def compact(self) -> tuple["QuboInstance", list[int]]:
        """Drop variables with no terms; returns the instance and ``new -> old`` index list."""
        keep = sorted(self.variables())
        remap = {old: new for new, old in enumerate(keep)}
        q = QuboInstance(
            len(keep),
            {remap[i]: c for i, c in self.linear.items()},
            {(remap[i], remap[j]): c for (i, j), c in self.quadratic.items()},
            self.offset,
        )
        return q, keep


class QuboBuilder:
    """Mutable accumulator for a :class:`QuboInstance`; single-threaded."""

    def __init__(self, num_vars: int = 0):
        self.num_vars = num_vars
        self.linear: dict[int, int] = {}
        self.quadratic: dict[tuple[int, int], int] = {}
        self.offset = 0

    def ensure(self, num_vars: int) -> None:
        if num_vars > self.num_vars:
            self.num_vars = num_vars

    def add_offset(self, c: int) -> None:
        self.offset += c

    def add_linear(self, i: int, c: int) -> None:
        if c:
            v = self.linear.get(i, 0) + c
            if v:
                self.linear[i] = v
            else:
                del self.linear[i]
            if i >= self.num_vars:
                self.num_vars = i + 1

    def add_quadratic(self, i: int, j: int, c: int) -> None:
        if i == j:
            self.add_linear(i, c)
            return
        if not c:
            return
        if i > j:
            i, j = j, i
        key = (i, j)
        v = self.quadratic.get(key, 0) + c
        if v:
            self.quadratic[key] = v
        else:
            del self.quadratic[key]
        if j >= self.num_vars:
            self.num_vars = j + 1

    def add_term(self, key: tuple[int, ...], c: int) -> None:
        if len(key) == 0:
            self.add_offset(c)
        elif len(key) == 1:
            self.add_linear(key[0], c)
        elif len(key) == 2:
            self.add_quadratic(key[0], key[1], c)
        else:
            raise ValueError(f"term {key} is not at most quadratic")

    def add_instance(self, q: QuboInstance, var_map: Sequence[int] | Mapping[int, int] | None = None) -> None:
        if var_map is None:
            self.ensure(q.num_vars)
            for i, c in q.linear.items():
                self.add_linear(i, c)
            for (i, j), c in q.quadratic.items():
                self.add_quadratic(i, j, c)
        else:
            m = _mapper(var_map, q)
            for i, c in q.linear.items():
                self.add_linear(m(i), c)
            for (i, j), c in q.quadratic.items():
                self.add_quadratic(m(i), m(j), c)
        self.offset += q.offset

    def build(self) -> QuboInstance:
        return QuboInstance(self.num_vars, self.linear, self.quadratic, self.offset)


def _mapper(var_map, fragment: QuboInstance):
    def m(i: int) -> int:
        try:
            return var_map[i]
        except (KeyError, IndexError):
            raise MappingError(f"fragment variable {i} is not mapped") from None

    for i in fragment.variables():
        m(i)
    return m


def energy(q: QuboInstance, a: Sequence[int]) -> int:
    """Exact integer energy of one binary assignment."""
    if len(a) != q.num_vars:
        raise DimensionError(f"assignment has length {len(a)}, instance has {q.num_vars} variables")
    e = q.offset
    for i, c in q.linear.items():
        if a[i]:
            e += c
    for (i, j), c in q.quadratic.items():
        if a[i] and a[j]:
            e += c
    return e


def add(q: QuboInstance, fragment: QuboInstance, var_map=None) -> QuboInstance:
    """Coefficient-wise sum of ``q`` and ``fragment`` relabelled through ``var_map``."""
    b = QuboBuilder(q.num_vars)
    b.add_instance(q)
    b.add_instance(fragment, var_map)
    return b.build()


def substitute_constant(q: QuboInstance, v: int, bit: int) -> QuboInstance:
    """Fix ``x_v = bit``; ``v`` keeps its index but no longer carries terms."""
    if not 0 <= v < q.num_vars:
        raise MappingError(f"unknown variable index {v}")
    if bit not in (0, 1):
        raise ValueError("bit must be 0 or 1")
    b = QuboBuilder(q.num_vars)
    b.offset = q.offset
    for i, c in q.linear.items():
        if i == v:
            if bit:
                b.add_offset(c)
        else:
            b.add_linear(i, c)
    for (i, j), c in q.quadratic.items():
        if v in (i, j):
            if bit:
                b.add_linear(j if i == v else i, c)
        else:
            b.add_quadratic(i, j, c)
    return b.build()


def stats(q: QuboInstance) -> QuboStats:
    """Density counts each coupler twice (symmetric matrix) and each linear term once, over n^2."""
    n = q.num_vars
    nnz = len(q.linear) + 2 * len(q.quadratic)
    density = Fraction(nnz, n * n) if n else Fraction(0)
    return QuboStats(n, density, q.max_abs(), q.offset, len(q.linear), len(q.quadratic))


# --------------------------------------------------------------------------- file format

def sidecar_path(path: str | Path) -> Path:
    p = Path(path)
    stem = p.name[:-5] if p.name.endswith(".qubo") else p.name
    return p.with_name(stem + ".meta.json")


def write_qubo(path: str | Path, q: QuboInstance, registry: VarRegistry | None = None,
               witness: Sequence[int] | None = None, comment: str | None = None,
               extra: Mapping | None = None) -> Path:
    """Write ``path`` (qbsolv text) and its ``.meta.json`` sidecar; returns the sidecar path."""
    path = Path(path)
    lines = []
    if comment:
        lines.extend(f"c {ln}" for ln in comment.splitlines())
    lines.append(f"c offset {q.offset}")
    lines.append(f"p qubo 0 {q.num_vars} {len(q.linear)} {len(q.quadratic)}")
    for i in sorted(q.linear):
        lines.append(f"{i} {i} {q.linear[i]}")
    for i, j in sorted(q.quadratic):
        lines.append(f"{i} {j} {q.quadratic[(i, j)]}")
    path.write_text("\n".join(lines) + "\n")

    st = stats(q)
    meta = {
        "num_vars": q.num_vars,
        "offset": q.offset,
        "density": float(st.density),
        "max_abs_coeff": st.max_abs_coeff,
        "variables": registry.to_json() if registry is not None else {},
    }
    if witness is not None:
        meta["witness"] = {str(i): int(b) for i, b in enumerate(witness)}
    if extra:
        meta.update(extra)
    side = sidecar_path(path)
    side.write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")
    return side


def parse_qubo_text(text: str) -> QuboInstance:
    offset = 0
    header = None
    linear: dict[int, int] = {}
    quadratic: dict[tuple[int, int], int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("c"):
            parts = line.split()
            if len(parts) >= 3 and parts[0] == "c" and parts[1] == "offset":
                try:
                    offset = int(parts[2])
                except ValueError:
                    raise QuboParseError(f"bad offset {parts[2]!r}", lineno) from None
            continue
        parts = line.split()
        if parts[0] == "p":
            if header is not None:
                raise QuboParseError("duplicate header", lineno)
            if len(parts) != 6 or parts[1] != "qubo":
                raise QuboParseError("header must be 'p qubo 0 <nodes> <ndiag> <ncouplers>'", lineno)
            try:
                header = tuple(int(x) for x in parts[2:])
            except ValueError:
                raise QuboParseError("non-integer header field", lineno) from None
            continue
        if header is None:
            raise QuboParseError("entry before header", lineno)
        if len(parts) != 3:
            raise QuboParseError("entry must have three fields", lineno)
        try:
            i, j, w = (int(x) for x in parts)
        except ValueError:
            raise QuboParseError("non-integer entry", lineno) from None
        n = header[1]
        if not (0 <= i < n and 0 <= j < n):
            raise QuboParseError(f"index out of range [0, {n})", lineno)
        if i == j:
            if i in linear:
                raise QuboParseError(f"duplicate node {i}", lineno)
            if quadratic:
                raise QuboParseError("node line after coupler lines", lineno)
            linear[i] = w
        else:
            if i > j:
                raise QuboParseError("coupler must have i < j", lineno)
            if (i, j) in quadratic:
                raise QuboParseError(f"duplicate coupler ({i}, {j})", lineno)
            quadratic[(i, j)] = w
    if header is None:
        raise QuboParseError("missing 'p qubo' header")
    _, n, ndiag, ncoup = header
    if len(linear) != ndiag or len(quadratic) != ncoup:
        raise QuboParseError(f"header declares {ndiag}/{ncoup} entries, found {len(linear)}/{len(quadratic)}")
    try:
        return QuboInstance(n, linear, quadratic, offset)
    except (ValueError, OverflowError) as exc:
        raise QuboParseError(str(exc)) from None


def read_qubo(path: str | Path) -> tuple[QuboInstance, VarRegistry | None, list[int] | None]:
    """Read a ``.qubo`` file and, when present, its sidecar (registry and witness)."""
    path = Path(path)
    q = parse_qubo_text(path.read_text())
    registry = witness = None
    side = sidecar_path(path)
    if side.exists():
        meta = json.loads(side.read_text())
        if meta.get("variables"):
            registry = VarRegistry.from_json(meta["variables"])
        if "witness" in meta:
            w = meta["witness"]
            witness = [int(w[str(i)]) for i in range(len(w))]
        if "offset" in meta and int(meta["offset"]) != q.offset:
            raise QuboParseError(f"sidecar offset {meta['offset']} disagrees with file offset {q.offset}")
    return q, registry, witness
