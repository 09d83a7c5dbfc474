"""Correctness oracles: exhaustive zero sets, emission checks and random sampling."""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from . import kernels
from .patterns import PatternEmission
from .qubo_model import QuboInstance

ENUMERATION_BOUND = 26


class EnumerationBoundError(ValueError):
    pass


@dataclass
class ZeroSetReport:
    primary: tuple[int, ...]
    zero_set: set[tuple[int, ...]]
    min_energy: int
    negative: bool
    evaluations: int
    min_by_projection: np.ndarray = field(repr=False, default=None)

    @property
    def zero_set_size(self) -> int:
        return len(self.zero_set)

    def to_json(self) -> dict:
        return {
            "status": "fail" if self.negative else "pass",
            "min_energy": int(self.min_energy),
            "zero_set_size": self.zero_set_size,
            "evaluations": self.evaluations,
            "primary": list(self.primary),
        }


def brute_force_zero_set(q: QuboInstance, primary: Sequence[int], bound: int = ENUMERATION_BOUND) -> ZeroSetReport:
    """Primary assignments whose minimum over all other variables is zero.

    Patterns in the zero set are tuples ordered like ``primary``. Enumeration
    walks a Gray code over every variable of ``q``.
    """
    n = q.num_vars
    if n > bound:
        raise EnumerationBoundError(f"{n} variables exceed the enumeration bound of {bound}")
    primary = tuple(int(p) for p in primary)
    if len(set(primary)) != len(primary) or any(not 0 <= p < n for p in primary):
        raise ValueError("primary must list distinct variable indices of the instance")
    proj = np.full(n, -1, dtype=np.int32)
    for pos, v in enumerate(primary):
        proj[v] = pos
    lin, _, _, _ = q.arrays()
    indptr, indices, data = q.adjacency()
    mins = kernels.gray_min_by_projection(n, lin, indptr, indices, data, q.offset, proj, len(primary))
    zero = {tuple((code >> i) & 1 for i in range(len(primary))) for code in np.nonzero(mins == 0)[0].tolist()}
    gmin = int(mins.min())
    return ZeroSetReport(primary, zero, gmin, gmin < 0, 1 << n, mins)


@dataclass
class EmissionReport:
    name: str
    passed: bool
    failures: list[dict]
    n_subs: int
    expected_subs: int | None
    zero_set_size: int
    min_energy: int

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "status": "pass" if self.passed else "fail",
            "counterexample": self.failures[0] if self.failures else None,
            "failures": len(self.failures),
            "n_subs": self.n_subs,
            "expected_subs": self.expected_subs,
            "zero_set_size": self.zero_set_size,
            "min_energy": self.min_energy,
        }


def check_emission(e: PatternEmission, predicate: Callable[[Mapping[int, int]], bool] | None = None,
                   expected_subs: int | None = None, bound: int = ENUMERATION_BOUND) -> EmissionReport:
    """Non-negativity, zero-iff-predicate and witness soundness over all port assignments.

    ``predicate`` receives a mapping caller variable -> bit; when omitted the
    emission's own predicate is used.
    """
    pred = predicate or e.predicate
    if e.num_local > bound:
        raise EnumerationBoundError(f"{e.num_local} local variables exceed the bound of {bound}")
    ports = e.ports
    n_ports = len(ports)
    ns = e.n_subs
    codes = np.arange(1 << e.num_local, dtype=np.int64)
    X = ((codes[:, None] >> np.arange(e.num_local)[None, :]) & 1).astype(np.uint8)
    E = e.fragment.energies(X).reshape(1 << ns, 1 << n_ports)
    failures: list[dict] = []
    neg = np.argwhere(E < 0)
    for sc, pc in neg[:5]:
        failures.append({"kind": "negative", "ports": _assign(ports, pc), "subs": _bits(sc, ns),
                         "energy": int(E[sc, pc])})
    mins = E.min(axis=0)
    zero_count = 0
    for pc in range(1 << n_ports):
        values = _assign(ports, pc)
        holds = bool(pred(values))
        zero = mins[pc] == 0
        zero_count += int(zero)
        if holds != zero:
            failures.append({"kind": "zero-set", "ports": values, "predicate": holds, "min_energy": int(mins[pc])})
            continue
        if holds:
            w = e.witness(values)
            got = int(E[_code(w), pc]) if ns else int(E[0, pc])
            if got != 0:
                failures.append({"kind": "witness", "ports": values, "subs": list(w), "energy": got})
    if expected_subs is not None and expected_subs != ns:
        failures.append({"kind": "sub-count", "expected": expected_subs, "got": ns})
    return EmissionReport(e.name, not failures, failures, ns, expected_subs, zero_count, int(E.min()))


def _bits(code: int, n: int) -> list[int]:
    return [(int(code) >> i) & 1 for i in range(n)]


def _code(bits: Sequence[int]) -> int:
    return sum(int(b) << i for i, b in enumerate(bits))


def _assign(ports: Sequence[int], code: int) -> dict[int, int]:
    return {v: (int(code) >> i) & 1 for i, v in enumerate(ports)}


@dataclass
class SampleReport:
    n_samples: int
    seed: int
    min_energy: int
    negative: int

    @property
    def passed(self) -> bool:
        return self.negative == 0

    def to_json(self) -> dict:
        return {"status": "pass" if self.passed else "fail", "min_energy": int(self.min_energy),
                "n_samples": self.n_samples, "seed": self.seed, "negative_samples": self.negative}


def sample_nonnegativity(q: QuboInstance, n_samples: int = 100_000, seed: int = 0,
                         around: Sequence[int] | None = None, flip_prob: float = 0.5,
                         batch: int = 2048, jobs: int = 1) -> SampleReport:
    """Minimum energy over seeded random assignments.

    With ``around`` the samples are random perturbations of that assignment
    (each bit flipped with probability ``flip_prob``). Batch ``i`` draws from
    its own generator seeded with ``(seed, i)``, so the report does not depend
    on ``jobs``.
    """
    n = q.num_vars
    base = np.asarray(around, dtype=np.uint8) if around is not None else None
    sizes = [min(batch, n_samples - lo) for lo in range(0, n_samples, batch)]

    def run(i: int) -> tuple[int, int]:
        rng = np.random.default_rng([seed, i])
        m = sizes[i]
        if base is None:
            X = rng.integers(0, 2, size=(m, n), dtype=np.uint8)
        else:
            X = base[None, :] ^ (rng.random((m, n)) < flip_prob).astype(np.uint8)
        e = q.energies(X)
        return (int(e.min()) if len(e) else 0), int((e < 0).sum())

    if not sizes:
        return SampleReport(0, seed, 0, 0)
    q.energies(np.zeros((1, n), dtype=np.uint8))  # build the kernel tables once
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            results = list(ex.map(run, range(len(sizes))))
    else:
        results = [run(i) for i in range(len(sizes))]
    return SampleReport(n_samples, seed, min(r[0] for r in results), sum(r[1] for r in results))


def exhaustive_nonnegativity(q: QuboInstance, bound: int = ENUMERATION_BOUND) -> int:
    """Global minimum by full enumeration."""
    return brute_force_zero_set(q, (), bound).min_energy


def energy_report(q: QuboInstance, assignment: Sequence[int]) -> dict:
    e = q.energy(assignment)
    return {"status": "pass" if e == 0 else "fail", "energy": int(e)}


def predicate_zero_set(n: int, predicate: Callable[[tuple[int, ...]], bool]) -> set[tuple[int, ...]]:
    return {bits for bits in itertools.product((0, 1), repeat=n) if predicate(bits)}
