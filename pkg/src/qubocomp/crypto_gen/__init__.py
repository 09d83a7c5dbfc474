"""QUBO instances for AES key recovery and MD5/SHA-1/SHA-256 preimages.

:class:`CryptoJob` describes one build; :func:`build` returns the instance,
its witness plan and a JSON-ready report. The concrete builders live in
:mod:`.aes` and :mod:`.hashes`, bit-exact reference ciphers in :mod:`.reference`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..compile import Assembler, WitnessPlan, witness_eval
from ..qubo_model import QuboInstance
from .aes import AesOptions, build_aes_instance
from .hashes import HashOptions, build_md5_instance, build_sha1_instance, build_sha256_instance
from .reference import AES_ROUNDS, aes_decrypt, aes_encrypt, md5, reference_cipher, sha1, sha256
from .toy import build_toy_instance, toy_encrypt, toy_preimages

AES_ALGORITHMS = ("aes128e", "aes128d", "aes192e", "aes192d", "aes256e", "aes256d")
HASH_ALGORITHMS = ("md5", "sha1", "sha256")
ALGORITHMS = AES_ALGORITHMS + HASH_ALGORITHMS
FULL_ROUNDS = {"md5": 64, "sha1": 80, "sha256": 64, **{a: AES_ROUNDS[int(a[3:6])] for a in AES_ALGORITHMS}}
DIGEST_BYTES = {"md5": 16, "sha1": 20, "sha256": 32}


class CryptoJobError(ValueError):
    pass


def _hex(s: str | bytes, what: str) -> bytes:
    if isinstance(s, bytes):
        return s
    try:
        return bytes.fromhex(s)
    except ValueError:
        raise CryptoJobError(f"{what} is not valid hex: {s!r}") from None


@dataclass(frozen=True)
class CryptoJob:
    """One instance to build.

    ``known`` holds the known values as hex: for AES encryption
    ``(plaintext, ciphertext)``, for decryption ``(ciphertext, plaintext)``,
    for hashes ``(digest,)``. ``rounds`` counts AES rounds or hash steps.
    """

    algorithm: str
    known: tuple[str, ...]
    rounds: int | None = None
    block_size: int = 6
    clause_length_limit: int | None = None
    unknown: str | None = None
    message_bytes: int = 55
    aes: AesOptions = field(default_factory=AesOptions)

    def __post_init__(self):
        alg = self.algorithm.lower()
        object.__setattr__(self, "algorithm", alg)
        if alg not in ALGORITHMS:
            raise CryptoJobError(f"unknown algorithm {self.algorithm!r}; choose from {', '.join(ALGORITHMS)}")
        expect = "key" if self.is_aes else "message"
        if self.unknown is None:
            object.__setattr__(self, "unknown", expect)
        elif self.unknown != expect:
            raise CryptoJobError(f"{alg} instances have the {expect} unknown, not {self.unknown!r}")
        if self.rounds is not None and not 1 <= self.rounds <= FULL_ROUNDS[alg]:
            raise CryptoJobError(f"rounds must lie in 1..{FULL_ROUNDS[alg]} for {alg}")
        if self.block_size < 1:
            raise CryptoJobError("block size must be positive")
        if self.clause_length_limit is not None and self.clause_length_limit < 3:
            raise CryptoJobError("clause length limit must be at least 3")
        known = tuple(self.known)
        if self.is_aes:
            if len(known) != 2:
                raise CryptoJobError("AES jobs need two known blocks (input, output)")
            for k, what in zip(known, ("input block", "output block")):
                if len(_hex(k, what)) != 16:
                    raise CryptoJobError(f"AES {what} must be 16 bytes")
        else:
            if len(known) != 1:
                raise CryptoJobError("hash jobs need exactly one known digest")
            if len(_hex(known[0], "digest")) != DIGEST_BYTES[alg]:
                raise CryptoJobError(f"{alg} digests are {DIGEST_BYTES[alg]} bytes")
            if not 0 <= self.message_bytes <= 55:
                raise CryptoJobError("only single-block messages (0..55 bytes) are supported")
        object.__setattr__(self, "known", known)

    @property
    def is_aes(self) -> bool:
        return self.algorithm.startswith("aes")

    @property
    def key_bits(self) -> int:
        return int(self.algorithm[3:6])

    @property
    def decrypt(self) -> bool:
        return self.is_aes and self.algorithm.endswith("d")

    @property
    def full_rounds(self) -> int:
        return FULL_ROUNDS[self.algorithm]

    @classmethod
    def from_witness(cls, algorithm: str, secret: str | bytes, *, plaintext: str | bytes | None = None,
                     rounds: int | None = None, **kw) -> "CryptoJob":
        """Job whose known values are computed from ``secret`` with the reference cipher.

        For AES ``secret`` is the key and ``plaintext`` the block put through
        the circuit's input side (the plaintext for encryption, the ciphertext
        for decryption). For hashes ``secret`` is the message.
        """
        alg = algorithm.lower()
        sec = _hex(secret, "secret")
        if alg.startswith("aes"):
            blk = _hex(plaintext if plaintext is not None else bytes(16), "input block")
            out = (aes_decrypt if alg.endswith("d") else aes_encrypt)(sec, blk, rounds)
            return cls(alg, (blk.hex(), out.hex()), rounds, **kw)
        fn = {"md5": md5, "sha1": sha1, "sha256": sha256}.get(alg)
        if fn is None:
            raise CryptoJobError(f"unknown algorithm {algorithm!r}")
        if len(sec) > 55:
            raise CryptoJobError("only single-block messages (0..55 bytes) are supported")
        kw.setdefault("message_bytes", len(sec))
        if kw["message_bytes"] != len(sec):
            raise CryptoJobError("message length disagrees with message_bytes")
        steps = rounds if rounds is not None else FULL_ROUNDS[alg]
        return cls(alg, (fn(sec, steps).hex(),), rounds, **kw)


@dataclass
class CryptoBuild:
    job: CryptoJob
    qubo: QuboInstance
    assembler: Assembler
    unknown_vars: list[int]

    @property
    def plan(self) -> WitnessPlan:
        return self.assembler.plan

    @property
    def registry(self):
        return self.assembler.registry

    def witness(self, secret: str | bytes) -> list[int]:
        """Full assignment derived from the key (AES) or message (hashes)."""
        sec = _hex(secret, "secret")
        if len(sec) * 8 != len(self.unknown_vars):
            raise CryptoJobError(f"secret must be {len(self.unknown_vars) // 8} bytes")
        bits = {v: (sec[i // 8] >> (i % 8)) & 1 for i, v in enumerate(self.unknown_vars)}
        return witness_eval(self.plan, bits)

    def report(self) -> dict:
        st = self.qubo.stats()
        j = self.job
        return {
            "algorithm": j.algorithm,
            "rounds": j.rounds if j.rounds is not None else j.full_rounds,
            "unknown": j.unknown,
            "block_size": None if j.is_aes else j.block_size,
            "clause_length_limit": j.clause_length_limit,
            "message_bytes": None if j.is_aes else j.message_bytes,
            "stats": st.to_json(),
            "variables_by_origin": dict(sorted(self.registry.origin_counts().items())),
            "variables_by_kind": dict(sorted(self.registry.kind_counts().items())),
        }


def build(job: CryptoJob) -> CryptoBuild:
    if job.is_aes:
        src, dst = (_hex(k, "block") for k in job.known)
        opts = AesOptions(job.aes.materialize_sbox_output, job.aes.key_form_limit, job.clause_length_limit)
        inst = build_aes_instance(job.key_bits, job.decrypt, src, dst, job.rounds, opts)
        unknown = inst.key_vars
    else:
        fn = {"md5": build_md5_instance, "sha1": build_sha1_instance, "sha256": build_sha256_instance}[job.algorithm]
        opts = HashOptions(job.block_size, job.clause_length_limit, job.message_bytes)
        inst = fn(_hex(job.known[0], "digest"), job.rounds or job.full_rounds, opts)
        unknown = inst.message_vars
    return CryptoBuild(job, inst.asm.build(), inst.asm, list(unknown))


def build_aes(job: CryptoJob) -> tuple[QuboInstance, WitnessPlan]:
    if not job.is_aes:
        raise CryptoJobError(f"{job.algorithm} is not an AES job")
    b = build(job)
    return b.qubo, b.plan


def _hash_builder(name: str):
    def fn(job: CryptoJob) -> tuple[QuboInstance, WitnessPlan]:
        if job.algorithm != name:
            raise CryptoJobError(f"expected a {name} job, got {job.algorithm}")
        b = build(job)
        return b.qubo, b.plan

    fn.__name__ = f"build_{name}"
    return fn


build_md5 = _hash_builder("md5")
build_sha1 = _hash_builder("sha1")
build_sha256 = _hash_builder("sha256")

__all__ = [
    "ALGORITHMS",
    "AesOptions",
    "CryptoBuild",
    "CryptoJob",
    "CryptoJobError",
    "HashOptions",
    "build",
    "build_aes",
    "build_md5",
    "build_sha1",
    "build_sha256",
    "build_toy_instance",
    "reference_cipher",
    "toy_encrypt",
    "toy_preimages",
]
