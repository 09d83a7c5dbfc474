"""``qubocomp`` command line.

Machine-readable JSON goes to stdout, human-readable progress to stderr.
Exit codes: 0 success, 1 verification failure (or no encoding found),
2 usage or input error.
"""
from __future__ import annotations

import json
import re
import sys
import time
from pathlib import Path

import click

from . import __version__
from .circuit_ir import CircuitError, load_circuit
from .compile import LowerOptions, lower
from .crypto_gen import ALGORITHMS, CryptoJob, CryptoJobError, build
from .pattern_search import build_ilp, discover as run_discover, export_lp as write_lp, load_spec
from .qubo_model import QuboError, read_qubo, write_qubo
from .verify import (
    ENUMERATION_BOUND,
    EnumerationBoundError,
    brute_force_zero_set,
    energy_report,
    sample_nonnegativity,
)


class InputError(click.ClickException):
    exit_code = 2


def _emit(obj) -> None:
    click.echo(json.dumps(obj, indent=1, sort_keys=True))


def _note(msg: str) -> None:
    click.echo(msg, err=True)


def _write_json(path: str | Path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="qubocomp")
@click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True,
              help="Upper bound on worker threads.")
@click.pass_context
def cli(ctx: click.Context, jobs: int) -> None:
    """Compile boolean and cryptographic circuits into integer QUBO instances."""
    ctx.obj = {"jobs": jobs}


# --------------------------------------------------------------------------- encode

@cli.command()
@click.option("--circuit", "circuit_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["bristol", "sexpr"]), required=True)
@click.option("--xor-limit", type=click.IntRange(min=3), default=None,
              help="Maximum literals per emitted XOR clause.")
@click.option("--no-xor-reuse", is_flag=True, help="Disable shared-subexpression extraction.")
@click.option("--and-low-coeff", is_flag=True, help="Use the low-coefficient AND encoding.")
@click.option("--output-values", default=None, help="Required output bits, e.g. 1011 (default: all 1).")
@click.option("--out", "prefix", required=True, help="Writes PREFIX.qubo and PREFIX.meta.json.")
def encode(circuit_path, fmt, xor_limit, no_xor_reuse, and_low_coeff, output_values, prefix):
    """Lower a circuit file to a QUBO whose zeros are the satisfying inputs."""
    try:
        c = load_circuit(circuit_path, fmt)
        wants = None
        if output_values is not None:
            if not re.fullmatch(r"[01]+", output_values):
                raise InputError("--output-values must be a bit string")
            wants = tuple(int(ch) for ch in output_values)
        res = lower(c, LowerOptions(xor_limit, and_low_coeff, not no_xor_reuse, output_values=wants))
    except (CircuitError, OSError, ValueError) as exc:
        raise InputError(str(exc)) from None
    q = res.qubo
    reg = res.plan.registry
    primary = list(res.plan.primary)
    write_qubo(prefix + ".qubo", q, reg, extra={"primary": primary})
    st = q.stats().to_json()
    _note(f"{circuit_path}: {q.num_vars} variables, {len(primary)} inputs, max |coeff| {st['max_abs_coeff']}")
    _emit({"qubo": prefix + ".qubo", "meta": prefix + ".meta.json", "primary": primary, "stats": st,
           "variables_by_kind": reg.kind_counts()})


# --------------------------------------------------------------------------- crypto

@cli.command()
@click.option("--alg", required=True, type=click.Choice(ALGORITHMS, case_sensitive=False))
@click.option("--rounds", type=click.IntRange(min=1), default=None, help="AES rounds or hash steps.")
@click.option("--block-size", type=click.IntRange(min=1), default=6, show_default=True,
              help="Adder block size B (hashes).")
@click.option("--clause-limit", type=click.IntRange(min=3), default=None)
@click.option("--message-bytes", type=click.IntRange(0, 55), default=None,
              help="Unknown message length (hashes; default 55 or the witness length).")
@click.option("--known", multiple=True,
              help="Known hex values; repeat or comma-separate. AES: input,output blocks. Hashes: digest.")
@click.option("--emit-witness", "secret", default=None,
              help="Hex key (AES) or message (hashes); the witness is stored in the sidecar.")
@click.option("--out", "prefix", required=True)
def crypto(alg, rounds, block_size, clause_limit, message_bytes, known, secret, prefix):
    """Build an AES key-recovery or hash preimage instance."""
    vals = tuple(v for k in known for v in k.replace(",", " ").split())
    try:
        if not vals:
            raise CryptoJobError("--known is required")
        if message_bytes is None:
            message_bytes = len(bytes.fromhex(secret)) if secret and not alg.lower().startswith("aes") else 55
        job = CryptoJob(alg, vals, rounds, block_size, clause_limit, message_bytes=message_bytes)
    except (CryptoJobError, ValueError) as exc:
        raise InputError(str(exc)) from None
    t0 = time.monotonic()
    b = build(job)
    _note(f"{job.algorithm}: built {b.qubo.num_vars} variables in {time.monotonic() - t0:.1f} s")
    report = b.report()
    witness = None
    if secret is not None:
        try:
            witness = b.witness(secret)
        except (CryptoJobError, ValueError) as exc:
            raise InputError(str(exc)) from None
        report["witness_energy"] = int(b.qubo.energy(witness))
    write_qubo(prefix + ".qubo", b.qubo, b.registry, witness,
               extra={"primary": b.unknown_vars, "report": report})
    _write_json(prefix + ".report.json", report)
    _emit(report)
    if witness is not None and report["witness_energy"] != 0:
        _note("witness energy is not zero: the secret does not match the known values")
        sys.exit(1)


# --------------------------------------------------------------------------- discover

@cli.command()
@click.option("--truth", required=True, type=click.Path(exists=True, dir_okay=False),
              help='JSON {"n": N, "min_terms": ["0101", ...]} (bit i is character i).')
@click.option("--max-subs", type=click.IntRange(min=0), default=3, show_default=True)
@click.option("--coeff-bound", type=click.IntRange(min=1), default=100, show_default=True)
@click.option("--strong", is_flag=True, help="Require a unique substitution string per min-term.")
@click.option("--method", type=click.Choice(["zero-branch", "ilp"]), default="zero-branch", show_default=True)
@click.option("--cegar/--no-cegar", default=True, show_default=True,
              help="Lazily add min-term blocks (ilp method).")
@click.option("--no-escalate", is_flag=True, help="Do not double the coefficient bound on failure.")
@click.option("--export-lp", default=None, help="Also write the full ILP at --max-subs in LP format.")
@click.option("--out", "out_path", required=True)
def discover(truth, max_subs, coeff_bound, strong, method, cegar, no_escalate, export_lp, out_path):
    """Search for the smallest-substitution penalty polynomial of a relation."""
    try:
        spec = load_spec(truth)
        if export_lp:
            export_lp_file(spec, max_subs, coeff_bound, strong, export_lp)
        t0 = time.monotonic()
        res = run_discover(spec, max_subs, coeff_bound, strong, cegar, method, escalate=not no_escalate)
    except (ValueError, KeyError, OSError) as exc:
        raise InputError(str(exc)) from None
    out = res.to_json()
    # wall-clock times go to stderr so the certificate is reproducible byte for byte
    for ev in out["evidence"]:
        ev.pop("seconds", None)
    _write_json(out_path, out)
    _emit(out)
    if not res.found:
        _note(f"no encoding with at most {max_subs} substitution bits ({time.monotonic() - t0:.1f} s)")
        sys.exit(1)
    _note(f"n_subs = {res.n_subs} ({res.strength}), {time.monotonic() - t0:.1f} s")


def export_lp_file(spec, n_subs, coeff_bound, strong, path) -> None:
    write_lp(build_ilp(spec, n_subs, coeff_bound, strong), path)


# --------------------------------------------------------------------------- verify

def _parse_primary(text: str, registry) -> list[int]:
    out: list[int] = []
    for tok in filter(None, (t.strip() for t in text.split(","))):
        m = re.fullmatch(r"([A-Za-z_]\w*?)(\d+)\.\.\1?(\d+)", tok)
        names = [f"{m.group(1)}{i}" for i in range(int(m.group(2)), int(m.group(3)) + 1)] if m else [tok]
        for name in names:
            if re.fullmatch(r"\d+", name):
                out.append(int(name))
            elif registry is not None and name in registry:
                out.append(registry.index(name))
            else:
                raise InputError(f"unknown variable {name!r}")
    return out


def _load_witness(path: str, n: int) -> list[int]:
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict) and "witness" in data:
        data = data["witness"]
    if isinstance(data, dict):
        bits = [int(data[str(i)]) for i in range(len(data))]
    else:
        bits = [int(b) for b in data]
    if len(bits) != n or any(b not in (0, 1) for b in bits):
        raise InputError(f"witness must hold {n} bits")
    return bits


@cli.command()
@click.option("--qubo", "qubo_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--exhaustive", is_flag=True, help="Enumerate every assignment (at most 26 variables).")
@click.option("--primary", default=None, help="Projection variables: indices or names, ranges like x0..x5.")
@click.option("--witness", "witness_path", default=None, type=click.Path(exists=True, dir_okay=False),
              help="JSON bit list, index map, or a sidecar holding a witness.")
@click.option("--sample", type=click.IntRange(min=1), default=None, help="Number of random assignments.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--around-witness", is_flag=True, help="Sample perturbations of the sidecar witness.")
@click.option("--bound", type=click.IntRange(1, 40), default=ENUMERATION_BOUND, show_default=True)
@click.pass_context
def verify(ctx, qubo_path, exhaustive, primary, witness_path, sample, seed, around_witness, bound):
    """Check a QUBO: exhaustive zero set, witness energy, or random non-negativity."""
    modes = sum(bool(x) for x in (exhaustive, witness_path, sample))
    if modes != 1:
        raise click.UsageError("choose exactly one of --exhaustive, --witness, --sample")
    try:
        q, registry, side_witness = read_qubo(qubo_path)
    except (QuboError, OSError, ValueError) as exc:
        raise InputError(str(exc)) from None
    if exhaustive:
        prim = _parse_primary(primary or "", registry)
        try:
            rep = brute_force_zero_set(q, prim, bound)
        except EnumerationBoundError as exc:
            raise InputError(str(exc)) from None
        except ValueError as exc:
            raise InputError(str(exc)) from None
        out = rep.to_json()
        _note(f"{rep.evaluations} assignments, zero set size {rep.zero_set_size}, min energy {rep.min_energy}")
        ok = not rep.negative
    elif witness_path:
        out = energy_report(q, _load_witness(witness_path, q.num_vars))
        ok = out["status"] == "pass"
        _note(f"witness energy {out['energy']}")
    else:
        around = None
        if around_witness:
            if side_witness is None:
                raise InputError("the sidecar holds no witness")
            around = side_witness
        rep = sample_nonnegativity(q, sample, seed, around=around, jobs=ctx.obj["jobs"])
        out = rep.to_json()
        ok = rep.passed
        _note(f"{sample} samples, min energy {rep.min_energy}, negative {rep.negative}")
    _emit(out)
    sys.exit(0 if ok else 1)


# --------------------------------------------------------------------------- stats

@cli.command()
@click.option("--qubo", "qubo_path", required=True, type=click.Path(exists=True, dir_okay=False))
def stats(qubo_path):
    """Print size statistics of a QUBO file."""
    try:
        q, registry, _ = read_qubo(qubo_path)
    except (QuboError, OSError, ValueError) as exc:
        raise InputError(str(exc)) from None
    out = q.stats().to_json()
    if registry is not None:
        out["variables_by_kind"] = dict(sorted(registry.kind_counts().items()))
        out["variables_by_origin"] = dict(sorted(registry.origin_counts().items()))
    _emit(out)


def main(argv: list[str] | None = None) -> None:
    cli.main(args=argv, prog_name="qubocomp")


if __name__ == "__main__":
    main()
