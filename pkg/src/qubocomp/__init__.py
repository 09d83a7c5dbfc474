"""Compile boolean and cryptographic circuits into compact integer QUBO instances."""
from .qubo_model import (
    QuboBuilder,
    QuboInstance,
    QuboStats,
    VarKind,
    VarRegistry,
    read_qubo,
    write_qubo,
)
from .patterns import Literal, PatternEmission

__version__ = "0.1.0"

__all__ = [
    "Literal",
    "PatternEmission",
    "QuboBuilder",
    "QuboInstance",
    "QuboStats",
    "VarKind",
    "VarRegistry",
    "read_qubo",
    "write_qubo",
]
