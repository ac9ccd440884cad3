"""Resonance structure of the diagonal Galois data.

Exact resonance tests and relation lattices for hyperexponential
log-derivative bases, the local condition at ramified places, and the
bounded-horizon Diophantine evaluator.
"""

from .resonance import (
    LocalOK,
    LocalResonance,
    NonResonant,
    Resonant,
    ResonanceReport,
    local_extension_check,
    relation_lattice,
    resonance_test,
)
from .diophantine import (
    DiophantineReport,
    angles_from_places,
    diophantine_eval,
)

__all__ = [
    "Resonant",
    "NonResonant",
    "ResonanceReport",
    "resonance_test",
    "relation_lattice",
    "LocalOK",
    "LocalResonance",
    "local_extension_check",
    "DiophantineReport",
    "angles_from_places",
    "diophantine_eval",
]
