"""Vibrational-state-resolved hyperfine qubit physics in optical dipole traps."""
from ._backend import BACKEND
from .core import AtomSpecies, BlueLattice, RedGaussian, get_species, trap_frequencies
from .spectrum import VibrationalState, build_ensemble, dfs_for_state
from .gate import BlochVector, thermal_gate_fidelity
from .coherence import dephasing_time_T2star, ramsey_config, revival_time
from .magic import MagicQuery, magic_depth

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "AtomSpecies", "BlueLattice", "RedGaussian", "get_species",
    "trap_frequencies", "VibrationalState", "build_ensemble", "dfs_for_state",
    "BlochVector", "thermal_gate_fidelity", "dephasing_time_T2star",
    "ramsey_config", "revival_time", "MagicQuery", "magic_depth",
]
