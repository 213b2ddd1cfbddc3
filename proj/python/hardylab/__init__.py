"""Weighted local Hardy space laboratory (C++ core)."""

from ._hardylab import (
    AtomCandidate,
    GridFunction,
    GridSpec,
    HardyParams,
    HardylabError,
    Weight,
    atom_hp_norm,
    decompose_molecule,
    default_config,
    experiment_ids,
    hp_norm,
    make_approx_atom,
    make_atom,
    make_molecule,
    measure_ball,
    run_experiment,
    validate_approx_atom,
    validate_atom,
    validate_kernel,
    validate_molecule,
)

__all__ = [
    "AtomCandidate",
    "GridFunction",
    "GridSpec",
    "HardyParams",
    "HardylabError",
    "Weight",
    "atom_hp_norm",
    "decompose_molecule",
    "default_config",
    "experiment_ids",
    "hp_norm",
    "make_approx_atom",
    "make_atom",
    "make_molecule",
    "measure_ball",
    "run_experiment",
    "validate_approx_atom",
    "validate_atom",
    "validate_kernel",
    "validate_molecule",
]
