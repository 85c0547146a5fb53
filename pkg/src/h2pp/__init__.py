"""Pump-probe simulator for a 1D+1D H2+ model ion.

The package propagates the two-coordinate (electron z, internuclear
distance R) time-dependent Schroedinger equation in atomic units through
a dissociating pump pulse and a time-delayed ionizing probe pulse,
extracts ionization yields and nuclear-wavepacket observables, and fits
the analytic two-slit modulation model to yield-vs-delay curves.
"""

from h2pp import constants
from h2pp.core import (
    Grid2D,
    Wavefunction,
    inner_product,
    make_grid,
    norm,
    read_checkpoint,
    write_checkpoint,
)
from h2pp.model import FieldConfig, PULSE_PRESETS, PulseSpec

__all__ = [
    "constants",
    "Grid2D",
    "Wavefunction",
    "make_grid",
    "norm",
    "inner_product",
    "read_checkpoint",
    "write_checkpoint",
    "PulseSpec",
    "FieldConfig",
    "PULSE_PRESETS",
]

__version__ = "0.1.0"
