"""Soft-core model potentials and the laser vector potential.

The field-free Hamiltonian couples the electron coordinate z and the
internuclear distance R through

    V(z, R) = 1/sqrt(R^2 + alpha_p)
              - 1/sqrt((z - R/2)^2 + alpha_e)
              - 1/sqrt((z + R/2)^2 + alpha_e)

and the light-matter interaction is velocity gauge, -A(t) * p_z, with a
sin^2 envelope on the vector potential itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from h2pp import constants
from h2pp.core import Grid2D


@dataclass(frozen=True)
class PulseSpec:
    """One linearly polarized pulse specified by its vector potential.

    A(t) = mass_factor * A0 * sin(omega*(t-delay) + phase)
                       * sin^2(pi*(t-delay) / (n_cycles*T))

    inside the half-open window [delay, delay + duration), zero outside;
    T = 2*pi/omega and duration = n_cycles * T.
    """

    A0: float
    omega: float
    n_cycles: int
    delay: float = 0.0
    label: str = "custom"
    phase: float = 0.0

    def __post_init__(self):
        if self.A0 < 0:
            raise ValueError(f"A0 must be >= 0, got {self.A0}")
        if self.omega <= 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if self.n_cycles < 1:
            raise ValueError(f"n_cycles must be >= 1, got {self.n_cycles}")

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega

    @property
    def duration(self) -> float:
        return self.n_cycles * self.period

    @property
    def end(self) -> float:
        return self.delay + self.duration

    def at(self, t: float) -> float:
        """Vector potential of this pulse alone at time t (a.u.)."""
        u = t - self.delay
        if u < 0.0 or u >= self.duration:
            return 0.0
        env = math.sin(math.pi * u / self.duration)
        return (
            constants.MASS_FACTOR
            * self.A0
            * math.sin(self.omega * u + self.phase)
            * env
            * env
        )

    def shifted(self, delay: float) -> "PulseSpec":
        return PulseSpec(self.A0, self.omega, self.n_cycles, delay, self.label, self.phase)


# Presets from the pump/probe parameter study: 117 nm 3-cycle pump,
# 22 nm and 45 nm 10-cycle probes, single-cycle 800 nm probe.
PULSE_PRESETS = {
    "pump117": PulseSpec(A0=0.04, omega=0.38, n_cycles=3, label="pump"),
    "probe22": PulseSpec(A0=0.03, omega=2.07, n_cycles=10, label="probe"),
    "probe45": PulseSpec(A0=0.06, omega=1.01, n_cycles=10, label="probe"),
    "ir800_1cyc": PulseSpec(A0=3.0, omega=0.057, n_cycles=1, label="probe"),
}


@dataclass
class FieldConfig:
    """Ordered collection of pulses; total A(t) is the sum of the members."""

    pulses: list = field(default_factory=list)

    def vector_potential(self, t: float) -> float:
        if not math.isfinite(t):
            raise ValueError(f"time must be finite, got {t}")
        return sum(p.at(t) for p in self.pulses)

    @property
    def start(self) -> float:
        return min((p.delay for p in self.pulses), default=0.0)

    @property
    def end(self) -> float:
        return max((p.end for p in self.pulses), default=0.0)


def vector_potential(cfg: FieldConfig, t: float) -> float:
    return cfg.vector_potential(t)


def potential_nuclear(R):
    """Soft-core proton-proton repulsion 1/sqrt(R^2 + alpha_p)."""
    return 1.0 / np.sqrt(np.square(R) + constants.ALPHA_P)


def potential_electron(z, R):
    """Two soft-core attraction wells at z = +-R/2 (even in z)."""
    half = np.asarray(R) / 2.0
    return -1.0 / np.sqrt(np.square(z - half) + constants.ALPHA_E) - 1.0 / np.sqrt(
        np.square(z + half) + constants.ALPHA_E
    )


def total_static_potential(grid: Grid2D) -> np.ndarray:
    """Field-free potential table V[j, i] = V(z_i, R_j), shape (n_R, n_z)."""
    z = grid.z[None, :]
    R = grid.R[:, None]
    return potential_nuclear(R) + potential_electron(z, R)
