"""Split-step Crank-Nicolson propagator for the (z, R) wavefunction.

One step of length dt applies

    exp(-i V dt/2) . CN_z(t + dt/2) . CN_R . exp(-i V dt/2)

where V is the static soft-core potential, CN_z is a Crank-Nicolson
half solve for the electron kinetic term plus the velocity-gauge
coupling -A(t) p_z, and CN_R the same for the nuclear kinetic term.
The two kinetic operators commute, so the splitting error is second
order in dt and every factor is exactly norm preserving (real time,
no absorber).

Imaginary time (dt -> -i dt) reuses the same machinery for ground
state relaxation; the fixed point of the iteration is the lowest
eigenstate of the discrete Hamiltonian up to O(dt^2) splitting bias,
which `solve_ground_state` removes by finishing at a small step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from h2pp import constants, _kernels
from h2pp.core import Grid2D, Wavefunction, norm, normalize
from h2pp.model import FieldConfig, total_static_potential


class PropagationError(RuntimeError):
    """Raised when the wavefunction stops being finite mid run."""


class ConvergenceError(RuntimeError):
    """Raised when an iterative solve exhausts its budget.

    Carries the last energy change per check in `residual`.
    """

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class Hamiltonian:
    """Field-free Hamiltonian: kinetic z + kinetic R + static potential.

    `potential`, `mu_z`, `mu_R` can be overridden to build reduced toy
    systems for testing (harmonic wells, free particles).
    """

    def __init__(self, grid: Grid2D, potential=None, mu_z=None, mu_R=None):
        self.grid = grid
        self.mu_z = constants.MU_Z if mu_z is None else float(mu_z)
        self.mu_R = constants.MU_R if mu_R is None else float(mu_R)
        if self.mu_z <= 0 or self.mu_R <= 0:
            raise ValueError("masses must be positive")
        if potential is None:
            potential = total_static_potential(grid)
        potential = np.asarray(potential, dtype=np.float64)
        if potential.shape != (grid.n_R, grid.n_z):
            raise ValueError(
                f"potential shape {potential.shape} does not match grid "
                f"({grid.n_R}, {grid.n_z})"
            )
        self.V = potential

    def apply(self, data: np.ndarray, out=None) -> np.ndarray:
        """Apply the field-free Hamiltonian to a (n_R, n_z) array."""
        g = self.grid
        cz = 1.0 / (2.0 * self.mu_z * g.dz * g.dz)
        cR = 1.0 / (2.0 * self.mu_R * g.dR * g.dR)
        if out is None:
            out = np.empty_like(data)
        np.multiply(self.V, data, out=out)
        out += (2.0 * (cz + cR)) * data
        out[:, :-1] -= cz * data[:, 1:]
        out[:, 1:] -= cz * data[:, :-1]
        out[:-1, :] -= cR * data[1:, :]
        out[1:, :] -= cR * data[:-1, :]
        return out


def energy_expectation(ham: Hamiltonian, psi: Wavefunction) -> float:
    """<psi|H0|psi> / <psi|psi> with the field-free Hamiltonian."""
    hpsi = ham.apply(psi.data)
    num = np.vdot(psi.data, hpsi).real
    den = np.vdot(psi.data, psi.data).real
    if den == 0.0:
        raise ValueError("cannot take expectation in a zero state")
    return num / den


def residual_norm(ham: Hamiltonian, psi: Wavefunction) -> float:
    """|| (H0 - <H0>) psi || / ||psi||, an eigenstate quality measure."""
    e = energy_expectation(ham, psi)
    r = ham.apply(psi.data) - e * psi.data
    return math.sqrt(np.vdot(r, r).real / np.vdot(psi.data, psi.data).real)


def project_out(psi: Wavefunction, other: Wavefunction) -> None:
    """Remove the component of `other` from `psi` in place."""
    cell = psi.grid.cell
    overlap = np.vdot(other.data, psi.data) * cell
    nrm = np.vdot(other.data, other.data).real * cell
    psi.data -= (overlap / nrm) * other.data


@dataclass(frozen=True)
class Absorber:
    """cos^(1/8) damping mask on both outer z strips of given width.

    strength blends between no damping (0) and the full mask (1).
    """

    width: float
    strength: float = 1.0
    exponent: float = 0.125

    def validate(self, grid: Grid2D) -> None:
        span = grid.z_max - grid.z_min
        if not 0.0 <= self.strength <= 1.0:
            raise ValueError(f"absorber strength must lie in [0, 1], got {self.strength}")
        if self.width <= 0:
            raise ValueError(f"absorber width must be positive, got {self.width}")
        if self.width >= span / 4.0:
            raise ValueError(
                f"absorber width {self.width} must stay below a quarter of the "
                f"z extent {span}"
            )
        edge = grid.z_max - self.width
        ionized_from = 10.0 + grid.R_max / 2.0
        if edge <= ionized_from:
            raise ValueError(
                f"absorber onset |z| = {edge} would overlap the bound region; "
                f"needs |z| > {ionized_from} for this grid"
            )

    def masks(self, grid: Grid2D):
        """(mask_left, mask_right, i_right) column masks for the two strips."""
        self.validate(grid)
        z = grid.z
        left_edge = grid.z_min + self.width
        right_edge = grid.z_max - self.width
        n_left = int(np.sum(z < left_edge - 1e-12 * grid.dz))
        i_right = int(np.searchsorted(z, right_edge + 1e-12 * grid.dz))
        xl = (left_edge - z[:n_left]) / self.width
        xr = (z[i_right:] - right_edge) / self.width
        shape_l = np.cos(0.5 * math.pi * np.clip(xl, 0.0, 1.0)) ** self.exponent
        shape_r = np.cos(0.5 * math.pi * np.clip(xr, 0.0, 1.0)) ** self.exponent
        mask_left = 1.0 - self.strength * (1.0 - shape_l)
        mask_right = 1.0 - self.strength * (1.0 - shape_r)
        return mask_left, mask_right, i_right


class Propagator:
    """Drives Wavefunction objects through time steps on a fixed grid."""

    def __init__(
        self,
        ham: Hamiltonian,
        field: FieldConfig | None = None,
        dt: float | None = None,
        imaginary: bool = False,
        absorber: Absorber | None = None,
        check_interval: int = 100,
    ):
        self.ham = ham
        self.grid = ham.grid
        self.field = field
        self.dt = float(self.grid.dt if dt is None else dt)
        self.imaginary = bool(imaginary)
        # negative dt is legal in real time (time-reversed stepping)
        if self.dt == 0 or (self.imaginary and self.dt < 0):
            raise ValueError(f"invalid dt {self.dt} for this mode")
        if self.imaginary and field is not None:
            raise ValueError("imaginary time runs are field free")
        self.check_interval = int(check_interval)
        self.steps_taken = 0

        g = self.grid
        # dt -> -i dt turns the Cayley factor i*dt/2 into dt/2
        self._c = (0.5 * self.dt) if self.imaginary else (0.5j * self.dt)

        if self.imaginary:
            self.phase = np.exp(-0.5 * self.dt * ham.V).astype(np.complex128)
        else:
            self.phase = np.exp(-0.5j * self.dt * ham.V)

        # R solve: coefficients never change, factor once
        k_R = 1.0 / (ham.mu_R * g.dR * g.dR)
        o_R = -0.5 * k_R
        self._dp_R = np.complex128(1.0 + self._c * k_R)
        self._op_R = np.complex128(self._c * o_R)
        self._dm_R = np.complex128(1.0 - self._c * k_R)
        self._om_R = np.complex128(-self._c * o_R)
        self._cp_R = np.empty(g.n_R, np.complex128)
        self._denom_R = np.empty(g.n_R, np.complex128)
        _kernels.thomas_factors(
            self._dp_R, self._op_R, self._op_R, self._cp_R, self._denom_R
        )

        # z solve: refactored whenever the vector potential changes
        self._k_z = 1.0 / (ham.mu_z * g.dz * g.dz)
        self._cp_z = np.empty(g.n_z, np.complex128)
        self._denom_z = np.empty(g.n_z, np.complex128)
        self._cached_A = None
        self._factor_z(0.0)

        if absorber is not None:
            self._absorb_tables = absorber.masks(g)
        else:
            self._absorb_tables = None

    def _factor_z(self, A: float) -> None:
        if A == self._cached_A:
            return
        u = -0.5 * self._k_z + 0.5j * A / self.grid.dz
        l = -0.5 * self._k_z - 0.5j * A / self.grid.dz
        c = self._c
        self._dp_z = np.complex128(1.0 + c * self._k_z)
        self._up_z = np.complex128(c * u)
        self._lp_z = np.complex128(c * l)
        self._dm_z = np.complex128(1.0 - c * self._k_z)
        self._um_z = np.complex128(-c * u)
        self._lm_z = np.complex128(-c * l)
        _kernels.thomas_factors(
            self._dp_z, self._up_z, self._lp_z, self._cp_z, self._denom_z
        )
        self._cached_A = A

    def vector_potential_at(self, t: float) -> float:
        if self.field is None:
            return 0.0
        return self.field.vector_potential(t)

    def step(self, psi: Wavefunction) -> None:
        """Advance psi by one dt in place."""
        if not psi.grid.same_mesh(self.grid):
            raise ValueError("wavefunction grid does not match propagator grid")
        if not self.imaginary:
            self._factor_z(self.vector_potential_at(psi.t + 0.5 * self.dt))
        _kernels.phase_multiply(psi.data, self.phase)
        _kernels.z_sweep(
            psi.data,
            self._dm_z,
            self._um_z,
            self._lm_z,
            self._lp_z,
            self._cp_z,
            self._denom_z,
        )
        _kernels.r_sweep(
            psi.data, self._dm_R, self._om_R, self._op_R, self._cp_R, self._denom_R
        )
        _kernels.phase_multiply(psi.data, self.phase)
        if self._absorb_tables is not None:
            mask_left, mask_right, i_right = self._absorb_tables
            removed = _kernels.absorb(psi.data, mask_left, mask_right, i_right)
            psi.absorbed += removed * self.grid.cell
        if not self.imaginary:
            psi.t += self.dt
        self.steps_taken += 1
        if self.steps_taken % self.check_interval == 0:
            if not np.isfinite(psi.data.view(np.float64)).all():
                raise PropagationError(
                    f"non-finite amplitudes after {self.steps_taken} steps "
                    f"(t = {psi.t:.3f}, dt = {self.dt})"
                )

    def run(self, psi: Wavefunction, n_steps: int) -> None:
        for _ in range(int(n_steps)):
            self.step(psi)


def apply_absorber(psi: Wavefunction, absorber: Absorber) -> tuple:
    """Apply the damping mask once; returns (psi, probability removed).

    Also adds the removed probability to psi.absorbed.
    """
    mask_left, mask_right, i_right = absorber.masks(psi.grid)
    removed = _kernels.absorb(psi.data, mask_left, mask_right, i_right)
    removed *= psi.grid.cell
    psi.absorbed += removed
    return psi, removed


@dataclass
class GroundStateResult:
    """Relaxed lowest eigenstate; residual is the last energy change seen."""

    psi: Wavefunction
    energy: float
    mean_R: float
    iterations: int
    residual: float
    energy_history: list = field(default_factory=list)


def _default_guess(grid: Grid2D) -> Wavefunction:
    z = grid.z[None, :]
    R = grid.R[:, None]
    z_c = 0.5 * (grid.z_min + grid.z_max)
    R_c = 2.6 if grid.R_min < 2.6 < grid.R_max else 0.5 * (grid.R_min + grid.R_max)
    data = np.exp(-0.5 * (z - z_c) ** 2 - 0.5 * ((R - R_c) / 0.3) ** 2)
    return Wavefunction(grid, data.astype(np.complex128))


def _mean_R(psi: Wavefunction) -> float:
    w = (psi.data.real**2 + psi.data.imag**2).sum(axis=1)
    tot = w.sum()
    return float((w @ psi.grid.R) / tot)


def solve_ground_state(
    grid: Grid2D,
    tol: float = 1e-10,
    max_iter: int = 20000,
    dt_imag: float = 0.05,
    hamiltonian: Hamiltonian | None = None,
    guess: Wavefunction | None = None,
) -> GroundStateResult:
    """Relax to the lowest eigenstate by imaginary time propagation.

    Starts with large steps for a quick descent (the iteration is
    unconditionally stable and its fixed point is dt independent up to
    the O(dt^2) splitting bias), then polishes at dt_imag until the
    energy moves by less than tol between checks.  On exit psi is unit
    norm with t = 0.
    """
    if tol <= 0 or dt_imag <= 0:
        raise ValueError("tol and dt_imag must be positive")
    ham = Hamiltonian(grid) if hamiltonian is None else hamiltonian
    psi = _default_guess(grid) if guess is None else guess.copy()
    normalize(psi)

    stages = [(s, max(tol, 1e-9), 4000) for s in (1.0, 0.3) if s > dt_imag]
    stages.append((dt_imag, tol, max_iter))

    total = 0
    energy = energy_expectation(ham, psi)
    history = [(0, energy)]
    residual = math.inf
    for dt_stage, stage_tol, stage_cap in stages:
        prop = Propagator(ham, dt=dt_stage, imaginary=True)
        e_prev = energy_expectation(ham, psi)
        steps = 0
        converged = False
        while steps < stage_cap and total < max_iter:
            for _ in range(10):
                prop.step(psi)
                normalize(psi)
            steps += 10
            total += 10
            e = energy_expectation(ham, psi)
            history.append((total, e))
            residual = abs(e - e_prev)
            if residual < stage_tol:
                converged = True
                break
            e_prev = e
        final_stage = dt_stage == stages[-1][0]
        if final_stage and not converged:
            raise ConvergenceError(
                f"ground state not converged after {total} iterations "
                f"(last energy change {residual:.3e}, tol {tol:.3e})",
                residual,
            )

    energy = energy_expectation(ham, psi)
    psi.t = 0.0
    psi.absorbed = 0.0
    return GroundStateResult(
        psi=psi,
        energy=energy,
        mean_R=_mean_R(psi),
        iterations=total,
        residual=residual,
        energy_history=history,
    )
