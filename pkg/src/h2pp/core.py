"""Simulation grid and wavefunction containers plus checkpoint I/O.

The wavefunction is stored R-major: ``data[j, i]`` is psi(z_i, R_j), so a
row is one contiguous z-line.  All integrals use the plain midpoint sum
``sum(...) * dz * dR``; boundary values are treated as zero by the
propagation stencils, so midpoint and trapezoid sums coincide.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

CHECKPOINT_MAGIC = b"H2PWF1\x00\x00"
_HEADER = struct.Struct("<8sII7d")  # magic, n_R, n_z, z_min, dz, R_min, dR, dt, t, norm


class GridError(ValueError):
    """Invalid grid parameters."""


@dataclass(frozen=True)
class Grid2D:
    """Uniform (z, R) simulation box.

    Point counts are inclusive of both endpoints:
    ``n_z = round((z_max - z_min)/dz) + 1`` and likewise for R, so the
    full-size box z in [-409.6, 409.6] at dz=0.1 has 8193 points.
    """

    z_min: float
    z_max: float
    dz: float
    R_min: float
    R_max: float
    dR: float
    n_z: int
    n_R: int
    dt: float

    @property
    def z(self) -> np.ndarray:
        return self.z_min + np.arange(self.n_z) * self.dz

    @property
    def R(self) -> np.ndarray:
        return self.R_min + np.arange(self.n_R) * self.dR

    @property
    def cell(self) -> float:
        """Area element dz*dR of one grid cell."""
        return self.dz * self.dR

    def same_mesh(self, other: "Grid2D") -> bool:
        return (
            self.n_z == other.n_z
            and self.n_R == other.n_R
            and self.z_min == other.z_min
            and self.dz == other.dz
            and self.R_min == other.R_min
            and self.dR == other.dR
        )


def make_grid(
    z_min: float,
    z_max: float,
    dz: float,
    R_min: float,
    R_max: float,
    dR: float,
    dt: float = 0.02,
) -> Grid2D:
    """Build a validated grid; rejects non-positive spacings, inverted bounds,
    non-positive R_min and axes shorter than 8 points."""
    if dz <= 0 or dR <= 0 or dt <= 0:
        raise GridError(f"spacings must be positive: dz={dz}, dR={dR}, dt={dt}")
    if z_max <= z_min:
        raise GridError(f"z bounds inverted: [{z_min}, {z_max}]")
    if R_max <= R_min:
        raise GridError(f"R bounds inverted: [{R_min}, {R_max}]")
    if R_min <= 0:
        raise GridError(f"R_min must be positive, got {R_min}")
    n_z = int(round((z_max - z_min) / dz)) + 1
    n_R = int(round((R_max - R_min) / dR)) + 1
    if n_z < 8 or n_R < 8:
        raise GridError(f"axes need at least 8 points, got n_z={n_z}, n_R={n_R}")
    return Grid2D(z_min, z_max, dz, R_min, R_max, dR, n_z, n_R, dt)


@dataclass
class Wavefunction:
    """Complex field psi(z, R, t) on a grid.

    ``absorbed`` accumulates probability removed by the absorbing mask
    since this state was created or loaded (it is bookkeeping, not part
    of the checkpoint format).
    """

    grid: Grid2D
    data: np.ndarray
    t: float = 0.0
    absorbed: float = 0.0

    def __post_init__(self):
        if self.data.shape != (self.grid.n_R, self.grid.n_z):
            raise ValueError(
                f"data shape {self.data.shape} does not match grid "
                f"({self.grid.n_R}, {self.grid.n_z})"
            )
        if self.data.dtype != np.complex128:
            self.data = self.data.astype(np.complex128)

    def copy(self) -> "Wavefunction":
        return Wavefunction(self.grid, self.data.copy(), self.t, self.absorbed)


def zeros_like_grid(grid: Grid2D) -> Wavefunction:
    return Wavefunction(grid, np.zeros((grid.n_R, grid.n_z), dtype=np.complex128))


def norm(psi: Wavefunction) -> float:
    """Total probability sum(|psi|^2) dz dR."""
    d = psi.data
    return float(np.sum(d.real * d.real + d.imag * d.imag)) * psi.grid.cell


def inner_product(a: Wavefunction, b: Wavefunction) -> complex:
    """<a|b> = sum(conj(a) * b) dz dR; raises on mismatched grids."""
    if not a.grid.same_mesh(b.grid):
        raise ValueError("inner_product: wavefunctions live on different grids")
    return complex(np.vdot(a.data, b.data)) * a.grid.cell


def normalize(psi: Wavefunction) -> float:
    """Scale psi to unit norm in place; returns the original norm."""
    n = norm(psi)
    if n <= 0.0:
        raise ValueError("cannot normalize a zero wavefunction")
    psi.data *= 1.0 / np.sqrt(n)
    return n


def write_checkpoint(psi: Wavefunction, path) -> None:
    """Write the bit-exact binary snapshot (little-endian, R-major)."""
    g = psi.grid
    header = _HEADER.pack(
        CHECKPOINT_MAGIC, g.n_R, g.n_z, g.z_min, g.dz, g.R_min, g.dR, g.dt,
        psi.t, norm(psi),
    )
    data = np.ascontiguousarray(psi.data, dtype=np.complex128)
    with open(path, "wb") as f:
        f.write(header)
        f.write(data.astype("<c16", copy=False).tobytes())


def read_checkpoint(path) -> Wavefunction:
    """Read a snapshot written by :func:`write_checkpoint`."""
    with open(path, "rb") as f:
        raw = f.read(_HEADER.size)
        if len(raw) != _HEADER.size:
            raise ValueError(f"checkpoint {path}: truncated header")
        magic, n_R, n_z, z_min, dz, R_min, dR, dt, t, _stored_norm = _HEADER.unpack(raw)
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"checkpoint {path}: bad magic {magic!r}")
        payload = f.read(16 * n_R * n_z)
    if len(payload) != 16 * n_R * n_z:
        raise ValueError(f"checkpoint {path}: truncated payload")
    data = np.frombuffer(payload, dtype="<c16").reshape(n_R, n_z).astype(np.complex128)
    grid = make_grid(
        z_min, z_min + (n_z - 1) * dz, dz,
        R_min, R_min + (n_R - 1) * dR, dR, dt,
    )
    if grid.n_z != n_z or grid.n_R != n_R:
        raise ValueError(f"checkpoint {path}: inconsistent axis metadata")
    return Wavefunction(grid, data, t=t)
