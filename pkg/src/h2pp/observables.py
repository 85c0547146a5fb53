"""Measured quantities extracted from a wavefunction.

The ionized region is defined per R line as |z| strictly greater than
10 + R/2; the cell sitting exactly on the boundary counts as bound
(conservative, and sub-cell placement is far below every tolerance
used downstream).  The same region partitions the grid for the yield,
its complement, and the momentum analysis, so the three bookkeeping
identities (region + complement = norm, Parseval) hold exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from h2pp import constants
from h2pp.core import Grid2D, Wavefunction

IONIZED_DISTANCE = 10.0


@dataclass(frozen=True)
class NuclearStats:
    """Internuclear-distance statistics of the z-integrated density."""

    t: float
    mean_R: float
    sigma_R: float
    norm: float


@dataclass
class MomentumSpectrum:
    """Photoelectron momentum distribution of the ionized region.

    density integrates to region_norm: sum(density) * dk == region_norm.
    k0 is the centroid of the dominant lobe (signed), delta_k the sigma
    of a Gaussian fitted over that lobe's full width at half maximum.
    """

    k_axis: np.ndarray
    density: np.ndarray
    k0: float
    delta_k: float
    region_norm: float

    @property
    def dk(self) -> float:
        return float(self.k_axis[1] - self.k_axis[0])


def ionized_region_mask(grid: Grid2D, distance: float = IONIZED_DISTANCE) -> np.ndarray:
    """Boolean (n_R, n_z) table marking |z| > distance + R/2."""
    bound = distance + grid.R[:, None] / 2.0
    return np.abs(grid.z)[None, :] > bound


def ionization_yield(psi: Wavefunction, distance: float = IONIZED_DISTANCE) -> float:
    """Probability beyond |z| = distance + R/2 plus anything already absorbed."""
    mask = ionized_region_mask(psi.grid, distance)
    dens = psi.data.real**2 + psi.data.imag**2
    return float(dens[mask].sum() * psi.grid.cell + psi.absorbed)


def bound_probability(psi: Wavefunction, distance: float = IONIZED_DISTANCE) -> float:
    """Probability in the complement of the ionized region (on grid)."""
    mask = ionized_region_mask(psi.grid, distance)
    dens = psi.data.real**2 + psi.data.imag**2
    return float(dens[~mask].sum() * psi.grid.cell)


def yield_converged(history, window: float = 50.0, tol: float = 1e-4) -> bool:
    """True when the yield stopped moving over the trailing time window.

    history is a sequence of (t, value) samples; converged means
    max - min over samples with t >= t_last - window is below tol
    relative to the largest magnitude in the window.  Needs at least
    two samples inside the window.
    """
    pts = list(history)
    if not pts:
        return False
    t_last = pts[-1][0]
    tail = [y for (t, y) in pts if t >= t_last - window]
    if len(tail) < 2:
        return False
    lo = min(tail)
    hi = max(tail)
    scale = max(abs(lo), abs(hi), 1e-12)
    return (hi - lo) < tol * scale


def nuclear_stats(psi: Wavefunction) -> NuclearStats:
    """<R> and sigma_R of the z-integrated, renormalized nuclear density."""
    g = psi.grid
    rho = (psi.data.real**2 + psi.data.imag**2).sum(axis=1) * g.dz
    total = float(rho.sum() * g.dR)
    if total <= 0.0:
        raise ValueError("cannot compute nuclear statistics of a zero-norm state")
    w = rho / rho.sum()
    mean = float(w @ g.R)
    var = float(w @ (g.R - mean) ** 2)
    return NuclearStats(t=psi.t, mean_R=mean, sigma_R=math.sqrt(max(var, 0.0)), norm=total)


def _lobe_window(density: np.ndarray, peak: int):
    """Index range [lo, hi] of the half-maximum lobe around `peak`."""
    half = density[peak] / 2.0
    lo = peak
    while lo > 0 and density[lo - 1] >= half:
        lo -= 1
    hi = peak
    n = density.size
    while hi < n - 1 and density[hi + 1] >= half:
        hi += 1
    return lo, hi


def momentum_spectrum(
    psi: Wavefunction, distance: float = IONIZED_DISTANCE
) -> MomentumSpectrum:
    """Fourier analysis of the ionized part of the wavefunction.

    The bound region is zeroed, each R line is Fourier transformed
    along z with continuum normalization dz/sqrt(2 pi), and the line
    densities are stacked with weight dR, giving dP/dk on the axis
    k_n = 2 pi n / (n_z dz).  Requires the masked packet to carry some
    probability and to sit away from the z edges (no wrap-around).
    """
    g = psi.grid
    mask = ionized_region_mask(g, distance)
    outer = np.where(mask, psi.data, 0.0)
    region_norm = float((outer.real**2 + outer.imag**2).sum() * g.cell)
    if region_norm < 1e-14:
        raise ValueError("no ionized amplitude in the analysis region")

    ft = np.fft.fft(outer, axis=1)
    density = (ft.real**2 + ft.imag**2).sum(axis=0)
    density *= g.dz * g.dz / (2.0 * math.pi) * g.dR
    k_axis = np.fft.fftshift(np.fft.fftfreq(g.n_z, d=g.dz)) * 2.0 * math.pi
    density = np.fft.fftshift(density)

    peak = int(np.argmax(density))
    lo, hi = _lobe_window(density, peak)
    sel = slice(lo, hi + 1)
    weight = density[sel]
    k0 = float((k_axis[sel] @ weight) / weight.sum())

    # log-parabola through the half-maximum window: exact for a Gaussian,
    # ignores the sin^2 side lobes a plain second moment would absorb
    if hi - lo >= 2:
        coef = np.polynomial.polynomial.polyfit(
            k_axis[sel], np.log(weight), 2, w=np.sqrt(weight)
        )
        curv = coef[2]
    else:
        curv = 0.0
    if curv < 0.0:
        delta_k = float(1.0 / math.sqrt(-2.0 * curv))
    else:
        # degenerate lobe (too narrow for a fit): fall back to the moment
        var = float((weight @ (k_axis[sel] - k0) ** 2) / weight.sum())
        delta_k = math.sqrt(max(var, 0.0))

    return MomentumSpectrum(
        k_axis=k_axis,
        density=density,
        k0=k0,
        delta_k=delta_k,
        region_norm=region_norm,
    )


def partial_yield(spec: MomentumSpectrum, k_center: float, delta_k_window: float) -> float:
    """Integral of dP/dk over [k_center - w/2, k_center + w/2].

    Trapezoid rule with interpolated endpoints, so a zero-width window
    is exactly 0 and the full axis recovers the region norm up to the
    (negligible) half-cells at the two axis ends.
    """
    if delta_k_window < 0:
        raise ValueError("window width must be non-negative")
    k = spec.k_axis
    if not k[0] <= k_center <= k[-1]:
        raise ValueError(f"k_center {k_center} outside spectrum axis [{k[0]}, {k[-1]}]")
    lo = k_center - 0.5 * delta_k_window
    hi = k_center + 0.5 * delta_k_window
    if hi < k[0] or lo > k[-1]:
        raise ValueError("integration window lies outside the spectrum axis")
    lo = max(lo, float(k[0]))
    hi = min(hi, float(k[-1]))
    if hi <= lo:
        return 0.0
    inner = (k > lo) & (k < hi)
    xs = np.concatenate(([lo], k[inner], [hi]))
    ys = np.concatenate(
        ([np.interp(lo, k, spec.density)], spec.density[inner], [np.interp(hi, k, spec.density)])
    )
    return float(np.trapezoid(ys, xs))


def _fmt(x) -> str:
    return repr(float(x))


def write_stats_csv(path, rows) -> None:
    """rows: iterable of (t_au, norm, mean_R, sigma_R, energy)."""
    with open(path, "w") as f:
        f.write("t_au,t_fs,norm,mean_R,sigma_R,energy\n")
        for t, nrm, mean_R, sigma_R, energy in rows:
            f.write(
                ",".join(
                    [
                        _fmt(t),
                        _fmt(constants.au_to_fs(t)),
                        _fmt(nrm),
                        _fmt(mean_R),
                        _fmt(sigma_R),
                        _fmt(energy),
                    ]
                )
                + "\n"
            )


def write_spectrum_csv(path, spec: MomentumSpectrum) -> None:
    with open(path, "w") as f:
        f.write("k_au,dPdk\n")
        for k, d in zip(spec.k_axis, spec.density):
            f.write(f"{_fmt(k)},{_fmt(d)}\n")


def write_yield_csv(path, records) -> None:
    """records: iterable with .tau, .yield_, .k0, .delta_k attributes."""
    with open(path, "w") as f:
        f.write("# delay = pump start to probe start, atomic units and femtoseconds\n")
        f.write("delay_au,delay_fs,yield,k0,delta_k\n")
        for r in records:
            f.write(
                ",".join(
                    [
                        _fmt(r.tau),
                        _fmt(constants.au_to_fs(r.tau)),
                        _fmt(r.yield_),
                        _fmt(r.k0),
                        _fmt(r.delta_k),
                    ]
                )
                + "\n"
            )
