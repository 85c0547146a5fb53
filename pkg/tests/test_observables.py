"""Yield bookkeeping, nuclear statistics, and the momentum analysis."""

import math

import numpy as np
import pytest

from h2pp.core import Wavefunction, make_grid, norm, normalize
from h2pp.observables import (
    IONIZED_DISTANCE,
    bound_probability,
    ionization_yield,
    ionized_region_mask,
    momentum_spectrum,
    nuclear_stats,
    partial_yield,
    write_spectrum_csv,
    write_stats_csv,
    write_yield_csv,
    yield_converged,
)


def analysis_grid():
    return make_grid(z_min=-60.0, z_max=60.0, dz=0.25, R_min=1.0, R_max=6.0, dR=0.25,
                     dt=0.05)


def outgoing_packet(grid, z0=35.0, sz=3.0, k0=0.9, R0=3.0, sR=0.5):
    """Gaussian fully inside the ionized region, drifting at k0."""
    z = grid.z[None, :]
    R = grid.R[:, None]
    data = np.exp(-((z - z0) ** 2) / (4 * sz**2) - ((R - R0) ** 2) / (4 * sR**2))
    data = data * np.exp(1j * k0 * z)
    w = Wavefunction(grid, data.astype(np.complex128))
    normalize(w)
    return w


def test_region_mask_geometry():
    g = make_grid(-20.0, 20.0, 0.5, 1.0, 6.0, 0.5, dt=0.05)
    mask = ionized_region_mask(g)
    expected = np.abs(g.z)[None, :] > (IONIZED_DISTANCE + g.R[:, None] / 2.0)
    assert np.array_equal(mask, expected)
    # the cell exactly on the separatrix counts as bound (strict >)
    j = int(np.argmin(np.abs(g.R - 2.0)))
    i = int(np.argmin(np.abs(g.z - 11.0)))
    assert g.R[j] == 2.0 and g.z[i] == 11.0
    assert not mask[j, i]
    assert mask[j, i + 1]


def test_yield_plus_bound_is_norm():
    g = analysis_grid()
    rng = np.random.default_rng(2)
    w = Wavefunction(g, rng.standard_normal((g.n_R, g.n_z))
                     + 1j * rng.standard_normal((g.n_R, g.n_z)))
    total = norm(w)
    assert ionization_yield(w) + bound_probability(w) == pytest.approx(total, rel=1e-13)


def test_yield_includes_absorbed_probability():
    g = analysis_grid()
    w = outgoing_packet(g)
    base = ionization_yield(w)
    w.absorbed = 0.125
    assert ionization_yield(w) == pytest.approx(base + 0.125)


def test_momentum_spectrum_gaussian_oracle():
    """Drifting Gaussian: centroid k0 and width 1/(2 sigma_z), Parseval."""
    g = analysis_grid()
    k0, sz = 0.9, 3.0
    w = outgoing_packet(g, k0=k0, sz=sz)
    spec = momentum_spectrum(w)
    # centroid quantization from the half-maximum window edges is ~dk/4
    assert spec.k0 == pytest.approx(k0, abs=0.6 * spec.dk)
    assert spec.delta_k == pytest.approx(1.0 / (2.0 * sz), rel=1e-3)
    assert float(spec.density.sum() * spec.dk) == pytest.approx(spec.region_norm,
                                                                rel=1e-12)
    assert spec.region_norm == pytest.approx(ionization_yield(w), rel=1e-9)
    # axis is the fftshifted FFT frequency grid
    assert spec.k_axis[0] < 0 < spec.k_axis[-1]
    assert spec.dk == pytest.approx(2.0 * math.pi / (g.n_z * g.dz))


def test_momentum_spectrum_signed_direction():
    g = analysis_grid()
    left = outgoing_packet(g, z0=-35.0, k0=-1.2)
    spec = momentum_spectrum(left)
    assert spec.k0 == pytest.approx(-1.2, abs=0.6 * spec.dk)


def test_momentum_spectrum_parseval_for_rough_state():
    """FFT unitarity does not care about packet smoothness."""
    g = analysis_grid()
    rng = np.random.default_rng(4)
    w = Wavefunction(g, rng.standard_normal((g.n_R, g.n_z))
                     + 1j * rng.standard_normal((g.n_R, g.n_z)))
    spec = momentum_spectrum(w)
    assert float(spec.density.sum() * spec.dk) == pytest.approx(spec.region_norm,
                                                                rel=1e-12)


def test_momentum_spectrum_requires_ionized_amplitude():
    g = analysis_grid()
    z = g.z[None, :]
    R = g.R[:, None]
    bound_only = Wavefunction(
        g, np.exp(-(z**2) - ((R - 2.6) ** 2) / 0.2).astype(np.complex128)
    )
    normalize(bound_only)
    with pytest.raises(ValueError, match="ionized"):
        momentum_spectrum(bound_only)


def test_partial_yield_gaussian_window():
    """Window integral matches the Gaussian error-function closed form."""
    g = analysis_grid()
    k0, sz = 0.9, 3.0
    w = outgoing_packet(g, k0=k0, sz=sz)
    spec = momentum_spectrum(w)
    sk = 1.0 / (2.0 * sz)
    width = 0.3
    expected = spec.region_norm * math.erf(width / (2.0 * math.sqrt(2.0) * sk))
    assert partial_yield(spec, k0, width) == pytest.approx(expected, rel=1e-2)


def test_partial_yield_limits_and_validation():
    g = analysis_grid()
    spec = momentum_spectrum(outgoing_packet(g))
    assert partial_yield(spec, 0.9, 0.0) == 0.0
    span = float(spec.k_axis[-1] - spec.k_axis[0])
    assert partial_yield(spec, 0.0, 2 * span) == pytest.approx(spec.region_norm,
                                                               rel=1e-9)
    with pytest.raises(ValueError):
        partial_yield(spec, 0.9, -0.1)
    with pytest.raises(ValueError):
        partial_yield(spec, spec.k_axis[-1] + 1.0, 0.1)


def test_nuclear_stats_gaussian_oracle():
    g = make_grid(-10.0, 10.0, 0.25, 0.5, 5.5, 0.05, dt=0.05)
    z = g.z[None, :]
    R = g.R[:, None]
    R0, sR = 3.0, 0.4
    w = Wavefunction(
        g, np.exp(-(z**2) / 4.0 - ((R - R0) ** 2) / (4 * sR**2)).astype(np.complex128)
    )
    w.t = 7.5
    stats = nuclear_stats(w)
    assert stats.t == 7.5
    assert stats.mean_R == pytest.approx(R0, abs=1e-9)
    assert stats.sigma_R == pytest.approx(sR, rel=1e-4)
    assert stats.norm == pytest.approx(norm(w), rel=1e-12)


def test_nuclear_stats_rejects_zero_state():
    g = analysis_grid()
    w = Wavefunction(g, np.zeros((g.n_R, g.n_z), dtype=np.complex128))
    with pytest.raises(ValueError):
        nuclear_stats(w)


def test_yield_converged_logic():
    assert not yield_converged([])
    assert not yield_converged([(0.0, 1.0)])
    flat = [(t, 0.5) for t in range(0, 200, 10)]
    assert yield_converged(flat, window=50.0, tol=1e-4)
    # relative tolerance: tiny absolute wobble on a tiny yield still converges
    small = [(float(t), 1e-6 + 1e-12 * (t % 2)) for t in range(0, 200, 10)]
    assert yield_converged(small, window=50.0, tol=1e-4)
    # growth confined to the trailing window blocks convergence
    growing = [(float(t), 0.5 + 0.01 * (t >= 160)) for t in range(0, 200, 10)]
    assert not yield_converged(growing, window=50.0, tol=1e-4)
    # ... but falls out of sight once the window slides past it
    later = growing + [(float(t), 0.51) for t in range(200, 320, 10)]
    assert yield_converged(later, window=50.0, tol=1e-4)


def test_stats_csv_roundtrip(tmp_path):
    rows = [(0.0, 1.0, 2.6, 0.24, -0.77), (5.0, 0.999, 2.7, 0.25, -0.76)]
    path = tmp_path / "stats.csv"
    write_stats_csv(path, rows)
    lines = path.read_text().splitlines()
    assert lines[0] == "t_au,t_fs,norm,mean_R,sigma_R,energy"
    data = np.genfromtxt(path, delimiter=",", names=True)
    assert data["t_au"].tolist() == [0.0, 5.0]
    assert data["mean_R"].tolist() == [2.6, 2.7]
    # femtosecond column derives from the atomic-unit column
    assert data["t_fs"][1] == pytest.approx(5.0 * 0.02418884)


def test_spectrum_csv_roundtrip(tmp_path):
    g = analysis_grid()
    spec = momentum_spectrum(outgoing_packet(g))
    path = tmp_path / "spectrum.csv"
    write_spectrum_csv(path, spec)
    data = np.genfromtxt(path, delimiter=",", names=True)
    assert data.dtype.names == ("k_au", "dPdk")
    np.testing.assert_array_equal(data["k_au"], spec.k_axis)
    np.testing.assert_array_equal(data["dPdk"], spec.density)


def test_yield_csv_format(tmp_path):
    class Row:
        def __init__(self, tau, y, k0, dk):
            self.tau, self.yield_, self.k0, self.delta_k = tau, y, k0, dk

    path = tmp_path / "yield.csv"
    write_yield_csv(path, [Row(100.0, 1e-4, 0.85, 0.08), Row(150.0, 2e-4, 0.86, 0.09)])
    lines = path.read_text().splitlines()
    assert lines[0].startswith("#")
    assert lines[1] == "delay_au,delay_fs,yield,k0,delta_k"
    data = np.genfromtxt(path, delimiter=",", names=True, skip_header=1)
    assert data["yield"].tolist() == [1e-4, 2e-4]
    assert data["delay_fs"][0] == pytest.approx(100.0 * 0.02418884)
