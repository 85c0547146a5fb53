"""Analytic two-center interference model and parameter retrieval.

The ionization yield of a dissociating packet probed at delay tau is
modeled as

    Y(tau) = C * [1 + (1/D) cos(k0*R0/D^2 + Phi)
                      * exp(-(R0^2 dk^2 + k0^2 dR^2) / (2 D^2))]

with D = sqrt(1 + dk^2 dR^2), where R0(tau) = 2 v tau + R_c is the
packet center (v is the per-proton velocity, so the separation grows
at 2v) and dR(tau) = sqrt(1 + 4 tau^2 dkp^4 / m_p^2)/(2 dkp) + dR_c
is its free-dispersion width.  The closed form is the exact Gaussian
average of 1 + cos(k R + Phi) over independent k and R Gaussians; the
test suite checks it against direct 2D quadrature.

The printed model carries a sign ambiguity in front of the cosine; it
is absorbable into Phi (shift by pi), so only the + branch is
implemented and Phi is free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import lombscargle

from h2pp import constants


@dataclass(frozen=True)
class InterferenceModelParams:
    """Two-slit yield model parameters.

    k0/delta_k: photoelectron momentum center and spread (fixed inputs,
    measurable from a spectrum); Phi: total phase constant; C: overall
    amplitude; v: per-proton velocity; R_c and delta_R_c: offsets of the
    linearized center and width laws; delta_k_p: relative proton
    momentum spread driving dispersion; m_p: reduced proton pair mass.
    """

    k0: float
    delta_k: float
    Phi: float
    C: float
    v: float
    R_c: float
    delta_R_c: float
    delta_k_p: float
    m_p: float = constants.M_P

    def __post_init__(self):
        if self.delta_k < 0:
            raise ValueError(f"delta_k must be >= 0, got {self.delta_k}")
        if self.delta_k_p <= 0:
            raise ValueError(f"delta_k_p must be positive, got {self.delta_k_p}")
        if self.C <= 0:
            raise ValueError(f"C must be positive, got {self.C}")
        if self.m_p <= 0:
            raise ValueError(f"m_p must be positive, got {self.m_p}")


def modulation_bare(k, R, Phi):
    """Point-source two-slit factor 1 + cos(kR + Phi), in [0, 2]."""
    return 1.0 + np.cos(k * np.asarray(R, dtype=float) + Phi)


def modulation_convolved(p: InterferenceModelParams, R0, delta_R):
    """Two-slit factor averaged over Gaussian k and R distributions.

    Exact closed form of the double Gaussian average; only delta_R^2
    enters, so the sign of delta_R is irrelevant.  Reduces to
    modulation_bare(k0, R0, Phi) when delta_k = delta_R = 0.
    """
    R0 = np.asarray(R0, dtype=float)
    delta_R = np.asarray(delta_R, dtype=float)
    D2 = 1.0 + p.delta_k**2 * delta_R**2
    expo = (R0**2 * p.delta_k**2 + p.k0**2 * delta_R**2) / (2.0 * D2)
    contrast = np.exp(-expo) / np.sqrt(D2)
    return 1.0 + contrast * np.cos(p.k0 * R0 / D2 + p.Phi)


def contrast_factor(p: InterferenceModelParams, R0, delta_R):
    """Oscillation amplitude (1/D) exp(...) in modulation_convolved."""
    R0 = np.asarray(R0, dtype=float)
    delta_R = np.asarray(delta_R, dtype=float)
    D2 = 1.0 + p.delta_k**2 * delta_R**2
    expo = (R0**2 * p.delta_k**2 + p.k0**2 * delta_R**2) / (2.0 * D2)
    return np.exp(-expo) / np.sqrt(D2)


def R0_of_tau(p: InterferenceModelParams, tau):
    """Packet center: R0(tau) = 2 v tau + R_c (slope exactly 2v)."""
    return 2.0 * p.v * np.asarray(tau, dtype=float) + p.R_c


def deltaR_of_tau(p: InterferenceModelParams, tau):
    """Free-dispersion width law plus constant offset delta_R_c."""
    tau = np.asarray(tau, dtype=float)
    disp = np.sqrt(1.0 + 4.0 * tau**2 * p.delta_k_p**4 / p.m_p**2)
    return disp / (2.0 * p.delta_k_p) + p.delta_R_c


def model_yield(p: InterferenceModelParams, tau):
    """C times the convolved modulation at delay tau."""
    return p.C * modulation_convolved(p, R0_of_tau(p, tau), deltaR_of_tau(p, tau))


def model_envelope(p: InterferenceModelParams, tau):
    """(lower, upper) bands C*(1 -+ contrast): the cos term at -+1."""
    c = contrast_factor(p, R0_of_tau(p, tau), deltaR_of_tau(p, tau))
    return p.C * (1.0 - c), p.C * (1.0 + c)


def _as_samples(samples):
    arr = np.asarray(list(samples), dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("samples must be a sequence of (tau, yield) pairs")
    order = np.argsort(arr[:, 0], kind="stable")
    return arr[order, 0], arr[order, 1]


def _moving_mean(t, y, width):
    out = np.empty_like(y)
    half = 0.5 * width
    for i, ti in enumerate(t):
        sel = np.abs(t - ti) <= half
        out[i] = y[sel].mean()
    return out


def dominant_frequency(samples, n_grid: int = 4000):
    """Strongest oscillation (angular frequency, uncertainty) in the data.

    Two-stage estimate for possibly non-uniform tau samples: first a
    least-squares periodogram of the quadratic-detrended data locates
    the peak, then the slow trend is removed with a moving mean one
    period wide (which passes the oscillation untouched) and the
    periodogram is re-evaluated.  The uncertainty is the half width at
    half maximum of the final peak.
    """
    t, y = _as_samples(samples)
    if t.size < 8:
        raise ValueError(f"need at least 8 samples, got {t.size}")
    span = t[-1] - t[0]
    if span <= 0:
        raise ValueError("samples must span a nonzero delay range")
    if np.ptp(y) == 0.0:
        raise ValueError("constant input has no dominant frequency")

    gaps = np.diff(t)
    # median gap sets the usable pseudo-Nyquist; the minimum gap would let
    # a single pair of near-coincident samples blow up the search range
    typ_gap = float(np.median(gaps[gaps > 0]))
    w_lo = math.pi / span
    w_hi = math.pi / typ_gap
    freqs = np.linspace(w_lo, w_hi, n_grid)

    coeffs = np.polyfit(t, y, 2)
    stage1 = y - np.polyval(coeffs, t)
    if np.ptp(stage1) <= 1e-10 * max(np.ptp(y), abs(float(np.mean(y)))):
        raise ValueError("input is a pure quadratic trend, no oscillation")
    power = lombscargle(t, stage1, freqs)
    w1 = freqs[int(np.argmax(power))]

    period = 2.0 * math.pi / w1
    detrended = y - _moving_mean(t, y, min(period, span))
    if np.ptp(detrended) == 0.0:
        detrended = stage1
    power = lombscargle(t, detrended, freqs)
    peak = int(np.argmax(power))
    omega = float(freqs[peak])

    if span * omega / (2.0 * math.pi) < 1.5:
        raise ValueError(
            f"delay span {span:.3g} covers fewer than 1.5 periods of the "
            f"dominant frequency {omega:.3g}"
        )

    half = power[peak] / 2.0
    lo = peak
    while lo > 0 and power[lo - 1] >= half:
        lo -= 1
    hi = peak
    while hi < power.size - 1 and power[hi + 1] >= half:
        hi += 1
    uncertainty = float(0.5 * (freqs[hi] - freqs[lo]))
    if uncertainty == 0.0:
        uncertainty = float(freqs[1] - freqs[0])
    return omega, uncertainty


def retrieve_velocity(freq: float, k0: float, freq_err: float = 0.0, k0_err: float = 0.0):
    """Per-proton velocity v = freq / (2 k0) with propagated uncertainty."""
    if k0 == 0.0:
        raise ValueError("k0 must be nonzero to retrieve a velocity")
    v = freq / (2.0 * k0)
    err = math.hypot(freq_err / (2.0 * k0), freq * k0_err / (2.0 * k0 * k0))
    return v, abs(err)


def wrap_phase(phi: float) -> float:
    """Map an angle to (-pi, pi]."""
    w = math.fmod(phi + math.pi, 2.0 * math.pi)
    if w <= 0.0:
        w += 2.0 * math.pi
    return w - math.pi


@dataclass
class FitResult:
    """Outcome of fit_interference."""

    params: InterferenceModelParams
    uncertainties: dict
    residual_rms: float
    converged: bool
    iterations: int
    frequency: float
    frequency_err: float
    frozen_v: bool

    def model(self, tau):
        return model_yield(self.params, tau)

    def envelope(self, tau):
        return model_envelope(self.params, tau)


def default_delta_k_p(sigma_R0: float) -> float:
    """Heuristic proton momentum spread from the initial packet width.

    Minimum-uncertainty estimate 1/(2 sigma_R); override with a measured
    value whenever one exists.
    """
    if sigma_R0 <= 0:
        raise ValueError("sigma_R0 must be positive")
    return 1.0 / (2.0 * sigma_R0)


_FIT_NAMES = ("C", "v", "R_c", "delta_R_c", "Phi")


def fit_interference(
    samples,
    k0: float,
    delta_k: float,
    delta_k_p: float | None = None,
    m_p: float = constants.M_P,
    init: InterferenceModelParams | None = None,
    freeze_v: bool = False,
    sigma_R0: float | None = None,
    max_iter: int = 500,
) -> FitResult:
    """Least-squares retrieval of (C, v, R_c, delta_R_c, Phi) from a scan.

    k0, delta_k, delta_k_p, m_p stay fixed (they are measurable
    independently); delta_k_p falls back to default_delta_k_p(sigma_R0)
    when not given.  Initial values come from the dominant oscillation
    frequency (v), the mean yield (C), and the phase of the best
    sinusoid at that frequency (Phi), unless an explicit init is
    passed.  freeze_v pins v at its initial value, mirroring a
    retrieval where the velocity is taken from the frequency alone.
    """
    t, y = _as_samples(samples)
    if t.size < 12:
        raise ValueError(f"need at least 12 samples to fit, got {t.size}")
    for name, val in (("k0", k0), ("delta_k", delta_k), ("m_p", m_p)):
        if not math.isfinite(val):
            raise ValueError(f"fixed input {name} must be finite")
    if delta_k_p is None:
        if sigma_R0 is None:
            raise ValueError("provide delta_k_p or sigma_R0 to derive it from")
        delta_k_p = default_delta_k_p(sigma_R0)

    omega, omega_err = dominant_frequency(list(zip(t, y)))
    span = t[-1] - t[0]
    if span * omega / (2.0 * math.pi) < 2.0:
        raise ValueError(
            f"delay span {span:.3g} covers fewer than 2 periods of the "
            f"dominant frequency {omega:.3g}; fit is degenerate"
        )

    if init is not None:
        starts = [replace(init, k0=k0, delta_k=delta_k, delta_k_p=delta_k_p, m_p=m_p)]
    else:
        v0, _ = retrieve_velocity(omega, k0, omega_err)
        C0 = float(np.mean(y))
        if C0 <= 0:
            C0 = max(float(np.max(np.abs(y))), 1e-30)
        # linear solve for y ~ c + a cos(w t) + b sin(w t) gives the
        # starting phase of the cosine
        basis = np.column_stack([np.ones_like(t), np.cos(omega * t), np.sin(omega * t)])
        sol, *_ = np.linalg.lstsq(basis, y, rcond=None)
        phi0 = wrap_phase(math.atan2(-sol[2], sol[1]))
        base = InterferenceModelParams(
            k0=k0,
            delta_k=delta_k,
            Phi=phi0,
            C=C0,
            v=v0,
            R_c=0.0,
            delta_R_c=0.0,
            delta_k_p=delta_k_p,
            m_p=m_p,
        )
        # R_c and Phi trade off along k0*R_c + Phi = const, with near-copies
        # of the optimum every 2 pi / k0 in R_c; start once per alias so the
        # envelope (which does tell them apart) picks the right basin
        alias = 2.0 * math.pi / abs(k0)
        starts = [
            replace(base, R_c=j * alias, Phi=wrap_phase(phi0 - k0 * j * alias))
            for j in (0, -1, 1, -2, 2)
        ]

    free = [n for n in _FIT_NAMES if not (freeze_v and n == "v")]
    p0 = starts[0]

    def build(x):
        kw = dict(zip(free, x))
        if freeze_v:
            kw["v"] = p0.v
        return replace(p0, **kw)

    def residuals(x):
        return model_yield(build(x), t) - y

    lower = np.full(len(free), -np.inf)
    upper = np.full(len(free), np.inf)
    lower[free.index("C")] = 1e-30 * max(abs(p0.C), 1.0)

    res = None
    for start in starts:
        x0 = np.array([getattr(start, n) for n in free], dtype=float)
        trial = least_squares(
            residuals,
            x0,
            method="trf",
            bounds=(lower, upper),
            ftol=1e-10,
            xtol=1e-12,
            gtol=1e-12,
            diff_step=1e-6,
            x_scale="jac",
            max_nfev=max_iter,
        )
        if res is None or trial.cost < res.cost:
            res = trial

    fitted = build(res.x)
    fitted = replace(fitted, Phi=wrap_phase(fitted.Phi))
    rms = float(math.sqrt(np.mean(res.fun**2)))

    dof = max(t.size - res.x.size, 1)
    s2 = float(2.0 * res.cost / dof)
    jtj = res.jac.T @ res.jac
    cov = np.linalg.pinv(jtj) * s2
    sig = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    uncertainties = dict(zip(free, sig.tolist()))
    if freeze_v:
        _, v_err = retrieve_velocity(omega, k0, omega_err)
        uncertainties["v"] = v_err

    return FitResult(
        params=fitted,
        uncertainties=uncertainties,
        residual_rms=rms,
        converged=bool(res.status > 0),
        iterations=int(res.nfev),
        frequency=omega,
        frequency_err=omega_err,
        frozen_v=freeze_v,
    )


def _fmt(x) -> str:
    return repr(float(x))


def write_fit_csv(path, result: FitResult) -> None:
    """fit.csv: one (parameter, value, uncertainty) row per quantity."""
    p = result.params
    rows = [
        ("C", p.C, result.uncertainties.get("C", 0.0)),
        ("v", p.v, result.uncertainties.get("v", 0.0)),
        ("R_c", p.R_c, result.uncertainties.get("R_c", 0.0)),
        ("delta_R_c", p.delta_R_c, result.uncertainties.get("delta_R_c", 0.0)),
        ("Phi", p.Phi, result.uncertainties.get("Phi", 0.0)),
        ("k0", p.k0, 0.0),
        ("delta_k", p.delta_k, 0.0),
        ("delta_k_p", p.delta_k_p, 0.0),
        ("m_p", p.m_p, 0.0),
        ("omega_au", result.frequency, result.frequency_err),
        ("residual_rms", result.residual_rms, 0.0),
    ]
    with open(path, "w") as f:
        f.write("parameter,value,uncertainty\n")
        for name, val, unc in rows:
            f.write(f"{name},{_fmt(val)},{_fmt(unc)}\n")


def write_fit_curve_csv(path, result: FitResult, samples, n_curve: int = 400) -> None:
    """fit_curve.csv: data points plus model/envelope on a dense tau grid.

    Rows at sample taus carry the measured yield; the dense grid rows
    carry an empty data field so plotting tools can overlay both.
    """
    t, y = _as_samples(samples)
    dense = np.linspace(t[0], t[-1], n_curve)
    taus = np.unique(np.concatenate([t, dense]))
    data_at = dict(zip(t.tolist(), y.tolist()))
    with open(path, "w") as f:
        f.write("tau,data,model,envelope_hi,envelope_lo\n")
        for tau in taus:
            m = float(model_yield(result.params, tau))
            lo, hi = model_envelope(result.params, tau)
            d = data_at.get(float(tau))
            d_str = _fmt(d) if d is not None else ""
            f.write(f"{_fmt(tau)},{d_str},{_fmt(m)},{_fmt(float(hi))},{_fmt(float(lo))}\n")
