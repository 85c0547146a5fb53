"""Pump-probe orchestration: ground state, pump, dissociation, delay scan.

Timeline convention: t = 0 at pump start; the delay tau of a probe is
the time from pump start to probe start.  Requested checkpoint/delay
times are snapped to the nearest integer step of the propagation and
the snapped value is what gets recorded, so resuming from a checkpoint
reproduces a straight-through run bit for bit (same step count, same
floating-point order).

The pump and the field-free dissociation are computed once and shared
by all delays: there is no field between the pulses, so restarting the
probe from a checkpoint is mathematically identical to independent
full runs, at a fraction of the cost.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from h2pp import constants
from h2pp.core import (
    Grid2D,
    Wavefunction,
    norm,
    read_checkpoint,
    write_checkpoint,
)
from h2pp.model import FieldConfig, PulseSpec
from h2pp.observables import (
    ionization_yield,
    momentum_spectrum,
    nuclear_stats,
    write_stats_csv,
    write_yield_csv,
    yield_converged,
)
from h2pp.propagator import (
    Absorber,
    Hamiltonian,
    Propagator,
    energy_expectation,
    project_out,
    solve_ground_state,
)


@dataclass
class ScanPlan:
    """Everything needed to run a full delay scan on one grid."""

    grid: Grid2D
    pump: PulseSpec
    probe: PulseSpec
    delays: list
    absorber: Absorber | None = None
    out_dir: str = "out"
    checkpoint_cadence: float = 0.0
    spectrum_settle: float = 30.0
    convergence_budget: float = 400.0
    convergence_window: float = 50.0
    convergence_tol: float = 1e-4
    stats_stride: int = 100
    gs_tol: float = 1e-10
    gs_max_iter: int = 20000
    gs_dt: float = 0.05
    write_spectra: bool = False
    threads: int = 1

    def validate(self) -> None:
        if not self.delays:
            raise ValueError("scan needs at least one delay")
        d = list(self.delays)
        if any(b <= a for a, b in zip(d, d[1:])):
            raise ValueError("delays must be strictly ascending")
        if d[0] < self.pump.end - 1e-9:
            raise ValueError(
                f"first delay {d[0]} overlaps the pump (ends at {self.pump.end}); "
                "probe must start after the pump"
            )
        if self.absorber is not None:
            self.absorber.validate(self.grid)
        if self.convergence_window <= 0 or self.convergence_budget < 0:
            raise ValueError("convergence window must be positive, budget non-negative")
        if self.spectrum_settle < 0:
            raise ValueError("spectrum settle time must be non-negative")


@dataclass
class DelayScanRecord:
    """One row of the yield-vs-delay observable."""

    tau: float
    tau_fs: float
    yield_: float
    k0: float
    delta_k: float
    mean_R_at_probe: float
    sigma_R_at_probe: float
    converged: bool


def _steps_until(t_now: float, t_target: float, dt: float) -> int:
    """Step count that lands at or just past t_target."""
    n = math.ceil((t_target - t_now) / dt - 1e-9)
    return max(n, 0)


class StatsLog:
    """Collects (t, norm, mean_R, sigma_R, energy) rows during a run."""

    def __init__(self, ham: Hamiltonian):
        self.ham = ham
        self.rows = []

    def sample(self, psi: Wavefunction) -> None:
        s = nuclear_stats(psi)
        e = energy_expectation(self.ham, psi)
        self.rows.append((psi.t, s.norm, s.mean_R, s.sigma_R, e))

    def write(self, path) -> None:
        write_stats_csv(path, self.rows)


def run_pump(
    grid: Grid2D,
    pump: PulseSpec,
    ground: Wavefunction | None = None,
    stats: StatsLog | None = None,
    stats_stride: int = 100,
):
    """Propagate the ground state through the pump and strip it back out.

    Returns (excited packet, excitation probability); the packet is the
    full post-pump state minus its ground-state component, unnormalized,
    with t just past the pump end.
    """
    ham = Hamiltonian(grid)
    if ground is None:
        ground = solve_ground_state(grid).psi
    psi = ground.copy()
    psi.t = 0.0
    psi.absorbed = 0.0
    prop = Propagator(ham, field=FieldConfig([pump]))
    n_steps = _steps_until(psi.t, pump.end, prop.dt)
    for i in range(n_steps):
        prop.step(psi)
        if stats is not None and (i + 1) % stats_stride == 0:
            stats.sample(psi)
    project_out(psi, ground)
    return psi, norm(psi)


def propagate_field_free(
    psi: Wavefunction,
    until: float,
    checkpoint_at,
    out_dir,
    absorber: Absorber | None = None,
    stats: StatsLog | None = None,
    stats_stride: int = 100,
):
    """Drive psi with no field to `until`, checkpointing along the way.

    checkpoint_at times are snapped to the step grid; a time at (or
    before) the current t yields an immediate checkpoint of the input
    state.  Returns a list of {t, step, path, norm} manifests in time
    order.
    """
    targets = sorted(checkpoint_at)
    if any(t > until + 1e-9 for t in targets):
        raise ValueError("checkpoint times must not exceed the propagation end")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    ham = Hamiltonian(psi.grid)
    prop = Propagator(ham, field=None, absorber=absorber)
    t0 = psi.t
    total_steps = _steps_until(t0, until, prop.dt)
    step_targets = {}
    for t in targets:
        k = min(max(round((t - t0) / prop.dt), 0), total_steps)
        step_targets.setdefault(int(k), []).append(t)

    manifest = []

    def checkpoint(step_idx: int) -> None:
        path = out_dir / f"chk_{step_idx:08d}.h2pwf"
        write_checkpoint(psi, path)
        manifest.append(
            {"t": psi.t, "step": step_idx, "path": str(path), "norm": norm(psi)}
        )

    if 0 in step_targets:
        checkpoint(0)
    if stats is not None:
        stats.sample(psi)
    for i in range(1, total_steps + 1):
        prop.step(psi)
        if i in step_targets:
            checkpoint(i)
        if stats is not None and i % stats_stride == 0:
            stats.sample(psi)
    return manifest


def run_probe_from_checkpoint(
    checkpoint,
    probe: PulseSpec,
    absorber: Absorber | None = None,
    spectrum_settle: float = 30.0,
    convergence_budget: float = 400.0,
    convergence_window: float = 50.0,
    convergence_tol: float = 1e-4,
):
    """Probe one checkpointed state and track the yield to convergence.

    The probe is anchored at the checkpoint time (that is the delay).
    The momentum spectrum is taken spectrum_settle after the probe ends,
    while the photoelectron is inside the analysis region but not yet
    absorbed; the yield then keeps accumulating (region + absorbed) and
    the record is flagged converged once it stops moving over the
    trailing window, or unconverged when the budget runs out.

    Returns (DelayScanRecord, MomentumSpectrum or None).
    """
    if isinstance(checkpoint, (str, os.PathLike)):
        psi = read_checkpoint(checkpoint)
    else:
        psi = checkpoint.copy()
    tau = psi.t
    before = nuclear_stats(psi)

    ham = Hamiltonian(psi.grid)
    probe_run = replace(probe, delay=tau)
    prop = Propagator(ham, field=FieldConfig([probe_run]), absorber=absorber)

    prop.run(psi, _steps_until(psi.t, probe_run.end, prop.dt))
    prop.run(psi, _steps_until(psi.t, probe_run.end + spectrum_settle, prop.dt))

    spectrum = None
    k0 = float("nan")
    delta_k = float("nan")
    try:
        spectrum = momentum_spectrum(psi)
        k0 = spectrum.k0
        delta_k = spectrum.delta_k
    except ValueError:
        pass

    history = [(psi.t, ionization_yield(psi))]
    sample_every = max(1, int(round(1.0 / prop.dt)))
    deadline = probe_run.end + max(convergence_budget, spectrum_settle)
    converged = yield_converged(history, convergence_window, convergence_tol)
    while not converged and psi.t < deadline - 1e-9:
        prop.run(psi, min(sample_every, _steps_until(psi.t, deadline, prop.dt)))
        history.append((psi.t, ionization_yield(psi)))
        converged = yield_converged(history, convergence_window, convergence_tol)

    record = DelayScanRecord(
        tau=tau,
        tau_fs=constants.au_to_fs(tau),
        yield_=history[-1][1],
        k0=k0,
        delta_k=delta_k,
        mean_R_at_probe=before.mean_R,
        sigma_R_at_probe=before.sigma_R,
        converged=converged,
    )
    return record, spectrum


def _probe_task(args):
    """Worker entry for scan fan-out; must stay module level (picklable)."""
    path, probe, absorber, settle, budget, window, tol, spectrum_path = args
    record, spectrum = run_probe_from_checkpoint(
        path,
        probe,
        absorber=absorber,
        spectrum_settle=settle,
        convergence_budget=budget,
        convergence_window=window,
        convergence_tol=tol,
    )
    if spectrum_path and spectrum is not None:
        from h2pp.observables import write_spectrum_csv

        write_spectrum_csv(spectrum_path, spectrum)
    return record


def write_scan_records_csv(path, records) -> None:
    """Full per-delay diagnostics (superset of yield.csv)."""
    with open(path, "w") as f:
        f.write("delay_au,delay_fs,yield,k0,delta_k,mean_R,sigma_R,converged\n")
        for r in records:
            f.write(
                ",".join(
                    [
                        repr(float(r.tau)),
                        repr(float(r.tau_fs)),
                        repr(float(r.yield_)),
                        repr(float(r.k0)),
                        repr(float(r.delta_k)),
                        repr(float(r.mean_R_at_probe)),
                        repr(float(r.sigma_R_at_probe)),
                        str(int(r.converged)),
                    ]
                )
                + "\n"
            )


def run_scan(plan: ScanPlan, ground: Wavefunction | None = None):
    """Execute a full delay scan; returns (records, summary dict).

    Shared segments: one ground state, one pump, one field-free
    dissociation with a checkpoint at every delay; then one probe
    propagation per delay (sequential, or a process pool when
    plan.threads > 1; records are collected in delay order either
    way, so outputs do not depend on the worker count).
    """
    plan.validate()
    out_dir = Path(plan.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    grid = plan.grid

    if ground is None:
        gs = solve_ground_state(
            grid, tol=plan.gs_tol, max_iter=plan.gs_max_iter, dt_imag=plan.gs_dt
        )
        ground = gs.psi
        gs_energy = gs.energy
    else:
        gs_energy = energy_expectation(Hamiltonian(grid), ground)

    stats = StatsLog(Hamiltonian(grid))
    stats.sample(ground)
    psi, excitation = run_pump(
        grid, plan.pump, ground=ground, stats=stats, stats_stride=plan.stats_stride
    )

    targets = list(plan.delays)
    if plan.checkpoint_cadence > 0:
        t = psi.t + plan.checkpoint_cadence
        while t < targets[-1] - 1e-9:
            targets.append(t)
            t += plan.checkpoint_cadence
        targets = sorted(set(targets))
    manifest = propagate_field_free(
        psi,
        until=max(plan.delays),
        checkpoint_at=targets,
        out_dir=out_dir,
        absorber=plan.absorber,
        stats=stats,
        stats_stride=plan.stats_stride,
    )
    stats.write(out_dir / "stats.csv")

    wanted = []
    for tau in plan.delays:
        best = min(manifest, key=lambda m: abs(m["t"] - tau))
        wanted.append(best)

    tasks = []
    for i, m in enumerate(wanted):
        spath = str(out_dir / f"spectrum_{i:03d}.csv") if plan.write_spectra else None
        tasks.append(
            (
                m["path"],
                plan.probe,
                plan.absorber,
                plan.spectrum_settle,
                plan.convergence_budget,
                plan.convergence_window,
                plan.convergence_tol,
                spath,
            )
        )

    records = []
    failures = []
    if plan.threads > 1:
        with ProcessPoolExecutor(max_workers=plan.threads) as pool:
            futures = [pool.submit(_probe_task, t) for t in tasks]
            for i, fut in enumerate(futures):
                try:
                    records.append(fut.result())
                except Exception as exc:  # keep the scan going; log the row
                    failures.append((plan.delays[i], repr(exc)))
    else:
        for i, task in enumerate(tasks):
            try:
                records.append(_probe_task(task))
            except Exception as exc:
                failures.append((plan.delays[i], repr(exc)))

    records.sort(key=lambda r: r.tau)
    good = [r for r in records if math.isfinite(r.yield_)]
    write_yield_csv(out_dir / "yield.csv", good)
    write_scan_records_csv(out_dir / "scan_records.csv", records)

    summary = {
        "ground_state_energy": gs_energy,
        "excitation_probability": excitation,
        "n_delays": len(plan.delays),
        "n_completed": len(records),
        "n_converged": sum(1 for r in records if r.converged),
        "failures": failures,
        "outputs": ["yield.csv", "scan_records.csv", "stats.csv"],
    }
    return records, summary
