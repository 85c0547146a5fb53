"""Command line front end.

Subcommands: groundstate, pump, dissociate, scan, spectrum, fit.
Exit codes: 0 success, 2 configuration error, 3 numeric instability,
4 non-convergence.
"""

from __future__ import annotations

import argparse
import io
import math
import sys
import time
from pathlib import Path

import numpy as np

from h2pp import constants
from h2pp.analysis import (
    fit_interference,
    write_fit_csv,
    write_fit_curve_csv,
)
from h2pp.config import (
    ConfigError,
    RunConfig,
    parse_config,
    parse_time,
    write_manifest,
)
from h2pp.core import Wavefunction, norm, read_checkpoint, write_checkpoint
from h2pp.model import FieldConfig
from h2pp.observables import momentum_spectrum, write_spectrum_csv
from h2pp.pipeline import (
    StatsLog,
    propagate_field_free,
    run_pump,
    run_scan,
)
from h2pp.propagator import (
    ConvergenceError,
    Hamiltonian,
    PropagationError,
    solve_ground_state,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="h2pp",
        description="Pump-probe simulator for a dissociating one-electron molecular ion",
    )
    parser.add_argument("--config", help="path to an INI run configuration")
    parser.add_argument("--out", help="output directory (overrides the config)")
    parser.add_argument("--threads", type=int, default=1, help="probe-run fan-out")
    parser.add_argument("--checkpoint", help="wavefunction checkpoint to read or write")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("groundstate", help="relax to the ground state and checkpoint it")
    p.add_argument("--dump-density", help="write a z,R,density CSV of the result")

    p = sub.add_parser("pump", help="run the pump pulse and save the excited packet")
    p.add_argument("--dump-density", help="write a z,R,density CSV of the excited packet")
    p.add_argument("--dump-field", help="write a t,A CSV of the pump vector potential")

    p = sub.add_parser("dissociate", help="field-free propagation with checkpoints")
    p.add_argument("--until", help="propagation end time (e.g. '18 fs'); default max delay")
    p.add_argument("--dump-density", help="write a z,R,density CSV of the final state")

    p = sub.add_parser("scan", help="full pump-probe delay scan")
    p.add_argument("--dump-field", help="write a t,A CSV of pump plus first-delay probe")

    sub.add_parser("spectrum", help="momentum spectrum of a checkpointed state")

    p = sub.add_parser("fit", help="fit the interference model to a yield scan")
    p.add_argument("--in", dest="input", help="yield CSV (default <out>/yield.csv)")
    p.add_argument("--k0", type=float, required=True, help="photoelectron momentum center (a.u.)")
    p.add_argument("--dk", type=float, required=True, help="photoelectron momentum spread (a.u.)")
    p.add_argument("--dkp", type=float, help="proton relative momentum spread (a.u.)")
    p.add_argument("--sigma0", type=float, help="initial packet width to derive --dkp from")
    p.add_argument("--freeze-v", action="store_true", help="pin v at the frequency-derived value")
    return parser


def _load_config(args) -> RunConfig:
    text = ""
    if args.config:
        text = Path(args.config).read_text()
    cfg = parse_config(text)
    return cfg


def _out_dir(cfg: RunConfig, args) -> Path:
    out = Path(args.out if args.out else cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _dump_density(psi: Wavefunction, path) -> None:
    g = psi.grid
    dens = psi.data.real**2 + psi.data.imag**2
    with open(path, "w") as f:
        f.write("z_au,R_au,density\n")
        for j in range(g.n_R):
            R = g.R[j]
            row = dens[j]
            for i in range(g.n_z):
                f.write(f"{g.z[i]!r},{R!r},{row[i]!r}\n")


def _dump_field(field: FieldConfig, t_end: float, dt: float, path) -> None:
    with open(path, "w") as f:
        f.write("t_au,A_au\n")
        n = int(math.ceil(t_end / dt)) + 1
        for i in range(n):
            t = i * dt
            f.write(f"{t!r},{field.vector_potential(t)!r}\n")


def _cmd_groundstate(cfg: RunConfig, args, out: Path):
    res = solve_ground_state(
        cfg.grid,
        tol=cfg.propagator.gs_tol,
        max_iter=cfg.propagator.gs_max_iter,
        dt_imag=cfg.propagator.dt_imag,
    )
    chk = Path(args.checkpoint) if args.checkpoint else out / "ground.h2pwf"
    write_checkpoint(res.psi, chk)
    if args.dump_density:
        _dump_density(res.psi, args.dump_density)
    print(f"ground state energy: {res.energy:.6f} a.u.")
    print(f"mean internuclear distance: {res.mean_R:.4f} a.u.")
    print(f"iterations: {res.iterations}, checkpoint: {chk}")
    return {
        "energy": res.energy,
        "mean_R": res.mean_R,
        "iterations": res.iterations,
        "checkpoint": str(chk),
    }, [chk]


def _cmd_pump(cfg: RunConfig, args, out: Path):
    if args.checkpoint and Path(args.checkpoint).exists():
        ground = read_checkpoint(args.checkpoint)
    else:
        ground = solve_ground_state(
            cfg.grid,
            tol=cfg.propagator.gs_tol,
            max_iter=cfg.propagator.gs_max_iter,
            dt_imag=cfg.propagator.dt_imag,
        ).psi
    stats = StatsLog(Hamiltonian(cfg.grid))
    psi, excitation = run_pump(
        cfg.grid, cfg.pump, ground=ground, stats=stats, stats_stride=cfg.output.stats_stride
    )
    chk = out / "excited.h2pwf"
    write_checkpoint(psi, chk)
    stats_path = out / "stats.csv"
    stats.write(stats_path)
    if args.dump_density:
        _dump_density(psi, args.dump_density)
    if args.dump_field:
        _dump_field(FieldConfig([cfg.pump]), cfg.pump.end, cfg.grid.dt, args.dump_field)
    print(f"excitation probability: {excitation:.6e}")
    print(f"excited packet checkpoint: {chk}")
    return {"excitation_probability": excitation, "checkpoint": str(chk)}, [
        chk,
        stats_path,
    ]


def _cmd_dissociate(cfg: RunConfig, args, out: Path):
    if not args.checkpoint:
        raise ConfigError("dissociate needs --checkpoint (the excited packet)")
    psi = read_checkpoint(args.checkpoint)
    if args.until:
        until = parse_time(args.until, "--until")
    elif cfg.scan.delays:
        until = max(cfg.scan.delays)
    else:
        raise ConfigError("dissociate needs --until or [scan] delays")
    targets = [d for d in cfg.scan.delays if psi.t <= d <= until + 1e-9]
    if cfg.output.checkpoint_cadence > 0:
        t = psi.t + cfg.output.checkpoint_cadence
        while t < until - 1e-9:
            targets.append(t)
            t += cfg.output.checkpoint_cadence
    targets = sorted(set(targets)) or [until]
    stats = StatsLog(Hamiltonian(cfg.grid))
    manifest = propagate_field_free(
        psi,
        until=until,
        checkpoint_at=targets,
        out_dir=out,
        absorber=cfg.absorber(),
        stats=stats,
        stats_stride=cfg.output.stats_stride,
    )
    stats_path = out / "stats.csv"
    stats.write(stats_path)
    if args.dump_density:
        _dump_density(psi, args.dump_density)
    print(f"propagated to t = {psi.t:.2f} a.u.; {len(manifest)} checkpoints")
    outputs = [stats_path] + [m["path"] for m in manifest]
    return {"checkpoints": manifest, "final_norm": norm(psi)}, outputs


def _cmd_scan(cfg: RunConfig, args, out: Path):
    plan = cfg.scan_plan(out_dir=out, threads=max(1, args.threads))
    records, summary = run_scan(plan)
    if args.dump_field:
        probe = cfg.probe
        field = FieldConfig([cfg.pump, probe.shifted(plan.delays[0])])
        _dump_field(field, field.end, cfg.grid.dt, args.dump_field)
    print(f"scan complete: {summary['n_completed']}/{summary['n_delays']} delays, "
          f"{summary['n_converged']} converged")
    outputs = [out / name for name in summary["outputs"]]
    return summary, outputs


def _cmd_spectrum(cfg: RunConfig, args, out: Path):
    if not args.checkpoint:
        raise ConfigError("spectrum needs --checkpoint (a post-probe state)")
    psi = read_checkpoint(args.checkpoint)
    spec = momentum_spectrum(psi)
    path = out / "spectrum.csv"
    write_spectrum_csv(path, spec)
    print(f"k0 = {spec.k0:.4f} a.u., delta_k = {spec.delta_k:.4f} a.u., "
          f"region norm = {spec.region_norm:.4e}")
    return {
        "k0": spec.k0,
        "delta_k": spec.delta_k,
        "region_norm": spec.region_norm,
    }, [path]


def _read_yield_csv(path):
    # genfromtxt(names=True) would read a leading comment line as the
    # header, so strip comments before parsing
    with open(path) as f:
        body = "".join(ln for ln in f if not ln.lstrip().startswith("#"))
    rows = np.genfromtxt(io.StringIO(body), delimiter=",", names=True)
    if rows.ndim == 0:
        rows = rows.reshape(1)
    if "delay_au" not in rows.dtype.names or "yield" not in rows.dtype.names:
        raise ConfigError(
            f"{path} is not a yield CSV (needs delay_au and yield columns, "
            f"found {rows.dtype.names})"
        )
    return list(zip(rows["delay_au"].tolist(), rows["yield"].tolist()))


def _cmd_fit(cfg: RunConfig, args, out: Path):
    src = Path(args.input) if args.input else out / "yield.csv"
    if not src.exists():
        raise ConfigError(f"yield CSV {src} does not exist")
    samples = _read_yield_csv(src)
    result = fit_interference(
        samples,
        k0=args.k0,
        delta_k=args.dk,
        delta_k_p=args.dkp,
        sigma_R0=args.sigma0,
        freeze_v=args.freeze_v,
    )
    fit_path = out / "fit.csv"
    curve_path = out / "fit_curve.csv"
    write_fit_csv(fit_path, result)
    write_fit_curve_csv(curve_path, result, samples)
    p = result.params
    print(f"v = {p.v:.5f} +- {result.uncertainties.get('v', 0.0):.5f} a.u.")
    print(f"R_c = {p.R_c:.3f}, delta_R_c = {p.delta_R_c:.3f}, Phi = {p.Phi:.3f}")
    print(f"residual rms = {result.residual_rms:.3e}, converged = {result.converged}")
    if not result.converged:
        raise ConvergenceError("interference fit did not converge", result.residual_rms)
    return {
        "v": p.v,
        "R_c": p.R_c,
        "delta_R_c": p.delta_R_c,
        "Phi": p.Phi,
        "residual_rms": result.residual_rms,
        "frequency": result.frequency,
    }, [fit_path, curve_path]


_COMMANDS = {
    "groundstate": _cmd_groundstate,
    "pump": _cmd_pump,
    "dissociate": _cmd_dissociate,
    "scan": _cmd_scan,
    "spectrum": _cmd_spectrum,
    "fit": _cmd_fit,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    start = time.monotonic()
    try:
        cfg = _load_config(args)
        out = _out_dir(cfg, args)
        summary, outputs = _COMMANDS[args.command](cfg, args, out)
        wall = time.monotonic() - start
        write_manifest(
            cfg,
            out / "run.json",
            command=args.command,
            summary=summary,
            outputs=outputs,
            wall_time_s=wall,
        )
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PropagationError as exc:
        print(f"numeric instability: {exc}", file=sys.stderr)
        return 3
    except ConvergenceError as exc:
        print(f"did not converge: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
