"""Strict run configuration: INI-style sections with unit-tagged values.

Every dimensioned scalar must carry a unit tag ("0.1 au", "16 fs",
"117 nm"); times accept au or fs, lengths au, carrier frequency au or
a wavelength in nm.  Unknown sections or keys are rejected rather than
silently ignored.  An empty config reproduces the reference setup:
the large production box with the 117 nm pump and 45 nm probe presets.

Delay lists accept either an explicit comma list ("600 au, 650 au") or
an inclusive range "start:stop:step" ("16fs:18fs:0.1fs" gives 21
values).
"""

from __future__ import annotations

import configparser
import hashlib
import io
import json
import math
import platform
import time
from dataclasses import dataclass

from h2pp import constants
from h2pp.core import Grid2D, make_grid
from h2pp.model import PULSE_PRESETS, PulseSpec
from h2pp.pipeline import ScanPlan
from h2pp.propagator import Absorber


class ConfigError(ValueError):
    """Invalid configuration text or values."""


_TIME_UNITS = {"au": 1.0, "fs": constants.FS_TO_AU}


def _split_unit(text: str):
    s = text.strip()
    for unit in ("au", "fs", "nm"):
        if s.endswith(unit):
            num = s[: -len(unit)].strip()
            if num:
                return num, unit
    return s, None


def _number(text: str, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{what}: cannot parse number from {text!r}") from None


def parse_time(text: str, what: str) -> float:
    num, unit = _split_unit(text)
    if unit not in _TIME_UNITS:
        raise ConfigError(f"{what}: time values need an au or fs unit tag, got {text!r}")
    return _number(num, what) * _TIME_UNITS[unit]


def parse_length(text: str, what: str) -> float:
    num, unit = _split_unit(text)
    if unit != "au":
        raise ConfigError(f"{what}: length values need an au unit tag, got {text!r}")
    return _number(num, what)


def parse_amplitude(text: str, what: str) -> float:
    num, unit = _split_unit(text)
    if unit != "au":
        raise ConfigError(f"{what}: amplitudes need an au unit tag, got {text!r}")
    return _number(num, what)


def parse_bare(text: str, what: str) -> float:
    num, unit = _split_unit(text)
    if unit is not None:
        raise ConfigError(f"{what} is dimensionless; drop the unit tag in {text!r}")
    return _number(num, what)


def parse_int(text: str, what: str) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise ConfigError(f"{what}: expected an integer, got {text!r}") from None


def parse_bool(text: str, what: str) -> bool:
    s = text.strip().lower()
    if s in ("true", "yes", "on", "1"):
        return True
    if s in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"{what}: expected a boolean, got {text!r}")


def parse_delays(text: str, what: str):
    s = text.strip()
    if not s:
        return ()
    if ":" in s:
        parts = s.split(":")
        if len(parts) != 3:
            raise ConfigError(f"{what}: ranges are start:stop:step, got {text!r}")
        start = parse_time(parts[0], what)
        stop = parse_time(parts[1], what)
        step = parse_time(parts[2], what)
        if step <= 0:
            raise ConfigError(f"{what}: range step must be positive")
        if stop < start:
            raise ConfigError(f"{what}: range stop must not precede start")
        n = int(round((stop - start) / step)) + 1
        return tuple(start + i * step for i in range(n))
    return tuple(parse_time(p, what) for p in s.split(",") if p.strip())


@dataclass(frozen=True)
class ScanSettings:
    delays: tuple = ()
    spectrum_settle: float = 30.0
    convergence_budget: float = 400.0
    convergence_window: float = 50.0
    convergence_tol: float = 1e-4
    write_spectra: bool = False


@dataclass(frozen=True)
class PropagatorSettings:
    dt: float = 0.02
    dt_imag: float = 0.05
    gs_tol: float = 1e-10
    gs_max_iter: int = 20000
    absorber_width: float = 0.0
    absorber_strength: float = 1.0


@dataclass(frozen=True)
class OutputSettings:
    directory: str = "out"
    checkpoint_cadence: float = 0.0
    stats_stride: int = 100


@dataclass(frozen=True)
class RunConfig:
    grid: Grid2D
    pump: PulseSpec
    probe: PulseSpec
    scan: ScanSettings = ScanSettings()
    propagator: PropagatorSettings = PropagatorSettings()
    output: OutputSettings = OutputSettings()

    def absorber(self):
        if self.propagator.absorber_width <= 0:
            return None
        return Absorber(
            width=self.propagator.absorber_width,
            strength=self.propagator.absorber_strength,
        )

    def scan_plan(self, out_dir=None, threads: int = 1) -> ScanPlan:
        if not self.scan.delays:
            raise ConfigError("scan requires a non-empty [scan] delays entry")
        return ScanPlan(
            grid=self.grid,
            pump=self.pump,
            probe=self.probe,
            delays=list(self.scan.delays),
            absorber=self.absorber(),
            out_dir=str(out_dir if out_dir is not None else self.output.directory),
            checkpoint_cadence=self.output.checkpoint_cadence,
            spectrum_settle=self.scan.spectrum_settle,
            convergence_budget=self.scan.convergence_budget,
            convergence_window=self.scan.convergence_window,
            convergence_tol=self.scan.convergence_tol,
            stats_stride=self.output.stats_stride,
            gs_tol=self.propagator.gs_tol,
            gs_max_iter=self.propagator.gs_max_iter,
            gs_dt=self.propagator.dt_imag,
            write_spectra=self.scan.write_spectra,
            threads=threads,
        )


_GRID_KEYS = {"z_min", "z_max", "dz", "r_min", "r_max", "dr"}
_PULSE_KEYS = {"preset", "a0", "omega", "wavelength", "n_cycles", "delay"}
_SCAN_KEYS = {
    "delays",
    "spectrum_settle",
    "convergence_budget",
    "convergence_window",
    "convergence_tol",
    "write_spectra",
}
_PROP_KEYS = {
    "dt",
    "dt_imag",
    "gs_tol",
    "gs_max_iter",
    "absorber_width",
    "absorber_strength",
}
_OUTPUT_KEYS = {"directory", "checkpoint_cadence", "stats_stride"}
_SECTIONS = {
    "grid": _GRID_KEYS,
    "pump": _PULSE_KEYS,
    "probe": _PULSE_KEYS,
    "scan": _SCAN_KEYS,
    "propagator": _PROP_KEYS,
    "output": _OUTPUT_KEYS,
}

_DEFAULT_GRID = dict(
    z_min=-409.6, z_max=409.6, dz=0.1, r_min=1.0, r_max=37.0, dr=0.03
)


def _parse_pulse(section, name: str, default_preset: str) -> PulseSpec:
    explicit = {k for k in ("a0", "omega", "wavelength", "n_cycles") if k in section}
    delay = parse_time(section["delay"], f"{name}.delay") if "delay" in section else 0.0
    if "preset" in section:
        if explicit:
            raise ConfigError(
                f"[{name}] mixes preset with explicit fields {sorted(explicit)}; "
                "use one or the other"
            )
        preset = section["preset"].strip()
        if preset not in PULSE_PRESETS:
            raise ConfigError(
                f"[{name}] unknown preset {preset!r}; "
                f"available: {sorted(PULSE_PRESETS)}"
            )
        base = PULSE_PRESETS[preset]
        return base.shifted(delay)
    if not explicit:
        return PULSE_PRESETS[default_preset].shifted(delay)
    if "omega" in section and "wavelength" in section:
        raise ConfigError(f"[{name}] give either omega or wavelength, not both")
    if "omega" in section:
        num, unit = _split_unit(section["omega"])
        if unit != "au":
            raise ConfigError(f"{name}.omega needs an au unit tag")
        omega = _number(num, f"{name}.omega")
    elif "wavelength" in section:
        num, unit = _split_unit(section["wavelength"])
        if unit != "nm":
            raise ConfigError(f"{name}.wavelength needs an nm unit tag")
        omega = constants.wavelength_nm_to_omega(_number(num, f"{name}.wavelength"))
    else:
        raise ConfigError(f"[{name}] explicit pulses need omega or wavelength")
    if "a0" not in section or "n_cycles" not in section:
        raise ConfigError(f"[{name}] explicit pulses need a0 and n_cycles")
    return PulseSpec(
        A0=parse_amplitude(section["a0"], f"{name}.a0"),
        omega=omega,
        n_cycles=parse_int(section["n_cycles"], f"{name}.n_cycles"),
        delay=delay,
        label=name,
    )


def parse_config(text: str) -> RunConfig:
    """Parse configuration text into a validated RunConfig."""
    cp = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";")
    )
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax error: {exc}") from None

    for section in cp.sections():
        if section not in _SECTIONS:
            raise ConfigError(
                f"unknown section [{section}]; expected one of {sorted(_SECTIONS)}"
            )
        for key in cp[section]:
            if key not in _SECTIONS[section]:
                raise ConfigError(
                    f"unknown key {section}.{key}; "
                    f"allowed: {sorted(_SECTIONS[section])}"
                )

    g = dict(_DEFAULT_GRID)
    if cp.has_section("grid"):
        sec = cp["grid"]
        for key in _GRID_KEYS & set(sec):
            g[key] = parse_length(sec[key], f"grid.{key}")

    prop = PropagatorSettings()
    if cp.has_section("propagator"):
        sec = cp["propagator"]
        prop = PropagatorSettings(
            dt=parse_time(sec["dt"], "propagator.dt") if "dt" in sec else prop.dt,
            dt_imag=parse_time(sec["dt_imag"], "propagator.dt_imag")
            if "dt_imag" in sec
            else prop.dt_imag,
            gs_tol=parse_bare(sec["gs_tol"], "propagator.gs_tol")
            if "gs_tol" in sec
            else prop.gs_tol,
            gs_max_iter=parse_int(sec["gs_max_iter"], "propagator.gs_max_iter")
            if "gs_max_iter" in sec
            else prop.gs_max_iter,
            absorber_width=parse_length(sec["absorber_width"], "propagator.absorber_width")
            if "absorber_width" in sec
            else prop.absorber_width,
            absorber_strength=parse_bare(
                sec["absorber_strength"], "propagator.absorber_strength"
            )
            if "absorber_strength" in sec
            else prop.absorber_strength,
        )

    try:
        grid = make_grid(
            z_min=g["z_min"],
            z_max=g["z_max"],
            dz=g["dz"],
            R_min=g["r_min"],
            R_max=g["r_max"],
            dR=g["dr"],
            dt=prop.dt,
        )
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from None

    pump = _parse_pulse(cp["pump"] if cp.has_section("pump") else {}, "pump", "pump117")
    probe = _parse_pulse(
        cp["probe"] if cp.has_section("probe") else {}, "probe", "probe45"
    )

    scan = ScanSettings()
    if cp.has_section("scan"):
        sec = cp["scan"]
        scan = ScanSettings(
            delays=parse_delays(sec["delays"], "scan.delays")
            if "delays" in sec
            else (),
            spectrum_settle=parse_time(sec["spectrum_settle"], "scan.spectrum_settle")
            if "spectrum_settle" in sec
            else scan.spectrum_settle,
            convergence_budget=parse_time(
                sec["convergence_budget"], "scan.convergence_budget"
            )
            if "convergence_budget" in sec
            else scan.convergence_budget,
            convergence_window=parse_time(
                sec["convergence_window"], "scan.convergence_window"
            )
            if "convergence_window" in sec
            else scan.convergence_window,
            convergence_tol=parse_bare(sec["convergence_tol"], "scan.convergence_tol")
            if "convergence_tol" in sec
            else scan.convergence_tol,
            write_spectra=parse_bool(sec["write_spectra"], "scan.write_spectra")
            if "write_spectra" in sec
            else scan.write_spectra,
        )

    output = OutputSettings()
    if cp.has_section("output"):
        sec = cp["output"]
        output = OutputSettings(
            directory=sec.get("directory", output.directory).strip(),
            checkpoint_cadence=parse_time(
                sec["checkpoint_cadence"], "output.checkpoint_cadence"
            )
            if "checkpoint_cadence" in sec
            else output.checkpoint_cadence,
            stats_stride=parse_int(sec["stats_stride"], "output.stats_stride")
            if "stats_stride" in sec
            else output.stats_stride,
        )

    if not 0.0 <= prop.absorber_strength <= 1.0:
        raise ConfigError("propagator.absorber_strength must lie in [0, 1]")
    if prop.gs_tol <= 0:
        raise ConfigError("propagator.gs_tol must be positive")
    if output.stats_stride < 1:
        raise ConfigError("output.stats_stride must be >= 1")

    return RunConfig(
        grid=grid, pump=pump, probe=probe, scan=scan, propagator=prop, output=output
    )


def _pulse_lines(p: PulseSpec) -> list:
    return [
        f"a0 = {p.A0!r} au",
        f"omega = {p.omega!r} au",
        f"n_cycles = {p.n_cycles}",
        f"delay = {p.delay!r} au",
    ]


def render_config(cfg: RunConfig) -> str:
    """Canonical text form; parse_config(render_config(c)) == c."""
    g = cfg.grid
    s = cfg.scan
    p = cfg.propagator
    o = cfg.output
    out = io.StringIO()
    out.write("[grid]\n")
    out.write(f"z_min = {g.z_min!r} au\n")
    out.write(f"z_max = {g.z_max!r} au\n")
    out.write(f"dz = {g.dz!r} au\n")
    out.write(f"r_min = {g.R_min!r} au\n")
    out.write(f"r_max = {g.R_max!r} au\n")
    out.write(f"dr = {g.dR!r} au\n")
    out.write("\n[pump]\n")
    out.write("\n".join(_pulse_lines(cfg.pump)) + "\n")
    out.write("\n[probe]\n")
    out.write("\n".join(_pulse_lines(cfg.probe)) + "\n")
    out.write("\n[scan]\n")
    delays = ", ".join(f"{d!r} au" for d in s.delays)
    out.write(f"delays = {delays}\n")
    out.write(f"spectrum_settle = {s.spectrum_settle!r} au\n")
    out.write(f"convergence_budget = {s.convergence_budget!r} au\n")
    out.write(f"convergence_window = {s.convergence_window!r} au\n")
    out.write(f"convergence_tol = {s.convergence_tol!r}\n")
    out.write(f"write_spectra = {str(s.write_spectra).lower()}\n")
    out.write("\n[propagator]\n")
    out.write(f"dt = {p.dt!r} au\n")
    out.write(f"dt_imag = {p.dt_imag!r} au\n")
    out.write(f"gs_tol = {p.gs_tol!r}\n")
    out.write(f"gs_max_iter = {p.gs_max_iter}\n")
    out.write(f"absorber_width = {p.absorber_width!r} au\n")
    out.write(f"absorber_strength = {p.absorber_strength!r}\n")
    out.write("\n[output]\n")
    out.write(f"directory = {o.directory}\n")
    out.write(f"checkpoint_cadence = {o.checkpoint_cadence!r} au\n")
    out.write(f"stats_stride = {o.stats_stride}\n")
    return out.getvalue()


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(cfg: RunConfig, path, command: str, summary: dict, outputs, wall_time_s: float) -> None:
    """Run record: effective config, environment, output digests."""
    from h2pp import __version__

    digests = {}
    for out_file in outputs:
        try:
            digests[str(out_file)] = _sha256(out_file)
        except OSError:
            digests[str(out_file)] = None

    def clean(obj):
        if isinstance(obj, dict):
            return {k: clean(v) for k, v in obj.items()}
        if isinstance(obj, (list, tuple)):
            return [clean(v) for v in obj]
        if isinstance(obj, float) and not math.isfinite(obj):
            return repr(obj)
        return obj

    doc = {
        "command": command,
        "config": render_config(cfg),
        "version": __version__,
        "python": platform.python_version(),
        "wall_time_s": wall_time_s,
        "created_unix": time.time(),
        "outputs": digests,
        "summary": clean(summary),
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")
