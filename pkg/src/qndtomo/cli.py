"""Command line driver: TOML scenario in, CSV tables and a JSON manifest out.

Settings are resolved in this order (later wins): built-in defaults, the
config file, command line flags (``--out-dir``, ``--seed``, ``--shots``,
``--backend``).

Exit codes: 0 success, 2 configuration error, 3 numerical precondition
failure (state off its grid, Fock truncation, ...), 4 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping

import numpy as np
import tomli
import tomli_w

from . import __version__, experiments, qnd
from .errors import ConfigError, PreconditionError
from .states import (
    DEFAULT_FOCK_CUTOFF,
    GridSpec,
    in_frame,
    make_state,
    preset_from_dict,
    preset_to_dict,
)
from .wigner import wigner_of

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PRECONDITION = 3
EXIT_IO = 4

MODES = ("single", "weak", "delta", "tomography")
BACKENDS = ("grid", "fock")
FRAMES = ("readout", "lab")
ORTHOGONAL = "orthogonal"
FLOAT_FMT = "%.17g"


@dataclass(frozen=True)
class PhaseSweep:
    """Either explicit ``values`` or ``count`` equally spaced phases in ``[start, stop)``."""

    values: tuple | None = None
    count: int | None = None
    start: float = 0.0
    stop: float = math.pi

    def resolve(self) -> np.ndarray:
        if self.values is not None:
            return np.array(self.values, dtype=float)
        return experiments.uniform_phases(self.count, self.start, self.stop)


@dataclass(frozen=True)
class ScenarioConfig:
    signal: object
    meter: object
    kappa: float
    mode: str
    phi: float = 0.0
    theta: object = ORTHOGONAL
    shots: int = 0
    seed: int = 0
    backend: str = "grid"
    meter_frame: str = "readout"
    grid: GridSpec = GridSpec()
    meter_grid: GridSpec | None = None
    phases: PhaseSweep = PhaseSweep(count=16)
    estimator: str = "histogram"
    bandwidth: float | None = None
    cutoff: float | None = None
    angles: int = experiments.BACKPROJECTION_ANGLES
    fock_cutoffs: tuple = (DEFAULT_FOCK_CUTOFF, DEFAULT_FOCK_CUTOFF)
    output_dir: str = "qndtomo-out"
    workers: int = 1

    def theta_for(self, phi: float) -> float:
        return phi + math.pi / 2 if self.theta == ORTHOGONAL else float(self.theta)

    def resolved_meter_grid(self) -> GridSpec:
        if self.meter_grid is not None:
            return self.meter_grid
        return experiments.default_meter_grid(self.grid, self.kappa)


# --- parsing ----------------------------------------------------------------------

_TOP_KEYS = {
    "signal", "meter", "kappa", "mode", "phi", "theta", "shots", "seed", "backend",
    "meter_frame", "grid", "meter_grid", "phases", "estimator", "reconstruction",
    "oracle", "output_dir", "workers",
}
_GRID_KEYS = {"x_min", "x_max", "n_points"}
_PHASE_KEYS = {"values", "count", "start", "stop"}
_ESTIMATOR_KEYS = {"kind", "bandwidth"}
_RECON_KEYS = {"cutoff", "angles"}
_ORACLE_KEYS = {"signal_cutoff", "meter_cutoff"}


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


class _Reader:
    """Collects every violation instead of stopping at the first one."""

    def __init__(self):
        self.errors: list[str] = []

    def unknown(self, table: Mapping, allowed: set, path: str):
        for key in sorted(set(table) - allowed):
            self.errors.append(f"{path + '.' if path else ''}{key}: unknown key")

    def table(self, d: Mapping, key: str, allowed: set) -> Mapping:
        t = d.get(key, {})
        if not isinstance(t, Mapping):
            self.errors.append(f"{key}: expected a table")
            return {}
        self.unknown(t, allowed, key)
        return t

    def number(self, d: Mapping, key: str, path: str, default=None, required=False):
        if key not in d:
            if required:
                self.errors.append(f"{path}: missing required field")
            return default
        v = d[key]
        if not _is_number(v):
            self.errors.append(f"{path}: expected a finite number, got {v!r}")
            return default
        return float(v)

    def integer(self, d: Mapping, key: str, path: str, default=None, minimum=None):
        if key not in d:
            return default
        v = d[key]
        if not _is_int(v):
            self.errors.append(f"{path}: expected an integer, got {v!r}")
            return default
        if minimum is not None and v < minimum:
            self.errors.append(f"{path}: must be >= {minimum}, got {v}")
            return default
        return v

    def choice(self, d: Mapping, key: str, path: str, options, default=None, required=False):
        if key not in d:
            if required:
                self.errors.append(f"{path}: missing required field")
            return default
        v = d[key]
        if v not in options:
            self.errors.append(f"{path}: expected one of {', '.join(options)}, got {v!r}")
            return default
        return v

    def grid(self, d: Mapping, key: str) -> GridSpec | None:
        if key not in d:
            return None
        t = self.table(d, key, _GRID_KEYS)
        base = GridSpec()
        x_min = self.number(t, "x_min", f"{key}.x_min", base.x_min)
        x_max = self.number(t, "x_max", f"{key}.x_max", base.x_max)
        n = self.integer(t, "n_points", f"{key}.n_points", base.n_points)
        try:
            g = GridSpec(x_min, x_max, n)
            g.require_symmetric()
            return g
        except ValueError as exc:
            self.errors.append(f"{key}: {exc}")
            return None


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a TOML scenario; raises :class:`ConfigError` listing every violation."""
    try:
        d = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError([f"<config>: not valid TOML: {exc}"]) from exc
    return config_from_dict(d)


def config_from_dict(d: Mapping) -> ScenarioConfig:
    rd = _Reader()
    rd.unknown(d, _TOP_KEYS, "")
    errors = rd.errors

    signal = meter = None
    for key in ("signal", "meter"):
        if key not in d:
            errors.append(f"{key}: missing required field")
        else:
            preset = preset_from_dict(d[key], key, errors)
            if key == "signal":
                signal = preset
            else:
                meter = preset

    kappa = rd.number(d, "kappa", "kappa", required=True)
    if kappa is not None and kappa <= 0:
        errors.append(f"kappa: kappa must be positive, got {kappa!r}")
    mode = rd.choice(d, "mode", "mode", MODES, required=True)
    phi = rd.number(d, "phi", "phi", 0.0)
    theta = d.get("theta", ORTHOGONAL)
    if theta != ORTHOGONAL and not _is_number(theta):
        errors.append(f"theta: expected a number or {ORTHOGONAL!r}, got {theta!r}")
        theta = ORTHOGONAL
    elif theta != ORTHOGONAL:
        theta = float(theta)
    shots = rd.integer(d, "shots", "shots", 0, minimum=0)
    seed = rd.integer(d, "seed", "seed", 0, minimum=0)
    backend = rd.choice(d, "backend", "backend", BACKENDS, "grid")
    frame = rd.choice(d, "meter_frame", "meter_frame", FRAMES, "readout")
    grid = rd.grid(d, "grid") or GridSpec()
    meter_grid = rd.grid(d, "meter_grid")
    workers = rd.integer(d, "workers", "workers", 1, minimum=1)
    output_dir = d.get("output_dir", ScenarioConfig.output_dir)
    if not isinstance(output_dir, str) or not output_dir:
        errors.append(f"output_dir: expected a non-empty string, got {output_dir!r}")
        output_dir = ScenarioConfig.output_dir

    pt = rd.table(d, "phases", _PHASE_KEYS)
    phases = PhaseSweep(count=16)
    if "values" in pt and "count" in pt:
        errors.append("phases: give either values or count, not both")
    elif "values" in pt:
        vals = pt["values"]
        if not isinstance(vals, list) or not vals or not all(_is_number(v) for v in vals):
            errors.append("phases.values: expected a non-empty array of numbers")
        else:
            for extra in ("start", "stop"):
                if extra in pt:
                    errors.append(f"phases.{extra}: only allowed together with count")
            phases = PhaseSweep(values=tuple(float(v) for v in vals))
    else:
        count = rd.integer(pt, "count", "phases.count", 16, minimum=1)
        start = rd.number(pt, "start", "phases.start", 0.0)
        stop = rd.number(pt, "stop", "phases.stop", math.pi)
        phases = PhaseSweep(count=count, start=start, stop=stop)
    if mode == "tomography":
        try:
            experiments._validate_phases(phases.resolve())
        except ValueError as exc:
            errors.append(f"phases: {exc}")
        if len(phases.resolve()) < experiments.MIN_TOMOGRAPHY_PHASES:
            errors.append(f"phases: tomography needs at least {experiments.MIN_TOMOGRAPHY_PHASES} phases")

    et = rd.table(d, "estimator", _ESTIMATOR_KEYS)
    estimator = rd.choice(et, "kind", "estimator.kind", experiments.ESTIMATORS, "histogram")
    bandwidth = rd.number(et, "bandwidth", "estimator.bandwidth", None)
    if bandwidth is not None and bandwidth <= 0:
        errors.append("estimator.bandwidth: must be positive")
    if bandwidth is not None and estimator != "kde":
        errors.append("estimator.bandwidth: only used by the kde estimator")

    rt = rd.table(d, "reconstruction", _RECON_KEYS)
    cutoff = rd.number(rt, "cutoff", "reconstruction.cutoff", None)
    if cutoff is not None and cutoff <= 0:
        errors.append("reconstruction.cutoff: must be positive")
    angles = rd.integer(rt, "angles", "reconstruction.angles", experiments.BACKPROJECTION_ANGLES, minimum=1)

    ot = rd.table(d, "oracle", _ORACLE_KEYS)
    cutoffs = (
        rd.integer(ot, "signal_cutoff", "oracle.signal_cutoff", DEFAULT_FOCK_CUTOFF, minimum=2),
        rd.integer(ot, "meter_cutoff", "oracle.meter_cutoff", DEFAULT_FOCK_CUTOFF, minimum=2),
    )

    if mode in ("delta", "tomography") and theta != ORTHOGONAL:
        if mode == "tomography" or abs(math.remainder(theta - phi - math.pi / 2, 2 * math.pi)) > 1e-12:
            errors.append(f"theta: {mode} mode measures out of phase; use theta = {ORTHOGONAL!r}")
    if mode == "delta" and phi is not None and not 0.0 <= phi < math.pi:
        errors.append("phi: delta mode needs 0 <= phi < pi")
    if mode in ("delta", "tomography") and frame != "readout":
        errors.append("meter_frame: delta and tomography modes prepare the meter in the readout frame")
    if mode == "weak" and backend == "fock":
        errors.append("backend: the weak regime needs a broad meter that a truncated Fock basis cannot hold")

    if errors:
        raise ConfigError(errors)
    return ScenarioConfig(
        signal=signal, meter=meter, kappa=kappa, mode=mode, phi=phi, theta=theta,
        shots=shots, seed=seed, backend=backend, meter_frame=frame, grid=grid,
        meter_grid=meter_grid, phases=phases, estimator=estimator, bandwidth=bandwidth,
        cutoff=cutoff, angles=angles, fock_cutoffs=cutoffs, output_dir=output_dir,
        workers=workers,
    )


def config_to_dict(cfg: ScenarioConfig) -> dict:
    d = {
        "mode": cfg.mode,
        "kappa": cfg.kappa,
        "phi": cfg.phi,
        "theta": cfg.theta,
        "shots": cfg.shots,
        "seed": cfg.seed,
        "backend": cfg.backend,
        "meter_frame": cfg.meter_frame,
        "output_dir": cfg.output_dir,
        "workers": cfg.workers,
        "signal": preset_to_dict(cfg.signal),
        "meter": preset_to_dict(cfg.meter),
        "grid": dataclasses.asdict(cfg.grid),
    }
    if cfg.meter_grid is not None:
        d["meter_grid"] = dataclasses.asdict(cfg.meter_grid)
    if cfg.phases.values is not None:
        d["phases"] = {"values": list(cfg.phases.values)}
    else:
        d["phases"] = {"count": cfg.phases.count, "start": cfg.phases.start, "stop": cfg.phases.stop}
    d["estimator"] = {"kind": cfg.estimator}
    if cfg.bandwidth is not None:
        d["estimator"]["bandwidth"] = cfg.bandwidth
    d["reconstruction"] = {"angles": cfg.angles}
    if cfg.cutoff is not None:
        d["reconstruction"]["cutoff"] = cfg.cutoff
    d["oracle"] = {"signal_cutoff": cfg.fock_cutoffs[0], "meter_cutoff": cfg.fock_cutoffs[1]}
    return d


def emit(cfg: ScenarioConfig) -> str:
    """TOML text that :func:`parse_config` turns back into ``cfg``."""
    return tomli_w.dumps(config_to_dict(cfg))


# --- output -----------------------------------------------------------------------


def atomic_write(path: Path, data: bytes) -> None:
    """Write ``data`` to a temporary file next to ``path`` and rename it into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_bytes(header: str, columns, formats) -> bytes:
    buf = io.StringIO()
    table = np.column_stack([np.asarray(c) for c in columns]) if len(columns[0]) else np.empty((0, len(columns)))
    np.savetxt(buf, table, fmt=formats, delimiter=",", header=header, comments="")
    return buf.getvalue().encode()


def records_csv(rows) -> bytes:
    """``rows`` is a list of ``(phase, theta, outcomes array)``."""
    phase, theta, outcome, shot = [], [], [], []
    for ph, th, xs in rows:
        n = len(xs)
        phase.append(np.full(n, ph))
        theta.append(np.full(n, th))
        outcome.append(np.asarray(xs, dtype=float))
        shot.append(np.arange(n))
    cols = [np.concatenate(c) if c else np.empty(0) for c in (phase, theta, outcome, shot)]
    return csv_bytes("phase,theta,outcome,shot", cols, [FLOAT_FMT, FLOAT_FMT, FLOAT_FMT, "%d"])


def marginal_csv(phases, x, densities) -> bytes:
    densities = np.atleast_2d(densities)
    ph = np.repeat(np.asarray(phases, dtype=float), len(x))
    xs = np.tile(x, len(densities))
    return csv_bytes("phase,x,density", [ph, xs, densities.ravel()], [FLOAT_FMT] * 3)


def wigner_csv(w) -> bytes:
    x = np.repeat(w.x_grid.x, w.p_grid.n_points)
    p = np.tile(w.p_grid.x, w.x_grid.n_points)
    return csv_bytes("x,p,w", [x, p, w.values.ravel()], [FLOAT_FMT] * 3)


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
    return when.strftime("%Y-%m-%dT%H:%M:%SZ")


# --- execution --------------------------------------------------------------------


class _PathedError(Exception):
    def __init__(self, path: str, exc: Exception):
        super().__init__(f"{path}: {exc}")
        self.path = path
        self.exc = exc


def _stage(path: str, fn, *args, **kwargs):
    """Run ``fn`` and tag precondition failures with the config path they stem from."""
    try:
        return fn(*args, **kwargs)
    except (PreconditionError, ValueError, ArithmeticError) as exc:
        raise _PathedError(path, exc) from exc


def _normalized(density, dx):
    d = np.clip(np.asarray(density, dtype=float), 0.0, None)
    return d / (d.sum() * dx)


def _run_single(cfg: ScenarioConfig):
    sg, mg = cfg.grid, cfg.resolved_meter_grid()
    theta = cfg.theta_for(cfg.phi)
    coupling = qnd.CouplingConfig(cfg.kappa, cfg.phi, theta)
    psi_s = _stage("signal", make_state, cfg.signal, sg)
    psi_m = _stage("meter", make_state, cfg.meter, mg)
    if cfg.meter_frame == "readout":
        psi_m = in_frame(psi_m, theta)
    if cfg.backend == "fock":
        from .oracle import OracleScenario, fock_conditioned, fock_meter_marginal, fock_run

        scen = OracleScenario(cfg.signal, cfg.meter, cfg.kappa, cfg.phi, theta, sg, mg, cfg.fock_cutoffs, cfg.meter_frame)
        fj = _stage("oracle", fock_run, scen)
        w = fock_meter_marginal(fj, mg)

        def conditioned(i):
            return fock_conditioned(fj, mg.x[i], sg)
    else:
        joint = _stage("meter_grid", qnd.entangle, psi_s, psi_m, coupling)
        w = qnd.meter_marginal(joint)

        def conditioned(i):
            return qnd.condition(joint, i).state
    w = _normalized(w, mg.dx)
    idx = _stage("shots", experiments.sample_indices, w, mg, cfg.shots, experiments.phase_rng(cfg.seed, 0))
    if cfg.shots:
        est = experiments.histogram_density(idx, mg)
        pick = int(np.argmax(np.bincount(idx, minlength=mg.n_points)))
    else:
        est = w
        pick = int(np.argmax(w))
    cond = _stage("signal", conditioned, pick)
    files = {
        "records.csv": records_csv([(cfg.phi, theta, mg.x[idx])]),
        "marginal.csv": marginal_csv([cfg.phi], mg.x, est),
        "wigner.csv": wigner_csv(_stage("grid", wigner_of, cond)),
    }
    summary = {"conditioning_outcome": float(mg.x[pick]), "theta": theta}
    return files, summary, mg


def _run_weak(cfg: ScenarioConfig):
    sg, mg = cfg.grid, cfg.meter_grid or GridSpec(-50.0, 50.0, cfg.grid.n_points)
    theta = cfg.theta_for(cfg.phi)
    coupling = qnd.CouplingConfig(cfg.kappa, cfg.phi, theta)
    psi_s = _stage("signal", make_state, cfg.signal, sg)
    psi_m = _stage("meter", make_state, cfg.meter, mg)
    if cfg.meter_frame == "readout":
        psi_m = in_frame(psi_m, theta)
    res = _stage("meter", experiments.run_weak, psi_s, psi_m, coupling, cfg.shots, cfg.seed, sg, mg)
    files = {
        "records.csv": records_csv([(cfg.phi, theta, res.outcomes)]),
        "marginal.csv": marginal_csv([cfg.phi], mg.x, res.density),
    }
    summary = {
        "theta": theta,
        "shift": res.shift,
        "standard_error": res.standard_error,
        "expected_shift": res.expected_shift,
        "width_ratio": res.width_ratio,
        "min_fidelity": res.min_fidelity,
    }
    return files, summary, mg


def _sweep(cfg: ScenarioConfig, phases):
    sg, mg = cfg.grid, cfg.resolved_meter_grid()
    _stage("signal", make_state, cfg.signal, sg)
    _stage("meter", make_state, cfg.meter, mg)
    return _stage(
        "meter_grid", experiments.sweep_phases, cfg.signal, cfg.meter, cfg.kappa, phases,
        cfg.shots, cfg.seed, sg, mg, cfg.estimator, cfg.bandwidth, cfg.backend,
        cfg.fock_cutoffs, cfg.workers,
    )


def _sweep_files(m: experiments.MarginalSet) -> dict:
    rows = [
        (float(ph), float(ph) + math.pi / 2, m.meter_grid.x[idx])
        for ph, idx in zip(m.phases, m.outcome_indices)
    ]
    return {
        "records.csv": records_csv(rows),
        "marginal.csv": marginal_csv(m.phases, m.grid.x, m.densities),
    }


def _run_delta(cfg: ScenarioConfig):
    m = _sweep(cfg, [cfg.phi])
    return _sweep_files(m), {"theta": cfg.phi + math.pi / 2}, m.meter_grid


def _run_tomography(cfg: ScenarioConfig):
    m = _sweep(cfg, cfg.phases.resolve())
    rec = _stage("phases", experiments.reconstruct_wigner, m, cfg.cutoff, cfg.angles)
    files = _sweep_files(m)
    files["wigner.csv"] = wigner_csv(rec.wigner)
    summary = {
        "phases": [float(p) for p in m.phases],
        "residuals_l1": [float(r) for r in rec.residuals],
        "shots_used": rec.shots_used,
        "cutoff": rec.cutoff,
        "wigner_min": float(rec.wigner.values.min()),
    }
    return files, summary, m.meter_grid


_RUNNERS = {
    "single": _run_single,
    "weak": _run_weak,
    "delta": _run_delta,
    "tomography": _run_tomography,
}


def execute(cfg: ScenarioConfig, out_dir: Path | None = None) -> dict:
    """Run ``cfg`` and write its outputs; returns the manifest.

    Raises ``ConfigError``, ``PreconditionError`` (tagged with a config
    path) or ``OSError``.
    """
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    try:
        files, summary, mg = _RUNNERS[cfg.mode](cfg)
    except _PathedError as exc:
        inner = exc.exc
        if isinstance(inner, PreconditionError):
            raise type(inner)(str(exc)) from inner
        raise PreconditionError(str(exc)) from inner
    out.mkdir(parents=True, exist_ok=True)
    checksums = {}
    for name, data in files.items():
        atomic_write(out / name, data)
        checksums[name] = hashlib.sha256(data).hexdigest()
    sg = cfg.grid
    manifest = {
        "config": config_to_dict(cfg),
        "code_version": __version__,
        "timestamps": {"created": _timestamp()},
        "grid": {
            "dx": sg.dx,
            "dP": sg.dx,
            "n_points": sg.n_points,
            "meter_dx": mg.dx,
            "meter_x_min": mg.x_min,
            "meter_x_max": mg.x_max,
            "meter_n_points": mg.n_points,
            "cutoff": cfg.cutoff if cfg.cutoff is not None else math.pi / (2.0 * sg.dx),
        },
        "summary": summary,
        "checksums": checksums,
    }
    atomic_write(out / "manifest.json", (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode())
    return manifest


def verify_manifest(out_dir: Path) -> bool:
    """True when every checksum listed in ``manifest.json`` matches its file."""
    out = Path(out_dir)
    manifest = json.loads((out / "manifest.json").read_text())
    return all(
        hashlib.sha256((out / name).read_bytes()).hexdigest() == digest
        for name, digest in manifest["checksums"].items()
    )


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="qndtomo",
        description="Simulate QND meter measurements and endoscopic tomography of a signal mode.",
    )
    p.add_argument("--config", required=True, metavar="PATH", help="TOML scenario file")
    p.add_argument("--out-dir", metavar="PATH", help="output directory (overrides output_dir)")
    p.add_argument("--seed", type=int, metavar="N", help="random seed (overrides seed)")
    p.add_argument("--shots", type=int, metavar="N", help="shots per phase, 0 = exact densities")
    p.add_argument("--backend", choices=BACKENDS, help="grid simulator or Fock-basis oracle")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        print(f"config error: {args.config}: not valid TOML: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for key, value in (("seed", args.seed), ("shots", args.shots), ("backend", args.backend)):
        if value is not None:
            raw[key] = value
    try:
        cfg = config_from_dict(raw)
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        manifest = execute(cfg, args.out_dir)
    except PreconditionError as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    out = args.out_dir or cfg.output_dir
    print(f"wrote {', '.join(sorted(manifest['checksums']))} and manifest.json to {out}")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
