"""TOML run configuration, CSV writers/readers and JSON run manifests."""

from __future__ import annotations

import csv
import json
import math
import os
import platform
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import tomli

from . import __version__
from .errors import ConfigError, FjmgtError, OutputError
from .kernels import Kernel, KernelPair, normalize_tag
from .solver import Forcing, InitialData, ScenarioConfig, Trajectory
from .spectral import Interval, Rectangle

OUT_DIR_ENV = "FJMGT_OUT_DIR"
DEFAULT_OUT_DIR = "fjmgt_out"

SCHEMA = {
    "scenario": {"scenario", "alpha", "tau", "delta", "c", "u0_modes", "u1_modes", "u2_modes",
                 "forcing_modes", "forcing_omega", "forcing_phase", "taus"},
    "kernels": {"kernel1", "kernel2", "power_a", "trials", "seed"},
    "nonlinearity": {"mode", "k1", "k2", "k3", "picard_tol", "picard_max_iter"},
    "discretization": {"n_modes", "dt", "T", "length", "width", "quad_points", "stride"},
    "output": {"out_dir"},
}
REQUIRED = {"scenario": ("scenario", "tau"), "discretization": ("dt", "T")}


@dataclass(frozen=True, eq=False)
class RunSpec:
    """Everything a CLI run needs: the scenario, its data and run options."""

    config: ScenarioConfig
    data: InitialData
    taus: tuple = ()
    out_dir: Optional[str] = None
    trials: int = 1000
    seed: int = 0
    raw: dict = field(default_factory=dict)


def _number(section, key, value, problems, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        problems.append(f"[{section}] {key} must be a number, got {value!r}")
        return None
    if kind is int:
        if float(value) != int(value):
            problems.append(f"[{section}] {key} must be an integer")
            return None
        return int(value)
    return float(value)


def _numbers(section, key, value, problems):
    if not isinstance(value, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        problems.append(f"[{section}] {key} must be a list of numbers")
        return []
    return [float(v) for v in value]


def parse_run(text: str) -> RunSpec:
    """Parse and validate a TOML run description, reporting every problem at once."""
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"not valid TOML: {exc}") from None
    problems = []
    for name, body in doc.items():
        if name not in SCHEMA:
            problems.append(f"unknown section [{name}]")
            continue
        if not isinstance(body, dict):
            problems.append(f"[{name}] must be a table")
            continue
        for key in body:
            if key not in SCHEMA[name]:
                problems.append(f"unknown key '{key}' in [{name}]")
    for name, keys in REQUIRED.items():
        for key in keys:
            if key not in doc.get(name, {}):
                problems.append(f"missing required key '{key}' in [{name}]")
    if problems:
        raise ConfigError(problems)

    sc = doc.get("scenario", {})
    kn = doc.get("kernels", {})
    nl = doc.get("nonlinearity", {})
    di = doc.get("discretization", {})
    out = doc.get("output", {})

    def num(sec, table, key, default=None, kind=float):
        if key not in table:
            return default
        return _number(sec, key, table[key], problems, kind)

    alpha = num("scenario", sc, "alpha")
    pair = None
    try:
        tag = normalize_tag(str(sc["scenario"]))
        if tag == "Custom":
            if "kernel1" not in kn or "kernel2" not in kn:
                problems.append("scenario 'custom' needs kernel1 and kernel2 in [kernels]")
            else:
                pair = KernelPair(Kernel.from_config(kn["kernel1"]), Kernel.from_config(kn["kernel2"]),
                                  float(kn.get("power_a", 1.0)))
        else:
            extra = [k for k in ("kernel1", "kernel2", "power_a") if k in kn]
            if extra:
                problems.append(f"{', '.join(extra)} are filled in from the named scenario '{tag}'; "
                                "use scenario = 'custom' to set them")
            pair = KernelPair.named(tag, alpha)
    except FjmgtError as exc:
        problems.append(str(exc))

    n_modes = num("discretization", di, "n_modes", 8, int)
    length = num("discretization", di, "length", 1.0)
    width = num("discretization", di, "width")
    quad = num("discretization", di, "quad_points", None, int)
    domain = None
    if n_modes is not None and length is not None:
        try:
            domain = Rectangle(length, width, n_modes) if width is not None else Interval(length, n_modes)
        except FjmgtError as exc:
            problems.append(str(exc))

    forcing = None
    if "forcing_modes" in sc:
        forcing = Forcing(tuple(_numbers("scenario", "forcing_modes", sc["forcing_modes"], problems)),
                          num("scenario", sc, "forcing_omega", 0.0) or 0.0,
                          num("scenario", sc, "forcing_phase", 0.0) or 0.0)
    elif "forcing_omega" in sc or "forcing_phase" in sc:
        problems.append("forcing_omega/forcing_phase need forcing_modes")

    taus = tuple(_numbers("scenario", "taus", sc["taus"], problems)) if "taus" in sc else ()
    mode = nl.get("mode", "Linear")
    fields = dict(
        tau=num("scenario", sc, "tau"), delta=num("scenario", sc, "delta", 0.1),
        c=num("scenario", sc, "c", 1.0), k1=num("nonlinearity", nl, "k1", 0.0),
        k2=num("nonlinearity", nl, "k2", 0.0), k3=num("nonlinearity", nl, "k3", 0.0),
        T=num("discretization", di, "T"), h=num("discretization", di, "dt"),
        picard_tol=num("nonlinearity", nl, "picard_tol", 1e-10),
        picard_max_iter=num("nonlinearity", nl, "picard_max_iter", 30, int),
        stride=num("discretization", di, "stride", 1, int),
    )
    trials = num("kernels", kn, "trials", 1000, int)
    seed = num("kernels", kn, "seed", 0, int)
    if problems or pair is None or domain is None or any(v is None for v in fields.values()):
        raise ConfigError(problems or ["invalid configuration"])
    if fields["h"] > 0 and abs(fields["T"] / fields["h"] - round(fields["T"] / fields["h"])) > 1e-9:
        problems.append("T must be an integer multiple of dt")
    try:
        config = ScenarioConfig(pair=pair, mode=mode, alpha=alpha, forcing=forcing, domain=domain,
                                quad_points=quad, **fields)
    except ConfigError as exc:
        raise ConfigError(problems + exc.problems) from None
    if problems:
        raise ConfigError(problems)

    m = config.domain.size
    data = InitialData.from_modes(
        m,
        _numbers("scenario", "u0_modes", sc.get("u0_modes", []), problems),
        _numbers("scenario", "u1_modes", sc.get("u1_modes", []), problems),
        _numbers("scenario", "u2_modes", sc.get("u2_modes", []), problems),
    )
    if config.tau > 0 and not pair.k1.is_delta and np.any(data.u2 != 0):
        problems.append("u2_modes must be zero when kernel1 is not delta_0")
    if problems:
        raise ConfigError(problems)
    return RunSpec(config, data, taus, out.get("out_dir"), trials, seed, doc)


def parse_config(text: str) -> ScenarioConfig:
    return parse_run(text).config


def load_run(path) -> RunSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OutputError(path, exc.strerror or str(exc)) from None
    return parse_run(text)


def resolve_out_dir(spec_dir: Optional[str], override: Optional[str] = None) -> Path:
    """Flag beats config; the environment variable only supplies the default."""
    chosen = override or spec_dir or os.environ.get(OUT_DIR_ENV) or DEFAULT_OUT_DIR
    return Path(chosen)


# CSV ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def _rows(obj):
    from .coercivity import CoercivityCertificate
    from .experiments import EnergyRecord, ManufacturedResult, SweepResult

    if isinstance(obj, Trajectory):
        m = obj.x.shape[1] if obj.x.ndim == 2 else 0
        header = ["t"]
        for k in range(1, m + 1):
            header += [f"mode_{k}_x", f"mode_{k}_v", f"mode_{k}_w"]
        rows = []
        for i in range(len(obj)):
            row = [obj.t[i]]
            for k in range(m):
                row += [obj.x[i, k], obj.v[i, k], obj.w[i, k]]
            rows.append(row)
        return header, rows
    if isinstance(obj, SweepResult):
        header = ["tau", "error", "peak_energy", "iterations", "status"]
        return header, [[e.tau, e.error, e.peak_energy, e.iterations, e.status] for e in obj.entries]
    if isinstance(obj, ManufacturedResult):
        header = ["h", "error"]
        return header, [[h, e] for h, e in zip(obj.hs, obj.errors)]
    if isinstance(obj, (list, tuple)) and (not obj or isinstance(obj[0], EnergyRecord)):
        header = ["time", "lap_u", "lap_ut", "cum_grad_utt", "phi_proxy", "psi_proxy", "wave_energy"]
        return header, [[r.time, r.lap_u, r.lap_ut, r.cum_grad_utt, r.phi_proxy, r.psi_proxy, r.wave_energy]
                        for r in obj]
    if isinstance(obj, (list, tuple)) and isinstance(obj[0], CoercivityCertificate):
        header = ["assumption", "pair", "tau", "trials", "seed", "worst_margin", "worst_trial", "passed", "constants"]
        return header, [[c.assumption_id, c.pair, c.tau, c.trials, c.seed, c.worst_margin, c.worst_trial,
                         str(c.passed).lower(), json.dumps(c.empirical_constant, sort_keys=True)] for c in obj]
    raise TypeError(f"cannot write {type(obj).__name__} as CSV")


def write_csv(obj, path) -> Path:
    """Write a trajectory, sweep, energy report, convergence table or certificate list."""
    header, rows = _rows(obj)
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise OutputError(path, exc.strerror or str(exc)) from None
    return path


def read_csv(path):
    """Return ``(header, rows)``; numeric cells are parsed as floats."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = []
            for row in reader:
                parsed = []
                for cell in row:
                    try:
                        parsed.append(float(cell))
                    except ValueError:
                        parsed.append(cell)
                rows.append(parsed)
    except OSError as exc:
        raise OutputError(path, exc.strerror or str(exc)) from None
    return header, rows


def read_trajectory(path, eigenvalues=None) -> Trajectory:
    header, rows = read_csv(path)
    m = (len(header) - 1) // 3
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    t = data[:, 0]
    block = data[:, 1:].reshape(len(rows), m, 3)
    lam = np.asarray(eigenvalues, float) if eigenvalues is not None else np.full(m, math.nan)
    return Trajectory(t, block[:, :, 0].copy(), block[:, :, 1].copy(), block[:, :, 2].copy(), lam, {})


# manifest ----------------------------------------------------------------------

def config_hash(config: ScenarioConfig) -> str:
    return config.content_hash()


def write_manifest(out_dir, config: ScenarioConfig, status: str, wall_time: float, seed: int = 0,
                   outputs=(), extra: Optional[dict] = None) -> Path:
    manifest = {
        "tool": "fjmgt",
        "version": __version__,
        "python": platform.python_version(),
        "config": config.to_dict(),
        "config_hash": config.content_hash(),
        "seed": seed,
        "status": status,
        "wall_time_s": round(wall_time, 6),
        "outputs": [str(Path(p).name) for p in outputs],
    }
    if extra:
        manifest.update(extra)
    path = Path(out_dir) / "manifest.json"
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    except OSError as exc:
        raise OutputError(path, exc.strerror or str(exc)) from None
    return path


__all__ = [
    "RunSpec", "parse_config", "parse_run", "load_run", "resolve_out_dir",
    "write_csv", "read_csv", "read_trajectory", "write_manifest", "config_hash",
    "OUT_DIR_ENV",
]
