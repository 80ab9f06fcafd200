"""Experiment runner: JSON config in, deterministic CSV/JSON artifacts out.

Usage:
    skinsim run <config.json> [--workers N] [--out DIR]
    skinsim analyze <dir>

Every run writes `series.csv` (scalar observable means and standard errors),
`meta.json` (the fully resolved configuration, seed, code version and wall
time) and mode-specific extras.  Numbers are written with repr(), i.e. the
shortest decimal that round-trips, so output bytes never depend on locale or
worker count.  meta.json can itself be passed back to `skinsim run` and
reproduces the original artifacts byte for byte.

Exit codes: 0 success, 2 configuration error (message names the offending
field), 3 numerical failure (message names the trajectory index and time).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

import skinsim
from skinsim.analysis import (
    detect_transition,
    estimate_v0_from_pbc,
    max_entropy,
    predict_tc,
    sweep_phase_diagram,
)
from skinsim.engine import (
    EngineConfig,
    EngineError,
    EnsembleSeries,
    run_ensemble,
    run_trajectory,
    trajectory_rng,
)
from skinsim.model import ModelError, ModelSpec
from skinsim.state import momentum_grid

MODES = ("trajectory", "ensemble", "sweep", "pbc-steady", "liouvillian",
         "circuit", "analyze")
SCHEMA_VERSION = 1

# scalar observable -> CSV column stem, in fixed output order
SCALAR_COLUMNS = (
    ("entropy", "S_half"),
    ("f_skin", "f_skin"),
    ("f_r", "f_r"),
    ("velocity", "v"),
    ("jump_count", "jump_count"),
)
VECTOR_FILES = {
    "density": ("density.csv", "n"),
    "correlation": ("correlation.csv", "C"),
    "momentum": ("momentum.csv", "nk"),
}


class ConfigError(ValueError):
    """Bad run configuration; the message names the offending field."""


def _fmt(x) -> str:
    """Shortest round-trip decimal for one scalar."""
    return repr(float(x))


def _require(config: dict, field: str, kind=None):
    if field not in config:
        raise ConfigError(f"missing required field '{field}'")
    value = config[field]
    if kind is not None and not isinstance(value, kind):
        raise ConfigError(f"field '{field}' has wrong type {type(value).__name__}")
    return value


MODEL_FIELDS = {f.name for f in dataclasses.fields(ModelSpec)}
ENGINE_FIELDS = {f.name for f in dataclasses.fields(EngineConfig)}


def build_model_spec(config: dict) -> ModelSpec:
    kwargs = {k: config[k] for k in MODEL_FIELDS if k in config}
    if "L" not in kwargs:
        raise ConfigError("missing required field 'L'")
    try:
        return ModelSpec(**kwargs)
    except (ModelError, TypeError) as err:
        raise ConfigError(str(err)) from err


def build_engine_config(config: dict) -> EngineConfig:
    kwargs = {k: config[k] for k in ENGINE_FIELDS if k in config}
    if "t_max" not in kwargs:
        raise ConfigError("missing required field 't_max'")
    if "observables" in kwargs:
        kwargs["observables"] = tuple(kwargs["observables"])
    try:
        return EngineConfig(**kwargs)
    except ValueError as err:
        raise ConfigError(str(err)) from err


def load_config(path) -> dict:
    path = Path(path)
    try:
        document = json.loads(path.read_text())
    except OSError as err:
        raise ConfigError(f"cannot read config file: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"config file is not valid JSON: {err}") from err
    if not isinstance(document, dict):
        raise ConfigError("config document must be a JSON object")
    # a meta.json from a previous run round-trips as a config
    if "config" in document and "mode" not in document:
        document = document["config"]
    version = _require(document, "schema_version", int)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"field 'schema_version' must be {SCHEMA_VERSION}, got {version}")
    mode = _require(document, "mode", str)
    if mode not in MODES:
        raise ConfigError(f"field 'mode' must be one of {MODES}, got '{mode}'")
    return document


def write_csv(path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _series_scalar_table(series: EnsembleSeries):
    """(header, rows) for series.csv from an ensemble result."""
    header = ["t", "t_over_L"]
    columns = [series.times, series.t_over_L]
    for name, stem in SCALAR_COLUMNS:
        if name in series.mean:
            header += [f"{stem}_mean", f"{stem}_se"]
            columns += [series.mean[name], series.se[name]]
    rows = np.column_stack(columns)
    return header, rows


def write_series(out_dir: Path, series: EnsembleSeries) -> None:
    header, rows = _series_scalar_table(series)
    write_csv(out_dir / "series.csv", header, rows)
    for name, (filename, stem) in VECTOR_FILES.items():
        if name not in series.mean:
            continue
        values = series.mean[name]
        header = ["t", "t_over_L"] + [f"{stem}_{i + 1}" for i in range(values.shape[1])]
        rows = np.column_stack([series.times, series.t_over_L, values])
        write_csv(out_dir / filename, header, rows)


def write_meta(out_dir: Path, config: dict, wall_time: float, extra=None) -> None:
    meta = {
        "config": config,
        "seed": config.get("seed", 0),
        "version": skinsim.__version__,
        "wall_time_s": wall_time,
    }
    if extra:
        meta.update(extra)
    (out_dir / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _resolve(config: dict, defaults: dict) -> dict:
    """Fill defaults so meta.json captures every knob that shaped the run."""
    resolved = dict(defaults)
    resolved.update(config)
    return resolved


# ---------------------------------------------------------------------------
# modes


def run_trajectory_mode(config: dict, out_dir: Path, workers: int) -> None:
    spec = build_model_spec(config)
    engine = build_engine_config(config)
    index = config.get("trajectory_index", 0)
    records = run_trajectory(spec, engine, config.get("initial", "neel"), index)
    header = ["t", "t_over_L"]
    for name, stem in SCALAR_COLUMNS:
        if name in records[0].values or name == "jump_count":
            header.append(stem)
    rows = []
    for r in records:
        row = [r.t, r.t / spec.L]
        for name, _ in SCALAR_COLUMNS:
            if name == "jump_count":
                row.append(float(r.jump_count))
            elif name in r.values:
                row.append(r.values[name])
        rows.append(row)
    write_csv(out_dir / "series.csv", header, rows)
    for name, (filename, stem) in VECTOR_FILES.items():
        if name not in records[0].values:
            continue
        values = np.array([r.values[name] for r in records])
        header = ["t", "t_over_L"] + [f"{stem}_{i + 1}" for i in range(values.shape[1])]
        times = np.array([r.t for r in records])
        write_csv(out_dir / filename, header,
                  np.column_stack([times, times / spec.L, values]))


def run_ensemble_mode(config: dict, out_dir: Path, workers: int) -> None:
    spec = build_model_spec(config)
    engine = build_engine_config(config)
    n_traj = _require(config, "n_traj", int)
    series = run_ensemble(spec, engine, config.get("initial", "neel"),
                          n_traj=n_traj, workers=workers)
    write_series(out_dir, series)


def _point_dirname(w: float) -> str:
    return f"W{w:g}".replace(".", "p")


def run_sweep_mode(config: dict, out_dir: Path, workers: int) -> None:
    spec = build_model_spec(config)
    engine = build_engine_config(config)
    n_traj = _require(config, "n_traj", int)
    W_values = _require(config, "W_values", list)
    disorder = config.get("sweep_disorder", "quasiperiodic")
    manifest = {"completed": [], "pending": [_point_dirname(w) for w in W_values]}
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")

    def persist(w, series):
        name = _point_dirname(w)
        point_dir = out_dir / name
        point_dir.mkdir(exist_ok=True)
        write_series(point_dir, series)
        manifest["completed"].append(name)
        manifest["pending"].remove(name)
        manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")

    diagram = sweep_phase_diagram(spec, engine, W_values, n_traj,
                                  workers=workers, disorder=disorder,
                                  point_callback=persist)
    header = ["t_over_L"] + [f"S_half_{_point_dirname(w)}" for w in diagram.W_values]
    write_csv(out_dir / "phase.csv", header,
              np.column_stack([diagram.t_over_L, diagram.entropy.T]))
    fits = {
        "W_values": [float(w) for w in diagram.W_values],
        "t_c_over_L": [None if math.isnan(tc) else float(tc)
                       for tc in diagram.transition],
    }
    (out_dir / "fits.json").write_text(json.dumps(fits, indent=2) + "\n")


def run_pbc_steady_mode(config: dict, out_dir: Path, workers: int) -> None:
    config = dict(config)
    config.setdefault("bc", "pbc")
    observables = list(config.get("observables", ["entropy", "f_skin", "momentum"]))
    if "momentum" not in observables:
        observables.append("momentum")
    config["observables"] = observables
    spec = build_model_spec(config)
    engine = build_engine_config(config)
    n_traj = _require(config, "n_traj", int)
    series = run_ensemble(spec, engine, config.get("initial", "neel"),
                          n_traj=n_traj, workers=workers)
    write_series(out_dir, series)
    k = momentum_grid(spec.L)
    nk = series.mean["momentum"][-1]
    nk_se = series.se["momentum"][-1]
    write_csv(out_dir / "nk.csv", ["k", "n_k_mean", "n_k_se"],
              np.column_stack([k, nk, nk_se]))
    v0 = estimate_v0_from_pbc(nk)
    fits = {"v0_pbc": v0, "t_c_over_L_pred": predict_tc(v0)}
    (out_dir / "fits.json").write_text(json.dumps(fits, indent=2) + "\n")


def run_liouvillian_mode(config: dict, out_dir: Path, workers: int) -> None:
    from skinsim.liouvillian import (
        LiouvillianError,
        build_sector,
        site_densities,
        spectrum,
        steady_state,
    )

    spec = build_model_spec(config)
    N = config.get("N", spec.L // 2)
    try:
        sector = build_sector(spec, N)
        lam = spectrum(sector)
        rho_ss = steady_state(sector)
    except LiouvillianError as err:
        raise EngineError(str(err)) from err
    order = np.lexsort((lam.imag, lam.real))
    lam = lam[order]
    write_csv(out_dir / "spectrum.csv", ["re_lambda", "im_lambda"],
              np.column_stack([lam.real, lam.imag]))
    n_l = site_densities(sector, rho_ss)
    write_csv(out_dir / "density.csv", ["l", "n_l"],
              np.column_stack([np.arange(1, spec.L + 1, dtype=float), n_l]))


def run_circuit_mode(config: dict, out_dir: Path, workers: int) -> None:
    from skinsim.circuit import (
        CircuitConfig,
        CircuitError,
        apply_module,
        measure_all,
        neel_register,
        skin_pattern,
    )

    n_shots = _require(config, "n_shots", int)
    n_modules = _require(config, "n_modules", int)
    try:
        circ = CircuitConfig(
            L=_require(config, "L", int),
            delta_t=config.get("delta_t", 0.5),
            p=config.get("p", 0.7),
            n_modules=n_modules,
            W=config.get("W", 0.0),
            alpha=config.get("alpha", ModelSpec(L=2).alpha),
        )
    except CircuitError as err:
        raise ConfigError(str(err)) from err
    seed = config.get("seed", 0)
    target = skin_pattern(circ.L)
    target_index = int("".join("1" if s < 0 else "0" for s in target), 2)

    match_prob = np.zeros((n_shots, n_modules))   # |<skin|psi>|^2 per module
    mean_spin = np.zeros((n_shots, n_modules, circ.L))
    outcomes = np.zeros((n_shots, circ.L), dtype=int)
    for shot in range(n_shots):
        rng = trajectory_rng(seed, shot)
        psi = neel_register(circ.L)
        try:
            for m in range(n_modules):
                psi = apply_module(psi, circ, rng)
                prob = np.abs(psi) ** 2
                match_prob[shot, m] = prob[target_index]
                for l in range(1, circ.L + 1):
                    bit = circ.L - l
                    down = prob.reshape(2 ** (circ.L - bit - 1), 2, 2**bit)[:, 1, :].sum()
                    mean_spin[shot, m, l - 1] = 1.0 - 2.0 * down
            outcomes[shot] = measure_all(psi, circ.L, rng)
        except CircuitError as err:
            raise EngineError(str(err), trajectory_index=shot) from err

    modules = np.arange(1, n_modules + 1, dtype=float)
    fs_mean = match_prob.mean(axis=0)
    fs_se = match_prob.std(axis=0, ddof=1) / math.sqrt(n_shots) if n_shots > 1 \
        else np.zeros(n_modules)
    write_csv(out_dir / "series.csv", ["module", "f_skin_mean", "f_skin_se"],
              np.column_stack([modules, fs_mean, fs_se]))
    spin = mean_spin.mean(axis=0)
    write_csv(out_dir / "spins.csv",
              ["module"] + [f"nu_{l}" for l in range(1, circ.L + 1)],
              np.column_stack([modules, spin]))
    write_csv(out_dir / "shots.csv",
              ["shot"] + [f"nu_{l}" for l in range(1, circ.L + 1)],
              np.column_stack([np.arange(n_shots, dtype=float), outcomes]))
    final_nu = outcomes.mean(axis=0)
    fits = {
        "f_skin_final": float(np.mean(np.all(outcomes == target, axis=1))),
        "mean_spin_final": [float(x) for x in final_nu],
        "down_counts_ok": bool(np.all(np.sum(outcomes == -1, axis=1) == circ.L // 2)),
    }
    (out_dir / "fits.json").write_text(json.dumps(fits, indent=2) + "\n")


def _read_csv(path: Path):
    lines = path.read_text().strip().split("\n")
    header = lines[0].split(",")
    data = np.array([[float(x) for x in line.split(",")] for line in lines[1:]])
    return header, data


def _column(header, data, name, path):
    if name not in header:
        raise ConfigError(f"column '{name}' not found in {path}")
    return data[:, header.index(name)]


def analyze_directory(directory) -> dict:
    """Summarize the artifacts found under `directory` into a fits dict.

    Works on a single run directory or on a sweep directory with per-W
    subdirectories (listed in manifest.json).
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise ConfigError(f"field 'directory': {directory} is not a directory")
    fits: dict = {}
    manifest_path = directory / "manifest.json"
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text())
        points = {}
        for name in manifest.get("completed", []):
            sub = analyze_directory(directory / name)
            w = float(name[1:].replace("p", "."))
            points[name] = {"W": w, **sub}
        fits["points"] = points
        fits["t_c_over_L"] = {name: p.get("t_c_over_L") for name, p in points.items()}
    series_path = directory / "series.csv"
    if series_path.exists():
        header, data = _read_csv(series_path)
        if "t_over_L" in header and "f_skin_mean" in header:
            t_over_L = _column(header, data, "t_over_L", series_path)
            fs = _column(header, data, "f_skin_mean", series_path)
            fits["t_c_over_L"] = detect_transition(t_over_L, fs)
        if "t_over_L" in header and "S_half_mean" in header:
            t_over_L = _column(header, data, "t_over_L", series_path)
            s = _column(header, data, "S_half_mean", series_path)
            s_max, t_at = max_entropy(t_over_L, s)
            fits["S_max"] = s_max
            fits["S_max_t_over_L"] = t_at
            fits["S_final"] = float(s[-1])
    nk_path = directory / "nk.csv"
    if nk_path.exists():
        header, data = _read_csv(nk_path)
        nk = _column(header, data, "n_k_mean", nk_path)
        v0 = estimate_v0_from_pbc(nk)
        fits["v0_pbc"] = v0
        fits["t_c_over_L_pred"] = predict_tc(v0)
    if not fits:
        raise ConfigError(f"field 'directory': no artifacts found in {directory}")
    return fits


def run_analyze_mode(config: dict, out_dir: Path, workers: int) -> None:
    directory = _require(config, "directory", str)
    fits = analyze_directory(directory)
    (out_dir / "fits.json").write_text(json.dumps(fits, indent=2) + "\n")


MODE_RUNNERS = {
    "trajectory": run_trajectory_mode,
    "ensemble": run_ensemble_mode,
    "sweep": run_sweep_mode,
    "pbc-steady": run_pbc_steady_mode,
    "liouvillian": run_liouvillian_mode,
    "circuit": run_circuit_mode,
    "analyze": run_analyze_mode,
}


def run(config_path, workers: int | None = None, out: str | None = None) -> int:
    """Execute one configuration file; returns the process exit code."""
    try:
        config = load_config(config_path)
        if workers is None:
            workers = int(config.get("workers",
                                     os.environ.get("SKINSIM_WORKERS", 1)))
        if out is None:
            root = os.environ.get("SKINSIM_OUT", ".")
            out = config.get("out_dir", os.path.join(root, config.get("label", "run")))
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        start = time.perf_counter()
        MODE_RUNNERS[config["mode"]](config, out_dir, workers)
        write_meta(out_dir, config, wall_time=time.perf_counter() - start)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except EngineError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 3
    return 0


def analyze(directory) -> int:
    try:
        fits = analyze_directory(directory)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    path = Path(directory) / "fits.json"
    path.write_text(json.dumps(fits, indent=2) + "\n")
    print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="skinsim",
        description="Monitored free-fermion chain with conditional feedback",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute a JSON run configuration")
    p_run.add_argument("config", help="path to the configuration file")
    p_run.add_argument("--workers", type=int, default=None,
                       help="process count (affects wall time only)")
    p_run.add_argument("--out", default=None, help="output directory")
    p_an = sub.add_parser("analyze", help="summarize artifacts in a directory")
    p_an.add_argument("directory")
    args = parser.parse_args(argv)
    if args.command == "run":
        return run(args.config, workers=args.workers, out=args.out)
    return analyze(args.directory)


if __name__ == "__main__":
    sys.exit(main())
