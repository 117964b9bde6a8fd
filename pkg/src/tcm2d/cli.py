"""Experiment runner.

Subcommands:

* ``run``      -- integrate one configuration; writes manifest.json,
                  diagnostics.csv, diagnostics.jsonl, summary.json.
* ``sweep``    -- Cartesian-product parameter sweep; one subdirectory per
                  cell plus aggregate.csv of fitted decay exponents.
* ``validate`` -- run the inequality lab at two resolutions.
* ``fit``      -- fit a decay exponent to one column of a trajectory file.

Configurations are JSON with a schema_version field (documented in the
README).  Exit codes: 0 success, 2 config/usage error, 3 blow-up, 4 I/O
error, 5 inequality-lab instability, 6 nonpositive values in a fit window.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import math
import os
import sys
import time as _time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .diagnostics import (
    CsvWriter,
    DecayFitError,
    DiagnosticsConfig,
    DiagnosticsRecord,
    JsonlWriter,
    compute_record,
    decay_fit,
    norm_column,
    theory_exponent,
)
from .integrator import StepperConfig, run as integrate
from .inequality_lab import (
    INTERPOLATION_TOL,
    check_composition,
    check_gn,
    check_interpolation,
    check_kato_ponce,
)
from .model import (
    BlowUpError,
    ModelParams,
    ParamError,
    TcmState,
    ViscosityFloorError,
)
from .spectral import (
    SpectralGrid,
    leray_project_coeffs,
    power_law_amplitude,
    random_coeffs,
)

SCHEMA_VERSION = 1
MAX_FUNCTIONAL_ORDER = 4.0  # high orders amplify round-off near the dealias cutoff

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_IO = 4
EXIT_UNSTABLE = 5
EXIT_NONPOSITIVE = 6


class ConfigError(ValueError):
    """A configuration file failed validation; the message names the field."""


@dataclass(frozen=True)
class RunConfig:
    """One experiment: grid, model parameters, stepper, initial data, outputs."""

    n: int = 128
    box_length: float = 16.0 * math.pi
    params: ModelParams = field(default_factory=ModelParams)
    stepper: StepperConfig = field(default_factory=lambda: StepperConfig(t_end=20.0, sample_every=0.5))
    epsilon: float = 0.01
    seed: int = 1
    spectrum_peak: int = 8
    spectrum_slope: float = 1.0
    diagnostics: DiagnosticsConfig = field(default_factory=DiagnosticsConfig)
    output_dir: str | None = None

    def to_dict(self) -> dict:
        law = self.params.viscosity
        if callable(law):
            law = getattr(law, "__name__", "custom")
        return {
            "schema_version": SCHEMA_VERSION,
            "grid": {"n": self.n, "box_length": self.box_length},
            "params": {
                "alpha": self.params.alpha,
                "beta": self.params.beta,
                "mu_lower": self.params.mu_lower,
                "s": self.params.s,
                "viscosity": law,
                "viscosity_a": self.params.viscosity_a,
                "eta": self.params.eta,
                "kappa": self.params.kappa,
            },
            "stepper": {
                "scheme": self.stepper.scheme,
                "dt": self.stepper.dt,
                "cfl": self.stepper.cfl,
                "t_end": self.stepper.t_end,
                "sample_every": self.stepper.sample_every,
            },
            "epsilon": self.epsilon,
            "seed": self.seed,
            "spectrum_peak": self.spectrum_peak,
            "spectrum_slope": self.spectrum_slope,
            "diagnostics": {
                "norms": [[f, g] for f, g in self.diagnostics.norms],
                "functional_orders": list(self.diagnostics.functional_orders),
            },
            "output_dir": self.output_dir,
        }


def _expect(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def parse_run_config(doc: dict) -> RunConfig:
    """Validate and build a RunConfig from a parsed JSON document."""
    _expect(isinstance(doc, dict), "config must be a JSON object")
    version = doc.get("schema_version", SCHEMA_VERSION)
    _expect(version == SCHEMA_VERSION, f"schema_version must be {SCHEMA_VERSION}, got {version}")

    grid = doc.get("grid", {})
    n = grid.get("n", 128)
    _expect(isinstance(n, int) and n > 0 and n % 2 == 0, f"grid.n must be a positive even integer, got {n}")
    box = float(grid.get("box_length", 16.0 * math.pi))
    _expect(box > 0, f"grid.box_length must be > 0, got {box}")

    p = doc.get("params", {})
    for key in p:
        _expect(
            key in ("alpha", "beta", "mu_lower", "s", "viscosity", "viscosity_a", "eta", "kappa"),
            f"params.{key} is not a recognized key",
        )
    try:
        params = ModelParams(
            alpha=float(p.get("alpha", 0.0)),
            beta=float(p.get("beta", 1.0)),
            mu_lower=float(p.get("mu_lower", 1.0)),
            s=float(p.get("s", 1.5)),
            viscosity=p.get("viscosity", "quadratic"),
            viscosity_a=float(p.get("viscosity_a", 1.0)),
            eta=None if p.get("eta") is None else float(p["eta"]),
            kappa=None if p.get("kappa") is None else float(p["kappa"]),
        )
    except ParamError as exc:
        raise ConfigError(f"params: {exc}") from exc

    st = doc.get("stepper", {})
    dt = st.get("dt", "auto")
    try:
        stepper = StepperConfig(
            t_end=float(st.get("t_end", 20.0)),
            dt=dt if dt == "auto" else float(dt),
            cfl=float(st.get("cfl", 0.5)),
            sample_every=float(st.get("sample_every", 0.5)),
            scheme=st.get("scheme", "if-rk4"),
        )
    except ValueError as exc:
        raise ConfigError(f"stepper: {exc}") from exc

    epsilon = float(doc.get("epsilon", 0.01))
    _expect(epsilon > 0, f"epsilon must be > 0, got {epsilon}")
    seed = doc.get("seed", 1)
    _expect(isinstance(seed, int), f"seed must be an integer, got {seed!r}")
    peak = doc.get("spectrum_peak", 8)
    _expect(isinstance(peak, int) and peak >= 1, f"spectrum_peak must be an integer >= 1, got {peak}")
    slope = float(doc.get("spectrum_slope", 1.0))

    dg = doc.get("diagnostics", {})
    norms = tuple((f, float(g)) for f, g in dg.get("norms", [["u", 0.0], ["u", 1.0], ["v", 0.0], ["v", 1.0], ["theta", 0.0], ["theta", 1.0]]))
    for f, g in norms:
        _expect(f in ("u", "v", "theta"), f"diagnostics.norms field must be u, v, or theta, got {f!r}")
        _expect(g >= 0, f"diagnostics.norms gamma must be >= 0, got {g}")
    orders = tuple(float(m) for m in dg.get("functional_orders", []))
    for m in orders:
        _expect(m >= params.s, f"diagnostics.functional_orders entries must be >= s = {params.s}, got {m}")
        _expect(m <= MAX_FUNCTIONAL_ORDER, f"diagnostics.functional_orders entries are capped at {MAX_FUNCTIONAL_ORDER}, got {m}")

    return RunConfig(
        n=n,
        box_length=box,
        params=params,
        stepper=stepper,
        epsilon=epsilon,
        seed=seed,
        spectrum_peak=peak,
        spectrum_slope=slope,
        diagnostics=DiagnosticsConfig(norms=norms, functional_orders=orders),
        output_dir=doc.get("output_dir"),
    )


def load_run_config(path: str | Path) -> RunConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path}: invalid JSON ({exc})") from exc
    return parse_run_config(doc)


def make_initial_data(config: RunConfig, grid: SpectralGrid | None = None) -> TcmState:
    """Seeded random band-limited initial state, rescaled to the smallness norm.

    u is Leray-projected (hence exactly divergence-free); all fields are
    mean-free.  The global rescale makes the undamped or damped norm sum equal
    epsilon to relative 1e-12.  Identical seeds give bitwise-identical states.
    """
    from .diagnostics import smallness_norm

    if grid is None:
        grid = SpectralGrid(config.n, config.box_length)
    k_peak = config.spectrum_peak * 2.0 * math.pi / grid.box_length
    amp = power_law_amplitude(config.spectrum_slope, k_peak)
    seed = config.seed
    for _ in range(8):
        rng = np.random.default_rng(seed)
        c = np.stack([random_coeffs(grid, rng, amp) for _ in range(5)])
        c[0], c[1] = leray_project_coeffs(c[0], c[1], grid)
        c *= grid.dealias_mask
        state = TcmState(grid, c, 0.0)
        norm = smallness_norm(state, config.params)
        if norm > 0:
            state.coeffs *= config.epsilon / norm
            return state
        seed += 1  # zero draw (probability ~0): retry with perturbed seed
    raise RuntimeError("random initial data degenerate after 8 seed retries")


@dataclass
class RunResult:
    exit_code: int
    out_dir: Path
    summary: dict


def _monotonicity_verdict(records: list[DiagnosticsRecord]) -> dict:
    """Check discrete nonincrease of X^2 between consecutive samples.

    Per-interval increase is allowed up to 10 * dt^4 * (local Y^2 scale) for
    the fourth-order stepper, plus a machine-precision floor, since the
    analytic statement is exact but discretization noise must not trigger
    false failures.
    """
    violations = 0
    max_excess = 0.0
    for prev, cur in zip(records, records[1:]):
        x2_prev, x2_cur = prev.X_m**2, cur.X_m**2
        y2 = max(prev.Y_m**2, cur.Y_m**2)
        tol = 10.0 * cur.dt**4 * y2 + 64.0 * np.finfo(float).eps * x2_prev
        excess = x2_cur - x2_prev - tol
        if excess > 0:
            violations += 1
            max_excess = max(max_excess, excess)
    return {
        "verdict": "pass" if violations == 0 else "fail",
        "violations": violations,
        "max_excess": max_excess,
        "intervals": max(len(records) - 1, 0),
    }


def _fit_block(records: list[DiagnosticsRecord], config: RunConfig) -> list[dict]:
    t_end = config.stepper.t_end
    window = (t_end / 4.0, 3.0 * t_end / 4.0)
    damped = config.params.alpha > 0
    fits = []
    for fieldname, gamma in config.diagnostics.norms:
        theory = theory_exponent(fieldname, gamma, damped)
        series = [(r.time, r.norms[(fieldname, gamma)]) for r in records]
        entry: dict[str, Any] = {"field": fieldname, "gamma": gamma, "theory_exponent": theory}
        try:
            fit = decay_fit(series, window, fieldname, gamma, theory)
        except DecayFitError as exc:
            entry.update({"status": "failed", "reason": str(exc)})
        else:
            entry.update(
                {
                    "status": "ok",
                    "exponent": fit.exponent,
                    "r_squared": fit.r_squared,
                    "window": list(fit.window),
                    "n_samples": fit.n_samples,
                }
            )
        fits.append(entry)
    return fits


def execute_run(config: RunConfig, out_dir: str | Path, quiet: bool = True) -> RunResult:
    """Integrate one configuration and persist all artifacts."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = SpectralGrid(config.n, config.box_length)
    params = config.params
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "config": config.to_dict(),
        "derived": {
            "lambda": params.lam,
            "delta1": params.delta1,
            "eta": params.eta,
            "kappa": params.kappa,
        },
        "code_version": __version__,
        "started_at": _time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "finished_at": None,
        "status": "running",
    }
    _write_json(out / "manifest.json", manifest)

    initial = make_initial_data(config, grid)
    records: list[DiagnosticsRecord] = []
    orders = config.diagnostics.orders(params)

    status = "completed"
    blow_up_time = None
    try:
        with open(out / "diagnostics.csv", "w") as csv_fh, open(out / "diagnostics.jsonl", "w") as jsonl_fh:
            csv_w = CsvWriter(csv_fh, config.diagnostics, orders)
            jsonl_w = JsonlWriter(jsonl_fh, config.diagnostics)

            def sink(state: TcmState, dt: float, diss_int: float) -> None:
                rec = compute_record(state, params, config.diagnostics, dt, diss_int)
                records.append(rec)
                csv_w.write(rec)
                jsonl_w.write(rec)

            try:
                integrate(initial, params, config.stepper, sink)
            except BlowUpError as exc:
                status = "blow-up"
                blow_up_time = exc.time
    except OSError as exc:
        manifest["status"] = "io-error"
        manifest["finished_at"] = _time.strftime("%Y-%m-%dT%H:%M:%S%z")
        _write_json(out / "manifest.json", manifest)
        if not quiet:
            print(f"io error: {exc}", file=sys.stderr)
        return RunResult(EXIT_IO, out, {"status": "io-error", "error": str(exc)})

    sup_small = max((r.smallness for r in records), default=0.0)
    summary: dict[str, Any] = {
        "status": status,
        "epsilon": config.epsilon,
        "stability": {
            "sup_norm_sum": sup_small,
            "bound": 2.0 * config.epsilon,
            "verdict": "pass" if sup_small < 2.0 * config.epsilon else "fail",
        },
        "x2_monotonicity": _monotonicity_verdict(records),
        "bands": {
            "A": {
                "min_ratio": min((r.band_A for r in records), default=1.0),
                "max_ratio": max((r.band_A for r in records), default=1.0),
            },
            "X": {
                "min_ratio": min((r.band_X for r in records), default=1.0),
                "max_ratio": max((r.band_X for r in records), default=1.0),
            },
        },
        "fits": _fit_block(records, config) if status == "completed" else [],
    }
    if blow_up_time is not None:
        summary["blow_up_time"] = blow_up_time
    _write_json(out / "summary.json", summary)

    manifest["status"] = status
    manifest["finished_at"] = _time.strftime("%Y-%m-%dT%H:%M:%S%z")
    if blow_up_time is not None:
        manifest["blow_up_time"] = blow_up_time
    _write_json(out / "manifest.json", manifest)

    if not quiet:
        print(f"run {out}: status={status} stability={summary['stability']['verdict']} "
              f"x2_monotone={summary['x2_monotonicity']['verdict']}")
    return RunResult(EXIT_BLOWUP if status == "blow-up" else EXIT_OK, out, summary)


def _write_json(path: Path, obj: dict) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _resolve_out_dir(explicit: str | None, config: RunConfig) -> Path:
    if explicit:
        return Path(explicit)
    if config.output_dir:
        return Path(config.output_dir)
    env = os.environ.get("TCM_OUT_DIR")
    if env:
        return Path(env)
    raise ConfigError("output_dir not set (use --out, config output_dir, or TCM_OUT_DIR)")


# ---------------------------------------------------------------------------
# sweep


SWEEP_AXES = {
    "alpha": ("params", "alpha"),
    "beta": ("params", "beta"),
    "epsilon": ("epsilon",),
    "s": ("params", "s"),
    "n": ("grid", "n"),
    "seed": ("seed",),
}


def parse_sweep(doc: dict) -> tuple[RunConfig, list[dict[str, Any]], int]:
    """Returns (base config, list of axis-assignment dicts, worker count)."""
    _expect(isinstance(doc, dict), "sweep file must be a JSON object")
    version = doc.get("schema_version", SCHEMA_VERSION)
    _expect(version == SCHEMA_VERSION, f"schema_version must be {SCHEMA_VERSION}, got {version}")
    base = parse_run_config(doc.get("base", {}))
    axes = doc.get("axes", {})
    _expect(isinstance(axes, dict) and axes, "sweep axes must be a non-empty object")
    for key, values in axes.items():
        _expect(key in SWEEP_AXES, f"axes.{key} is not sweepable (allowed: {sorted(SWEEP_AXES)})")
        _expect(isinstance(values, list) and values, f"axes.{key} must be a non-empty list")
    names = sorted(axes)
    cells: list[dict[str, Any]] = [{}]
    for name in names:
        cells = [dict(cell, **{name: v}) for cell in cells for v in axes[name]]
    threads = int(doc.get("threads", 1))
    _expect(threads >= 1, f"threads must be >= 1, got {threads}")
    return base, cells, threads


def _apply_cell(base: RunConfig, cell: dict[str, Any]) -> RunConfig:
    doc = base.to_dict()
    for name, value in cell.items():
        path = SWEEP_AXES[name]
        target = doc
        for part in path[:-1]:
            target = target[part]
        target[path[-1]] = value
    return parse_run_config(doc)


def _cell_dirname(index: int, cell: dict[str, Any]) -> str:
    parts = [f"cell_{index:04d}"] + [f"{k}_{cell[k]:g}" if isinstance(cell[k], float) else f"{k}_{cell[k]}" for k in sorted(cell)]
    return "__".join(parts)


def _run_cell(args: tuple[dict, str]) -> tuple[str, int]:
    doc, out_dir = args
    config = parse_run_config(doc)
    result = execute_run(config, out_dir, quiet=True)
    return out_dir, result.exit_code


def execute_sweep(base: RunConfig, cells: list[dict[str, Any]], out_dir: str | Path, threads: int = 1, quiet: bool = True) -> int:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = []
    cell_dirs = []
    for i, cell in enumerate(cells):
        config = _apply_cell(base, cell)
        cell_dir = out / _cell_dirname(i, cell)
        cell_dirs.append((cell, cell_dir))
        jobs.append((config.to_dict(), str(cell_dir)))

    codes: dict[str, int] = {}
    if threads == 1:
        for job in jobs:
            d, code = _run_cell(job)
            codes[d] = code
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as pool:
            for d, code in pool.map(_run_cell, jobs):
                codes[d] = code

    norm_keys = list(base.diagnostics.norms)
    header = ["cell", "alpha", "beta", "epsilon", "s", "n", "seed", "status"]
    for f, g in norm_keys:
        header += [f"exp_{norm_column(f, g)}", f"theory_{norm_column(f, g)}", f"r2_{norm_column(f, g)}"]
    lines = [",".join(header)]
    worst = EXIT_OK
    for cell, cell_dir in cell_dirs:
        config = _apply_cell(base, cell)
        summary_path = cell_dir / "summary.json"
        status = "missing"
        fits: dict[tuple[str, float], dict] = {}
        if summary_path.exists():
            summary = json.loads(summary_path.read_text())
            status = summary.get("status", "unknown")
            for entry in summary.get("fits", []):
                fits[(entry["field"], float(entry["gamma"]))] = entry
        code = codes.get(str(cell_dir), EXIT_IO)
        if code != EXIT_OK:
            worst = max(worst, code)
        row = [
            cell_dir.name,
            repr(config.params.alpha),
            repr(config.params.beta),
            repr(config.epsilon),
            repr(config.params.s),
            str(config.n),
            str(config.seed),
            status,
        ]
        for key in norm_keys:
            entry = fits.get(key)
            if entry and entry.get("status") == "ok":
                row += [repr(entry["exponent"]), repr(entry["theory_exponent"]), repr(entry["r_squared"])]
            else:
                row += ["", "", ""]
        lines.append(",".join(row))
    (out / "aggregate.csv").write_text("\n".join(lines) + "\n")
    if not quiet:
        print(f"sweep {out}: {len(cells)} cells, worst exit {worst}")
    return worst


# ---------------------------------------------------------------------------
# validate


def execute_validate(trials: int, resolutions: Sequence[int], seed: int, box_length: float = 2.0 * math.pi, quiet: bool = False) -> tuple[int, list]:
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    grids = [SpectralGrid(n, box_length) for n in resolutions]
    rng = np.random.default_rng(seed)
    reports = []
    reports.append(check_gn(trials, grids, rng))
    interp_exact, interp_linf = check_interpolation(max(trials, 1), grids, rng)
    reports += [interp_exact, interp_linf]
    reports.append(check_kato_ponce(trials, grids, rng))
    reports.append(check_composition(trials, grids, rng))

    failures = []
    if interp_exact.worst_ratio > 1.0 + INTERPOLATION_TOL:
        failures.append(f"interpolation-exact constant {interp_exact.worst_ratio!r} exceeds 1")
    for rep in reports:
        if not rep.stable:
            failures.append(f"{rep.name} unstable across resolutions (worst {rep.worst_ratio:.4g})")

    if not quiet:
        print(f"{'inequality':<24}{'trials':>8}{'worst':>12}{'median':>12}  {'stable':<7}resolutions")
        for rep in reports:
            print(
                f"{rep.name:<24}{rep.trials:>8}{rep.worst_ratio:>12.6g}{rep.median_ratio:>12.6g}  "
                f"{str(rep.stable):<7}{list(rep.resolutions)}"
            )
        for msg in failures:
            print(f"FAIL: {msg}", file=sys.stderr)
    return (EXIT_UNSTABLE if failures else EXIT_OK), reports


# ---------------------------------------------------------------------------
# fit


def execute_fit(
    trajectory: str | Path,
    fieldname: str,
    gamma: float,
    window: tuple[float, float] | None,
    damped: bool | None,
    out_path: str | Path | None = None,
    quiet: bool = False,
) -> tuple[int, dict | None]:
    path = Path(trajectory)
    if not path.exists():
        print(f"trajectory file not found: {path}", file=sys.stderr)
        return EXIT_IO, None
    lines = path.read_text().strip().splitlines()
    header = lines[0].split(",")
    col = norm_column(fieldname, gamma)
    if col not in header:
        print(f"column {col} not present in {path}", file=sys.stderr)
        return EXIT_CONFIG, None
    t_idx, c_idx = header.index("t"), header.index(col)
    series = []
    for line in lines[1:]:
        cells = line.split(",")
        series.append((float(cells[t_idx]), float(cells[c_idx])))
    if window is None:
        t_end = series[-1][0]
        window = (t_end / 4.0, 3.0 * t_end / 4.0)
    if damped is None:
        damped = _damped_from_manifest(path)
    theory = theory_exponent(fieldname, gamma, damped)
    try:
        fit = decay_fit(series, window, fieldname, gamma, theory)
    except DecayFitError as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        code = EXIT_NONPOSITIVE if "nonpositive" in str(exc) else EXIT_CONFIG
        return code, None
    doc = fit.to_dict()
    doc["difference"] = fit.exponent - theory
    if not quiet:
        print(
            f"{fieldname} gamma={gamma:g}: fitted {fit.exponent:+.4f}, theory {theory:+.4f}, "
            f"difference {doc['difference']:+.4f}, r^2 = {fit.r_squared:.6f}"
        )
        print(json.dumps(doc))
    if out_path is not None:
        _write_json(Path(out_path), doc)
    return EXIT_OK, doc


def _damped_from_manifest(traj_path: Path) -> bool:
    manifest = traj_path.parent / "manifest.json"
    if manifest.exists():
        doc = json.loads(manifest.read_text())
        return doc.get("derived", {}).get("delta1", 0) == 1
    return False


# ---------------------------------------------------------------------------
# argument parsing


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tcm2d", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate one configuration")
    p_run.add_argument("--config", required=True, help="path to a run config (JSON)")
    p_run.add_argument("--out", default=None, help="output directory (overrides config)")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--threads", type=int, default=1, help="accepted for symmetry; runs are single-threaded")
    p_run.add_argument("--quiet", action="store_true")

    p_sweep = sub.add_parser("sweep", help="Cartesian-product parameter sweep")
    p_sweep.add_argument("--config", required=True, help="path to a sweep file (JSON)")
    p_sweep.add_argument("--out", default=None, help="output directory")
    p_sweep.add_argument("--threads", type=int, default=None, help="worker processes (default: sweep file or 1)")
    p_sweep.add_argument("--quiet", action="store_true")

    p_val = sub.add_parser("validate", help="run the inequality lab")
    p_val.add_argument("--trials", type=int, default=100, help="trials per inequality per resolution")
    p_val.add_argument("--resolutions", default="64,128", help="comma-separated grid sizes")
    p_val.add_argument("--seed", type=int, default=0)
    p_val.add_argument("--out", default=None, help="optional path for the JSON report")
    p_val.add_argument("--quiet", action="store_true")

    p_fit = sub.add_parser("fit", help="fit a decay exponent to a trajectory column")
    p_fit.add_argument("trajectory", help="diagnostics.csv produced by run")
    p_fit.add_argument("--field", required=True, choices=["u", "v", "theta"])
    p_fit.add_argument("--gamma", type=float, required=True)
    p_fit.add_argument("--window", type=float, nargs=2, default=None, metavar=("T0", "T1"))
    damp = p_fit.add_mutually_exclusive_group()
    damp.add_argument("--damped", dest="damped", action="store_true", default=None)
    damp.add_argument("--undamped", dest="damped", action="store_false")
    p_fit.add_argument("--out", default=None, help="optional path for the fit JSON")
    p_fit.add_argument("--quiet", action="store_true")

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            config = load_run_config(args.config)
            if args.seed is not None:
                config = replace(config, seed=args.seed)
            out = _resolve_out_dir(args.out, config)
            return execute_run(config, out, quiet=args.quiet).exit_code
        if args.command == "sweep":
            with open(args.config) as fh:
                doc = json.load(fh)
            base, cells, threads = parse_sweep(doc)
            if args.threads is not None:
                threads = args.threads
            out = _resolve_out_dir(args.out, base)
            return execute_sweep(base, cells, out, threads, quiet=args.quiet)
        if args.command == "validate":
            resolutions = [int(tok) for tok in args.resolutions.split(",") if tok]
            code, reports = execute_validate(args.trials, resolutions, args.seed, quiet=args.quiet)
            if args.out:
                _write_json(Path(args.out), {"reports": [r.to_dict() for r in reports]})
            return code
        if args.command == "fit":
            code, _ = execute_fit(
                args.trajectory, args.field, args.gamma,
                tuple(args.window) if args.window else None,
                args.damped, args.out, quiet=args.quiet,
            )
            return code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParamError, ViscosityFloorError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except json.JSONDecodeError as exc:
        print(f"config error: invalid JSON ({exc})", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
