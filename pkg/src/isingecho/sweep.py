"""Parameter sweeps over (N, lambda*), CSV persistence and critical-point detection."""

from __future__ import annotations

import csv
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence, Union

import numpy as np
import yaml

from .dynamics import dephasing_rate, rate_series
from .echo import TimeGrid, echo_series, nyquist_dt
from .errors import AmbiguityError, InvalidConfigError, InvalidGridError, IsingEchoError, NotFoundError
from .measures import RecurrenceWarning, blp_measure, default_truncation, fisher_flow
from .spectrum import ChainConfig, mode_spectrum

WORKERS_ENV = "ISINGECHO_MAX_WORKERS"
MARKOVIAN_TOL = 1e-10

SWEEP_COLUMNS = ("n_spins", "lambda_star", "blp", "t_max", "n_intervals", "min_gamma", "error")
SERIES_COLUMNS = ("t", "re_nu", "im_nu", "L", "phi", "gamma", "lamb", "fisher_flow")
ORACLE_COLUMNS = ("t", "L", "L_oracle", "abs_dL", "re_nu", "im_nu", "re_nu_oracle", "im_nu_oracle")

Policy = Union[float, str]


def fmt(x) -> str:
    """Round-trippable text for a number: 17 significant digits."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def expand_values(spec) -> tuple[float, ...]:
    """Accept a list of values or a ``{min, max, step}`` mapping / 3-tuple."""
    if isinstance(spec, Mapping):
        lo, hi, step = float(spec["min"]), float(spec["max"]), float(spec["step"])
    elif isinstance(spec, (int, float)):
        return (float(spec),)
    else:
        return tuple(float(v) for v in spec)
    if step <= 0 or hi < lo:
        raise InvalidConfigError(f"bad range min={lo} max={hi} step={step}")
    n = int(round((hi - lo) / step)) + 1
    return tuple(round(lo + i * step, 12) for i in range(n))


def _policy(value, name) -> Policy:
    if value is None or value == "auto":
        return "auto"
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise InvalidConfigError(f"{name} must be 'auto' or a positive number, got {value!r}") from None
    if not value > 0:
        raise InvalidConfigError(f"{name} must be positive, got {value}")
    return value


@dataclass(frozen=True)
class SweepSpec:
    lambda_star_values: tuple[float, ...]
    n_values: tuple[int, ...]
    J: float = 1.0
    delta: float = 0.01
    dt: Policy = "auto"
    t_max_policy: Policy = "auto"
    outputs: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "lambda_star_values", expand_values(self.lambda_star_values))
        object.__setattr__(self, "n_values", tuple(int(n) for n in np.atleast_1d(self.n_values)))
        object.__setattr__(self, "dt", _policy(self.dt, "dt"))
        object.__setattr__(self, "t_max_policy", _policy(self.t_max_policy, "t_max_policy"))
        if not self.lambda_star_values or not self.n_values:
            raise InvalidConfigError("a sweep needs at least one lambda_star and one n_spins value")
        for n in self.n_values:
            for ls in self.lambda_star_values:
                ChainConfig.from_lambda_star(ls, self.delta, n, self.J)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "SweepSpec":
        """Build from the config-file layout (``base``, ``grid``, ``outputs`` tables)."""
        data = dict(data)
        base = dict(data.pop("base", {}) or {})
        grid = dict(data.pop("grid", {}) or {})
        known = {"lambda_star_values", "n_values", "t_max_policy", "outputs", "J", "delta", "dt"}
        unknown = set(data) - known
        unknown |= set(base) - {"J", "delta"}
        unknown |= set(grid) - {"dt", "t_max_policy"}
        if unknown:
            raise InvalidConfigError(f"unknown config keys: {sorted(unknown)}")
        merged = {**base, **grid, **data}
        if "lambda_star_values" not in merged or "n_values" not in merged:
            raise InvalidConfigError("config needs lambda_star_values and n_values")
        return cls(**merged)

    def cells(self):
        for n in self.n_values:
            for ls in self.lambda_star_values:
                yield n, ls


def load_sweep_spec(path, **overrides) -> SweepSpec:
    """Read a YAML sweep file; keyword overrides that are not ``None`` win."""
    data = {}
    if path is not None:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, Mapping):
            raise InvalidConfigError(f"{path}: top level must be a mapping")
    spec_dict = dict(data)
    base = dict(spec_dict.pop("base", {}) or {})
    grid = dict(spec_dict.pop("grid", {}) or {})
    spec_dict.update(base)
    spec_dict.update(grid)
    spec_dict.update({k: v for k, v in overrides.items() if v is not None})
    return SweepSpec.from_mapping(spec_dict)


@dataclass(frozen=True)
class SweepRow:
    n_spins: int
    lambda_star: float
    blp: float = float("nan")
    t_max: float = float("nan")
    n_intervals: int = 0
    min_gamma: float = float("nan")
    runtime_ms: float = 0.0
    error: str = ""


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    rows: tuple[SweepRow, ...]

    def for_n(self, n_spins: int) -> list[SweepRow]:
        return [r for r in self.rows if r.n_spins == n_spins]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            write_sweep_csv(self.rows, fh)


def resolve_grid(config: ChainConfig, dt: Policy, t_max: Policy):
    """Spectrum, truncation time and time grid of one cell.

    ``dt="auto"`` takes half the resolution bound (40 points per fastest period).
    """
    spectrum = mode_spectrum(config)
    t_end = default_truncation(config) if t_max == "auto" else float(t_max)
    step = 0.5 * nyquist_dt(spectrum) if dt == "auto" else float(dt)
    return spectrum, t_end, TimeGrid.span(t_end, step)


def run_cell(n_spins: int, lambda_star: float, J: float, delta: float, dt: Policy, t_max: Policy) -> SweepRow:
    start = time.perf_counter()
    try:
        config = ChainConfig.from_lambda_star(lambda_star, delta, n_spins, J)
        spectrum, t_end, grid = resolve_grid(config, dt, t_max)
        series = echo_series(config, grid, spectrum)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RecurrenceWarning)
            report = blp_measure(series, t_end)
        gamma, singular = dephasing_rate(series, spectrum)
        window = gamma[: report.n_grid_points][~singular[: report.n_grid_points]]
        min_gamma = float(window.min()) if window.size else float("nan")
        return SweepRow(
            n_spins=n_spins,
            lambda_star=lambda_star,
            blp=report.value,
            t_max=report.t_max,
            n_intervals=report.n_intervals,
            min_gamma=min_gamma,
            runtime_ms=1e3 * (time.perf_counter() - start),
        )
    except IsingEchoError as exc:
        return SweepRow(
            n_spins=n_spins,
            lambda_star=lambda_star,
            runtime_ms=1e3 * (time.perf_counter() - start),
            error=f"{type(exc).__name__}: {exc}",
        )


def _run_cell_args(args):
    return run_cell(*args)


def worker_count(requested: int | None = None) -> int:
    """Pool size: ``requested`` (or the CPU count) capped by ``$ISINGECHO_MAX_WORKERS``."""
    n = requested if requested else (os.cpu_count() or 1)
    cap = os.environ.get(WORKERS_ENV)
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def run_sweep(spec: SweepSpec, workers: int | None = None) -> SweepResult:
    """Evaluate every (N, lambda*) cell, N-major, in a deterministic row order."""
    jobs = [(n, ls, spec.J, spec.delta, spec.dt, spec.t_max_policy) for n, ls in spec.cells()]
    n_workers = min(worker_count(workers), len(jobs))
    if n_workers <= 1:
        rows = [_run_cell_args(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            rows = list(pool.map(_run_cell_args, jobs, chunksize=1))
    return SweepResult(spec=spec, rows=tuple(rows))


def write_sweep_csv(rows: Sequence[SweepRow], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        if r.error:
            w.writerow([r.n_spins, fmt(r.lambda_star), "", "", "", "", r.error])
        else:
            w.writerow([r.n_spins, fmt(r.lambda_star), fmt(r.blp), fmt(r.t_max), r.n_intervals, fmt(r.min_gamma), ""])


@dataclass(frozen=True)
class CriticalPoint:
    n_spins: int
    lambda_star: float
    blp: float
    markovian: bool
    resolution: float


def detect_critical_point(result: SweepResult, n_spins: int) -> CriticalPoint:
    """Field value where the measure of the ``n_spins`` scan is smallest.

    Raises:
        NotFoundError: no successful scan with at least three fields for ``n_spins``.
        AmbiguityError: several fields tie (within MARKOVIAN_TOL) for the minimum.
    """
    rows = sorted((r for r in result.for_n(n_spins) if not r.error), key=lambda r: r.lambda_star)
    if len(rows) < 3:
        raise NotFoundError(f"no lambda* scan with >= 3 points for n_spins={n_spins}")
    values = np.array([r.blp for r in rows])
    best = values.min()
    tied = [r.lambda_star for r, v in zip(rows, values) if v - best <= MARKOVIAN_TOL]
    if len(tied) > 1:
        raise AmbiguityError(f"{len(tied)} fields tie for the minimum measure {best:.3g}: {tied}", tied)
    row = rows[int(values.argmin())]
    fields = np.array([r.lambda_star for r in rows])
    return CriticalPoint(
        n_spins=n_spins,
        lambda_star=row.lambda_star,
        blp=row.blp,
        markovian=row.blp < MARKOVIAN_TOL,
        resolution=float(np.min(np.diff(fields))),
    )


def _open_outputs(paths: Mapping[str, Any]):
    handles = {}
    try:
        for key, path in paths.items():
            if path is not None:
                handles[key] = open(path, "w", newline="")
    except OSError:
        for fh in handles.values():
            fh.close()
        raise
    return handles


def emit_series(config: ChainConfig, grid: TimeGrid, paths: Mapping[str, Any], oracle: bool = False) -> dict:
    """Write the time series of one configuration as CSV.

    ``paths["series"]`` receives the columns in ``SERIES_COLUMNS``; with
    ``oracle=True`` ``paths["oracle"]`` receives the quasiparticle echo next to
    the exact-diagonalization one. Output files are opened before any
    computation so an unwritable path fails fast.

    Returns a summary dict (max oracle deviation when requested).
    """
    if grid is None or grid.n_points < 2:
        raise InvalidGridError("empty time grid")
    wanted = {"series": paths.get("series")}
    if oracle:
        if paths.get("oracle") is None:
            raise InvalidConfigError("oracle output requested without an 'oracle' path")
        wanted["oracle"] = paths["oracle"]
    handles = _open_outputs(wanted)
    try:
        spectrum = mode_spectrum(config)
        series = echo_series(config, grid, spectrum)
        rates = rate_series(series, spectrum)
        flow = fisher_flow(series, rates).flow
        summary = {"n_points": grid.n_points}
        if "series" in handles:
            w = csv.writer(handles["series"], lineterminator="\n")
            w.writerow(SERIES_COLUMNS)
            for row in zip(grid.times, series.nu.real, series.nu.imag, series.L, series.phi, rates.gamma, rates.lamb, flow):
                w.writerow([fmt(v) for v in row])
        if oracle:
            from .oracle import oracle_echo

            ref = oracle_echo(config.n_spins, config.lam, config.delta, config.J, grid)
            dL = np.abs(series.L - ref.L)
            w = csv.writer(handles["oracle"], lineterminator="\n")
            w.writerow(ORACLE_COLUMNS)
            for row in zip(grid.times, series.L, ref.L, dL, series.nu.real, series.nu.imag, ref.nu.real, ref.nu.imag):
                w.writerow([fmt(v) for v in row])
            summary["max_abs_dL"] = float(dL.max())
            summary["max_abs_dnu"] = float(np.abs(series.nu - ref.nu).max())
        return summary
    finally:
        for fh in handles.values():
            fh.close()
