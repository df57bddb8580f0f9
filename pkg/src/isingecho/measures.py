"""Non-Markovianity quantifiers of the dephasing qubit.

For pure dephasing the optimal pair of initial states is a pair of antipodal
equatorial states, whose trace distance is ``sqrt(L(t))``. The trace-distance
measure therefore reduces to the summed rises of ``sqrt(L)`` between
consecutive local minima and maxima of the echo; the concurrence of a qubit
maximally entangled with an ancilla is also ``sqrt(L)``, so the entanglement
measure is the same number reached by integrating the positive part of its
derivative. The squared distance ``L`` changes at the rate of the quantum
Fisher information of an equatorial phase probe, ``-4 gamma L``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .dynamics import RateSeries
from .echo import DecoherenceSeries, TimeGrid, exact_qubit_state
from .errors import DomainError
from .spectrum import ChainConfig, dispersion, momentum_grid

PLATEAU_TOL = 1e-14
TRUNCATION_FRACTION = 0.9


class GrowthInterval(NamedTuple):
    a: float
    b: float
    L_a: float
    L_b: float


@dataclass(frozen=True)
class NonMarkovianityReport:
    value: float
    intervals: list[GrowthInterval]
    t_max: float
    n_grid_points: int
    recurrence_time: Optional[float] = None
    beyond_recurrence: bool = False

    @property
    def n_intervals(self) -> int:
        return len(self.intervals)


@dataclass(frozen=True, eq=False)
class FisherSeries:
    grid: TimeGrid
    fisher: np.ndarray
    flow: np.ndarray
    singular: np.ndarray = field(default=None)


class RecurrenceWarning(UserWarning):
    pass


def trace_distance(a, b):
    """Half the trace norm of ``a - b``; broadcasts over stacks of 2x2 states."""
    diff = np.asarray(a, dtype=complex) - np.asarray(b, dtype=complex)
    out = 0.5 * np.abs(np.linalg.eigvalsh(diff)).sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def recurrence_time(config: ChainConfig, step: float = 1e-5) -> float:
    """Time for the fastest quasiparticle of the |e> branch to cross half the ring.

    ``T_rec = N / (2 v_max)`` with ``v_max = max_k |d eps_e / dk|`` from
    centred differences at every grid momentum.
    """
    k = momentum_grid(config.n_spins)
    lam_star = config.lambda_star
    v = np.abs(dispersion(k + step, lam_star, config.J) - dispersion(k - step, lam_star, config.J)) / (2 * step)
    return config.n_spins / (2.0 * float(v.max()))


def default_truncation(config: ChainConfig) -> float:
    return TRUNCATION_FRACTION * recurrence_time(config)


def _window(series: DecoherenceSeries, t_max):
    """Resolve ``t_max`` and return it with the number of grid points in [t0, t_max]."""
    grid = series.grid
    t_rec = recurrence_time(series.config) if series.config is not None else None
    if t_max is None:
        t_max = grid.end if t_rec is None else min(TRUNCATION_FRACTION * t_rec, grid.end)
    if t_max > grid.end + 1e-9 * grid.dt:
        raise DomainError(f"t_max={t_max:.6g} lies beyond the series end {grid.end:.6g}")
    if t_max < grid.t0 + grid.dt:
        raise DomainError(f"t_max={t_max:.6g} leaves fewer than two grid points")
    n = int(np.floor((t_max - grid.t0) / grid.dt + 1e-9)) + 1
    return float(t_max), n, t_rec


def _parabola_vertex(y0, y1, y2):
    """Offset (in steps) and value of the vertex of the parabola through three samples."""
    curv = y0 - 2.0 * y1 + y2
    if curv == 0:
        return 0.0, y1
    p = 0.5 * (y0 - y2) / curv
    return p, y1 - 0.25 * (y0 - y2) * p


def _echo_extrema(t, L):
    """Local minima and maxima of the echo as ``(kind, time, value)`` triples.

    Runs of samples whose ``sqrt(L)`` differ by at most PLATEAU_TOL collapse
    onto their midpoint. Isolated extrema are refined by parabolic
    interpolation. The first sample opens with a minimum when the echo rises
    out of it and the last closes with a maximum when it rises into it.
    """
    c = np.sqrt(L)
    breaks = np.flatnonzero(np.abs(np.diff(c)) > PLATEAU_TOL)
    starts = np.concatenate([[0], breaks + 1])
    ends = np.concatenate([breaks, [len(c) - 1]])
    if len(starts) == 1:
        return []
    extrema = []
    last = len(starts) - 1
    for r, (s, e) in enumerate(zip(starts, ends)):
        rising_in = r > 0 and c[s] > c[ends[r - 1]]
        rising_out = r < last and c[starts[r + 1]] > c[e]
        if r == 0:
            kind = "min" if rising_out else None
        elif r == last:
            kind = "max" if rising_in else None
        elif rising_in and not rising_out:
            kind = "max"
        elif not rising_in and rising_out:
            kind = "min"
        else:
            kind = None
        if kind is None:
            continue
        mid = (s + e) // 2
        time, value = 0.5 * (t[s] + t[e]), float(L[mid])
        if s == e and 0 < s < len(c) - 1:
            p, value = _parabola_vertex(L[s - 1], L[s], L[s + 1])
            time = t[s] + p * (t[1] - t[0])
            value = float(np.clip(value, 0.0, 1.0))
        extrema.append((kind, time, value))
    return extrema


def blp_measure(series: DecoherenceSeries, t_max: float | None = None) -> NonMarkovianityReport:
    """Trace-distance non-Markovianity from the echo extrema on ``[t0, t_max]``.

    ``t_max=None`` uses ``0.9 * recurrence_time`` when the series knows its
    configuration (capped at the series end) and the full series otherwise.
    A ``t_max`` beyond the recurrence guard is honoured but flagged.
    """
    t_max, n, t_rec = _window(series, t_max)
    t = series.times[:n]
    L = np.clip(series.L[:n], 0.0, 1.0)
    intervals = []
    pending = None
    for kind, time, value in _echo_extrema(t, L):
        if kind == "min":
            pending = (time, value)
        elif pending is not None:
            if np.sqrt(value) > np.sqrt(pending[1]):
                intervals.append(GrowthInterval(pending[0], time, pending[1], value))
            pending = None
    total = float(sum(np.sqrt(iv.L_b) - np.sqrt(iv.L_a) for iv in intervals))
    beyond = t_rec is not None and t_max > TRUNCATION_FRACTION * t_rec * (1 + 1e-12)
    if beyond:
        warnings.warn(
            f"t_max={t_max:.6g} exceeds the recurrence guard {TRUNCATION_FRACTION * t_rec:.6g}",
            RecurrenceWarning,
            stacklevel=2,
        )
    return NonMarkovianityReport(
        value=total,
        intervals=intervals,
        t_max=t_max,
        n_grid_points=n,
        recurrence_time=t_rec,
        beyond_recurrence=beyond,
    )


def rhp_entanglement_measure(series: DecoherenceSeries, t_max: float | None = None) -> float:
    """Entanglement non-Markovianity: total positive variation of ``C = sqrt(L)``.

    Sums the rising steps of the concurrence, then replaces every sampled
    turning point by the vertex of the parabola through its neighbours, the
    same sub-grid correction the extrema route applies.
    """
    t_max, n, _ = _window(series, t_max)
    L = np.clip(series.L[:n], 0.0, 1.0)
    c = np.sqrt(L)
    dc = np.diff(c)
    up = dc > PLATEAU_TOL
    down = dc < -PLATEAU_TOL
    total = float(dc[up].sum())
    for i in np.flatnonzero((up[:-1] & down[1:]) | (down[:-1] & up[1:])) + 1:
        _, vertex = _parabola_vertex(L[i - 1], L[i], L[i + 1])
        shift = np.sqrt(np.clip(vertex, 0.0, 1.0)) - c[i]
        total += shift if up[i - 1] else -shift
    return total


def pair_trace_distance_measure(series: DecoherenceSeries, rho1, rho2, t_max: float | None = None) -> float:
    """Summed increases of the trace distance between two dephased initial states."""
    _, n, _ = _window(series, t_max)
    nu = series.nu[:n]
    d = trace_distance(exact_qubit_state(rho1, nu), exact_qubit_state(rho2, nu))
    inc = np.diff(d)
    return float(inc[inc > 0].sum())


def squared_distance_flow(series: DecoherenceSeries) -> np.ndarray:
    """Rate of change of the squared trace distance of the optimal pair, ``dL/dt``.

    Exact ``2 L Re(nu'/nu)`` when the series carries the analytic derivative,
    second-order finite differences of ``L`` otherwise.
    """
    if series.dlognu is not None:
        return 2.0 * series.L * series.dlognu.real
    return np.gradient(series.L, series.grid.dt, edge_order=2)


def fisher_flow(series: DecoherenceSeries, rates: RateSeries) -> FisherSeries:
    """Quantum Fisher information of the equatorial phase probe and its flow.

    The information equals the echo (1 at t = 0) and flows at ``-4 gamma L``.
    """
    if rates.grid != series.grid:
        raise DomainError("series and rates live on different grids")
    return FisherSeries(
        grid=series.grid,
        fisher=series.L.copy(),
        flow=-4.0 * rates.gamma * series.L,
        singular=rates.singular,
    )
