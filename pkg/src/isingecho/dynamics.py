"""Time-local master equation of the dephasing qubit.

The reduced dynamics obeys

    d rho/dt = i Lambda(t) [sz, rho] + gamma(t) (sz rho sz - rho)

with ``gamma = -L'/(4L)`` and ``Lambda = -phi'/2``, ``nu = |nu| exp(i phi)``.
``sz = diag(1, -1)`` in the ``(|g>, |e>)`` basis; with this orientation the
coherence ``rho_eg`` evolves as ``exp(-2 int gamma - 2i int Lambda)`` and
reproduces ``nu`` exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .echo import SIGMA_Z, DecoherenceSeries, TimeGrid, _factor_terms, _time_blocks, bloch_vector, is_physical
from .errors import DomainError, IntegrationError, PhysicalityError
from .spectrum import ModeSpectrum, mode_spectrum

SINGULAR_FACTOR = 1e-12
RATE_CLAMP = 1e6


@dataclass(frozen=True, eq=False)
class RateSeries:
    """Dephasing rate and Lamb shift on a time grid.

    ``singular`` marks points where some echo factor fell below
    ``SINGULAR_FACTOR``; the rate there is clamped to ``+-RATE_CLAMP``.
    ``gamma_mid``/``lamb_mid`` are the exact values at the half steps when the
    series was built from a spectrum; otherwise the integrator interpolates.
    """

    grid: TimeGrid
    gamma: np.ndarray
    lamb: np.ndarray
    singular: np.ndarray
    gamma_mid: Optional[np.ndarray] = None
    lamb_mid: Optional[np.ndarray] = None

    @property
    def times(self) -> np.ndarray:
        return self.grid.times


def echo_log_derivative(spectrum: ModeSpectrum, t):
    """``L'/L`` from the mode sum, plus the smallest echo factor at each time.

    ``d/dt log(1 - w sin^2(eps t)) = -w eps sin(2 eps t) / (1 - w sin^2(eps t))``
    with ``w = sin^2(2 alpha)``.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    w = np.sin(2.0 * spectrum.alpha) ** 2
    eps = spectrum.eps_e
    dlog = np.empty(len(t))
    fmin = np.empty(len(t))
    with np.errstate(divide="ignore", invalid="ignore"):
        for sl in _time_blocks(t, len(spectrum)):
            x = np.multiply.outer(t[sl], eps)
            factor = 1.0 - w * np.sin(x) ** 2
            terms = -w * eps * np.sin(2.0 * x) / factor
            # a factor that is exactly 1 - w sin^2 = 0 gives 0/0 in its own term
            terms[~np.isfinite(terms)] = 0.0
            dlog[sl] = terms.sum(axis=1)
            fmin[sl] = factor.min(axis=1) if factor.size else 1.0
    return dlog, fmin


def _rate_from_log_derivative(dlog, fmin):
    singular = fmin < SINGULAR_FACTOR
    gamma = np.clip(-0.25 * dlog, -RATE_CLAMP, RATE_CLAMP)
    gamma = np.where(singular, np.where(dlog > 0, -RATE_CLAMP, RATE_CLAMP), gamma)
    return gamma, singular


def dephasing_rate(series: DecoherenceSeries, spectrum: ModeSpectrum):
    """``gamma(t) = -L'/(4L)`` on the series grid.

    Returns:
        ``(gamma, singular)``: rate values and a boolean mask of points where
        an echo factor dropped below ``SINGULAR_FACTOR`` (rate clamped there).
    """
    return _rate_from_log_derivative(*echo_log_derivative(spectrum, series.times))


def lamb_shift(series: DecoherenceSeries) -> np.ndarray:
    """``Lambda(t) = -phi'(t)/2``.

    Uses the analytic phase velocity ``Im(nu'/nu)`` when the series carries it,
    central differences of the unwrapped phase (one-sided at the ends) otherwise.
    """
    if series.dlognu is not None:
        return -0.5 * series.dlognu.imag
    return -0.5 * np.gradient(series.phi, series.grid.dt, edge_order=2)


def _phase_velocity(spectrum: ModeSpectrum, t):
    _, _, dlognu = _factor_terms(spectrum, np.atleast_1d(np.asarray(t, dtype=float)))
    return dlognu.imag


def rate_series(series: DecoherenceSeries, spectrum: ModeSpectrum | None = None) -> RateSeries:
    """Master-equation coefficients for ``series``, including half-step values."""
    if spectrum is None:
        if series.config is None:
            raise DomainError("rate_series needs a spectrum or a series that knows its ChainConfig")
        spectrum = mode_spectrum(series.config)
    gamma, singular = dephasing_rate(series, spectrum)
    mid = series.grid.midpoints()
    gamma_mid, _ = _rate_from_log_derivative(*echo_log_derivative(spectrum, mid))
    return RateSeries(
        grid=series.grid,
        gamma=gamma,
        lamb=lamb_shift(series),
        singular=singular,
        gamma_mid=gamma_mid,
        lamb_mid=-0.5 * _phase_velocity(spectrum, mid),
    )


def integrated_rate(rates: RateSeries) -> np.ndarray:
    """Cumulative ``int_0^t gamma`` by Simpson's rule on each step.

    Falls back to the trapezoid rule when half-step values are missing.
    """
    g = rates.gamma
    if rates.gamma_mid is not None:
        steps = rates.grid.dt / 6.0 * (g[:-1] + 4.0 * rates.gamma_mid + g[1:])
    else:
        steps = rates.grid.dt / 2.0 * (g[:-1] + g[1:])
    return np.concatenate([[0.0], np.cumsum(steps)])


def _superoperator(left, right):
    """Matrix of ``rho -> left @ rho @ right`` acting on row-major ``rho.ravel()``."""
    return np.kron(left, right.T)


_EYE = np.eye(2, dtype=complex)
# generators of the two master-equation terms, per unit gamma and unit Lambda
_DEPHASE = _superoperator(SIGMA_Z, SIGMA_Z) - np.eye(4)
_LAMB = 1j * (_superoperator(SIGMA_Z, _EYE) - _superoperator(_EYE, SIGMA_Z))


def _generator(rho, gamma, lamb):
    comm = SIGMA_Z @ rho - rho @ SIGMA_Z
    return 1j * lamb * comm + gamma * (SIGMA_Z @ rho @ SIGMA_Z - rho)


def _integrated_lamb(rates: RateSeries) -> np.ndarray:
    lam = rates.lamb
    if rates.lamb_mid is not None:
        steps = rates.grid.dt / 6.0 * (lam[:-1] + 4.0 * rates.lamb_mid + lam[1:])
    else:
        steps = rates.grid.dt / 2.0 * (lam[:-1] + lam[1:])
    return np.concatenate([[0.0], np.cumsum(steps)])


def _evolve_exponential(rho0, rates):
    # Both generators are diagonal on vec(rho), so they commute at all times and
    # the propagator is the exponential of the time-integrated generator.
    diag = np.outer(integrated_rate(rates), np.diag(_DEPHASE)) + np.outer(_integrated_lamb(rates), np.diag(_LAMB))
    return (np.exp(diag) * rho0.ravel()).reshape(-1, 2, 2)


def _evolve_rk4(rho, rates, atol):
    n = rates.grid.n_points
    dt = rates.grid.dt
    g, lam = rates.gamma, rates.lamb
    g_mid = rates.gamma_mid if rates.gamma_mid is not None else 0.5 * (g[:-1] + g[1:])
    l_mid = rates.lamb_mid if rates.lamb_mid is not None else 0.5 * (lam[:-1] + lam[1:])
    out = np.empty((n, 2, 2), dtype=complex)
    out[0] = rho
    for i in range(n - 1):
        k1 = _generator(rho, g[i], lam[i])
        k2 = _generator(rho + 0.5 * dt * k1, g_mid[i], l_mid[i])
        k3 = _generator(rho + 0.5 * dt * k2, g_mid[i], l_mid[i])
        k4 = _generator(rho + dt * k3, g[i + 1], lam[i + 1])
        rho = rho + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not is_physical(rho, atol=atol):
            raise IntegrationError(f"state left the physical region at t={rates.grid.t0 + (i + 1) * dt:.6g}")
        out[i + 1] = rho
    return out


def evolve_master_equation(initial, rates: RateSeries, method: str = "exponential", atol: float = 1e-8) -> np.ndarray:
    """Integrate the master equation on ``rates.grid`` from ``initial``.

    ``method="exponential"`` applies the exponential of the generator
    integrated over each step with Simpson weights (exact for piecewise
    quadratic rates). ``method="rk4"`` is classical fixed-step Runge-Kutta; it
    needs steps small against the Lamb-shift rotation, which grows with the
    ring size.

    Returns:
        The trajectory, shape ``(n_points, 2, 2)``.

    Raises:
        IntegrationError: if the state leaves the physical region by more
            than ``atol`` (typically at clamped singular rates).
    """
    rho = np.array(initial, dtype=complex)
    if not is_physical(rho, atol=1e-10):
        raise PhysicalityError("initial state is not a valid density matrix")
    if method == "rk4":
        return _evolve_rk4(rho, rates, atol)
    if method != "exponential":
        raise ValueError(f"unknown method {method!r}")
    with np.errstate(over="ignore", invalid="ignore"):
        out = _evolve_exponential(rho, rates)
    bad = ~np.isfinite(out).all(axis=(1, 2)) | (np.linalg.norm(bloch_vector(out), axis=1) > 1 + atol)
    if bad.any():
        i = int(np.argmax(bad))
        raise IntegrationError(f"state left the physical region at t={rates.grid.times[i]:.6g}")
    return out
