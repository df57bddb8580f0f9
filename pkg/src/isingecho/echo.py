"""Decoherence factor, Loschmidt echo and the reduced qubit state.

Two independent routes to the same physics live here:

* ``loschmidt_echo`` evaluates the mode product
  ``prod_k [1 - sin^2(2 alpha_k) sin^2(eps_k^e t)]`` directly from the angles.
* ``decoherence_factor`` evolves the BCS pair ground state of the |g> branch
  inside every 2x2 pair block with the exact block propagators of both
  branches and multiplies the complex overlaps.

Their agreement, ``|nu|^2 == L``, is a standing consistency check.

Qubit states are plain 2x2 complex density matrices in the ordered basis
``(|g>, |e>)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, InvalidGridError, PhysicalityError
from .spectrum import ChainConfig, ModeSpectrum, mode_spectrum

# Elements per (time x mode) work block; bounds peak memory for N ~ 10^4.
_BLOCK_ELEMENTS = 1 << 19


@dataclass(frozen=True)
class TimeGrid:
    t0: float
    dt: float
    n_points: int

    def __post_init__(self):
        if not (np.isfinite(self.t0) and self.t0 >= 0):
            raise InvalidGridError(f"t0 must be finite and >= 0, got {self.t0}")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise InvalidGridError(f"dt must be finite and > 0, got {self.dt}")
        if isinstance(self.n_points, bool) or int(self.n_points) != self.n_points or self.n_points < 2:
            raise InvalidGridError(f"n_points must be an integer >= 2, got {self.n_points}")
        object.__setattr__(self, "n_points", int(self.n_points))

    @classmethod
    def span(cls, t_end: float, dt: float, t0: float = 0.0) -> "TimeGrid":
        """Uniform grid from ``t0`` covering ``t_end`` (last point >= t_end - 1e-9 dt)."""
        if not t_end > t0:
            raise InvalidGridError(f"empty grid: t_end={t_end} <= t0={t0}")
        if not dt > 0:
            raise InvalidGridError(f"dt must be > 0, got {dt}")
        n = int(np.ceil((t_end - t0) / dt - 1e-9)) + 1
        return cls(t0=t0, dt=dt, n_points=max(n, 2))

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_points)

    @property
    def end(self) -> float:
        return self.t0 + self.dt * (self.n_points - 1)

    def midpoints(self) -> np.ndarray:
        return self.t0 + self.dt * (np.arange(self.n_points - 1) + 0.5)


@dataclass(frozen=True, eq=False)
class DecoherenceSeries:
    """Decoherence factor on a time grid.

    ``dlognu`` holds the analytic logarithmic derivative ``nu'/nu`` when the
    series was produced from a mode spectrum; it is ``None`` for synthetic or
    oracle series, in which case consumers fall back to finite differences.
    """

    grid: TimeGrid
    nu: np.ndarray
    L: np.ndarray
    phi: np.ndarray
    dlognu: Optional[np.ndarray] = None
    config: Optional[ChainConfig] = None

    def __post_init__(self):
        n = self.grid.n_points
        for name in ("nu", "L", "phi", "dlognu"):
            a = getattr(self, name)
            if a is not None and np.shape(a) != (n,):
                raise InvalidGridError(f"{name} has shape {np.shape(a)}, expected ({n},)")

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @classmethod
    def from_echo(cls, grid: TimeGrid, L) -> "DecoherenceSeries":
        """Real, positive decoherence factor reproducing a given echo curve."""
        L = np.asarray(L, dtype=float)
        return cls(grid=grid, nu=np.sqrt(L).astype(complex), L=L, phi=np.zeros_like(L))


def nyquist_dt(spectrum: ModeSpectrum) -> float:
    """Largest admissible step: 20 points per period of the fastest echo factor."""
    return float(np.pi / (10.0 * np.max(spectrum.eps_e)))


def _time_blocks(t: np.ndarray, n_modes: int):
    step = max(1, _BLOCK_ELEMENTS // max(n_modes, 1))
    for start in range(0, len(t), step):
        yield slice(start, start + step)


def _as_times(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("times must be >= 0")
    return t


def loschmidt_echo(spectrum: ModeSpectrum, t):
    """Echo ``prod_k [1 - sin^2(2 alpha_k) sin^2(eps_k^e t)]`` at time(s) ``t``.

    The product is accumulated as a sum of ``log1p`` terms in a fixed order,
    so it neither underflows for thousands of modes nor depends on threading.
    A factor that is exactly zero makes the result exactly zero.
    """
    t = _as_times(t)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    weight = np.sin(2.0 * spectrum.alpha) ** 2
    log_l = np.empty(len(t))
    with np.errstate(divide="ignore"):
        for sl in _time_blocks(t, len(spectrum)):
            s2 = np.sin(np.multiply.outer(t[sl], spectrum.eps_e)) ** 2
            log_l[sl] = np.log1p(-weight * s2).sum(axis=1)
    out = np.exp(log_l)
    return float(out[0]) if scalar else out


def _pair_overlap_constants(spectrum: ModeSpectrum):
    """``m_k = <g_k| M_k^e |g_k> / eps_k^e`` from the explicit pair blocks."""
    g = spectrum.block_ground_states("g")
    me = spectrum.block_hamiltonians("e")
    expect = np.einsum("ki,kij,kj->k", g, me, g)
    eps_e = spectrum.eps_e
    return np.divide(expect, eps_e, out=np.zeros_like(expect), where=eps_e > 0)


def _continuous_block_phase(x, c):
    """Continuous argument of ``cos x + i c sin x`` for x >= 0."""
    n = np.floor(x / np.pi + 0.5)
    sign = np.where(c >= 0, 1.0, -1.0)
    r = np.clip(x - n * np.pi, -0.5 * np.pi, 0.5 * np.pi)
    return sign * n * np.pi + np.arctan(c * np.tan(r))


def _factor_terms(spectrum: ModeSpectrum, t: np.ndarray):
    """Decoherence factor, continuous phase and ``nu'/nu`` at each time.

    In pair block k the |g>-branch ground state |g_k> picks up ``exp(i eps_g t)``
    under ``exp(-i M^g t)``, and ``exp(-i M^e t) = cos(eps_e t) - i sin(eps_e t) M^e/eps_e``,
    so the pair overlap is ``exp(-i eps_g t) (cos x - i m sin x)`` with
    ``x = eps_e t``. Its derivative follows from
    ``d/dt <g|U_g^+ U_e|g> = i <g|U_g^+ (M^g - M^e) U_e|g>``.
    """
    m = _pair_overlap_constants(spectrum)
    eps_g, eps_e = spectrum.eps_g, spectrum.eps_e
    sum_eps_g = float(np.sum(eps_g))
    nu = np.empty(len(t), dtype=complex)
    phi = np.empty(len(t))
    dlognu = np.empty(len(t), dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        for sl in _time_blocks(t, len(spectrum)):
            tt = t[sl]
            x = np.multiply.outer(tt, eps_e)
            cx, sx = np.cos(x), np.sin(x)
            # |cos x - i m sin x|^2 and the principal argument of each pair overlap
            mod2 = cx * cx + (m * m) * (sx * sx)
            log_mod = 0.5 * np.log(mod2).sum(axis=1)
            arg = np.arctan2(-m * sx, cx).sum(axis=1) - tt * sum_eps_g
            nu[sl] = np.exp(log_mod) * np.exp(1j * arg)
            phi[sl] = _continuous_block_phase(x, -m).sum(axis=1) - tt * sum_eps_g
            # b'/b for b = cos x - i m sin x equals eps_e (-(1 - m^2) sin x cos x - i m) / |b|^2
            re = (-(1.0 - m * m) * eps_e * (sx * cx) / mod2).sum(axis=1)
            im = (-(m * eps_e) / mod2).sum(axis=1) - sum_eps_g
            dlognu[sl] = re + 1j * im
    return nu, phi, dlognu


def decoherence_factor(spectrum: ModeSpectrum, t):
    """Complex overlap ``<Phi| exp(i H_g t) exp(-i H_e t) |Phi>``, |Phi> = ground state of H_g."""
    t = _as_times(t)
    scalar = t.ndim == 0
    nu, _, _ = _factor_terms(spectrum, np.atleast_1d(t))
    return complex(nu[0]) if scalar else nu


def echo_series(config: ChainConfig, grid: TimeGrid, spectrum: ModeSpectrum | None = None) -> DecoherenceSeries:
    """Decoherence factor, echo and unwrapped phase of ``config`` on ``grid``.

    Raises:
        InvalidGridError: if ``grid.dt`` exceeds :func:`nyquist_dt`.
    """
    if spectrum is None:
        spectrum = mode_spectrum(config)
    bound = nyquist_dt(spectrum)
    if grid.dt > bound * (1 + 1e-12):
        raise InvalidGridError(f"dt={grid.dt:.6g} exceeds the resolution bound pi/(10 max eps_e) = {bound:.6g}")
    t = grid.times
    nu, phi, dlognu = _factor_terms(spectrum, t)
    L = loschmidt_echo(spectrum, t)
    return DecoherenceSeries(grid=grid, nu=nu, L=L, phi=phi, dlognu=dlognu, config=config)


def purity(L):
    """Purity ``(1 + L)/2`` of an initially equatorial qubit."""
    arr = np.asarray(L, dtype=float)
    if np.any(arr < 0) or np.any(arr > 1) or np.any(np.isnan(arr)):
        raise DomainError("echo values must lie in [0, 1]")
    out = 0.5 * (1.0 + arr)
    return float(out) if out.ndim == 0 else out


# -- qubit states ------------------------------------------------------------

SIGMA_Z = np.diag([1.0 + 0j, -1.0 + 0j])


def pure_state(c_g: complex, c_e: complex) -> np.ndarray:
    """Density matrix of ``c_g|g> + c_e|e>`` (amplitudes renormalized)."""
    psi = np.array([c_g, c_e], dtype=complex)
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise DomainError("zero state vector")
    psi /= norm
    return np.outer(psi, psi.conj())


def equatorial_state(phase: float = 0.0) -> np.ndarray:
    return pure_state(1.0, np.exp(1j * phase))


def bloch_vector(rho) -> np.ndarray:
    """Bloch vector of a 2x2 state, or of a stack ``(..., 2, 2)``."""
    rho = np.asarray(rho)
    x = 2.0 * rho[..., 1, 0].real
    y = 2.0 * rho[..., 1, 0].imag
    z = (rho[..., 0, 0] - rho[..., 1, 1]).real
    return np.stack([x, y, z], axis=-1)


def is_physical(rho, atol: float = 1e-12) -> bool:
    rho = np.asarray(rho)
    if rho.shape[-2:] != (2, 2):
        return False
    herm = np.allclose(rho, np.swapaxes(rho.conj(), -1, -2), atol=atol)
    trace = np.allclose(np.trace(rho, axis1=-2, axis2=-1), 1.0, atol=atol)
    norm = np.linalg.norm(bloch_vector(rho), axis=-1)
    return bool(herm and trace and np.all(norm <= 1.0 + atol))


def exact_qubit_state(initial, nu):
    """Reduced qubit state after pure dephasing with decoherence factor ``nu``.

    Populations are untouched and the ``|e><g|`` coherence is multiplied by
    ``nu``. ``nu`` may be an array, giving a trajectory of shape ``(n, 2, 2)``.
    """
    initial = np.asarray(initial, dtype=complex)
    if not is_physical(initial, atol=1e-10):
        raise PhysicalityError("initial state is not a valid density matrix")
    nu = np.asarray(nu, dtype=complex)
    if np.any(np.abs(nu) > 1 + 1e-12):
        raise PhysicalityError(f"|nu| = {np.max(np.abs(nu)):.16g} exceeds 1")
    out = np.broadcast_to(initial, nu.shape + (2, 2)).copy()
    out[..., 1, 0] = initial[1, 0] * nu
    out[..., 0, 1] = np.conj(out[..., 1, 0])
    return out
