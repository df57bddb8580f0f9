"""Free-fermion description of the transverse-field Ising ring.

The environment is ``H(h) = -J sum_j sz_j sz_{j+1} + h sum_j sx_j`` on a
periodic ring of ``n_spins`` sites. After a Jordan-Wigner transformation the
even fermion-parity sector decouples into independent (k, -k) pairs on the
antiperiodic momentum grid ``k_j = (2j - 1) pi / N``. Each pair contributes a
traceless 2x2 block

    M_k(h) = eps_k(h) * [cos(2 theta_k) Z + sin(2 theta_k) X]

acting on ``{|0>, c+_k c+_-k |0>}``, with

    eps_k(h) = 2 J sqrt((h/J - cos k)^2 + sin(k)^2)
    tan(2 theta_k) = sin k / (h/J - cos k),   2 theta_k in (0, pi).

The qubit sees the ring with field ``lam`` when in |g> and ``lam + delta`` when
in |e>.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from .errors import InvalidConfigError


@dataclass(frozen=True)
class ChainConfig:
    """Physical parameters of one environment instance.

    ``lam`` is the transverse field seen by the |g> branch; the |e> branch
    sees ``lambda_star = lam + delta``.
    """

    J: float
    lam: float
    delta: float
    n_spins: int

    def __post_init__(self):
        n = self.n_spins
        if isinstance(n, bool) or int(n) != n:
            raise InvalidConfigError(f"n_spins must be an integer, got {n!r}")
        object.__setattr__(self, "n_spins", int(n))
        if self.n_spins < 4 or self.n_spins % 2:
            raise InvalidConfigError(f"n_spins must be even and >= 4, got {self.n_spins}")
        if not self.J > 0:
            raise InvalidConfigError(f"J must be positive, got {self.J}")
        for name in ("J", "lam", "delta"):
            if not np.isfinite(getattr(self, name)):
                raise InvalidConfigError(f"{name} must be finite")

    @property
    def lambda_star(self) -> float:
        return self.lam + self.delta

    @classmethod
    def from_lambda_star(cls, lambda_star: float, delta: float, n_spins: int, J: float = 1.0) -> "ChainConfig":
        return cls(J=J, lam=lambda_star - delta, delta=delta, n_spins=n_spins)


class Mode(NamedTuple):
    k: float
    theta_g: float
    theta_e: float
    alpha: float
    eps_g: float
    eps_e: float


def _frozen(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ModeSpectrum:
    """Per-momentum Bogoliubov angles and quasiparticle energies of both branches.

    Stored as parallel read-only arrays over the k > 0 half of the grid.
    """

    config: ChainConfig
    k: np.ndarray
    theta_g: np.ndarray
    theta_e: np.ndarray
    eps_g: np.ndarray
    eps_e: np.ndarray
    alpha: np.ndarray = field(init=False)

    def __post_init__(self):
        for name in ("k", "theta_g", "theta_e", "eps_g", "eps_e"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        object.__setattr__(self, "alpha", _frozen(self.theta_e - self.theta_g))

    def __len__(self) -> int:
        return len(self.k)

    def __iter__(self) -> Iterator[Mode]:
        for row in zip(self.k, self.theta_g, self.theta_e, self.alpha, self.eps_g, self.eps_e):
            yield Mode(*map(float, row))

    @property
    def modes(self) -> list[Mode]:
        return list(self)

    def block_hamiltonians(self, branch: str) -> np.ndarray:
        """Real 2x2 pair Hamiltonians of one branch, shape ``(n_modes, 2, 2)``."""
        theta, eps = self._branch(branch)
        c, s = np.cos(2 * theta), np.sin(2 * theta)
        blocks = np.empty((len(self), 2, 2))
        blocks[:, 0, 0] = eps * c
        blocks[:, 1, 1] = -eps * c
        blocks[:, 0, 1] = blocks[:, 1, 0] = eps * s
        return blocks

    def block_ground_states(self, branch: str) -> np.ndarray:
        """Normalized lowest eigenvectors of the pair blocks, shape ``(n_modes, 2)``."""
        theta, _ = self._branch(branch)
        return np.stack([-np.sin(theta), np.cos(theta)], axis=-1)

    def _branch(self, branch):
        if branch == "g":
            return self.theta_g, self.eps_g
        if branch == "e":
            return self.theta_e, self.eps_e
        raise ValueError(f"branch must be 'g' or 'e', got {branch!r}")


def _check_n_spins(n_spins):
    if isinstance(n_spins, bool) or int(n_spins) != n_spins or n_spins < 4 or n_spins % 2:
        raise InvalidConfigError(f"n_spins must be an even integer >= 4, got {n_spins!r}")


def momentum_grid(n_spins: int) -> np.ndarray:
    """Positive momenta ``(2j - 1) pi / N`` of the antiperiodic (even parity) sector."""
    _check_n_spins(n_spins)
    n_spins = int(n_spins)
    j = np.arange(1, n_spins // 2 + 1)
    return (2 * j - 1) * np.pi / n_spins


def dispersion(k, field, J=1.0):
    """Quasiparticle energy ``2 J sqrt((field/J - cos k)^2 + sin^2 k)``.

    Written as ``2 sqrt((field - J cos k)^2 + (J sin k)^2)`` so that the
    expression stays accurate near the gap closing at ``field = J, k -> 0``.
    """
    k = np.asarray(k, dtype=float)
    return 2.0 * np.hypot(field - J * np.cos(k), J * np.sin(k))


def bogoliubov_angle(k, field, J=1.0):
    """Bogoliubov angle ``theta_k`` in (0, pi/2).

    The branch is fixed by ``2 theta = atan2(sin k, field/J - cos k)``, which
    lies in (0, pi) for k in (0, pi) and is continuous across ``field = J cos k``.
    """
    k = np.asarray(k, dtype=float)
    return 0.5 * np.arctan2(J * np.sin(k), field - J * np.cos(k))


def mode_spectrum(config: ChainConfig) -> ModeSpectrum:
    k = momentum_grid(config.n_spins)
    return ModeSpectrum(
        config=config,
        k=k,
        theta_g=bogoliubov_angle(k, config.lam, config.J),
        theta_e=bogoliubov_angle(k, config.lambda_star, config.J),
        eps_g=dispersion(k, config.lam, config.J),
        eps_e=dispersion(k, config.lambda_star, config.J),
    )


def even_sector_levels(spectrum: ModeSpectrum, branch: str = "g") -> np.ndarray:
    """Sorted many-body energies of the even-parity sector.

    Every level is ``sum_q eps_q (n_q - 1/2)`` over all 2*(N/2) momenta
    ``q = +-k`` with an even number of occupied quasiparticles. Exponential in
    ``n_spins``; intended for small rings only.
    """
    _, eps = spectrum._branch(branch)
    eps_all = np.concatenate([eps, eps])
    n = len(eps_all)
    if n > 24:
        raise InvalidConfigError("even_sector_levels enumerates 2^N states; use n_spins <= 24")
    occ = (np.arange(2**n)[:, None] >> np.arange(n)) & 1
    even = occ[occ.sum(axis=1) % 2 == 0]
    return np.sort((even - 0.5) @ eps_all)
