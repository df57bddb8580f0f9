"""Brute-force exact diagonalization of small Ising rings.

Ground truth for the quasiparticle path. Everything here works with dense
``2**n_spins`` matrices in the sz product basis (bit j of a basis index is
spin j, 0 = up), so it is only usable for a dozen or so spins.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .echo import DecoherenceSeries, TimeGrid
from .errors import ResourceError

MAX_SPINS = 14
ROUTINE_MAX_SPINS = 12


class DegenerateGroundStateWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class GroundState:
    energy: float
    vector: np.ndarray
    gap: float
    degenerate: bool


def _check_size(n_spins, cap=MAX_SPINS):
    if n_spins < 2 or n_spins > cap:
        raise ResourceError(f"dense oracle supports 2 <= n_spins <= {cap}, got {n_spins}")


def build_hamiltonian(n_spins: int, field: float, J: float = 1.0) -> np.ndarray:
    """Dense ``-J sum_j sz_j sz_{j+1} + field sum_j sx_j`` on a periodic ring.

    The bond sum runs over j = 1..N with N+1 -> 1, so a 2-site ring carries
    its single bond twice.
    """
    _check_size(n_spins)
    dim = 2**n_spins
    idx = np.arange(dim)
    spins = 1 - 2 * ((idx[:, None] >> np.arange(n_spins)) & 1)
    bonds = spins * np.roll(spins, -1, axis=1)
    h = np.zeros((dim, dim))
    h[idx, idx] = -J * bonds.sum(axis=1)
    for j in range(n_spins):
        h[idx, idx ^ (1 << j)] += field
    return h


def ground_state(h: np.ndarray) -> GroundState:
    """Lowest eigenpair with the first non-negligible amplitude made real positive."""
    energies, vectors = np.linalg.eigh(h)
    vec = vectors[:, 0].astype(complex)
    lead = np.flatnonzero(np.abs(vec) > 1e-12)[0]
    vec *= np.exp(-1j * np.angle(vec[lead]))
    vec = vec.real if np.allclose(vec.imag, 0.0, atol=1e-15) else vec
    gap = float(energies[1] - energies[0]) if len(energies) > 1 else np.inf
    degenerate = gap < 1e-10
    if degenerate:
        warnings.warn(f"ground space is (near-)degenerate, gap={gap:.3e}", DegenerateGroundStateWarning, stacklevel=2)
    return GroundState(float(energies[0]), vec, gap, degenerate)


def even_parity_isometry(n_spins: int) -> np.ndarray:
    """Columns ``(|i> + |~i>)/sqrt 2`` spanning the +1 eigenspace of prod_j sx_j.

    This is the even fermion-parity sector of the Jordan-Wigner fermions, the
    one that holds the ground state for a positive field.
    """
    _check_size(n_spins)
    dim = 2**n_spins
    reps = np.arange(dim // 2)
    partners = (dim - 1) ^ reps
    v = np.zeros((dim, dim // 2))
    v[reps, np.arange(dim // 2)] = np.sqrt(0.5)
    v[partners, np.arange(dim // 2)] = np.sqrt(0.5)
    return v


def even_sector_spectrum(n_spins: int, field: float, J: float = 1.0) -> np.ndarray:
    v = even_parity_isometry(n_spins)
    return np.linalg.eigvalsh(v.T @ build_hamiltonian(n_spins, field, J) @ v)


def oracle_overlap(n_spins: int, lam: float, delta: float, times, J: float = 1.0) -> np.ndarray:
    """``<Phi| exp(i H_g t) exp(-i H_e t) |Phi>`` by spectral decomposition.

    |Phi> is the ground state of H_g inside the even parity sector. Both
    Hamiltonians conserve parity, so the evolution never leaves it.
    """
    _check_size(n_spins, ROUTINE_MAX_SPINS)
    v = even_parity_isometry(n_spins)
    hg = v.T @ build_hamiltonian(n_spins, lam, J) @ v
    he = v.T @ build_hamiltonian(n_spins, lam + delta, J) @ v
    gs = ground_state(hg)
    e_vals, e_vecs = np.linalg.eigh(he)
    weights = np.abs(e_vecs.T @ gs.vector) ** 2
    t = np.asarray(times, dtype=float)
    phases = np.exp(1j * np.multiply.outer(t, gs.energy - e_vals))
    return phases @ weights


def oracle_echo(n_spins: int, lam: float, delta: float, J: float, grid: TimeGrid) -> DecoherenceSeries:
    nu = oracle_overlap(n_spins, lam, delta, grid.times, J)
    return DecoherenceSeries(grid=grid, nu=nu, L=np.abs(nu) ** 2, phi=np.unwrap(np.angle(nu)))
