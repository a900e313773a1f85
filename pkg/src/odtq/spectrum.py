"""Vibrational-state-resolved differential frequency shift (DFS).

The DFS of a trapped atom in vibrational state (n_x, n_y, n_z) is

    dfs = -eta * U0 / hbar + sum_q (n_q + 1/2) * delta_q,

with delta_q = eta * omega_q / 2 the difference of the oscillation
frequencies seen by the two hyperfine states. Thermal occupation is Bose
distributed per axis with mean k_B T / (2 hbar omega_q).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import (HBAR, K_B, BlueLattice, J_to_mK, RedGaussian,
                   intensity_for_depth, species_line, trap_frequencies)

DEFAULT_TAIL_EPS = 1e-6


class VibrationalState(NamedTuple):
    n_x: int
    n_y: int
    n_z: int

    @classmethod
    def of(cls, n_x=0, n_y=0, n_z=0):
        values = tuple(int(n) for n in (n_x, n_y, n_z))
        if any(n < 0 for n in values):
            raise ValueError(f"phonon numbers must be >= 0, got {values}")
        return cls(*values)


GROUND = VibrationalState(0, 0, 0)


def _state(state):
    if state is None:
        return GROUND
    if isinstance(state, VibrationalState):
        if min(state) < 0:
            raise ValueError("phonon numbers must be >= 0")
        return state
    return VibrationalState.of(*state)


def differential_trap_frequency(species, trap):
    """(delta_x, delta_y, delta_z) in rad/s; each is eta/2 times omega_q."""
    return tuple(0.5 * species.eta * w for w in trap_frequencies(species, trap))


def depth_term(species, trap):
    """The state-independent part -eta * U0 / hbar (rad/s)."""
    return -species.eta * trap.reference_depth / HBAR


def dfs_for_state(species, trap, state=None):
    """Differential frequency shift (rad/s) of one vibrational state.

    For a :class:`BlueLattice` the depth term uses the residual bottom
    potential and the deltas come from the barrier heights.
    """
    state = _state(state)
    deltas = differential_trap_frequency(species, trap)
    return depth_term(species, trap) + sum(
        (n + 0.5) * d for n, d in zip(state, deltas))


def exact_depth_ratio(detuning, hyperfine_splitting):
    """U1/U2 = Delta / (Delta - omega_hfs) for the two hyperfine states.

    Diagnostic only; everything else uses the far-detuned form with eta.
    """
    if detuning == hyperfine_splitting:
        raise ValueError("U2 is resonant")
    return detuning / (detuning - hyperfine_splitting)


# -- thermal statistics

def mean_occupation(temperature, omega):
    if not omega > 0:
        raise ValueError(f"oscillation frequency must be > 0, got {omega!r}")
    if temperature < 0:
        raise ValueError("temperature must be >= 0")
    return K_B * temperature / (2.0 * HBAR * omega)


def bose_population(mean, n):
    """P_n = mean**n / (mean + 1)**(n + 1); ``n`` may be an array."""
    if mean < 0:
        raise ValueError("mean occupation must be >= 0")
    n = np.asarray(n)
    if np.any(n < 0):
        raise ValueError("n must be >= 0")
    if mean == 0:
        out = np.where(n == 0, 1.0, 0.0)
    else:
        # ratio**n / (mean + 1) keeps large n finite
        out = (mean / (mean + 1.0)) ** n / (mean + 1.0)
    return float(out) if out.ndim == 0 else out


def truncation_size(mean, tail_eps):
    """Smallest n_max whose cumulative Bose mass reaches 1 - tail_eps."""
    if not 0 < tail_eps < 1:
        raise ValueError("tail_eps must lie in (0, 1)")
    if mean == 0:
        return 0
    ratio = mean / (mean + 1.0)
    # tail beyond n_max is ratio**(n_max + 1)
    n_max = max(0, math.ceil(math.log(tail_eps) / math.log(ratio)) - 1)
    while n_max > 0 and ratio ** n_max <= tail_eps:
        n_max -= 1
    while ratio ** (n_max + 1) > tail_eps:
        n_max += 1
    return n_max


@dataclass(frozen=True)
class ThermalEnsemble:
    """Per-axis truncated and renormalized Bose weights.

    ``mean_occupation`` is the untruncated mean; ``weights[q][n]`` the
    renormalized probability of n phonons on axis q.
    """

    temperature: float
    mean_occupation: tuple
    weights: tuple
    tail_eps: float

    @property
    def n_max(self):
        return tuple(len(w) - 1 for w in self.weights)

    @property
    def kept_mass(self):
        """Untruncated probability covered on each axis before renormalizing."""
        return tuple(1.0 - (m / (m + 1.0)) ** (len(w)) if m > 0 else 1.0
                     for m, w in zip(self.mean_occupation, self.weights))

    @property
    def tail_mass(self):
        """Probability of the joint states dropped by truncation."""
        return 1.0 - math.prod(self.kept_mass)

    @property
    def size(self):
        return math.prod(len(w) for w in self.weights)


def ensemble_from_means(means, tail_eps=DEFAULT_TAIL_EPS, temperature=math.nan):
    weights = []
    for mean in means:
        n_max = truncation_size(mean, tail_eps)
        w = np.asarray(bose_population(mean, np.arange(n_max + 1)),
                       dtype=float).reshape(-1)
        w = w / math.fsum(w)
        w.setflags(write=False)
        weights.append(w)
    return ThermalEnsemble(temperature=temperature,
                           mean_occupation=tuple(float(m) for m in means),
                           weights=tuple(weights), tail_eps=tail_eps)


def build_ensemble(species, trap, temperature, tail_eps=DEFAULT_TAIL_EPS):
    means = [mean_occupation(temperature, w)
             for w in trap_frequencies(species, trap)]
    return ensemble_from_means(means, tail_eps, temperature)


def detuning_distribution(ensemble, deltas):
    """Flattened (offsets, weights) of sum_q n_q delta_q over the ensemble.

    States sharing delta_x == delta_y are merged by n_x + n_y, which makes
    the arrays O(n_max**2) instead of O(n_max**3) for round beams. Order is
    fixed: ascending (n_x + n_y) or (n_x, n_y) outer, n_z inner.
    """
    wx, wy, wz = ensemble.weights
    dx, dy, dz = deltas
    nz = np.arange(len(wz))
    if dx == dy:
        wxy = np.convolve(wx, wy)
        offsets = (np.arange(len(wxy))[:, None] * dx + nz[None, :] * dz)
        weights = wxy[:, None] * wz[None, :]
    else:
        nx = np.arange(len(wx))[:, None, None]
        ny = np.arange(len(wy))[None, :, None]
        offsets = nx * dx + ny * dy + nz[None, None, :] * dz
        weights = wx[:, None, None] * wy[None, :, None] * wz[None, None, :]
        offsets, weights = np.broadcast_arrays(offsets, weights)
    return (np.ascontiguousarray(offsets, dtype=float).ravel(),
            np.ascontiguousarray(weights, dtype=float).ravel())


@dataclass(frozen=True)
class DfsSpectrum:
    """Every state of a truncated ensemble with its DFS and weight."""

    states: np.ndarray
    dfs: np.ndarray
    weights: np.ndarray
    depth_term: float
    deltas: tuple

    def mean(self):
        return math.fsum(self.weights * self.dfs)


def dfs_spectrum(species, trap, ensemble):
    deltas = differential_trap_frequency(species, trap)
    grids = np.meshgrid(*(np.arange(len(w)) for w in ensemble.weights),
                        indexing="ij")
    states = np.stack([g.ravel() for g in grids], axis=1)
    wx, wy, wz = ensemble.weights
    weights = (wx[:, None, None] * wy[None, :, None] * wz[None, None, :]).ravel()
    base = depth_term(species, trap)
    dfs = base + (states + 0.5) @ np.asarray(deltas)
    return DfsSpectrum(states=states, dfs=dfs, weights=weights,
                       depth_term=base, deltas=deltas)


def ensemble_mean_dfs(species, trap, ensemble):
    """Thermal-average DFS over the truncated, renormalized ensemble."""
    deltas = differential_trap_frequency(species, trap)
    means = [math.fsum(np.arange(len(w)) * w) for w in ensemble.weights]
    return depth_term(species, trap) + sum(
        (m + 0.5) * d for m, d in zip(means, deltas))


# -- depth scans

SCAN_COLUMNS = ("depth_J", "depth_mK", "dfs_quantized_rad_s",
                "dfs_classical_rad_s")


@dataclass(frozen=True)
class ScanTable:
    columns: tuple
    rows: list

    def column(self, name):
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])


def dfs_vs_depth_scan(species, trap, depths, state=None, temperature=None,
                      tail_eps=DEFAULT_TAIL_EPS, intensity=False):
    """DFS with and without vibrational quantization over a depth grid.

    Pass either a fixed ``state`` or a ``temperature`` (thermal mean, with
    the occupation recomputed at each depth). With ``intensity=True`` the
    peak intensity of the species' reference-line conversion is appended.
    """
    depths = np.asarray(depths, dtype=float)
    if depths.ndim != 1 or depths.size == 0:
        raise ValueError("depth grid must be a non-empty 1D sequence")
    if np.any(depths <= 0) or np.any(np.diff(depths) <= 0):
        raise ValueError("depth grid must be strictly positive and increasing")
    if state is not None and temperature is not None:
        raise ValueError("give a vibrational state or a temperature, not both")
    if not isinstance(trap, (RedGaussian, BlueLattice)):
        raise TypeError("unsupported trap type")
    columns = SCAN_COLUMNS
    line = None
    if intensity:
        line = species_line(species)
        columns = columns + ("intensity_W_m2",)
    rows = []
    for depth in depths:
        t = trap.with_depth(float(depth))
        if temperature is None:
            quantized = dfs_for_state(species, t, state)
        else:
            quantized = ensemble_mean_dfs(
                species, t, build_ensemble(species, t, temperature, tail_eps))
        row = [float(depth), J_to_mK(float(depth)), quantized,
               depth_term(species, t)]
        if line is not None:
            row.append(intensity_for_depth(float(depth), line[2], line[0],
                                           line[1]))
        rows.append(tuple(row))
    return ScanTable(columns=columns, rows=rows)
