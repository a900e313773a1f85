"""Magic trap depths: where d(DFS)/dU0 = 0.

Every DFS model here has the shape -eta U0 / hbar + K sqrt(U0), so the
stationary point is a maximum. The closed forms are each written out for
their own configuration; :func:`find_stationary_depth_numeric` is an
independent root-finder used to check them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

from scipy.optimize import brentq

from .core import HBAR, BlueLattice, RedGaussian, trap_frequencies
from .spectrum import VibrationalState, _state, dfs_for_state

CLOSED_FORM = "closed-form"
NUMERIC = "numeric"


class SameState(NamedTuple):
    state: VibrationalState


class RadialSideband(NamedTuple):
    """|F1, n_x = 0> <-> |F2, n_x = 1>."""


class AxialSideband(NamedTuple):
    """|F1, n_z = 0> <-> |F2, n_z = 1>."""


class BlueGround(NamedTuple):
    """Both states in the vibrational ground state of a lattice site."""


@dataclass(frozen=True)
class MagicQuery:
    species: object
    trap: object
    pairing: object

    def __post_init__(self):
        if isinstance(self.pairing, BlueGround):
            if not isinstance(self.trap, BlueLattice):
                raise ValueError("BlueGround pairing needs a BlueLattice")
        elif not isinstance(self.trap, RedGaussian):
            raise ValueError(f"{type(self.pairing).__name__} pairing needs a "
                             "RedGaussian trap")
        if isinstance(self.pairing, SameState):
            _state(self.pairing.state)


@dataclass(frozen=True)
class MagicResult:
    depth: float
    dfs_at_magic: float
    stationarity_residual: float  # |dDFS/dU| * hbar / eta
    method: str
    barrier_heights: tuple | None = None


def _result(dfs, depth, eta, method, barrier_heights=None):
    # central-difference slope in units of the depth-term slope eta / hbar
    scale = eta / HBAR if eta > 0 else 1.0
    residual = abs(central_derivative(dfs, depth)) / scale
    return MagicResult(depth=depth, dfs_at_magic=dfs(depth),
                       stationarity_residual=residual, method=method,
                       barrier_heights=barrier_heights)


# -- DFS models as functions of the free depth

def _same_state_model(species, trap, state):
    def dfs(depth):
        return dfs_for_state(species, trap.with_depth(depth), state)
    return dfs


def dfs_sideband_pair(species, trap, pairing, exact=False):
    """DFS(U0) for a sideband pairing in a red trap.

    The default drops the (delta_x + delta_y + delta_z)/2 zero-point term,
    which is smaller than the phonon energy by a factor ~eta; ``exact=True``
    keeps it.
    """
    if not isinstance(trap, RedGaussian):
        raise TypeError("sideband pairings need a RedGaussian trap")
    if isinstance(pairing, RadialSideband):
        axis = 0
    elif isinstance(pairing, AxialSideband):
        axis = 2
    else:
        raise TypeError(f"not a sideband pairing: {pairing!r}")

    def dfs(depth):
        omegas = trap_frequencies(species, trap.with_depth(depth))
        value = -species.eta * depth / HBAR + omegas[axis]
        if exact:
            value += 0.25 * species.eta * sum(omegas)
        return value
    return dfs


def _blue_ground_model(species, trap):
    def dfs(depth):
        return dfs_for_state(species, trap.with_depth(depth), None)
    return dfs


def dfs_model(query):
    pairing = query.pairing
    if isinstance(pairing, SameState):
        return _same_state_model(query.species, query.trap, pairing.state)
    if isinstance(pairing, BlueGround):
        return _blue_ground_model(query.species, query.trap)
    return dfs_sideband_pair(query.species, query.trap, pairing)


# -- closed forms

def same_state_coefficient(trap, state):
    """A = (n_x+1/2)/w_x + (n_y+1/2)/w_y + (n_z+1/2)/(sqrt(2) z_R)."""
    n = _state(state)
    wx, wy = trap.waists
    return ((n.n_x + 0.5) / wx + (n.n_y + 0.5) / wy
            + (n.n_z + 0.5) / (math.sqrt(2.0) * trap.rayleigh_length))


def magic_depth_same_state(query):
    if not isinstance(query.pairing, SameState):
        raise TypeError("query pairing must be SameState")
    species, trap = query.species, query.trap
    a = same_state_coefficient(trap, query.pairing.state)
    depth = a ** 2 * HBAR ** 2 / (4.0 * species.mass)
    return _result(dfs_model(query), depth, species.eta, CLOSED_FORM)


def magic_depth_radial_sideband(query, exact=False):
    if not isinstance(query.pairing, RadialSideband):
        raise TypeError("query pairing must be RadialSideband")
    species, trap = query.species, query.trap
    m, eta = species.mass, species.eta
    w0 = trap.waists[0]
    if exact:
        coefficient = _sideband_coefficient(species, trap, 0)
        depth = (coefficient * HBAR / (2.0 * eta)) ** 2
    else:
        depth = HBAR ** 2 / (m * eta ** 2 * w0 ** 2)
    return _result(dfs_sideband_pair(species, trap, query.pairing, exact),
                   depth, eta, CLOSED_FORM)


def magic_depth_axial_sideband(query, exact=False):
    if not isinstance(query.pairing, AxialSideband):
        raise TypeError("query pairing must be AxialSideband")
    species, trap = query.species, query.trap
    m, eta = species.mass, species.eta
    zr = trap.rayleigh_length
    if exact:
        coefficient = _sideband_coefficient(species, trap, 2)
        depth = (coefficient * HBAR / (2.0 * eta)) ** 2
    else:
        depth = HBAR ** 2 / (2.0 * m * eta ** 2 * zr ** 2)
    return _result(dfs_sideband_pair(species, trap, query.pairing, exact),
                   depth, eta, CLOSED_FORM)


def _sideband_coefficient(species, trap, axis):
    # omega_q = c_q sqrt(U); DFS = -eta U/hbar + (c_axis + eta/4 sum c_q) sqrt(U)
    unit = trap_frequencies(species, trap.with_depth(1.0))
    return unit[axis] + 0.25 * species.eta * sum(unit)


def magic_depth_blue(query):
    if not isinstance(query.pairing, BlueGround):
        raise TypeError("query pairing must be BlueGround")
    species, trap = query.species, query.trap
    if trap.barrier_ratios is None:
        raise ValueError("magic depth of a lattice needs barrier_ratios")
    b = sum(math.sqrt(a) / d for a, d in zip(trap.barrier_ratios, trap.periods))
    depth = math.pi ** 2 * HBAR ** 2 * b ** 2 / (32.0 * species.mass)
    return _result(dfs_model(query), depth, species.eta, CLOSED_FORM,
                   barrier_heights=tuple(a * depth for a in trap.barrier_ratios))


def magic_depth(query):
    """Dispatch to the closed form matching the query's pairing."""
    pairing = query.pairing
    if isinstance(pairing, SameState):
        return magic_depth_same_state(query)
    if isinstance(pairing, RadialSideband):
        return magic_depth_radial_sideband(query)
    if isinstance(pairing, AxialSideband):
        return magic_depth_axial_sideband(query)
    if isinstance(pairing, BlueGround):
        return magic_depth_blue(query)
    raise TypeError(f"unknown pairing {pairing!r}")


# -- numeric oracle

def central_derivative(dfs, depth, rel_step=1e-3):
    """Five-point central difference of ``dfs`` at ``depth``."""
    h = rel_step * depth
    return (-dfs(depth + 2 * h) + 8 * dfs(depth + h) - 8 * dfs(depth - h)
            + dfs(depth - 2 * h)) / (12.0 * h)


def second_difference(dfs, depth, rel_step=1e-3):
    h = rel_step * depth
    return (dfs(depth + h) - 2.0 * dfs(depth) + dfs(depth - h)) / (h * h)


def find_stationary_depth_numeric(dfs: Callable[[float], float], bracket,
                                  derivative=None, rtol=1e-14, eta=0.0):
    """Root of d(dfs)/dU inside ``bracket``; ``None`` without a sign change.

    A slope that vanishes at both ends (a flat model, e.g. eta = 0) has no
    isolated stationary point and also gives ``None``. Uses ``derivative`` when supplied, otherwise a five-point central
    difference. ``eta`` only sets the scale of the reported residual.
    """
    lo, hi = (float(x) for x in bracket)
    if not 0 < lo < hi:
        raise ValueError("bracket must satisfy 0 < lo < hi")
    slope = derivative or (lambda u: central_derivative(dfs, u))
    s_lo, s_hi = slope(lo), slope(hi)
    if s_lo == 0 and s_hi == 0:
        return None
    if s_lo == 0:
        return _result(dfs, lo, eta, NUMERIC)
    if s_hi == 0:
        return _result(dfs, hi, eta, NUMERIC)
    if (s_lo > 0) == (s_hi > 0):
        return None
    root = brentq(slope, lo, hi, xtol=1e-300, rtol=rtol, maxiter=500)
    return _result(dfs, root, eta, NUMERIC)


def default_bracket(guess):
    return (1e-3 * guess, 1e4 * guess)


def check_closed_form(query, result=None):
    """Numeric stationary depth of the query's own DFS model."""
    result = result or magic_depth(query)
    return find_stationary_depth_numeric(dfs_model(query),
                                         default_bracket(result.depth),
                                         eta=query.species.eta)
