"""Ramsey fringes, dephasing times and intensity-noise sensitivity.

Signals are reported as the population difference w after the final pulse,
normalized so that zero free-precession time gives +1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from ._backend import kernels
from .core import HBAR, K_B, BlueLattice, RedGaussian, trap_frequencies
from .gate import LOWER, BlochVector, pi_half_duration
from .spectrum import (DEFAULT_TAIL_EPS, ThermalEnsemble,
                       _state, build_ensemble, detuning_distribution,
                       differential_trap_frequency)

#: Returned by the dephasing-time functions when nothing dephases.
NO_DEPHASING = math.inf

T2STAR_PREFACTOR = 2.0 * math.sqrt((math.e - 1.0) / 3.0)


@dataclass(frozen=True)
class RamseyConfig:
    """Drive detuning from the n = 0 line plus the thermal ensemble."""

    base_detuning: float
    ensemble: ThermalEnsemble
    deltas: tuple
    eta: float = math.nan

    def __post_init__(self):
        if not math.isfinite(self.base_detuning):
            raise ValueError("base detuning must be finite")
        if len(self.deltas) != 3:
            raise ValueError("need three deltas")


def ramsey_config(species, trap, temperature, base_detuning,
                  tail_eps=DEFAULT_TAIL_EPS):
    return RamseyConfig(
        base_detuning=float(base_detuning),
        ensemble=build_ensemble(species, trap, temperature, tail_eps),
        deltas=differential_trap_frequency(species, trap),
        eta=species.eta,
    )


def state_detuning(config, state):
    state = _state(state)
    return config.base_detuning + sum(n * d for n, d in zip(state, config.deltas))


def ramsey_single_state(delta_n, t):
    return np.cos(np.multiply(delta_n, t))


def _denominator(config, t):
    t = np.asarray(t, dtype=float)
    out = np.ones_like(t, dtype=complex)
    for mean, delta in zip(config.ensemble.mean_occupation, config.deltas):
        out = out * (mean + 1.0 - mean * np.exp(1j * delta * t))
    return out


def ramsey_thermal_exact(config, t):
    """Thermal Ramsey signal summed in closed form over all states."""
    t = np.asarray(t, dtype=float)
    return np.real(np.exp(1j * config.base_detuning * t) / _denominator(config, t))


def envelope_bound(config, t):
    """Modulus of the closed-form signal: an upper bound on |w(t)|."""
    return 1.0 / np.abs(_denominator(config, t))


def ramsey_thermal_bruteforce(config, t):
    """Thermal Ramsey signal as a direct sum over the truncated states."""
    px, py, pz = config.ensemble.weights
    dx, dy, dz = config.deltas
    values = [kernels.ramsey_state_sum(px, py, pz, dx, dy, dz,
                                       config.base_detuning, float(tt))
              for tt in np.atleast_1d(t)]
    return values[0] if np.ndim(t) == 0 else np.array(values)


def _mean_shift(config):
    return sum(m * d for m, d in zip(config.ensemble.mean_occupation,
                                     config.deltas))


def ramsey_short_time(config, t, form="per-axis"):
    """Short-time approximation, valid for t << 1/delta_q.

    ``form="per-axis"`` keeps each axis' <n_q> delta_q in the denominator;
    ``form="isotropic"`` replaces them by eta k_B T / (4 hbar), which needs
    ``config.eta`` and the ensemble temperature.
    """
    t = np.asarray(t, dtype=float)
    phase = np.cos((config.base_detuning + _mean_shift(config)) * t)
    return phase * short_time_envelope(config, t, form)


def short_time_envelope(config, t, form="per-axis"):
    t = np.asarray(t, dtype=float)
    if form == "per-axis":
        spread = sum((m * d) ** 2 for m, d in zip(
            config.ensemble.mean_occupation, config.deltas))
    elif form == "isotropic":
        rate = config.eta * K_B * config.ensemble.temperature / (4.0 * HBAR)
        if not math.isfinite(rate):
            raise ValueError("isotropic form needs eta and a temperature")
        spread = 3.0 * rate ** 2
    else:
        raise ValueError(f"unknown form {form!r}")
    return 1.0 / (1.0 + spread * t * t)


def dephasing_time_T2star(eta, temperature):
    """1/e time of the short-time Ramsey envelope (s)."""
    if eta < 0 or temperature < 0:
        raise ValueError("eta and temperature must be >= 0")
    if eta == 0 or temperature == 0:
        return NO_DEPHASING
    return T2STAR_PREFACTOR * 2.0 * HBAR / (eta * K_B * temperature)


def revival_time(deltas, tolerance=1e-9, max_integer=10 ** 6):
    """First full rephasing time 2 pi / g of the thermal Ramsey signal.

    g is the largest frequency with every delta_q an integer multiple of it.
    Each ratio delta_q / delta_min is replaced by its first continued
    fraction convergent within relative ``tolerance``; ``None`` is returned
    when the multiples would exceed ``max_integer`` (incommensurate within
    tolerance).
    """
    deltas = [float(d) for d in deltas]
    if any(not d > 0 for d in deltas):
        raise ValueError("deltas must be > 0")
    if not 0 < tolerance <= 1e-2:
        raise ValueError("tolerance must lie in (0, 1e-2]")
    ref = min(deltas)
    fractions = []
    for d in deltas:
        frac = _convergent(d / ref, tolerance, max_integer)
        if frac is None:
            return None
        fractions.append(frac)
    lcm = 1
    for f in fractions:
        lcm = lcm * f.denominator // math.gcd(lcm, f.denominator)
    multiples = [f.numerator * (lcm // f.denominator) for f in fractions]
    if max(multiples) > max_integer:
        return None
    g = ref / lcm
    return 2.0 * math.pi / g


def _convergent(x, tolerance, max_integer):
    """First convergent p/q of x with |x - p/q| <= tolerance * x."""
    h0, h1 = 0, 1
    k0, k1 = 1, 0
    rest = x
    while True:
        a = math.floor(rest)
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        if h1 > max_integer or k1 > max_integer:
            return None
        if abs(x - h1 / k1) <= tolerance * x:
            return Fraction(h1, k1)
        frac = rest - a
        if frac == 0:
            return Fraction(h1, k1)
        rest = 1.0 / frac


# -- intensity noise

class RedFluctuation(NamedTuple):
    full: float
    linear: float


def dfs_fluctuation_red(species, trap, state, depth_change):
    """DFS change (rad/s) for a small trap-depth change in a red trap.

    ``full`` keeps the vibrational correction from d(omega_q)/dU0 =
    omega_q / (2 U0); ``linear`` is the depth term alone.
    """
    if not isinstance(trap, RedGaussian):
        raise TypeError("dfs_fluctuation_red needs a RedGaussian trap")
    state = _state(state)
    omegas = trap_frequencies(species, trap)
    correction = sum((n + 0.5) * HBAR * w / (4.0 * trap.depth)
                     for n, w in zip(state, omegas))
    linear = -species.eta * depth_change / HBAR
    return RedFluctuation(linear * (1.0 - correction), linear)


def dfs_sigma(eta, depth_sigma):
    return eta * depth_sigma / HBAR


def homogeneous_T2(eta, depth_sigma):
    """Dephasing time sqrt(2)/sigma_dfs from Gaussian depth noise (s)."""
    if depth_sigma < 0 or eta < 0:
        raise ValueError("eta and depth_sigma must be >= 0")
    sigma = dfs_sigma(eta, depth_sigma)
    if sigma == 0:
        return NO_DEPHASING
    return math.sqrt(2.0) / sigma


class BlueFluctuation(NamedTuple):
    shift: float
    suppression: float


def dfs_fluctuation_blue(species, lattice, state, barrier_changes):
    """DFS change (rad/s) of a perfectly aligned lattice site.

    Only the barriers move; the site bottom stays at zero. ``suppression``
    is sum (n_q + 1/2) hbar omega_q / (4 U_q): the ratio to the red-trap
    shift eta dU / hbar when every barrier moves by the same dU.
    """
    if not isinstance(lattice, BlueLattice):
        raise TypeError("dfs_fluctuation_blue needs a BlueLattice")
    if lattice.bottom != 0:
        raise ValueError("the barrier-only form assumes a zero bottom "
                         "potential")
    state = _state(state)
    omegas = trap_frequencies(species, lattice)
    barriers = lattice.barriers
    factors = [(n + 0.5) * HBAR * w / (4.0 * u)
               for n, w, u in zip(state, omegas, barriers)]
    shift = species.eta * sum(du / HBAR * f
                              for du, f in zip(barrier_changes, factors))
    return BlueFluctuation(shift, sum(factors))


# -- pulse sequences

class Pulse(NamedTuple):
    rabi: float
    duration: float


class Free(NamedTuple):
    duration: float


def parse_sequence(text):
    """Parse ``pulse <rabi_rad_s> <duration_s>`` / ``free <duration_s>`` lines.

    Blank lines and ``#`` comments are ignored.
    """
    segments = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "pulse" and len(parts) == 3:
                segments.append(Pulse(float(parts[1]), float(parts[2])))
            elif parts[0] == "free" and len(parts) == 2:
                segments.append(Free(float(parts[1])))
            else:
                raise ValueError("expected 'pulse RABI DURATION' or "
                                 "'free DURATION'")
        except ValueError as exc:
            raise ValueError(f"sequence line {lineno}: {exc}") from None
    _validate(segments)
    return segments


def _validate(segments):
    for seg in segments:
        if isinstance(seg, Pulse):
            if not seg.rabi > 0 or not math.isfinite(seg.rabi):
                raise ValueError("pulse Rabi frequency must be finite and > 0")
        elif not isinstance(seg, Free):
            raise ValueError(f"unknown segment {seg!r}")
        if not seg.duration >= 0 or not math.isfinite(seg.duration):
            raise ValueError("segment durations must be finite and >= 0")


def ramsey_sequence(rabi, t):
    tp = pi_half_duration(rabi)
    return [Pulse(rabi, tp), Free(t), Pulse(rabi, tp)]


def echo_sequence(rabi, t):
    tp = pi_half_duration(rabi)
    return [Pulse(rabi, tp), Free(0.5 * t), Pulse(rabi, 2.0 * tp),
            Free(0.5 * t), Pulse(rabi, tp)]


def simulate_sequence(sequence, config, initial=LOWER):
    """Thermal average of the final w after a pulse sequence.

    Each vibrational state precesses at its own delta_n during free
    segments and sees the same detuning during pulses.
    """
    _validate(sequence)
    if isinstance(initial, BlochVector):
        initial = initial.as_array()
    offsets, weights = detuning_distribution(config.ensemble, config.deltas)
    detunings = config.base_detuning + offsets
    rabi = np.array([s.rabi if isinstance(s, Pulse) else 0.0
                     for s in sequence], dtype=float)
    duration = np.array([s.duration for s in sequence], dtype=float)
    u0, v0, w0 = (float(x) for x in initial)
    return kernels.sequence_w(np.ascontiguousarray(detunings),
                              np.ascontiguousarray(weights), rabi, duration,
                              u0, v0, w0)
