"""pi/2 rotations on the Bloch sphere and their thermal fidelity.

Bloch vectors R = (u, v, w) evolve as dR/dt = R x W with drive vector
W = (Omega, 0, Delta'). A pulse always lasts t = pi / (2 Omega0), the
duration of a resonant pi/2 pulse on the n = 0 transition; detuned states
therefore over-rotate by theta = (pi/2) sqrt(1 + (Delta'/Omega0)**2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._backend import kernels
from .spectrum import (DEFAULT_TAIL_EPS, build_ensemble,
                       detuning_distribution, differential_trap_frequency)


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class BlochVector:
    u: float
    v: float
    w: float

    def __post_init__(self):
        if self.norm > 1.0 + 1e-12:
            raise ValueError(f"Bloch vector norm {self.norm} exceeds 1")

    @classmethod
    def from_array(cls, values):
        u, v, w = (float(x) for x in values)
        return cls(u, v, w)

    def as_array(self):
        return np.array([self.u, self.v, self.w])

    @property
    def norm(self):
        return math.sqrt(self.u ** 2 + self.v ** 2 + self.w ** 2)


LOWER = BlochVector(0.0, 0.0, -1.0)
UPPER = BlochVector(0.0, 0.0, 1.0)


@dataclass(frozen=True)
class DriveParameters:
    rabi: float
    detuning: float = 0.0
    duration: float | None = None

    def __post_init__(self):
        if not self.rabi > 0:
            raise ValueError("rabi frequency must be > 0")
        if self.duration is not None and self.duration < 0:
            raise ValueError("duration must be >= 0")

    @property
    def pulse_duration(self):
        return pi_half_duration(self.rabi) if self.duration is None else self.duration


def pi_half_duration(rabi):
    if not rabi > 0:
        raise ValueError("rabi frequency must be > 0")
    return math.pi / (2.0 * rabi)


def rotation_angle(rabi, detuning):
    """Angle swept in t_pi/2 by a drive detuned by ``detuning``."""
    return 0.5 * math.pi * math.hypot(detuning, rabi) / rabi


def resonant_pi2_matrix():
    return np.array([[1.0, 0.0, 0.0],
                     [0.0, 0.0, 1.0],
                     [0.0, -1.0, 0.0]])


def detuned_pulse_matrix(rabi, detuning):
    """Propagator of a t_pi/2 pulse with detuning, written entry by entry.

    The off-diagonal Delta' sin(theta) entries carry the sign that follows
    from u' = Delta' v; with the opposite sign the matrix is not a rotation.
    """
    if not rabi > 0:
        raise ValueError("rabi frequency must be > 0")
    theta = rotation_angle(rabi, detuning)
    c, s = math.cos(theta), math.sin(theta)
    o2 = rabi * rabi + detuning * detuning
    o = math.sqrt(o2)
    return np.array([
        [(rabi ** 2 + detuning ** 2 * c) / o2, detuning * s / o,
         rabi * detuning * (1.0 - c) / o2],
        [-detuning * s / o, c, rabi * s / o],
        [rabi * detuning * (1.0 - c) / o2, -rabi * s / o,
         (rabi ** 2 * c + detuning ** 2) / o2],
    ])


def rotation_matrix(rabi, detuning, duration):
    """Exact propagator of dR/dt = R x (rabi, 0, detuning) over ``duration``.

    Built from Rodrigues' formula; free precession when ``rabi == 0``.
    """
    speed = math.hypot(rabi, detuning)
    if speed == 0:
        return np.eye(3)
    n = np.array([rabi, 0.0, detuning]) / speed
    angle = speed * duration
    cross = np.array([[0.0, -n[2], n[1]],
                      [n[2], 0.0, -n[0]],
                      [-n[1], n[0], 0.0]])
    return (math.cos(angle) * np.eye(3) - math.sin(angle) * cross
            + (1.0 - math.cos(angle)) * np.outer(n, n))


def integrate_bloch(rabi, detuning, initial, duration, rtol=1e-10,
                    atol=1e-12, max_steps=1_000_000):
    """Integrate the Bloch equations numerically (adaptive RK 5(4)).

    Meant as an independent check of the closed-form propagators.
    """
    if rtol <= 0 or atol <= 0:
        raise ValueError("tolerances must be > 0")
    if not all(math.isfinite(x) for x in (rabi, detuning, duration)):
        raise ValueError("non-finite drive parameters")
    if isinstance(initial, BlochVector):
        initial = initial.as_array()
    start = [float(x) for x in initial]
    u, v, w, _, status = kernels.bloch_dopri(
        float(rabi), float(detuning), *start, float(duration),
        float(rtol), float(atol), int(max_steps))
    if status == 1:
        raise IntegrationError("step size underflow")
    if status == 2:
        raise IntegrationError(f"no convergence within {max_steps} steps")
    # the flow is a rotation: restore the initial length lost to truncation
    # error so the result stays a valid Bloch vector
    norm0 = math.sqrt(sum(x * x for x in start))
    norm = math.sqrt(u * u + v * v + w * w)
    if norm > 0 and abs(norm - norm0) > 1e-6 * max(norm0, 1.0):
        raise IntegrationError(f"norm drifted from {norm0} to {norm}")
    scale = norm0 / norm if norm > 0 else 1.0
    return BlochVector(u * scale, v * scale, w * scale)


def pulse_fidelity(theta):
    """Bloch-overlap fidelity of a pi/2 pulse that actually rotated by theta.

    Averaged over the three unit vectors. Not clamped: large over-rotation
    gives negative values.
    """
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < 0.5 * math.pi * (1 - 1e-15)):
        raise ValueError("theta must be >= pi/2")
    f = ((math.pi / (2.0 * theta)) ** 2 * (1.0 - np.cos(theta)) + np.cos(theta)
         + math.pi / theta * np.sin(theta)) / 3.0
    return float(f) if f.ndim == 0 else f


def overlap_fidelity(rabi, detuning):
    """Same fidelity via the matrices: mean of R^T Theta'^T Theta R."""
    product = detuned_pulse_matrix(rabi, detuning).T @ resonant_pi2_matrix()
    basis = np.eye(3)
    return sum(float(r @ product @ r) for r in basis) / 3.0


def pulse_infidelity(rabi, detuning):
    """1 - fidelity, evaluated without cancellation near resonance."""
    return kernels.pulse_infidelity(float(rabi), float(detuning))


class GateFidelity(NamedTuple):
    fidelity: float
    infidelity: float


def thermal_gate_fidelity(species, trap, temperature, rabi,
                          tail_eps=DEFAULT_TAIL_EPS, ensemble=None):
    """Thermal average of the pi/2 fidelity over the vibrational states.

    The drive is resonant with n = 0, so a state sees Delta' = sum n_q
    delta_q. Pass ``ensemble`` to reuse a prebuilt one.
    """
    if not rabi > 0:
        raise ValueError("rabi frequency must be > 0")
    if ensemble is None:
        ensemble = build_ensemble(species, trap, temperature, tail_eps)
    offsets, weights = detuning_distribution(
        ensemble, differential_trap_frequency(species, trap))
    infidelity = kernels.thermal_infidelity(offsets, weights, float(rabi))
    return GateFidelity(1.0 - infidelity, infidelity)


def gate_error_scan(species, trap, temperatures, rabis,
                    tail_eps=DEFAULT_TAIL_EPS, executor=None):
    """Rows (rabi, T, fidelity, infidelity), temperature-major.

    ``executor`` may be any ``concurrent.futures`` executor; row order is
    the grid order regardless.
    """
    temperatures = [float(t) for t in temperatures]
    rabis = [float(r) for r in rabis]
    jobs = []
    for temperature in temperatures:
        ensemble = build_ensemble(species, trap, temperature, tail_eps)
        offsets, weights = detuning_distribution(
            ensemble, differential_trap_frequency(species, trap))
        for rabi in rabis:
            jobs.append((temperature, rabi, offsets, weights))

    def run(job):
        temperature, rabi, offsets, weights = job
        inf = kernels.thermal_infidelity(offsets, weights, rabi)
        return (rabi, temperature, 1.0 - inf, inf)

    mapper = map if executor is None else executor.map
    return list(mapper(run, jobs))
