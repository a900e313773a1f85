"""Pure-Python/numpy versions of the compiled kernels in ``_kernels.pyx``.

Same signatures and return values. Reductions use ``math.fsum`` or a
fixed-order Neumaier loop, so results are deterministic; they agree with
the compiled versions to rounding, not bit for bit.
"""
import math

import numpy as np

NAME = "python"

# Dormand-Prince 5(4)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525,
      -1 / 40)


def _pulse_infidelity_array(rabi, detuning):
    x = np.asarray(detuning, dtype=float) / rabi
    x2 = x * x
    r = np.sqrt(1.0 + x2)
    eps = 0.5 * math.pi * x2 / (r + 1.0)
    half = np.sin(0.5 * eps)
    one_minus_as = x2 / (r * (r + 1.0)) + (1.0 / r) * 2.0 * half * half
    return ((1.0 + np.sin(eps)) * x2 / (1.0 + x2) + 2.0 * one_minus_as) / 3.0


def pulse_infidelity(rabi, detuning):
    return float(_pulse_infidelity_array(rabi, detuning))


def thermal_infidelity(offsets, weights, rabi):
    offsets = np.ascontiguousarray(offsets, dtype=float)
    weights = np.ascontiguousarray(weights, dtype=float)
    if offsets.shape != weights.shape:
        raise ValueError("offsets and weights differ in length")
    return math.fsum(weights * _pulse_infidelity_array(rabi, offsets))


def ramsey_state_sum(px, py, pz, dx, dy, dz, d0, t):
    px, py, pz = (np.asarray(p, dtype=float) for p in (px, py, pz))
    nz = np.arange(pz.size)
    cz = np.cos(nz * dz * t)
    sz = np.sin(nz * dz * t)
    iy = np.arange(py.size)[None, :]
    parts = []
    rows = max(1, 2_000_000 // max(1, py.size * pz.size))
    for start in range(0, px.size, rows):
        ix = np.arange(start, min(start + rows, px.size))[:, None]
        phase = (d0 + ix * dx + iy * dy) * t
        # every state's cos(delta_n t), summed over n_z per (n_x, n_y)
        terms = (np.cos(phase)[:, :, None] * cz
                 - np.sin(phase)[:, :, None] * sz)
        inner = np.einsum("ijk,k->ij", terms, pz)
        parts.append((px[ix[:, 0], None] * py[None, :] * inner).ravel())
    return math.fsum(np.concatenate(parts))


def _rhs(rabi, det, y):
    u, v, w = y
    return (det * v, -det * u + rabi * w, -rabi * v)


def bloch_dopri(rabi, detuning, u, v, w, duration, rtol, atol, max_steps):
    y = (float(u), float(v), float(w))
    if duration <= 0:
        return (*y, 0, 0)
    speed = math.hypot(rabi, detuning)
    if speed == 0:
        return (*y, 0, 0)
    h = min(duration, 0.05 / speed)
    t = 0.0
    steps = tries = 0
    k1 = _rhs(rabi, detuning, y)
    while t < duration:
        if tries >= max_steps:
            return (*y, steps, 2)
        tries += 1
        last = t + h >= duration
        if last:
            h = duration - t
        ks = [k1]
        for row in _A[1:]:
            stage = tuple(y[i] + h * sum(a * k[i] for a, k in zip(row, ks))
                          for i in range(3))
            ks.append(_rhs(rabi, detuning, stage))
        yn = tuple(y[i] + h * sum(b * k[i] for b, k in zip(_B, ks))
                   for i in range(3))
        k7 = _rhs(rabi, detuning, yn)
        ks.append(k7)
        err = 0.0
        for i in range(3):
            e = h * sum(c * k[i] for c, k in zip(_E, ks))
            sc = atol + rtol * max(abs(y[i]), abs(yn[i]))
            err += (e / sc) ** 2
        err = math.sqrt(err / 3.0)
        if err <= 1.0:
            t = duration if last else t + h
            y = yn
            k1 = k7
            steps += 1
            fac = 5.0 if err == 0 else min(5.0, 0.9 * err ** -0.2)
        else:
            fac = max(0.2, 0.9 * err ** -0.2)
        h *= fac
        if t < duration and h <= 1e-14 * duration:
            return (*y, steps, 1)
    return (*y, steps, 0)


def sequence_w(detunings, weights, seg_rabi, seg_duration, u0, v0, w0):
    det = np.ascontiguousarray(detunings, dtype=float)
    weights = np.ascontiguousarray(weights, dtype=float)
    if det.shape != weights.shape or len(seg_rabi) != len(seg_duration):
        raise ValueError("array lengths differ")
    u = np.full_like(det, u0)
    v = np.full_like(det, v0)
    w = np.full_like(det, w0)
    for rabi, tau in zip(seg_rabi, seg_duration):
        if rabi == 0:
            c, s = np.cos(det * tau), np.sin(det * tau)
            u, v = u * c + v * s, -u * s + v * c
            continue
        om = np.sqrt(rabi * rabi + det * det)
        nx, nz = rabi / om, det / om
        c, s = np.cos(om * tau), np.sin(om * tau)
        cu, cv, cw = -nz * v, nz * u - nx * w, nx * v
        dot = nx * u + nz * w
        u, v, w = (c * u - s * cu + (1.0 - c) * nx * dot,
                   c * v - s * cv,
                   c * w - s * cw + (1.0 - c) * nz * dot)
    return math.fsum(weights * w)
