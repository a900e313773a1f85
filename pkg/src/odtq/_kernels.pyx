# cython: language_level=3
"""Compiled inner loops.

Mirrors ``odtq._kernels_py`` function by function; the two are selected in
``odtq._backend``. All reductions run in fixed ascending index order with
Neumaier compensation so results do not depend on the caller.
"""
from libc.math cimport cos, sin, sqrt, fabs, pi, fmax, fmin, pow

NAME = "cython"


cdef inline void _neumaier(double *acc, double *comp, double value) noexcept nogil:
    cdef double t = acc[0] + value
    if fabs(acc[0]) >= fabs(value):
        comp[0] += (acc[0] - t) + value
    else:
        comp[0] += (value - t) + acc[0]
    acc[0] = t


cdef inline double _pulse_infidelity(double rabi, double detuning) noexcept nogil:
    cdef double x = detuning / rabi
    cdef double x2 = x * x
    cdef double r = sqrt(1.0 + x2)
    cdef double a = 1.0 / r
    # theta - pi/2, written without cancellation
    cdef double eps = 0.5 * pi * x2 / (r + 1.0)
    cdef double one_minus_cos = 1.0 + sin(eps)
    cdef double half = sin(0.5 * eps)
    cdef double one_minus_as = x2 / (r * (r + 1.0)) + a * 2.0 * half * half
    return ((one_minus_cos * x2 / (1.0 + x2)) + 2.0 * one_minus_as) / 3.0


def pulse_infidelity(double rabi, double detuning):
    return _pulse_infidelity(rabi, detuning)


def thermal_infidelity(const double[::1] offsets, const double[::1] weights,
                       double rabi):
    """Weighted sum of single-state pi/2 infidelities."""
    cdef Py_ssize_t k, n = offsets.shape[0]
    cdef double acc = 0.0, comp = 0.0
    if weights.shape[0] != n:
        raise ValueError("offsets and weights differ in length")
    with nogil:
        for k in range(n):
            _neumaier(&acc, &comp, weights[k] * _pulse_infidelity(rabi, offsets[k]))
    return acc + comp


def ramsey_state_sum(const double[::1] px, const double[::1] py,
                     const double[::1] pz, double dx, double dy, double dz,
                     double d0, double t):
    """Direct sum of P_nx P_ny P_nz cos(delta_n t) over every state."""
    cdef Py_ssize_t i, j, k
    cdef Py_ssize_t nx = px.shape[0], ny = py.shape[0], nz = pz.shape[0]
    cdef double acc = 0.0, comp = 0.0, phase, c, s, inner, wxy
    cdef double[::1] cz = _zeros(nz)
    cdef double[::1] sz = _zeros(nz)
    with nogil:
        for k in range(nz):
            cz[k] = cos(k * dz * t)
            sz[k] = sin(k * dz * t)
        for i in range(nx):
            for j in range(ny):
                phase = (d0 + i * dx + j * dy) * t
                c = cos(phase)
                s = sin(phase)
                inner = 0.0
                for k in range(nz):
                    inner = inner + pz[k] * (c * cz[k] - s * sz[k])
                wxy = px[i] * py[j]
                _neumaier(&acc, &comp, wxy * inner)
    return acc + comp


cdef double[::1] _zeros(Py_ssize_t n):
    import numpy
    return numpy.zeros(n, dtype=numpy.float64)


cdef inline void _bloch_rhs(double rabi, double det, double u, double v,
                            double w, double *out) noexcept nogil:
    out[0] = det * v
    out[1] = -det * u + rabi * w
    out[2] = -rabi * v


# Dormand-Prince 5(4) tableau
cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0
cdef double A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0
cdef double A63 = 46732.0 / 5247.0, A64 = 49.0 / 176.0
cdef double A65 = -5103.0 / 18656.0
cdef double B1 = 35.0 / 384.0, B3 = 500.0 / 1113.0, B4 = 125.0 / 192.0
cdef double B5 = -2187.0 / 6784.0, B6 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0
cdef double E5 = -17253.0 / 339200.0, E6 = 22.0 / 525.0, E7 = -1.0 / 40.0


def bloch_dopri(double rabi, double detuning, double u, double v, double w,
                double duration, double rtol, double atol, long max_steps):
    """Adaptive Dormand-Prince integration of dR/dt = R x (rabi, 0, detuning).

    Returns ``(u, v, w, accepted_steps, status)``; status 0 is success,
    1 step-size underflow, 2 step budget exhausted.
    """
    cdef double y[3]
    cdef double yn[3]
    cdef double k1[3]
    cdef double k2[3]
    cdef double k3[3]
    cdef double k4[3]
    cdef double k5[3]
    cdef double k6[3]
    cdef double k7[3]
    cdef double tmp[3]
    cdef double t = 0.0, h, err, sc, e, fac, speed
    cdef long steps = 0, tries = 0
    cdef int i, status = 0, last
    y[0] = u
    y[1] = v
    y[2] = w
    if duration <= 0.0:
        return (u, v, w, 0, 0)
    speed = sqrt(rabi * rabi + detuning * detuning)
    if speed == 0.0:
        return (u, v, w, 0, 0)
    h = fmin(duration, 0.05 / speed)
    with nogil:
        _bloch_rhs(rabi, detuning, y[0], y[1], y[2], k1)
        while t < duration:
            if tries >= max_steps:
                status = 2
                break
            tries += 1
            last = t + h >= duration
            if last:
                h = duration - t
            for i in range(3):
                tmp[i] = y[i] + h * A21 * k1[i]
            _bloch_rhs(rabi, detuning, tmp[0], tmp[1], tmp[2], k2)
            for i in range(3):
                tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i])
            _bloch_rhs(rabi, detuning, tmp[0], tmp[1], tmp[2], k3)
            for i in range(3):
                tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
            _bloch_rhs(rabi, detuning, tmp[0], tmp[1], tmp[2], k4)
            for i in range(3):
                tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i]
                                     + A54 * k4[i])
            _bloch_rhs(rabi, detuning, tmp[0], tmp[1], tmp[2], k5)
            for i in range(3):
                tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i]
                                     + A64 * k4[i] + A65 * k5[i])
            _bloch_rhs(rabi, detuning, tmp[0], tmp[1], tmp[2], k6)
            for i in range(3):
                yn[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i]
                                    + B5 * k5[i] + B6 * k6[i])
            _bloch_rhs(rabi, detuning, yn[0], yn[1], yn[2], k7)
            err = 0.0
            for i in range(3):
                e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i]
                         + E6 * k6[i] + E7 * k7[i])
                sc = atol + rtol * fmax(fabs(y[i]), fabs(yn[i]))
                err += (e / sc) * (e / sc)
            err = sqrt(err / 3.0)
            if err <= 1.0:
                t = duration if last else t + h
                for i in range(3):
                    y[i] = yn[i]
                    k1[i] = k7[i]
                steps += 1
                fac = 5.0 if err == 0.0 else fmin(5.0, 0.9 * pow(err, -0.2))
            else:
                fac = fmax(0.2, 0.9 * pow(err, -0.2))
            h = h * fac
            if t < duration and h <= 1e-14 * fmax(duration, 1e-300):
                status = 1
                break
    return (y[0], y[1], y[2], steps, status)


def sequence_w(const double[::1] detunings, const double[::1] weights,
               const double[::1] seg_rabi, const double[::1] seg_duration,
               double u0, double v0, double w0):
    """Weighted final w after applying every segment to every state.

    A segment with zero Rabi frequency is free precession about the w axis.
    """
    cdef Py_ssize_t k, j, n = detunings.shape[0], m = seg_rabi.shape[0]
    cdef double acc = 0.0, comp = 0.0
    cdef double u, v, w, det, om, ang, c, s, nx, nz, dot, cu, cv, cw, un
    if weights.shape[0] != n or seg_duration.shape[0] != m:
        raise ValueError("array lengths differ")
    with nogil:
        for k in range(n):
            det = detunings[k]
            u = u0
            v = v0
            w = w0
            for j in range(m):
                if seg_rabi[j] == 0.0:
                    ang = det * seg_duration[j]
                    c = cos(ang)
                    s = sin(ang)
                    un = u * c + v * s
                    v = -u * s + v * c
                    u = un
                else:
                    om = sqrt(seg_rabi[j] * seg_rabi[j] + det * det)
                    nx = seg_rabi[j] / om
                    nz = det / om
                    ang = om * seg_duration[j]
                    c = cos(ang)
                    s = sin(ang)
                    # n x R with n = (nx, 0, nz)
                    cu = -nz * v
                    cv = nz * u - nx * w
                    cw = nx * v
                    dot = nx * u + nz * w
                    un = c * u - s * cu + (1.0 - c) * nx * dot
                    v = c * v - s * cv
                    w = c * w - s * cw + (1.0 - c) * nz * dot
                    u = un
            _neumaier(&acc, &comp, weights[k] * w)
    return acc + comp
