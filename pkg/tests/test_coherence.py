import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from odtq import coherence, core, spectrum
from odtq.coherence import Free, Pulse

HBAR = 6.62607015e-34 / (2 * math.pi)
KB = 1.380649e-23


@pytest.fixture(scope="module")
def warm(cs, red_trap):
    return coherence.ramsey_config(cs, red_trap, 15e-6, 2 * math.pi * 1e3)


def test_single_state_signal():
    assert coherence.ramsey_single_state(5.0, 0.0) == 1.0
    assert coherence.ramsey_single_state(math.pi, 1.0) == pytest.approx(-1.0)


def test_state_detuning(warm):
    assert coherence.state_detuning(warm, (3, 0, 0)) == pytest.approx(
        warm.base_detuning + 3 * warm.deltas[0], rel=1e-15)


def test_exact_signal_limits(warm):
    assert coherence.ramsey_thermal_exact(warm, 0.0) == pytest.approx(1.0, abs=1e-15)
    cold = coherence.RamseyConfig(
        base_detuning=7.0, ensemble=spectrum.ensemble_from_means((0, 0, 0)),
        deltas=(20.0, 20.0, 2.0))
    t = np.linspace(0, 3, 50)
    np.testing.assert_allclose(coherence.ramsey_thermal_exact(cold, t), np.cos(7 * t),
                               atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.0, 4.0), min_size=3, max_size=3),
       st.lists(st.floats(0.1, 50.0), min_size=3, max_size=3),
       st.floats(-50.0, 50.0), st.floats(0.0, 2.0))
def test_exact_matches_bruteforce(means, deltas, base, t):
    ens = spectrum.ensemble_from_means(means, tail_eps=1e-12)
    cfg = coherence.RamseyConfig(base, ens, tuple(deltas))
    exact = coherence.ramsey_thermal_exact(cfg, t)
    brute = coherence.ramsey_thermal_bruteforce(cfg, t)
    assert abs(exact - brute) <= 1e-8 + 2 * ens.tail_mass


def test_envelope_bounds_signal(warm):
    t = np.linspace(0, 0.05, 400)
    assert np.all(np.abs(coherence.ramsey_thermal_exact(warm, t))
                  <= coherence.envelope_bound(warm, t) + 1e-15)


def test_short_time_forms(warm):
    assert coherence.ramsey_short_time(warm, 0.0) == 1.0
    assert coherence.ramsey_short_time(warm, 0.0, "isotropic") == 1.0
    t = np.linspace(0, 0.02, 100)
    np.testing.assert_allclose(coherence.short_time_envelope(warm, t, "per-axis"),
                               coherence.short_time_envelope(warm, t, "isotropic"),
                               rtol=1e-12)
    rate = 1.68e-4 * KB * 15e-6 / (4 * HBAR)
    for mean, delta in zip(warm.ensemble.mean_occupation, warm.deltas):
        assert mean * delta == pytest.approx(rate, rel=1e-12)
    with pytest.raises(ValueError):
        coherence.short_time_envelope(warm, t, "other")


def test_t2star():
    assert coherence.T2STAR_PREFACTOR == pytest.approx(1.5137, abs=1e-4)
    t2 = coherence.dephasing_time_T2star(1.68e-4, 15e-6)
    assert t2 == pytest.approx(9.2e-3, rel=5e-3)
    assert coherence.dephasing_time_T2star(1.68e-4, 30e-6) == pytest.approx(t2 / 2)
    assert coherence.dephasing_time_T2star(0.0, 15e-6) == math.inf


def test_short_time_envelope_is_1_over_e_at_t2star(warm):
    t2 = coherence.dephasing_time_T2star(1.68e-4, 15e-6)
    assert coherence.short_time_envelope(warm, t2, "isotropic") == pytest.approx(
        1 / math.e, rel=1e-12)


def test_revival_integer_ratios():
    assert coherence.revival_time((2.0, 4.0, 6.0)) == pytest.approx(math.pi)
    assert coherence.revival_time((2.0, 3.0, 6.0)) == pytest.approx(2 * math.pi)


def test_revival_incommensurate_reports_none():
    assert coherence.revival_time((1.0, math.sqrt(2), math.pi), tolerance=1e-9,
                                  max_integer=1000) is None


def test_revival_tweezer_deltas(cs, red_trap):
    deltas = spectrum.differential_trap_frequency(cs, red_trap)
    loose = coherence.revival_time(deltas, tolerance=1e-3)
    assert loose is not None
    g = 2 * math.pi / loose
    for d in deltas:
        assert d / g == pytest.approx(round(d / g), rel=1e-3)


@pytest.mark.parametrize("tolerance", [1e-6, 1e-9])
def test_signal_recovers_at_revival(tolerance):
    deltas = (20.0, 20.0, 2.5)
    ens = spectrum.ensemble_from_means((4.0, 4.0, 40.0), tail_eps=1e-10)
    cfg = coherence.RamseyConfig(0.0, ens, deltas)
    revival = coherence.revival_time(deltas, tolerance)
    assert revival == pytest.approx(2 * math.pi / 2.5)
    assert coherence.ramsey_thermal_exact(cfg, revival) >= 0.99


# -- intensity noise

def test_red_fluctuation(cs, red_trap):
    assert coherence.dfs_fluctuation_red(cs, red_trap, (0, 0, 0), 0.0) == (0.0, 0.0)
    du = 0.01 * red_trap.depth
    fl = coherence.dfs_fluctuation_red(cs, red_trap, (0, 0, 0), du)
    omegas = core.trap_frequencies(cs, red_trap)
    factor = 1 - sum(0.5 * HBAR * w for w in omegas) / (4 * red_trap.depth)
    assert fl.full / fl.linear == pytest.approx(factor, rel=1e-12)
    assert 1e-4 < 1 - factor < 1e-2


@pytest.mark.parametrize("state", [(0, 0, 0), (300, 300, 2000)])
def test_red_fluctuation_is_derivative(cs, red_trap, state):
    def dfs(u):
        return spectrum.dfs_for_state(cs, red_trap.with_depth(u), state)
    u0 = red_trap.depth
    du = 1e-4 * u0
    d1 = (dfs(u0 + du) - dfs(u0 - du)) / 2
    d2 = (dfs(u0 + du / 2) - dfs(u0 - du / 2))
    richardson = (4 * d2 - d1) / 3
    full = coherence.dfs_fluctuation_red(cs, red_trap, state, du).full
    assert full == pytest.approx(richardson, rel=1e-7)


def test_homogeneous_t2():
    eta = 1.68e-4
    sigma_u = math.sqrt(2) * HBAR / eta
    assert coherence.homogeneous_T2(eta, sigma_u) == pytest.approx(1.0, rel=1e-12)
    base = coherence.homogeneous_T2(eta, KB * 1e-5)
    assert coherence.homogeneous_T2(eta, KB * 5e-6) == pytest.approx(2 * base)
    assert base == pytest.approx(math.sqrt(2) * HBAR / (eta * KB * 1e-5), rel=1e-12)
    assert base == pytest.approx(6.43e-3, rel=1e-3)
    assert coherence.homogeneous_T2(eta, 0.0) == math.inf


@pytest.fixture(scope="module")
def aligned():
    return core.BlueLattice(periods=(5e-6,) * 3,
                            barrier_heights=(KB * 65e-6,) * 3)


def test_blue_fluctuation(cs_blue, aligned):
    assert coherence.dfs_fluctuation_blue(cs_blue, aligned, (0, 0, 0), (0, 0, 0)).shift == 0
    changes = tuple(0.01 * u for u in aligned.barriers)
    got = coherence.dfs_fluctuation_blue(cs_blue, aligned, (0, 0, 0), changes)
    omegas = core.trap_frequencies(cs_blue, aligned)
    explicit = cs_blue.eta * sum(0.01 * 0.5 * w / 4 for w in omegas)
    assert got.shift == pytest.approx(explicit, rel=1e-12)
    red_like = cs_blue.eta * changes[0] / HBAR
    assert got.shift / red_like == pytest.approx(got.suppression, rel=1e-12)
    assert got.suppression < 1e-2


def test_blue_fluctuation_is_derivative(cs_blue, aligned):
    heights = np.array(aligned.barriers)
    step = np.array([1.0, 0.5, 2.0]) * 1e-5 * heights

    def dfs(scale):
        lattice = core.BlueLattice(periods=aligned.periods,
                                   barrier_heights=tuple(heights + scale * step))
        return spectrum.dfs_for_state(cs_blue, lattice, (1, 0, 2))
    numeric = (dfs(1.0) - dfs(-1.0)) / 2
    got = coherence.dfs_fluctuation_blue(cs_blue, aligned, (1, 0, 2), tuple(step))
    assert got.shift == pytest.approx(numeric, rel=1e-8)


def test_blue_fluctuation_needs_zero_bottom(cs_blue, blue_lattice):
    with pytest.raises(ValueError):
        coherence.dfs_fluctuation_blue(cs_blue, blue_lattice, (0, 0, 0), (0, 0, 0))


# -- sequences

def test_parse_sequence():
    seq = coherence.parse_sequence("# ramsey\npulse 1e6 1.5e-6\n\nfree 1e-3  # wait\n")
    assert seq == [Pulse(1e6, 1.5e-6), Free(1e-3)]
    with pytest.raises(ValueError, match="line 2"):
        coherence.parse_sequence("free 1\npulse 1\n")
    with pytest.raises(ValueError):
        coherence.parse_sequence("pulse -1 1")
    with pytest.raises(ValueError):
        coherence.parse_sequence("free -1")


def test_empty_sequence_keeps_state(warm):
    assert coherence.simulate_sequence([], warm) == pytest.approx(-1.0, abs=1e-14)


@pytest.mark.parametrize("t", [0.0, 2e-3, 7e-3, 15e-3])
def test_ramsey_sequence_matches_closed_form(cs, red_trap, t):
    cfg = coherence.ramsey_config(cs, red_trap, 15e-6, 2 * math.pi * 1e3,
                                  tail_eps=1e-10)
    w = coherence.simulate_sequence(coherence.ramsey_sequence(1e11, t), cfg)
    exact = coherence.ramsey_thermal_exact(cfg, t)
    assert abs(w - exact) <= 1e-6 + cfg.ensemble.tail_mass


@pytest.mark.parametrize("t", [1e-3, 9e-3, 30e-3])
def test_echo_restores_amplitude(warm, t):
    w = coherence.simulate_sequence(coherence.echo_sequence(1e11, t), warm)
    assert abs(w) == pytest.approx(1.0, abs=1e-6)
