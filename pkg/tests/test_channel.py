import math

import numpy as np
import pytest

from lora_ser.channel import (
    ChannelState,
    InterfererState,
    apply_channel,
    bin_noise_scale,
    complex_awgn,
    draw_collision_geometry,
    synthesize_interferer,
)
from lora_ser.css_phy import ModulationParams, demod_spectrum, modulate
from lora_ser.pattern import pattern_closed_form


def interferer(tau, s1=5, s2=9, power=1.0, phase=0.0):
    return InterfererState(power=power, phase=phase, tau=tau, s_i1=s1, s_i2=s2)


def test_channel_state_convention():
    c = ChannelState.from_db(-6.0)
    assert c.snr * c.n0 == pytest.approx(1.0)
    assert c.noise_variance == pytest.approx(10 ** 0.6)
    assert abs(ChannelState(2.0, phase=1.3).gain) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        ChannelState(0.0)


def test_interferer_state_derived_quantities():
    i = InterfererState.from_sir_db(3.0, phase=0.2, tau=37.3, s_i1=5, s_i2=9)
    assert i.sir == pytest.approx(10**0.3)
    assert i.integer_offset == 37
    assert i.fractional_offset == pytest.approx(0.3)
    assert abs(i.gain) ** 2 == pytest.approx(i.power)


def test_tau_zero_is_plain_symbol():
    p = ModulationParams(7)
    np.testing.assert_allclose(synthesize_interferer(interferer(0.0), p), modulate(9, p), atol=1e-12)


@pytest.mark.parametrize("big_l", [1, 17, 100, 127])
def test_integer_tau_shifts_second_symbol(big_l):
    p = ModulationParams(7)
    x = synthesize_interferer(interferer(float(big_l), s1=33, s2=71), p)
    ref2 = modulate(71, p)
    ref1 = modulate(33, p)
    np.testing.assert_allclose(x[big_l:], ref2[: p.n - big_l], atol=1e-10)
    np.testing.assert_allclose(x[:big_l], ref1[p.n - big_l :], atol=1e-10)


def test_interferer_unit_modulus():
    p = ModulationParams(7)
    x = synthesize_interferer(interferer(37.3), p)
    assert np.max(np.abs(np.abs(x) - 1)) < 1e-12


def test_interferer_continuous_across_integer_tau():
    p = ModulationParams(6)
    a = synthesize_interferer(interferer(20.0, s1=3, s2=40), p)
    b = synthesize_interferer(interferer(20.0 + 1e-9, s1=3, s2=40), p)
    assert np.max(np.abs(a - b)) < 1e-6


@pytest.mark.parametrize("tau", [-0.1, 128.0, math.inf])
def test_interferer_rejects_bad_tau(tau):
    p = ModulationParams(7)
    with pytest.raises(ValueError):
        synthesize_interferer(interferer(tau), p)


@pytest.mark.parametrize("sf", [3, 7, 9])
def test_interferer_spectrum_matches_closed_form(sf):
    p = ModulationParams(sf)
    rng = np.random.default_rng(sf)
    for _ in range(25):
        i = interferer(rng.random() * p.n, int(rng.integers(p.n)), int(rng.integers(p.n)))
        spec = demod_spectrum(synthesize_interferer(i, p), p)
        closed = pattern_closed_form(i, p).magnitudes
        np.testing.assert_allclose(np.abs(spec), closed, rtol=1e-9, atol=1e-9 * p.n)


def test_apply_channel_noiseless_identity():
    p = ModulationParams(5)
    x = modulate(3, p)
    y = apply_channel(x, ChannelState(1e300), np.random.default_rng(0))
    np.testing.assert_allclose(y, x, atol=1e-140)


def test_apply_channel_deterministic():
    p = ModulationParams(5)
    x = modulate(3, p)
    c = ChannelState(2.0, 0.4)
    i = interferer(7.5)
    xi = synthesize_interferer(i, p)
    y1 = apply_channel(x, c, np.random.default_rng(9), xi, i)
    y2 = apply_channel(x, c, np.random.default_rng(9), xi, i)
    np.testing.assert_array_equal(y1, y2)


def test_apply_channel_argument_pairs():
    p = ModulationParams(4)
    with pytest.raises(ValueError):
        apply_channel(modulate(0, p), ChannelState(1.0), np.random.default_rng(0), x_i=modulate(1, p))


def test_apply_channel_interference_power():
    p = ModulationParams(6)
    i = interferer(11.2, power=0.5, phase=2.0)
    xi = synthesize_interferer(i, p)
    y = apply_channel(np.zeros(p.n), ChannelState(1e300), np.random.default_rng(0), xi, i)
    np.testing.assert_allclose(np.abs(y) ** 2, 0.5, rtol=1e-12)


def test_noise_variance_empirical():
    rng = np.random.default_rng(5)
    var = 0.37
    z = complex_awgn(rng, var, 1_000_000)
    assert np.mean(np.abs(z) ** 2) == pytest.approx(var, rel=0.01)
    assert np.var(z.real) == pytest.approx(var / 2, rel=0.01)
    assert abs(np.mean(z.real * z.imag)) < 0.01 * var


def test_noise_white_in_dft_domain():
    p = ModulationParams(6)
    rng = np.random.default_rng(6)
    c = ChannelState(0.5)
    z = apply_channel(np.zeros((20000, p.n)), c, rng)
    bins = demod_spectrum(z, p)
    per_bin = np.mean(np.abs(bins) ** 2, axis=0)
    # N * sigma^2 per bin, i.e. 2 * bin_noise_scale^2
    np.testing.assert_allclose(per_bin, p.n * c.noise_variance, rtol=0.05)
    assert 2 * bin_noise_scale(p.n, c.snr) ** 2 == pytest.approx(p.n * c.noise_variance)
    corr = np.mean(bins[:, 3] * np.conj(bins[:, 4]))
    assert abs(corr) < 0.05 * p.n * c.noise_variance


def test_geometry_chip_aligned_integer():
    p = ModulationParams(7)
    rng = np.random.default_rng(1)
    for _ in range(200):
        g = draw_collision_geometry(rng, p, chip_aligned=True)
        assert g.tau == int(g.tau) and 0 <= g.tau < p.n


def test_geometry_reproducible_and_ranges():
    p = ModulationParams(7)
    a = draw_collision_geometry(np.random.default_rng(42), p)
    b = draw_collision_geometry(np.random.default_rng(42), p)
    assert a == b
    assert 0 <= a.tau < p.n and 0 <= a.theta < 2 * math.pi and 0 <= a.phi < 2 * math.pi
    assert 0 <= a.s_i1 < p.n and 0 <= a.s_i2 < p.n


def test_geometry_tau_uniform_mean():
    p = ModulationParams(7)
    rng = np.random.default_rng(3)
    taus = np.array([draw_collision_geometry(rng, p).tau for _ in range(100_000)])
    # standard error of the mean of U[0, N)
    se = p.n / math.sqrt(12 * len(taus))
    assert abs(taus.mean() - p.n / 2) < 3 * se
