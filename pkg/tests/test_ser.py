import math

import numpy as np
import pytest
from scipy import integrate

from lora_ser.channel import InterfererState, bin_noise_scale
from lora_ser.css_phy import ModulationParams
from lora_ser.curves import horizontal_gap
from lora_ser.pattern import pattern_dft, r_max_terms
from lora_ser.ser import (
    SerPoint,
    SerQuery,
    TractabilityError,
    combine,
    harmonic_gaussian_terms,
    interference_approx_curve,
    r_max_distribution,
    ser_awgn_approx,
    ser_awgn_exact,
    ser_awgn_exact_curve,
    ser_combined,
    ser_combined_curve,
    ser_full,
    ser_full_cells,
    ser_interference_approx,
    tau_grid,
)
from lora_ser.stats import log_cdf_product, rice_pdf

P3 = ModulationParams(3)
P4 = ModulationParams(4)
P7 = ModulationParams(7)
P9 = ModulationParams(9)


def q(p, snr, sir=None, **kw):
    return SerQuery(p, snr, sir, **kw)


# -- queries and points -------------------------------------------------------


def test_query_validation():
    with pytest.raises(ValueError):
        q(P4, math.inf)
    with pytest.raises(ValueError):
        q(P4, 0.0, tau_step=0.0)
    with pytest.raises(ValueError):
        q(P4, 0.0, tau_step=2.0)  # 8 offset points only
    with pytest.raises(ValueError):
        q(P4, 0.0, omega_nodes=0)
    with pytest.raises(ValueError):
        q(P4, 0.0, symbol_subsample=0)
    with pytest.raises(ValueError):
        q(P4, 0.0).interferer_power


def test_point_validation():
    with pytest.raises(ValueError):
        SerPoint(0.0, None, 1.2, "x")
    with pytest.raises(ValueError):
        SerPoint(0.0, None, 0.5, "x", ci_low=0.6, ci_high=0.7)


# -- AWGN ---------------------------------------------------------------------


def test_awgn_exact_high_snr():
    assert ser_awgn_exact(q(P7, 30.0)).ser <= 1e-12


def test_awgn_exact_low_snr():
    assert ser_awgn_exact(q(P7, -60.0)).ser == pytest.approx(127 / 128, abs=1e-3)


def test_awgn_exact_reference_value():
    # independent evaluation: P(correct) = int f_Ri(y; v) F_Ra(y)^(N-1) dy
    n, snr = 128, 10 ** (-0.9)
    v = math.sqrt(2 * n * snr)
    ok, _ = integrate.quad(
        lambda y: float(rice_pdf(y, v)) * (-math.expm1(-y * y / 2)) ** (n - 1), 0, v + 15, epsabs=1e-14, limit=200
    )
    assert ser_awgn_exact(q(P7, -9.0)).ser == pytest.approx(1 - ok, rel=1e-7)


def test_awgn_curves_monotone():
    snr = np.arange(-25.0, -2.0, 0.5)
    for p in (P7, ModulationParams(12)):
        ex = ser_awgn_exact_curve(p, snr)
        ap = np.array([ser_awgn_approx(q(p, float(s))).ser for s in snr])
        assert np.all(np.diff(ex) <= 1e-9)
        assert np.all(np.diff(ap) <= 1e-12)
        assert np.all(ex <= (p.n - 1) / p.n + 1e-9) and np.all(ap <= (p.n - 1) / p.n + 1e-9)


@pytest.mark.parametrize("sf", range(7, 13))
def test_awgn_approx_shift_at_1e3(sf):
    p = ModulationParams(sf)
    snr = np.arange(-28.0, -4.0, 0.25)
    ex = ser_awgn_exact_curve(p, snr)
    ap = np.array([ser_awgn_approx(q(p, float(s))).ser for s in snr])
    assert abs(horizontal_gap(snr, ex, snr, ap, 1e-3)) <= 0.35


def test_harmonic_terms_sf7():
    mu, var = harmonic_gaussian_terms(128)
    h = sum(1 / k for k in range(1, 128))
    assert h == pytest.approx(5.4253, abs=1e-4)
    assert mu == pytest.approx((h * h - math.pi**2 / 12) ** 0.25)
    assert var == pytest.approx(h - math.sqrt(h * h - math.pi**2 / 12))


def test_awgn_rejects_interferer():
    with pytest.raises(ValueError):
        ser_awgn_exact(q(P7, 0.0, 3.0))
    with pytest.raises(ValueError):
        ser_awgn_approx(q(P7, 0.0, 3.0))


# -- full expression ----------------------------------------------------------


def oracle_cell(n, snr, amp, tau, s1, s2, omega):
    """Error probability for s = 0 from the DFT pattern and adaptive quadrature."""
    s_b = float(bin_noise_scale(n, snr))
    r = amp * pattern_dft(InterfererState(1.0, 0.0, tau, s1, s2), ModulationParams(int(math.log2(n)))).bins
    v_s = abs(n + abs(r[0]) * np.exp(1j * omega)) / s_b
    v_k = np.abs(r[1:]) / s_b

    def f(y):
        return float(rice_pdf(y, v_s)) * math.exp(log_cdf_product(y, v_k))

    ok, _ = integrate.quad(f, 0, v_s + 15, epsabs=1e-13, epsrel=1e-11, limit=400, points=[v_s])
    return 1 - ok


def test_full_cells_match_independent_oracle():
    p = ModulationParams(2)
    query = q(p, -3.0, 0.0, tau_step=0.4, omega_nodes=4)
    cells = ser_full_cells(query)
    taus, _ = tau_grid(p.n, 0.4)
    omegas = 2 * math.pi * np.arange(4) / 4
    amp = 1.0
    for j in (0, 3, 7):
        for c, (s1, s2) in enumerate([(a, b) for a in range(4) for b in range(4)]):
            if c not in (0, 6, 13):
                continue
            expected = np.mean([oracle_cell(4, query.snr, amp, taus[j], s1, s2, w) for w in omegas])
            assert cells[c, j] == pytest.approx(expected, abs=1e-9)


def test_full_reduces_to_awgn_without_interference():
    for snr in (-6.0, 0.0):
        full = ser_full(q(P4, snr, 120.0, tau_step=0.4, omega_nodes=4)).ser
        assert full == pytest.approx(ser_awgn_exact(q(P4, snr)).ser, abs=1e-6)


def test_full_low_snr_limit():
    assert ser_full(q(P3, -60.0, 3.0, tau_step=0.5, omega_nodes=4)).ser == pytest.approx(7 / 8, abs=1e-3)


def test_interference_hurts_mini_mode():
    for snr in (-9.0, -3.0, 3.0):
        full = ser_full(q(P3, snr, 3.0, tau_step=0.5, omega_nodes=8)).ser
        assert full >= ser_awgn_exact(q(P3, snr)).ser - 1e-9


def test_full_grid_refinement_stable():
    coarse = ser_full(q(P3, -3.0, 3.0, tau_step=0.5, omega_nodes=8)).ser
    fine = ser_full(q(P3, -3.0, 3.0, tau_step=0.25, omega_nodes=16)).ser
    assert fine == pytest.approx(coarse, rel=2e-3)


def test_full_budget_refusal():
    with pytest.raises(TractabilityError):
        ser_full(q(P7, -6.0, 3.0), budget=1e6)


def test_full_subsample_interval():
    exact = ser_full(q(P3, -3.0, 3.0, tau_step=0.5, omega_nodes=8)).ser
    sub = ser_full(q(P3, -3.0, 3.0, tau_step=0.5, omega_nodes=8, symbol_subsample=40, seed=5))
    assert sub.ci_low <= sub.ser <= sub.ci_high
    assert sub.ci_low - 0.02 <= exact <= sub.ci_high + 0.02
    again = ser_full(q(P3, -3.0, 3.0, tau_step=0.5, omega_nodes=8, symbol_subsample=40, seed=5))
    assert again == sub


def test_full_needs_interferer():
    with pytest.raises(ValueError):
        ser_full(q(P4, 0.0))


# -- interference approximation -----------------------------------------------


@pytest.mark.parametrize("mode", ["fractional", "chip_aligned"])
def test_class_collapsed_distribution_matches_brute_force(mode):
    n = 16
    taus, wt = tau_grid(n, 0.5, mode)
    s1, s2 = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    x = np.linspace(0, 1.2 * n, 7)
    brute = np.zeros_like(x)
    for tau, w in zip(taus, wt):
        vals = r_max_terms(np.full(n * n, tau), s1.ravel(), s2.ravel(), n)
        brute += w * np.array([np.mean(vals <= t) for t in x])
    collapsed = np.zeros_like(x)
    for vals, w in r_max_distribution(n, 0.5, mode):
        collapsed += np.array([np.sum(w[vals <= t]) for t in x])
    np.testing.assert_allclose(collapsed, brute, atol=1e-12)


def test_interference_approx_limits():
    assert ser_interference_approx(q(P7, 0.0, 200.0)).ser < 1e-12
    huge = ser_interference_approx(q(P7, 0.0, -200.0)).ser
    assert huge == pytest.approx(127 / 128)
    raw = interference_approx_curve(P7, [0.0], -200.0, exclude_collision=False)[0]
    assert raw == pytest.approx(1.0)


def test_interference_approx_needs_sir():
    with pytest.raises(ValueError):
        ser_interference_approx(q(P7, 0.0))


@pytest.mark.parametrize("p", [P7, P9])
def test_epsilon_refinement_stable(p):
    snr = np.arange(-20.0, -8.0, 1.0)
    a = interference_approx_curve(p, snr, 3.0, tau_step=0.1)
    b = interference_approx_curve(p, snr, 3.0, tau_step=0.05)
    np.testing.assert_array_less(np.abs(a - b), 0.02 * b)


@pytest.mark.parametrize("p", [P7, P9])
def test_chip_aligned_pessimism_analytic(p):
    snr = np.arange(-20.0, -6.0, 1.0)
    frac = ser_combined_curve(p, snr, 3.0, tau_mode="fractional")
    chip = ser_combined_curve(p, snr, 3.0, tau_mode="chip_aligned")
    assert np.all(chip >= frac - 1e-12)


# -- combination --------------------------------------------------------------


def test_combine_algebra():
    assert combine(0.2, 0.0, 128) == pytest.approx(0.2)
    assert combine(0.0, 0.3, 128) == pytest.approx(0.3)
    rng = np.random.default_rng(0)
    pn, pi = rng.random(100) * 0.5, rng.random(100) * 0.5
    c = combine(pn, pi, 128)
    assert np.all(c >= np.maximum(pn, pi) - 1e-15)
    assert np.all(c <= pn + pi + 1e-15)
    assert combine(0.9, 0.9, 16) == pytest.approx(15 / 16)


def test_combined_point_and_curve_agree():
    pt = ser_combined(q(P7, -10.0, 3.0))
    curve = ser_combined_curve(P7, [-10.0], 3.0)
    assert pt.ser == pytest.approx(curve[0], rel=1e-12)
    assert pt.method == "combined"
    approx_noise = ser_combined(q(P7, -10.0, 3.0), noise_method="approx").ser
    assert approx_noise != pt.ser


def test_combined_monotone_and_bounded():
    snr = np.arange(-30.0, 0.0, 1.0)
    c = ser_combined_curve(P7, snr, 3.0)
    assert np.all(np.diff(c) <= 1e-9)
    assert np.all((c >= 0) & (c <= 127 / 128 + 1e-9))
    assert np.all(c >= ser_awgn_exact_curve(P7, snr) - 1e-12)
