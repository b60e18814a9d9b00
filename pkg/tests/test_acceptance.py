"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``CRITERION n: PASS|FAIL`` line with the measured
quantity next to its tolerance. Run standalone with ``python tests/test_acceptance.py``.
"""

import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from lora_ser.channel import InterfererState
from lora_ser.css_phy import ModulationParams, demodulate, modulate
from lora_ser.curves import horizontal_gap, max_horizontal_gap
from lora_ser.monte_carlo import TrialConfig, estimate_ser, sweep
from lora_ser.pattern import pattern_closed_form, pattern_dft
from lora_ser.ser import SerQuery, ser_awgn_approx, ser_awgn_exact, ser_awgn_exact_curve, ser_combined_curve, ser_full

P9 = ModulationParams(9)
SF9_GRID = np.arange(-17.0, -8.0, 1.0)


def report(capsys, number, ok, detail):
    with capsys.disabled():
        print(f"\nCRITERION {number}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def sf9_curves():
    out = {}
    for mode in ("fractional", "chip_aligned"):
        pts = sweep(TrialConfig(P9, 0.0, 3.0, tau_mode=mode, master_seed=2024), SF9_GRID, 200_000)
        out[mode] = np.array([p.ser for p in pts])
    return out


def test_criterion_1_closed_form_matches_dft(capsys):
    rng = np.random.default_rng(1)
    worst = 0.0
    for sf in range(2, 10):
        p = ModulationParams(sf)
        n = p.n
        taus = list(rng.random(200) * n)
        taus += [0.0, 1.0, n / 2, n - 1.0, 3 + 1e-12, 3 - 1e-12, 5 + 1e-7, n - 1e-9]
        for tau in taus:
            s1, s2 = rng.integers(0, n, 2)
            i = InterfererState(1.0, 0.0, float(tau) % n, int(s1), int(s2))
            err = np.max(np.abs(np.abs(pattern_closed_form(i, p).bins) - np.abs(pattern_dft(i, p).bins)))
            worst = max(worst, err / n)
    report(capsys, 1, worst <= 1e-9, f"max |R| error / N = {worst:.2e} (limit 1e-9)")


def test_criterion_2_noiseless_round_trip(capsys):
    errors = 0
    for sf in range(7, 13):
        p = ModulationParams(sf)
        s = np.arange(p.n)
        errors += int(np.count_nonzero(demodulate(modulate(s, p), p) != s))
    report(capsys, 2, errors == 0, f"{errors} symbol errors over sf 7-12")


def test_criterion_3_awgn_analytic_vs_empirical(capsys):
    p7 = ModulationParams(7)
    z = []
    for snr in (-12.0, -9.0, -6.0):
        est = estimate_ser(TrialConfig(p7, snr, master_seed=31), 1_000_000)
        exact = ser_awgn_exact(SerQuery(p7, snr)).ser
        se = math.sqrt(exact * (1 - exact) / est.trials + est.standard_error**2)
        z.append(abs(est.ser - exact) / se)
    shifts = []
    grid = np.arange(-28.0, -4.0, 0.25)
    for sf in (7, 12):
        p = ModulationParams(sf)
        ex = ser_awgn_exact_curve(p, grid)
        ap = np.array([ser_awgn_approx(SerQuery(p, float(s))).ser for s in grid])
        shifts.append(abs(horizontal_gap(grid, ex, grid, ap, 1e-3)))
    ok = max(z) <= 3 and max(shifts) <= 0.35
    report(capsys, 3, ok, f"MC deviation {max(z):.2f} SE (limit 3); approx shift {max(shifts):.3f} dB (limit 0.35)")


def test_criterion_4_full_expression_mini_mode(capsys):
    p4 = ModulationParams(4)
    z = []
    for snr in (-6.0, 0.0):
        full = ser_full(SerQuery(p4, snr, 3.0, tau_step=1 / 20, omega_nodes=32)).ser
        est = estimate_ser(TrialConfig(p4, snr, 3.0, master_seed=41), 1_000_000)
        z.append(abs(est.ser - full) / est.standard_error)
    report(capsys, 4, max(z) <= 3, f"deviation {', '.join(f'{v:.2f}' for v in z)} SE (limit 3)")


def test_criterion_5_chip_aligned_pessimism(capsys, sf9_curves):
    frac, chip = sf9_curves["fractional"], sf9_curves["chip_aligned"]
    dominated = bool(np.all(chip >= frac))
    gap = horizontal_gap(SF9_GRID, frac, SF9_GRID, chip, 1e-2)
    ok = dominated and abs(gap - 1.0) <= 0.5
    report(capsys, 5, ok, f"chip >= fractional everywhere: {dominated}; gap at 1e-2 = {gap:.2f} dB (1 +/- 0.5)")


def test_criterion_6_combined_approximation(capsys, sf9_curves):
    grid = np.arange(-20.0, -6.0, 0.25)
    approx = ser_combined_curve(P9, grid, 3.0)
    disp = max_horizontal_gap(grid, approx, SF9_GRID, sf9_curves["fractional"], 1e-3, 1e-1)
    report(capsys, 6, disp <= 0.5, f"max displacement {disp:.3f} dB over [1e-3, 1e-1] (limit 0.5)")


def test_criterion_7_omega_insensitivity(capsys):
    p7 = ModulationParams(7)
    grid = np.arange(-15.0, -2.0, 1.0)
    a = sweep(TrialConfig(p7, 0.0, 3.0, master_seed=71), grid, 100_000)
    b = sweep(TrialConfig(p7, 0.0, 3.0, omega_mode="ignored", master_seed=72), grid, 100_000)
    z = [abs(x.ser - y.ser) / math.hypot(x.std_error, y.std_error) for x, y in zip(a, b) if x.std_error + y.std_error > 0]
    report(capsys, 7, max(z) <= 3, f"max deviation {max(z):.2f} combined SE over {len(grid)} points (limit 3)")


PROPERTY_SELECTION = [
    "tests/test_channel.py",
    "tests/test_css_phy.py",
    "tests/test_pattern.py",
    "tests/test_stats.py",
    "tests/test_ser.py",
    "tests/test_monte_carlo.py",
]
PROPERTY_KEYWORDS = (
    "not (test_ser.py and not (monotone or refinement or distribution or limit or algebra))"
    " and not (test_monte_carlo.py and not (determin or independent or workers or wilson))"
)


def test_criterion_8_property_suites(capsys):
    root = Path(__file__).resolve().parent.parent
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *PROPERTY_SELECTION, "-k", PROPERTY_KEYWORDS],
        cwd=root, capture_output=True, text=True, check=False,
    )
    summary = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr.strip()
    report(capsys, 8, proc.returncode == 0, f"property suites: {summary}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
