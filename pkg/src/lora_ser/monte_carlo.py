"""Seeded Monte Carlo estimation of the LoRa symbol error rate.

Every trial redraws the user symbol and phase, the noise and (with an
interferer) the full collision geometry, then runs the chip-level
transmit/receive chain.  Trials are grouped in fixed-size blocks; block ``b``
of point ``p`` draws from ``SeedSequence([master_seed, p, b])``, so the
outcome of trial ``i`` depends only on ``(master_seed, point_index, i)``
and never on how many workers ran or how many trials were requested.

Budget guidance: aim for at least ~100 expected errors per point, i.e.
``n_trials >= 100 / SER``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np
from scipy import stats as _stats

from .channel import TWO_PI, db_to_linear, dechirped_interferer_chips
from .css_phy import ModulationParams, decide, reference_upchirp
from .ser import SerPoint

BLOCK_CHIPS = 1 << 17

TauMode = Literal["fractional", "chip_aligned"]
OmegaMode = Literal["random", "ignored"]


@dataclass(frozen=True)
class TrialConfig:
    """One Monte Carlo operating point.

    ``omega_mode="ignored"`` gives the interferer the user's channel phase
    (relative phase zero); ``tau_mode="chip_aligned"`` floors the offset to a
    whole number of chips.  Both modes consume the same random draws as their
    counterparts, so curves that differ only in these modes use common random
    numbers.
    """

    params: ModulationParams
    snr_db: float
    sir_db: float | None = None
    tau_mode: TauMode = "fractional"
    omega_mode: OmegaMode = "random"
    master_seed: int = 0
    point_index: int = 0

    def __post_init__(self):
        if self.tau_mode not in ("fractional", "chip_aligned"):
            raise ValueError(f"unknown tau_mode {self.tau_mode!r}")
        if self.omega_mode not in ("random", "ignored"):
            raise ValueError(f"unknown omega_mode {self.omega_mode!r}")
        if self.master_seed < 0 or self.point_index < 0:
            raise ValueError("seeds must be non-negative")

    @property
    def block_size(self) -> int:
        return max(1, BLOCK_CHIPS // self.params.n)


@dataclass(frozen=True)
class SerEstimate:
    errors: int
    trials: int
    ci_low: float
    ci_high: float

    @property
    def ser(self) -> float:
        return self.errors / self.trials

    @property
    def standard_error(self) -> float:
        p = self.ser
        return math.sqrt(p * (1.0 - p) / self.trials)

    @classmethod
    def from_counts(cls, errors: int, trials: int, confidence: float = 0.95) -> SerEstimate:
        if trials < 1 or not 0 <= errors <= trials:
            raise ValueError("need 0 <= errors <= trials and trials >= 1")
        ci = _stats.binomtest(errors, trials).proportion_ci(confidence, method="wilson")
        return cls(int(errors), int(trials), float(ci.low), float(ci.high))


def _block_rng(c: TrialConfig, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([c.master_seed, c.point_index, block]))


def simulate_block(c: TrialConfig, block: int) -> np.ndarray:
    """Error indicators for every trial of one block, in trial order.

    The received chips ``y = e^{j phi} x_s + h_I x_I + z`` are formed directly
    in dechirped form; this is the same waveform as ``dechirp(y)`` up to
    rounding (see ``tests/test_monte_carlo.py``) at about half the cost.
    """
    p = c.params
    n = p.n
    size = c.block_size
    rng = _block_rng(c, block)
    # draw order is part of the reproducibility contract
    s = rng.integers(0, n, size)
    phi = TWO_PI * rng.random(size)
    noise = rng.standard_normal((2, size, n))
    # everything is built already multiplied by conj(upchirp): the user
    # symbol becomes the exact tone roots[s k mod N]
    roots = np.exp(2j * np.pi * np.arange(n) / n)
    y = np.exp(1j * phi)[:, None] * roots[(s[:, None] * np.arange(n)) % n]
    if c.sir_db is not None:
        u = rng.random(size)
        s_i1 = rng.integers(0, n, size)
        s_i2 = rng.integers(0, n, size)
        theta = TWO_PI * rng.random(size)
        tau = np.floor(u * n) if c.tau_mode == "chip_aligned" else u * n
        if c.omega_mode == "ignored":
            theta = phi
        amp = math.sqrt(float(db_to_linear(-c.sir_db)))
        y += (amp * np.exp(1j * theta))[:, None] * dechirped_interferer_chips(tau, s_i1, s_i2, p)
    z = np.empty((size, n), dtype=complex)
    z.real = noise[0]
    z.imag = noise[1]
    z *= math.sqrt(0.5 / float(db_to_linear(c.snr_db))) * np.conj(reference_upchirp(p))
    y += z
    return decide(np.fft.fft(y, axis=-1)) != s


def run_trial(c: TrialConfig, trial_index: int) -> bool:
    """Whether trial ``trial_index`` of this operating point is a symbol error."""
    if trial_index < 0:
        raise ValueError("trial index must be non-negative")
    block, pos = divmod(trial_index, c.block_size)
    return bool(simulate_block(c, block)[pos])


def _count_block(args) -> int:
    c, block, count = args
    return int(np.count_nonzero(simulate_block(c, block)[:count]))


def estimate_ser(c: TrialConfig, n_trials: int, workers: int = 1) -> SerEstimate:
    """Symbol error rate over trials ``0 .. n_trials-1`` with a Wilson 95% interval."""
    n_trials = int(n_trials)
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    size = c.block_size
    full, rem = divmod(n_trials, size)
    jobs = [(c, b, size) for b in range(full)]
    if rem:
        jobs.append((c, full, rem))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            errors = sum(pool.map(_count_block, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        errors = sum(map(_count_block, jobs))
    return SerEstimate.from_counts(errors, n_trials)


def sweep(template: TrialConfig, snr_db, n_trials: int, workers: int = 1) -> list[SerPoint]:
    """Estimate the SER at each SNR; point ``i`` uses stream index ``i``."""
    snr_db = [float(x) for x in snr_db]
    if not snr_db:
        raise ValueError("empty SNR list")
    out = []
    for idx, snr in enumerate(snr_db):
        est = estimate_ser(replace(template, snr_db=snr, point_index=idx), n_trials, workers)
        out.append(
            SerPoint(
                snr_db=snr,
                sir_db=template.sir_db,
                ser=est.ser,
                method="monte_carlo",
                ci_low=est.ci_low,
                ci_high=est.ci_high,
                trials=est.trials,
                std_error=est.standard_error,
            )
        )
    return out
