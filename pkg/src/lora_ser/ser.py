"""Analytic and semi-analytic symbol error rates.

All expressions use the normalized decision metric ``|Y_k| / s_b`` where
``s_b = sqrt(N N0 / 2)`` is the per-component noise std of a DFT bin.  A
noise-only bin is then Rayleigh with unit scale and the user's bin is Rice
with location ``v = N / s_b = sqrt(2 N SNR)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .channel import TWO_PI, bin_noise_scale, db_to_linear
from .css_phy import ModulationParams
from .pattern import dirichlet_ratio, pattern_magnitudes, r_max_terms, round_half_up
from .stats import (
    Quadrature,
    composite_gauss_legendre,
    harmonic_number,
    integrate,
    log_rice_cdf_fast,
    max_background_pdf_awgn,
    max_background_upper,
    qfunc,
    rice_cdf,
    rice_pdf,
)

Method = Literal["awgn_exact", "awgn_approx", "full", "approx_interf", "combined", "monte_carlo"]
TauMode = Literal["fractional", "chip_aligned"]

DEFAULT_EVAL_BUDGET = 2_000_000_000
Y_HALF_WIDTH = 12.0


class TractabilityError(RuntimeError):
    """The requested evaluation exceeds the configured work budget."""


@dataclass(frozen=True)
class SerQuery:
    """Operating point for an analytic SER evaluation.

    ``tau_step`` is the offset grid step in chips (midpoint rule on
    ``[0, N)``); ``omega_nodes`` is the number of trapezoid nodes over the
    relative phase; ``symbol_subsample`` is ``"all"`` or a number of random
    ``(s, s_i1, s_i2)`` triples.
    """

    params: ModulationParams
    snr_db: float
    sir_db: float | None = None
    tau_step: float = 0.1
    omega_nodes: int = 16
    symbol_subsample: int | str = "all"
    seed: int = 0

    def __post_init__(self):
        if not math.isfinite(self.snr_db):
            raise ValueError("snr_db must be finite")
        if self.sir_db is not None and math.isnan(self.sir_db):
            raise ValueError("sir_db must not be NaN")
        if not self.tau_step > 0:
            raise ValueError("tau_step must be positive")
        if self.params.n / self.tau_step < 10 - 1e-9:
            raise ValueError("tau grid must have at least 10 points")
        if self.omega_nodes < 1:
            raise ValueError("omega_nodes must be >= 1")
        if self.symbol_subsample != "all" and not (
            isinstance(self.symbol_subsample, int) and self.symbol_subsample >= 1
        ):
            raise ValueError("symbol_subsample must be 'all' or a positive integer")

    @property
    def snr(self) -> float:
        return float(db_to_linear(self.snr_db))

    @property
    def interferer_power(self) -> float:
        if self.sir_db is None:
            raise ValueError("query has no interferer")
        return float(db_to_linear(-self.sir_db))


@dataclass(frozen=True)
class SerPoint:
    snr_db: float
    sir_db: float | None
    ser: float
    method: str
    ci_low: float | None = None
    ci_high: float | None = None
    trials: int | None = None
    std_error: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.ser <= 1.0:
            raise ValueError(f"SER outside [0, 1]: {self.ser}")
        if self.ci_low is not None and not self.ci_low <= self.ser <= self.ci_high:
            raise ValueError("confidence interval does not contain the estimate")


def _clip_ser(x: float, n: int) -> float:
    # quadrature noise can push a probability a hair outside its range
    return float(min(max(x, 0.0), (n - 1) / n))


def user_location(n: int, snr) -> np.ndarray:
    """Normalized Rice location of the user's bin, ``sqrt(2 N SNR)``."""
    return n / bin_noise_scale(n, snr)


# -- AWGN ---------------------------------------------------------------------


def _require_awgn(q: SerQuery):
    if q.sir_db is not None:
        raise ValueError("AWGN-only SER takes no sir_db")


def ser_awgn_exact(q: SerQuery) -> SerPoint:
    """Exact AWGN SER: ``int F_Ri(y; v, 1) f_max(y) dy``.

    ``f_max`` is the density of the largest of the ``N - 1`` noise bins; the
    result is the same for every transmitted symbol.
    """
    _require_awgn(q)
    n = q.params.n
    v = float(user_location(n, q.snr))
    upper = max_background_upper(n)
    mode = math.sqrt(2.0 * math.log(max(n - 1, 2)))

    def f(y):
        return rice_cdf(y, v) * max_background_pdf_awgn(y, n)

    val = integrate(f, Quadrature(0.0, upper, abs_tol=1e-16, rel_tol=1e-11, points=(mode,)))
    return SerPoint(q.snr_db, None, _clip_ser(val, n), "awgn_exact")


def ser_awgn_exact_curve(params: ModulationParams, snr_db) -> np.ndarray:
    return np.array([ser_awgn_exact(SerQuery(params, float(s))).ser for s in np.atleast_1d(snr_db)])


def harmonic_gaussian_terms(n: int):
    """Mean and variance terms of the Gaussian fit to the largest noise bin."""
    h = harmonic_number(n - 1)
    root = math.sqrt(h * h - math.pi**2 / 12.0)
    return math.sqrt(root), h - root


def ser_awgn_approx(q: SerQuery) -> SerPoint:
    """Harmonic-number Gaussian approximation of the AWGN SER.

    ``Q((sqrt(g) - mu) / sqrt(var + 1/2))`` with ``g = N * SNR`` the bin SNR
    in complex-unit-variance normalization, ``mu = (H^2 - pi^2/12)^(1/4)``,
    ``var = H - sqrt(H^2 - pi^2/12)`` and ``H = H_{N-1}``.
    """
    _require_awgn(q)
    n = q.params.n
    mu, var = harmonic_gaussian_terms(n)
    x = (math.sqrt(n * q.snr) - mu) / math.sqrt(var + 0.5)
    # the Gaussian fit tends to 1 at very low SNR; no detector does worse than guessing
    return SerPoint(q.snr_db, None, _clip_ser(float(qfunc(x)), n), "awgn_approx")


# -- full expression ----------------------------------------------------------


def tau_grid(n: int, tau_step: float, tau_mode: TauMode = "fractional"):
    """Offset nodes and weights (summing to one) for the average over ``tau``."""
    if tau_mode == "chip_aligned":
        return np.arange(n, dtype=float), np.full(n, 1.0 / n)
    count = int(round(n / tau_step))
    nodes = (np.arange(count) + 0.5) * (n / count)
    return nodes, np.full(count, 1.0 / count)


def _symbol_cells(q: SerQuery):
    """``(s, s_i1, s_i2)`` cells and weights for the symbol averages.

    With ``"all"``, shifting all three symbols by the same amount only
    rotates the pattern, so ``s = 0`` with every ``(s_i1, s_i2)`` pair gives
    the exact triple average.
    """
    n = q.params.n
    if q.symbol_subsample == "all":
        s1, s2 = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        return np.zeros(n * n, dtype=np.int64), s1.ravel(), s2.ravel()
    rng = np.random.default_rng(np.random.SeedSequence([q.seed, 0x5E7]))
    triples = rng.integers(0, n, size=(q.symbol_subsample, 3))
    return triples[:, 0], triples[:, 1], triples[:, 2]


def full_y_grid(n: int, snr: float, amp: float, panel: float = 1.0, order: int = 8):
    s_b = float(bin_noise_scale(n, snr))
    v_hi = (n + amp * n) / s_b
    v_lo = max(0.0, (n - amp * n) / s_b)
    lower = max(0.0, v_lo - Y_HALF_WIDTH)
    return composite_gauss_legendre(lower, v_hi + Y_HALF_WIDTH, panel, order)


def ser_full_cells(q: SerQuery, tau_mode: TauMode = "fractional", budget=DEFAULT_EVAL_BUDGET):
    """Per-cell symbol error probabilities of the full expression.

    Returns an array of shape ``(cells, taus)``; each entry is already
    averaged over the relative phase.
    """
    p = q.params
    n = p.n
    snr = q.snr
    amp = math.sqrt(q.interferer_power)
    s_b = float(bin_noise_scale(n, snr))
    s, s1, s2 = _symbol_cells(q)
    taus, _ = tau_grid(n, q.tau_step, tau_mode)
    y, wy = full_y_grid(n, snr, amp)
    cost = len(s) * len(taus) * (n - 1 + q.omega_nodes) * len(y)
    if cost > budget:
        raise TractabilityError(
            f"full SER needs ~{cost:.3g} special-function evaluations (budget {budget:.3g}); "
            "use a smaller sf, a coarser grid or symbol_subsample"
        )
    omega = TWO_PI * np.arange(q.omega_nodes) / q.omega_nodes
    cos_w = np.cos(omega)
    others = (np.arange(n)[None, :] + 1 + s[:, None]) % n  # bins k != s, shape (cells, n-1)
    others = others[:, : n - 1]
    rows = np.arange(len(s))[:, None]
    out = np.empty((len(s), len(taus)))
    for j, tau in enumerate(taus):
        mags = amp * pattern_magnitudes(np.full(len(s), tau), s1, s2, n)  # (cells, n)
        r_s = mags[np.arange(len(s)), s]
        v_k = mags[rows, others] / s_b
        log_g = np.sum(log_rice_cdf_fast(y[None, None, :], v_k[:, :, None]), axis=1)
        miss = -np.expm1(log_g)  # P(max noise/interference bin > y)
        v_s = np.sqrt(np.maximum(n * n + r_s[:, None] ** 2 + 2 * n * r_s[:, None] * cos_w, 0.0)) / s_b
        dens = rice_pdf(y[None, None, :], v_s[:, :, None])  # (cells, omega, y)
        out[:, j] = np.einsum("cwy,cy->cw", dens, wy * miss).mean(axis=1)
    return out


def ser_full(
    q: SerQuery,
    tau_mode: TauMode = "fractional",
    budget: float = DEFAULT_EVAL_BUDGET,
) -> SerPoint:
    """Full SER under AWGN plus one same-SF interferer.

    Averages the conditional error probability
    ``1 - int f_Ri(y; v_s) prod_{k != s} F_Ri(y; v_k) dy`` over the relative
    phase (trapezoid), the offset (midpoint grid with step ``tau_step``) and
    the three symbols.  With a symbol subsample the returned interval is a
    normal-approximation 95% interval over the sampled triples.
    """
    n = q.params.n
    cells = ser_full_cells(q, tau_mode, budget)
    per_cell = cells.mean(axis=1)
    ser = _clip_ser(float(per_cell.mean()), n)
    if q.symbol_subsample == "all":
        return SerPoint(q.snr_db, q.sir_db, ser, "full")
    se = float(per_cell.std(ddof=1) / math.sqrt(len(per_cell))) if len(per_cell) > 1 else float("nan")
    half = 1.96 * se if math.isfinite(se) else 1.0
    return SerPoint(
        q.snr_db, q.sir_db, ser, "full",
        ci_low=max(0.0, ser - half), ci_high=min(1.0, ser + half), std_error=se,
    )


# -- low-complexity interference approximation --------------------------------


def _pair_classes(n: int, r: int):
    """Group the ``N^2`` symbol pairs by what the peak-bin terms depend on.

    For offset rounding ``r`` the estimate depends on ``d = s_i1 - s_i2`` and
    on whether each symbol lies below ``r`` (which fixes the wrap of its peak
    bin).  Returns ``(d, below1, below2, count)`` arrays.
    """
    d = np.arange(-(n - 1), n)
    lo = np.maximum(0, -d)  # range of s_i2 with s_i1 = s_i2 + d valid
    hi = np.minimum(n - 1, n - 1 - d)
    t2 = r  # s_i2 < r
    t1 = r - d  # s_i1 < r  <=>  s_i2 < r - d

    def count_below(t):
        return np.clip(t - lo, 0, hi - lo + 1)

    both = count_below(np.minimum(t1, t2))
    only2 = count_below(t2) - both
    only1 = count_below(t1) - both
    total = hi - lo + 1
    neither = total - both - only1 - only2
    ds, b1s, b2s, cs = [], [], [], []
    for b1, b2, cnt in ((1, 1, both), (0, 1, only2), (1, 0, only1), (0, 0, neither)):
        keep = cnt > 0
        ds.append(d[keep])
        b1s.append(np.full(keep.sum(), b1))
        b2s.append(np.full(keep.sum(), b2))
        cs.append(cnt[keep])
    return np.concatenate(ds), np.concatenate(b1s), np.concatenate(b2s), np.concatenate(cs)


def _r_max_classes(tau, d, b1, b2, n: int):
    """Peak-bin estimate for a class; matches :func:`pattern.r_max_terms`."""
    r = round_half_up(tau)
    c = np.ceil(tau)
    # offsets of the peak bins from the symbol values: s - k = r - N*below
    base1 = r - n * b1 - tau
    base2 = r - n * b2 - tau
    # peak of the s_i1 segment: x1 = base1, x2 = base1 - d
    at1 = np.abs(dirichlet_ratio(base1, c, n) + dirichlet_ratio(base1 - d, n - c, n))
    # peak of the s_i2 segment: x2 = base2, x1 = base2 + d
    at2 = np.abs(dirichlet_ratio(base2 + d, c, n) + dirichlet_ratio(base2, n - c, n))
    return np.maximum(at1, at2)


def r_max_distribution(n: int, tau_step: float, tau_mode: TauMode = "fractional"):
    """Yield ``(values, weights)`` chunks of the peak-magnitude estimate.

    Weights over all chunks sum to one and cover the uniform averages over
    ``s_i1``, ``s_i2`` and the offset grid.
    """
    taus, wt = tau_grid(n, tau_step, tau_mode)
    r_all = round_half_up(taus)
    for r in np.unique(r_all):
        sel = r_all == r
        d, b1, b2, cnt = _pair_classes(n, int(r))
        t = taus[sel][:, None]
        vals = _r_max_classes(t, d[None, :], b1[None, :], b2[None, :], n)
        w = (wt[sel][:, None] * cnt[None, :]) / (n * n)
        yield vals.ravel(), w.ravel()


def r_max_distribution_literal(n: int, tau_step: float, tau_mode: TauMode = "fractional"):
    """Same as :func:`r_max_distribution` with the terms taken at bin ``round(tau)``."""
    taus, wt = tau_grid(n, tau_step, tau_mode)
    s1, s2 = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    s1 = s1.ravel()
    s2 = s2.ravel()
    for tau, w in zip(taus, wt):
        yield r_max_terms(np.full(s1.shape, tau), s1, s2, n, literal_bin=True), np.full(s1.shape, w / (n * n))


def interference_approx_curve(
    params: ModulationParams,
    snr_db,
    sir_db: float,
    tau_step: float = 0.1,
    tau_mode: TauMode = "fractional",
    exclude_collision: bool = True,
    literal_bin: bool = False,
) -> np.ndarray:
    """Gaussian-tail interference SER for several SNRs at once.

    ``mean Q((N - sqrt(P_I) |R_max|) / sqrt(2 s_b^2))`` over the symbol pairs
    and the offset grid.  With ``exclude_collision`` the average is scaled by
    ``(N-1)/N``, dropping the case where the dominant interference bin is the
    user's own bin.
    """
    n = params.n
    snr = db_to_linear(np.atleast_1d(np.asarray(snr_db, dtype=float)))
    amp = math.sqrt(float(db_to_linear(-sir_db)))
    scale = 1.0 / (math.sqrt(2.0) * bin_noise_scale(n, snr))  # 1/sqrt(2 s_b^2) = sqrt(SNR/N)
    total = np.zeros(len(snr))
    chunks = (r_max_distribution_literal if literal_bin else r_max_distribution)(n, tau_step, tau_mode)
    for vals, w in chunks:
        arg = (n - amp * vals)[:, None] * scale[None, :]
        total += w @ qfunc(arg)
    if exclude_collision:
        total *= (n - 1) / n
    return total


def ser_interference_approx(
    q: SerQuery,
    tau_mode: TauMode = "fractional",
    exclude_collision: bool = True,
    literal_bin: bool = False,
) -> SerPoint:
    """Low-complexity SER caused by the interferer alone (Gaussian tail)."""
    if q.sir_db is None:
        raise ValueError("interference SER needs sir_db")
    val = interference_approx_curve(
        q.params, [q.snr_db], q.sir_db, q.tau_step, tau_mode, exclude_collision, literal_bin
    )[0]
    return SerPoint(q.snr_db, q.sir_db, _clip_ser(val, q.params.n), "approx_interf")


def combine(p_noise, p_interf, n: int):
    """``P_N + (1 - P_N) P_I``, capped at the random-guess rate ``(N-1)/N``."""
    p_noise = np.asarray(p_noise, dtype=float)
    p_interf = np.asarray(p_interf, dtype=float)
    return np.minimum(p_noise + (1.0 - p_noise) * p_interf, (n - 1) / n)


def ser_combined(
    q: SerQuery,
    tau_mode: TauMode = "fractional",
    noise_method: Literal["exact", "approx"] = "exact",
    exclude_collision: bool = True,
) -> SerPoint:
    """Noise-limited SER combined with the interference approximation."""
    if q.sir_db is None:
        raise ValueError("combined SER needs sir_db")
    awgn_q = SerQuery(q.params, q.snr_db)
    p_n = (ser_awgn_exact if noise_method == "exact" else ser_awgn_approx)(awgn_q).ser
    p_i = ser_interference_approx(q, tau_mode, exclude_collision).ser
    return SerPoint(q.snr_db, q.sir_db, float(combine(p_n, p_i, q.params.n)), "combined")


def ser_combined_curve(
    params: ModulationParams,
    snr_db,
    sir_db: float,
    tau_step: float = 0.1,
    tau_mode: TauMode = "fractional",
    noise_method: Literal["exact", "approx"] = "exact",
    exclude_collision: bool = True,
) -> np.ndarray:
    snr_db = np.atleast_1d(np.asarray(snr_db, dtype=float))
    f = ser_awgn_exact if noise_method == "exact" else ser_awgn_approx
    p_n = np.array([f(SerQuery(params, float(s))).ser for s in snr_db])
    p_i = interference_approx_curve(params, snr_db, sir_db, tau_step, tau_mode, exclude_collision)
    return combine(p_n, p_i, params.n)
