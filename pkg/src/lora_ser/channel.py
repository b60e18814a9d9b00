"""AWGN channel, channel phases and the time-offset same-SF interferer.

SNR convention: chips have unit modulus and ``SNR = 1/N0`` where ``N0`` is
the complex noise variance per chip.  In the DFT domain each bin then
carries complex noise of variance ``N * N0``; :func:`bin_noise_scale` gives
the per-component standard deviation used to normalize the decision metric
so that noise-only bins are Rayleigh with unit scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .css_phy import ModulationParams, _check_symbol

TWO_PI = 2.0 * math.pi


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def bin_noise_scale(n: int, snr) -> np.ndarray:
    """Per-component noise std of an unnormalized DFT bin, ``sqrt(N*N0/2)``."""
    return np.sqrt(n / (2.0 * np.asarray(snr, dtype=float)))


@dataclass(frozen=True)
class ChannelState:
    """Unit-gain user channel ``h = exp(j*phase)`` plus AWGN at a given SNR."""

    snr: float
    phase: float = 0.0

    def __post_init__(self):
        if not (self.snr > 0 and math.isfinite(self.snr)):
            raise ValueError(f"snr must be positive and finite, got {self.snr}")

    @classmethod
    def from_db(cls, snr_db: float, phase: float = 0.0) -> ChannelState:
        return cls(float(db_to_linear(snr_db)), phase)

    @property
    def n0(self) -> float:
        return 1.0 / self.snr

    @property
    def noise_variance(self) -> float:
        """Complex noise variance per chip (equal to ``N0``)."""
        return self.n0

    @property
    def gain(self) -> complex:
        return complex(np.exp(1j * self.phase))


@dataclass(frozen=True)
class InterfererState:
    """One same-SF interferer straddling two of its own symbols.

    ``tau`` is the delay, in chips, of the start of symbol ``s_i2`` with
    respect to the start of the user's symbol; the first ``ceil(tau)`` chips
    of the observation window carry the tail of ``s_i1``.
    """

    power: float
    phase: float
    tau: float
    s_i1: int
    s_i2: int

    def __post_init__(self):
        if not (self.power > 0 and math.isfinite(self.power)):
            raise ValueError(f"interferer power must be positive, got {self.power}")
        if not (math.isfinite(self.tau) and self.tau >= 0):
            raise ValueError(f"tau must be finite and non-negative, got {self.tau}")

    @classmethod
    def from_sir_db(cls, sir_db: float, **kwargs) -> InterfererState:
        return cls(power=float(db_to_linear(-sir_db)), **kwargs)

    @property
    def sir(self) -> float:
        return 1.0 / self.power

    @property
    def amplitude(self) -> float:
        return math.sqrt(self.power)

    @property
    def gain(self) -> complex:
        return self.amplitude * complex(np.exp(1j * self.phase))

    @property
    def integer_offset(self) -> int:
        return math.floor(self.tau)

    @property
    def fractional_offset(self) -> float:
        return self.tau - math.floor(self.tau)

    def validate(self, p: ModulationParams):
        if not self.tau < p.n:
            raise ValueError(f"tau must lie in [0, {p.n}), got {self.tau}")
        _check_symbol(self.s_i1, p)
        _check_symbol(self.s_i2, p)


def interferer_chips(tau, s_i1, s_i2, p: ModulationParams) -> np.ndarray:
    """Vectorized interferer waveform for arrays of ``(tau, s_i1, s_i2)``.

    Chips ``n < ceil(tau)`` take symbol ``s_i1`` evaluated at ``n + N - tau``,
    the rest take ``s_i2`` at ``n - tau``.  Inputs broadcast together; the
    chip axis is appended last.
    """
    n_chips = p.n
    tau = np.asarray(tau, dtype=float)[..., None]
    s_i1 = np.asarray(s_i1)[..., None]
    s_i2 = np.asarray(s_i2)[..., None]
    n = np.arange(n_chips)
    first = n < np.ceil(tau)
    m = np.where(first, n + n_chips - tau, n - tau)
    s = np.where(first, s_i1, s_i2)
    cycles = np.mod(m * m / (2 * n_chips), 1.0) + np.mod(m * (s / n_chips - 0.5), 1.0)
    return np.exp(2j * np.pi * cycles)


def tone_rows(freq, n: int) -> np.ndarray:
    """``exp(j2pi f k)`` for ``k < n``, one row per frequency (in cycles/chip).

    Built from baby-step/giant-step tables, so only ``~2 sqrt(n)``
    exponentials are evaluated per row.
    """
    freq = np.asarray(freq, dtype=float).ravel()
    b = math.isqrt(n - 1) + 1
    a = -(-n // b)
    baby = np.exp(2j * np.pi * np.mod(np.outer(freq, np.arange(b)), 1.0))
    giant = np.exp(2j * np.pi * np.mod(np.outer(freq, np.arange(a) * b), 1.0))
    return (giant[:, :, None] * baby[:, None, :]).reshape(len(freq), a * b)[:, :n]


def dechirped_interferer_chips(tau, s_i1, s_i2, p: ModulationParams) -> np.ndarray:
    """``interferer_chips(...) * conj(upchirp)`` for 1-D arrays of collisions.

    After dechirping, each segment is a tone at ``s - tau`` bins with
    constant phase ``tau^2/2N - tau s/N -+ tau/2`` (minus for the ``s_i1``
    segment), which is cheaper than synthesizing the chirps.
    """
    n = p.n
    tau = np.asarray(tau, dtype=float).ravel()
    s_i1 = np.asarray(s_i1).ravel()
    s_i2 = np.asarray(s_i2).ravel()
    quad = np.mod(tau * tau / (2 * n), 1.0)
    c1 = np.exp(2j * np.pi * np.mod(quad - np.mod(tau * s_i1 / n, 1.0) - tau / 2, 1.0))
    c2 = np.exp(2j * np.pi * np.mod(quad - np.mod(tau * s_i2 / n, 1.0) + tau / 2, 1.0))
    first = np.arange(n) < np.ceil(tau)[:, None]
    out = tone_rows(np.mod(s_i2 - tau, n) / n, n) * c2[:, None]
    seg1 = tone_rows(np.mod(s_i1 - tau, n) / n, n) * c1[:, None]
    np.copyto(out, seg1, where=first)
    return out


def synthesize_interferer(i: InterfererState, p: ModulationParams) -> np.ndarray:
    """Unit-modulus transmitted interferer waveform (no gain applied)."""
    i.validate(p)
    return interferer_chips(i.tau, i.s_i1, i.s_i2, p)


def complex_awgn(rng: np.random.Generator, variance, shape) -> np.ndarray:
    """Circular complex Gaussian samples; each component has ``variance/2``."""
    std = np.sqrt(np.asarray(variance, dtype=float) / 2.0)
    return std * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def apply_channel(
    x,
    c: ChannelState,
    rng: np.random.Generator,
    x_i=None,
    i: InterfererState | None = None,
) -> np.ndarray:
    """Received chips ``h x + h_I x_I + z`` for one observation window."""
    if (x_i is None) != (i is None):
        raise ValueError("interferer waveform and state must be given together")
    x = np.asarray(x, dtype=complex)
    y = c.gain * x
    if x_i is not None:
        x_i = np.asarray(x_i, dtype=complex)
        if x_i.shape != x.shape:
            raise ValueError("interferer waveform shape must match the user waveform")
        y = y + i.gain * x_i
    return y + complex_awgn(rng, c.noise_variance, x.shape)


@dataclass(frozen=True)
class CollisionGeometry:
    tau: float
    s_i1: int
    s_i2: int
    theta: float
    phi: float


def draw_collision_geometry(
    rng: np.random.Generator, p: ModulationParams, chip_aligned: bool = False
) -> CollisionGeometry:
    """Draw a random collision: offset, interfering symbols and both phases.

    With ``chip_aligned`` the offset is restricted to whole chips, which is
    the older integer-offset interference model.
    """
    u = rng.random()
    tau = float(math.floor(u * p.n)) if chip_aligned else u * p.n
    s_i1, s_i2 = (int(v) for v in rng.integers(0, p.n, size=2))
    theta, phi = TWO_PI * rng.random(2)
    return CollisionGeometry(tau, s_i1, s_i2, float(theta), float(phi))


def interferer_from_geometry(g: CollisionGeometry, power: float) -> InterfererState:
    return InterfererState(power=power, phase=g.theta, tau=g.tau, s_i1=g.s_i1, s_i2=g.s_i2)


__all__ = [
    "ChannelState",
    "CollisionGeometry",
    "InterfererState",
    "apply_channel",
    "bin_noise_scale",
    "complex_awgn",
    "db_to_linear",
    "dechirped_interferer_chips",
    "draw_collision_geometry",
    "interferer_chips",
    "interferer_from_geometry",
    "synthesize_interferer",
    "tone_rows",
]
