"""Discrete-time baseband LoRa symbols, dechirping and DFT demodulation.

The sample rate equals the bandwidth, so a symbol has exactly ``N = 2**sf``
chips and the chip index is the time index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MIN_SF = 2
MAX_SF = 12
LORA_SFS = tuple(range(7, 13))


@dataclass(frozen=True)
class ModulationParams:
    """Spreading factor and the derived number of chips per symbol.

    Spreading factors below 7 ("mini mode") are accepted so that exhaustive
    oracles stay cheap; restricting to the LoRa range is left to callers.
    """

    sf: int

    def __post_init__(self):
        if not isinstance(self.sf, (int, np.integer)) or isinstance(self.sf, bool):
            raise TypeError(f"sf must be an integer, got {self.sf!r}")
        if not MIN_SF <= self.sf <= MAX_SF:
            raise ValueError(f"sf must lie in [{MIN_SF}, {MAX_SF}], got {self.sf}")

    @property
    def n(self) -> int:
        return 1 << int(self.sf)

    @property
    def is_lora(self) -> bool:
        return self.sf in LORA_SFS


def _check_symbol(s, p: ModulationParams):
    s_arr = np.asarray(s)
    if not np.issubdtype(s_arr.dtype, np.integer):
        if not np.all(np.equal(np.mod(s_arr, 1), 0)):
            raise ValueError(f"symbol must be an integer, got {s!r}")
        s_arr = s_arr.astype(np.int64)
    if np.any((s_arr < 0) | (s_arr >= p.n)):
        raise ValueError(f"symbol out of range [0, {p.n}) for sf={p.sf}: {s!r}")
    return s_arr


def _check_length(y, p: ModulationParams) -> np.ndarray:
    y = np.asarray(y, dtype=complex)
    if y.shape[-1] != p.n:
        raise ValueError(f"waveform length {y.shape[-1]} does not match N={p.n}")
    return y


def modulate(s, p: ModulationParams) -> np.ndarray:
    """Return the chips ``exp(j2pi(n^2/(2N) + (s/N - 1/2) n))`` of symbol ``s``.

    ``s`` may be an integer or an integer array; an array of shape ``S``
    yields waveforms of shape ``S + (N,)``.
    """
    s = _check_symbol(s, p)
    n_chips = p.n
    n = np.arange(n_chips)
    # phase in cycles, reduced mod 1 before scaling to keep large-N rounding small
    cycles = np.mod(n * n / (2 * n_chips) + (s[..., None] / n_chips - 0.5) * n, 1.0)
    return np.exp(2j * np.pi * cycles)


def modulate_two_branch(s: int, p: ModulationParams) -> np.ndarray:
    """Symbol waveform written with the explicit frequency fold at ``N - s``.

    Chips before the fold use the ``-1/2`` offset, chips after it ``-3/2``.
    On the integer chip grid this equals :func:`modulate`; it is kept so the
    single-expression form can be checked rather than assumed.
    """
    s = int(_check_symbol(s, p))
    n_chips = p.n
    n = np.arange(n_chips)
    n_fold = n_chips - s
    offset = np.where(n < n_fold, 0.5, 1.5)
    return np.exp(2j * np.pi * np.mod(n * n / (2 * n_chips) + (s / n_chips - offset) * n, 1.0))


def reference_upchirp(p: ModulationParams) -> np.ndarray:
    """Base upchirp used for dechirping (the waveform of symbol 0)."""
    return modulate(0, p)


def dechirp(y, p: ModulationParams) -> np.ndarray:
    """Multiply by the conjugate reference upchirp along the last axis."""
    y = _check_length(y, p)
    return y * np.conj(reference_upchirp(p))


def demod_spectrum(y, p: ModulationParams) -> np.ndarray:
    """Unnormalized DFT (kernel ``exp(-j2pi kn/N)``) of the dechirped waveform."""
    return np.fft.fft(dechirp(y, p), axis=-1)


def demodulate(y, p: ModulationParams):
    """Index of the largest-magnitude bin; ties go to the lowest index.

    Works on a single waveform or on a stack of waveforms (last axis).
    """
    return decide(demod_spectrum(y, p))


def decide(spectrum):
    """Argmax of ``|Y_k|`` along the last axis, first index on ties."""
    spectrum = np.asarray(spectrum)
    # squared magnitude orders bins like |Y_k| and skips the square root
    power = spectrum.real**2 + spectrum.imag**2
    out = np.argmax(power, axis=-1)
    return int(out) if out.ndim == 0 else out
