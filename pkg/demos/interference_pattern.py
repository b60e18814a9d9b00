"""
What a colliding LoRa symbol looks like after dechirping
========================================================

An interferer with the same spreading factor straddles the user's window:
the tail of one symbol, then the head of the next. After dechirping both
pieces become tones, and their DFT leaks across bins whenever the delay
is not a whole number of chips.
"""

import numpy as np

from lora_ser import InterfererState, ModulationParams, pattern_closed_form, pattern_dft
from lora_ser.pattern import dominant_bins, r_max_terms

p = ModulationParams(7)
n = p.n

# a fractional offset: 40.5 chips into the user's symbol
state = InterfererState(1.0, 0.0, 40.5, 17, 90)
closed = pattern_closed_form(state, p).bins
direct = pattern_dft(state, p).bins
print("closed form vs FFT, worst bin error:", np.max(np.abs(closed - direct)))

# Parseval: the interferer carries N chips of unit power
print("sum |R_k|^2 / N^2 =", np.sum(np.abs(closed) ** 2) / n**2)

# the two segment peaks and what they hold
mag = np.abs(closed)
peaks = dominant_bins(40.5, 17, 90, n)
print("segment peak bins:", peaks, "magnitudes:", mag[list(peaks)].round(2))
print("largest bin overall:", int(np.argmax(mag)), round(float(mag.max()), 2))

# the triangle-bound estimate used by the fast approximation
print("r_max estimate:", float(r_max_terms(40.5, 17, 90, n)))

# a half-chip delay puts each tone between two bins, so the strongest bin
# is weaker than with a whole-chip delay
rng = np.random.default_rng(0)
s1, s2 = rng.integers(0, n, (2, 200))
base = rng.integers(0, n - 1, 200).astype(float)
for offset in (0.0, 0.25, 0.5):
    strongest = np.max(np.abs([pattern_closed_form(InterfererState(1.0, 0.0, t + offset, a, b), p).bins
                               for t, a, b in zip(base, s1, s2)]), axis=1)
    print(f"delay = whole chips + {offset:.2f}: mean strongest bin {strongest.mean():6.2f}")
