"""LoRa chirp-spread-spectrum symbol error rate under AWGN and same-SF interference."""

from .channel import ChannelState, InterfererState, apply_channel, draw_collision_geometry, synthesize_interferer
from .css_phy import ModulationParams, dechirp, decide, demod_spectrum, demodulate, modulate, reference_upchirp
from .curves import horizontal_gap, snr_at_ser
from .monte_carlo import SerEstimate, TrialConfig, estimate_ser, run_trial, sweep
from .pattern import k_max_estimate, pattern_closed_form, pattern_dft, r_max_approx
from .ser import (
    SerPoint,
    SerQuery,
    TractabilityError,
    ser_awgn_approx,
    ser_awgn_exact,
    ser_combined,
    ser_full,
    ser_interference_approx,
)

__version__ = "0.1.0"
