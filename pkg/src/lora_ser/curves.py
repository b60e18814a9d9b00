"""Reading SNR values off SER curves."""

from __future__ import annotations

import numpy as np


def snr_at_ser(snr_db, ser, target: float) -> float:
    """SNR where a decreasing SER curve crosses ``target``.

    Interpolates linearly in ``log10(SER)`` between the two grid points that
    bracket the target; raises ``ValueError`` if the curve never crosses it.
    """
    snr_db = np.asarray(snr_db, dtype=float)
    ser = np.asarray(ser, dtype=float)
    if snr_db.shape != ser.shape or snr_db.ndim != 1 or len(snr_db) < 2:
        raise ValueError("need matching 1-D SNR and SER arrays with at least two points")
    if not 0 < target < 1:
        raise ValueError("target SER must lie in (0, 1)")
    order = np.argsort(snr_db)
    x = snr_db[order]
    y = np.log10(np.maximum(ser[order], 1e-300))
    t = np.log10(target)
    for i in range(len(x) - 1):
        if y[i] >= t >= y[i + 1] and y[i] != y[i + 1]:
            return float(x[i] + (y[i] - t) * (x[i + 1] - x[i]) / (y[i] - y[i + 1]))
    raise ValueError(f"curve does not cross SER {target:g}")


def horizontal_gap(snr_db_a, ser_a, snr_db_b, ser_b, target: float) -> float:
    """``snr_b - snr_a`` at SER ``target``; positive when curve ``b`` needs more SNR."""
    return snr_at_ser(snr_db_b, ser_b, target) - snr_at_ser(snr_db_a, ser_a, target)


def max_horizontal_gap(snr_db_a, ser_a, snr_db_b, ser_b, lo: float, hi: float, points: int = 41) -> float:
    """Largest absolute horizontal gap over log-spaced SER targets in ``[lo, hi]``."""
    targets = np.logspace(np.log10(lo), np.log10(hi), points)
    return max(abs(horizontal_gap(snr_db_a, ser_a, snr_db_b, ser_b, t)) for t in targets)


__all__ = ["horizontal_gap", "max_horizontal_gap", "snr_at_ser"]
