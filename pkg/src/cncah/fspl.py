"""Free-space path loss: signal strength <-> distance.

    d [m] = 10 ** ((27.55 - 20 log10(f [MHz]) - s [dBm]) / 20)
"""
import math

import numpy as np

from .errors import NonPositive

FSPL_CONSTANT = 27.55


def _check_freq(freq):
    if not np.all(np.asarray(freq) > 0):
        raise NonPositive("frequency must be positive")


def fspl_distance(rssi, freq):
    """Distance in metres for a received signal strength (dBm) at ``freq`` MHz."""
    _check_freq(freq)
    exponent = (FSPL_CONSTANT - 20.0 * np.log10(freq) - np.asarray(rssi, dtype=float)) / 20.0
    out = 10.0 ** exponent
    return float(out) if np.ndim(out) == 0 else out


def fspl_rssi(d, freq):
    """Received signal strength (dBm) at distance ``d`` metres; inverse of :func:`fspl_distance`."""
    _check_freq(freq)
    d = np.asarray(d, dtype=float)
    if not np.all(d > 0):
        raise NonPositive("distance must be positive")
    out = FSPL_CONSTANT - 20.0 * np.log10(freq) - 20.0 * np.log10(d)
    return float(out) if np.ndim(out) == 0 else out


def doubling_loss_db():
    return 20.0 * math.log10(2.0)
