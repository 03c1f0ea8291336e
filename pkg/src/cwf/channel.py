"""Shared link-level primitives: SINR ladders, capacity, dispersion and
per-symbol information density increments.

All information quantities are in nats.  Payload sizes given in bits are
converted at the boundary via kappa = K * ln(2).
"""

from __future__ import annotations

import enum
import math

import numpy as np

LN2 = math.log(2.0)


class Field(enum.Enum):
    """Signalling field of a link.

    REAL_AWGN carries 0.5*ln(1+snr) nats per symbol, COMPLEX_FADING carries
    ln(1+snr) nats per symbol (two independent real dimensions).
    """

    REAL_AWGN = "real_awgn"
    COMPLEX_FADING = "complex_fading"


def sinr_awgn(power: float, active_users: int) -> float:
    """SINR of one user when `active_users` equal-power users share the band.

    All interferers transmit i.i.d. Gaussian codewords at `power`, so the
    interference-plus-noise is Gaussian with variance 1 + (s-1)*power.
    """
    if not power > 0.0 or not math.isfinite(power):
        raise ValueError(f"power must be positive and finite, got {power}")
    if active_users < 1:
        raise ValueError(f"active_users must be >= 1, got {active_users}")
    return power / (1.0 + (active_users - 1) * power)


def sinr_ladder(power: float, s_max: int) -> np.ndarray:
    """SINR values indexed by active-user count s = 1..s_max (descending)."""
    return np.array([sinr_awgn(power, s) for s in range(1, s_max + 1)])


def sinr_fading(power: float, gains, active_from: int, j: int) -> float:
    """SINR of user `j` when users `active_from..S` are still transmitting.

    User indices are 1-based and follow the decoding order: users
    1..active_from-1 have already terminated.  `gains` holds the squared
    fading magnitudes |h|^2 of users 1..S.
    """
    gains = np.asarray(gains, dtype=float)
    s_total = gains.shape[0]
    if np.any(gains < 0.0):
        raise ValueError("gains must be non-negative")
    if not (1 <= active_from <= s_total):
        raise ValueError(f"active_from {active_from} outside 1..{s_total}")
    if not (active_from <= j <= s_total):
        raise ValueError(f"user {j} is not active (active set {active_from}..{s_total})")
    if not power > 0.0:
        raise ValueError(f"power must be positive, got {power}")
    others = [power * gains[t - 1] for t in range(active_from, s_total + 1) if t != j]
    return power * gains[j - 1] / (1.0 + math.fsum(others))


def capacity(snr, field: Field = Field.REAL_AWGN):
    """Gaussian channel capacity in nats per symbol at the given SINR."""
    snr = np.asarray(snr, dtype=float)
    if np.any(snr < 0.0):
        raise ValueError("snr must be non-negative")
    c = np.log1p(snr)
    if field is Field.REAL_AWGN:
        c = 0.5 * c
    return c if c.ndim else float(c)


def dispersion(snr):
    """Real-AWGN channel dispersion snr*(snr+2) / (2*(snr+1)^2), nats^2.

    Tends to 1/2 as snr grows; the variance coefficient of the normal
    approximation to the maximal code size.
    """
    snr = np.asarray(snr, dtype=float)
    if np.any(snr < 0.0):
        raise ValueError("snr must be non-negative")
    v = snr * (snr + 2.0) / (2.0 * (snr + 1.0) ** 2)
    return v if v.ndim else float(v)


def info_density_increment(x, y, power: float, noise_var: float):
    """Per-symbol information density log dP(y|x)/dP(y) for a Gaussian link.

    Input x ~ N(0, power), output y = x + w with w ~ N(0, noise_var):

        0.5*ln((power+noise_var)/noise_var)
          + y^2 / (2*(power+noise_var)) - (y-x)^2 / (2*noise_var)

    Accepts scalars or arrays (broadcast).  Its expectation over the channel
    equals capacity(power/noise_var, REAL_AWGN).
    """
    if not noise_var > 0.0:
        raise ValueError(f"noise_var must be positive, got {noise_var}")
    if not power > 0.0:
        raise ValueError(f"power must be positive, got {power}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    tot = power + noise_var
    out = 0.5 * math.log(tot / noise_var) + y * y / (2.0 * tot) - (y - x) ** 2 / (2.0 * noise_var)
    return out if out.ndim else float(out)
