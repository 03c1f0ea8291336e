"""Stochastic oracles: coupled information-density random walks with
dynamic interference cancellation, the queued variant, and the empirical
error-rate check of the random-coding union bound.

Protocol shared by the walk simulators: every active user accumulates one
information-density increment per symbol, drawn at the SINR implied by the
current active set.  A user whose running sum crosses its threshold stops
transmitting from the next symbol on, which raises everyone else's SINR.
Only the true-codeword walk is tracked here; competing-codeword crossings
are a separate, rarer event measured by `simulate_error_probability`.

Reproducibility: trial i of a run seeded with s draws from a dedicated
Philox stream keyed (s, i), so results do not depend on execution order or
batching.  Identical (scenario, plan) pairs produce bit-identical outcomes.

Capped trials are never dropped silently: they enter the means at the cap
value (a lower bound) and are counted in `cap_hits`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import lengths as _lengths
from .channel import info_density_increment
from .lengths import AwgnScenario, QueueScenario, message_threshold

_MASK64 = (1 << 64) - 1

#: default per-trial symbol cap, as a multiple of the predicted mean length
CAP_FACTOR = 50.0

#: chunk ceiling keeps single draws bounded in memory
_MAX_CHUNK = 1 << 17


def trial_stream(seed: int, index: int) -> np.random.Generator:
    """Independent counter-based stream for one trial of one experiment."""
    key = np.array([seed & _MASK64, index & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class TrialPlan:
    """How many trials to run, under which seed, with which symbol cap.

    max_symbols=None lets each simulator cap trials at CAP_FACTOR times its
    own analytic prediction; cap hits are reported, never silently dropped.
    """

    trials: int
    seed: int
    max_symbols: int | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.max_symbols is not None and self.max_symbols < 1:
            raise ValueError(f"max_symbols must be >= 1, got {self.max_symbols}")


@dataclass(frozen=True)
class StoppingOutcome:
    """Per-user sample means of the stopping times, in symbols."""

    mean: np.ndarray
    se: np.ndarray
    cap_hits: np.ndarray
    trials: int

    @property
    def cap_flagged(self) -> bool:
        """True when more than 1% of trials hit the symbol cap for any user."""
        return bool((self.cap_hits > 0.01 * self.trials).any())


@dataclass(frozen=True)
class ErrorRateEstimate:
    """Empirical decoding error rate with a binomial standard error."""

    rate: float
    se: float
    errors: int
    trials: int
    cap_hits: int

    @property
    def upper95(self) -> float:
        return self.rate + 1.96 * self.se


@dataclass(frozen=True)
class MomentEstimate:
    """Plain sample means with standard errors (order-statistics helper)."""

    mean: np.ndarray
    se: np.ndarray
    trials: int


def _draw_increments(rng, snr: float, count: int, dims: int) -> np.ndarray:
    """Information-density increments for `count` channel symbols.

    Each symbol spends `dims` real dimensions (2 for a complex link); the
    per-dimension increments share the symbol SINR and are summed.  The
    (power, noise) pair is normalized to (snr, 1), which leaves the
    increment distribution unchanged.
    """
    z = rng.standard_normal((2, dims * count))
    x = math.sqrt(snr) * z[0]
    inc = info_density_increment(x, x + z[1], snr, 1.0)
    if dims == 1:
        return inc
    return inc.reshape(count, dims).sum(axis=1)


def _mean_rate(snr: float, dims: int) -> float:
    return dims * 0.5 * math.log1p(snr)


def _cancellation_trial(rng, thresholds, snr_for, dims, max_symbols):
    """One trial of the coupled walk; returns per-user stop times (or cap).

    `snr_for(active_mask)` yields each user's SINR under the current active
    set.  The walk advances in chunks; the earliest in-chunk crossing ends
    the chunk because it changes the interference felt by everyone else, so
    later draws in that chunk are discarded and redrawn at the new SINR.
    """
    s_total = len(thresholds)
    acc = np.zeros(s_total)
    active = np.ones(s_total, dtype=bool)
    stop = np.full(s_total, max_symbols, dtype=np.int64)
    capped = np.zeros(s_total, dtype=bool)
    t = 0
    while active.any() and t < max_symbols:
        snr = snr_for(active)
        users = np.flatnonzero(active)
        need = min(
            (thresholds[u] - acc[u]) / _mean_rate(snr[u], dims) for u in users
        )
        chunk = int(min(max(16.0, 1.25 * need + 8.0), float(max_symbols - t), _MAX_CHUNK))
        cums = {}
        first = None
        for u in users:
            cum = acc[u] + np.cumsum(_draw_increments(rng, snr[u], chunk, dims))
            cums[u] = cum
            hit = cum >= thresholds[u]
            if hit.any():
                j = int(np.argmax(hit))
                if first is None or j < first:
                    first = j
        if first is None:
            for u in users:
                acc[u] = cums[u][-1]
            t += chunk
        else:
            for u in users:
                acc[u] = cums[u][first]
                if acc[u] >= thresholds[u]:
                    stop[u] = t + first + 1
                    active[u] = False
            t += first + 1
    capped[active] = True
    return stop, capped


def _aggregate(stops: np.ndarray, capped: np.ndarray) -> StoppingOutcome:
    trials = stops.shape[0]
    mean = stops.mean(axis=0)
    if trials > 1:
        se = stops.std(axis=0, ddof=1) / math.sqrt(trials)
    else:
        se = np.zeros_like(mean)
    return StoppingOutcome(mean=mean, se=se, cap_hits=capped.sum(axis=0), trials=trials)


def simulate_awgn_multiuser(sc: AwgnScenario, plan: TrialPlan, *,
                            interference_cancellation: bool = True) -> StoppingOutcome:
    """Coupled stopping times of S equal-power AWGN users.

    Every user holds the decoding threshold of its own payload; crossing
    deactivates it from the next symbol on.  No (1-epsilon) idling is
    applied, so means compare against the epsilon-free analytic lengths.
    With interference_cancellation=False the interference stays at the
    full-S level throughout (control experiment); own stopping times are
    still recorded.
    """
    s_total = sc.s_count
    thresholds = np.array([message_threshold(k) for k in sc.payload_bits])
    p = sc.power

    def snr_for(active):
        count = s_total if not interference_cancellation else int(active.sum())
        value = p / (1.0 + (count - 1) * p)
        return np.full(s_total, value)

    base = AwgnScenario(sc.payload_bits, sc.power, 0.0)
    predicted = _lengths.awgn_vlsf_lengths(base)[-1]
    if not interference_cancellation:
        predicted = thresholds[-1] / _mean_rate(p / (1.0 + (s_total - 1) * p), 1)
    cap = plan.max_symbols or int(CAP_FACTOR * predicted)

    stops = np.empty((plan.trials, s_total), dtype=np.int64)
    capped = np.empty((plan.trials, s_total), dtype=bool)
    for i in range(plan.trials):
        rng = trial_stream(plan.seed, i)
        stops[i], capped[i] = _cancellation_trial(rng, thresholds, snr_for, 1, cap)
    return _aggregate(stops, capped)


def _fading_snr_for(gains: np.ndarray, power: float):
    pg = power * gains

    def snr_for(active):
        total = pg[active].sum()
        out = np.zeros(len(gains))
        out[active] = pg[active] / (1.0 + (total - pg[active]))
        return out

    return snr_for


def simulate_block_fading(gains, payload_bits: float, power: float,
                          plan: TrialPlan) -> StoppingOutcome:
    """Stopping times for fixed fading gains and a common payload.

    Complex links: each symbol contributes two real-dimension increments,
    and crossings are checked once per complex symbol.
    """
    gains = np.asarray(gains, dtype=float)
    if np.any(gains <= 0.0):
        raise ValueError("all gains must be positive")
    s_total = gains.shape[0]
    gamma = message_threshold(payload_bits)
    thresholds = np.full(s_total, gamma)
    snr_for = _fading_snr_for(gains, power)

    sorted_gains = np.sort(gains)[::-1]
    coeffs = _lengths.fading_vlsf_coeffs(sorted_gains, power)
    cap = plan.max_symbols or int(CAP_FACTOR * coeffs.max() * gamma)

    stops = np.empty((plan.trials, s_total), dtype=np.int64)
    capped = np.empty((plan.trials, s_total), dtype=bool)
    for i in range(plan.trials):
        rng = trial_stream(plan.seed, i)
        stops[i], capped[i] = _cancellation_trial(rng, thresholds, snr_for, 2, cap)
    return _aggregate(stops, capped)


def simulate_rayleigh_block_fading(s_count: int, payload_bits: float, power: float,
                                   plan: TrialPlan) -> StoppingOutcome:
    """Block-fading walk with fresh sorted Rayleigh gains drawn per trial.

    Per-user means are reported in decoding order (largest gain first), so
    entry j averages the stopping time of the j-th best channel.
    """
    if s_count < 1:
        raise ValueError(f"s_count must be >= 1, got {s_count}")
    gamma = message_threshold(payload_bits)
    thresholds = np.full(s_count, gamma)
    typical = _lengths.fading_vlsf_coeffs(_lengths.rayleigh_order_means(s_count), power)
    # random draws can be much slower than the typical-gain prediction
    cap = plan.max_symbols or int(10.0 * CAP_FACTOR * typical.max() * gamma)

    stops = np.empty((plan.trials, s_count), dtype=np.int64)
    capped = np.empty((plan.trials, s_count), dtype=bool)
    for i in range(plan.trials):
        rng = trial_stream(plan.seed, i)
        gains = np.sort(rng.standard_exponential(s_count))[::-1]
        snr_for = _fading_snr_for(gains, power)
        stops[i], capped[i] = _cancellation_trial(rng, thresholds, snr_for, 2, cap)
    return _aggregate(stops, capped)


def simulate_queue(qs: QueueScenario, plan: TrialPlan) -> StoppingOutcome:
    """Tagged-message completion times under periodic packet arrivals.

    Worst-case alignment: everyone starts at the beginning of an interval.
    Users that fit inside one interval restart a fresh packet at every
    boundary; congested users stay busy continuously, starting the next
    queued packet the moment one finishes.  The recorded time per user is
    the completion of its first (tagged) message.
    """
    sc = qs.base
    s_total = sc.s_count
    p = sc.power
    thresholds = np.array([message_threshold(k) for k in sc.payload_bits])
    breakdown = _lengths.queue_vlsf_lengths(QueueScenario(AwgnScenario(sc.payload_bits, p, 0.0), qs.t_sub))
    r = breakdown.r
    congested = np.arange(s_total) >= r  # users r+1..S carry accumulation
    cap = plan.max_symbols or int(CAP_FACTOR * max(breakdown.lengths.max(), qs.t_sub))

    stops = np.empty((plan.trials, s_total), dtype=np.int64)
    capped = np.empty((plan.trials, s_total), dtype=bool)
    for i in range(plan.trials):
        rng = trial_stream(plan.seed, i)
        stops[i], capped[i] = _queue_trial(rng, thresholds, congested, p, qs.t_sub, cap)
    return _aggregate(stops, capped)


def _queue_trial(rng, thresholds, congested, power, t_sub, max_symbols):
    """One queued trial.  Events: interval boundaries (light users restart),
    light-user crossings (deactivate until the boundary) and congested-user
    crossings (reset accumulation, stay active)."""
    s_total = len(thresholds)
    acc = np.zeros(s_total)
    active = np.ones(s_total, dtype=bool)
    tagged = np.full(s_total, max_symbols, dtype=np.int64)
    done = np.zeros(s_total, dtype=bool)
    t = 0
    interval = 1

    def boundary() -> int:
        return int(round(interval * t_sub))

    while t < max_symbols and not done.all():
        while boundary() <= t:  # guard against sub-symbol intervals
            interval += 1
        count = int(active.sum())
        snr = power / (1.0 + (count - 1) * power)
        rate = _mean_rate(snr, 1)
        users = np.flatnonzero(active)
        need = min((thresholds[u] - acc[u]) / rate for u in users)
        chunk = int(min(max(16.0, 1.25 * need + 8.0), float(boundary() - t),
                        float(max_symbols - t), _MAX_CHUNK))
        cums = {}
        first = None
        for u in users:
            cum = acc[u] + np.cumsum(_draw_increments(rng, snr, chunk, 1))
            cums[u] = cum
            hit = cum >= thresholds[u]
            if hit.any():
                j = int(np.argmax(hit))
                if first is None or j < first:
                    first = j
        if first is None:
            for u in users:
                acc[u] = cums[u][-1]
            t += chunk
        else:
            for u in users:
                acc[u] = cums[u][first]
            t += first + 1
            for u in users:
                if acc[u] >= thresholds[u]:
                    if not done[u]:
                        tagged[u] = t
                        done[u] = True
                    if congested[u]:
                        acc[u] = 0.0  # next queued packet starts immediately
                    else:
                        active[u] = False  # silent until the next arrival
        if t == boundary():
            acc[~congested] = 0.0
            active[~congested] = True
            interval += 1
    capped = ~done
    return tagged, capped


def simulate_error_probability(payload_bits: float, snr: float, plan: TrialPlan,
                               *, threshold: float | None = None) -> ErrorRateEstimate:
    """Empirical error rate of threshold decoding against M-1 false codewords.

    Per trial, the true walk runs until its crossing; every competing
    codeword then replays the same received symbols with its own independent
    inputs, and an error is scored when any competitor crosses no later than
    the true walk.  Payloads are capped at 12 bits so all 2^K walks fit.
    Payloads below 2 bits need an explicit `threshold`.
    """
    if payload_bits < 0 or payload_bits > 12:
        raise ValueError("payload_bits must lie in [0, 12] to track all codewords")
    if not snr > 0.0:
        raise ValueError(f"snr must be positive, got {snr}")
    m_codewords = int(round(2.0**payload_bits))
    if threshold is None:
        threshold = message_threshold(payload_bits)
    rate = _mean_rate(snr, 1)
    cap = plan.max_symbols or int(CAP_FACTOR * max(threshold, rate) / rate)
    sqrt_snr = math.sqrt(snr)

    errors = 0
    cap_hits = 0
    for i in range(plan.trials):
        rng = trial_stream(plan.seed, i)
        received = np.empty(0)
        acc = 0.0
        tau = None
        while tau is None and received.size < cap:
            chunk = min(int(2.0 * threshold / rate) + 32, cap - received.size)
            z = rng.standard_normal((2, chunk))
            y = sqrt_snr * z[0] + z[1]
            inc = info_density_increment(sqrt_snr * z[0], y, snr, 1.0)
            cum = acc + np.cumsum(inc)
            hit = cum >= threshold
            if hit.any():
                j = int(np.argmax(hit))
                received = np.concatenate([received, y[: j + 1]])
                tau = received.size
            else:
                acc = cum[-1]
                received = np.concatenate([received, y])
        if tau is None:
            cap_hits += 1  # undecided truth; competitors may still cross
        if m_codewords > 1 and received.size:
            false_x = sqrt_snr * rng.standard_normal((m_codewords - 1, received.size))
            false_inc = info_density_increment(false_x, received[None, :], snr, 1.0)
            if (np.cumsum(false_inc, axis=1) >= threshold).any():
                errors += 1
    rate_hat = errors / plan.trials
    se = math.sqrt(max(rate_hat * (1.0 - rate_hat), 0.0) / plan.trials)
    return ErrorRateEstimate(rate=rate_hat, se=se, errors=errors,
                             trials=plan.trials, cap_hits=cap_hits)


def sorted_exponential_means(s_count: int, plan: TrialPlan) -> MomentEstimate:
    """Empirical means of descending-sorted unit exponentials, chunked."""
    if s_count < 1:
        raise ValueError(f"s_count must be >= 1, got {s_count}")
    chunk_size = 1 << 16
    total = np.zeros(s_count)
    total_sq = np.zeros(s_count)
    done = 0
    index = 0
    while done < plan.trials:
        n = min(chunk_size, plan.trials - done)
        rng = trial_stream(plan.seed, index)
        draws = np.sort(rng.standard_exponential((n, s_count)), axis=1)[:, ::-1]
        total += draws.sum(axis=0)
        total_sq += (draws * draws).sum(axis=0)
        done += n
        index += 1
    mean = total / plan.trials
    var = np.maximum(total_sq - plan.trials * mean * mean, 0.0) / (plan.trials - 1)
    return MomentEstimate(mean=mean, se=np.sqrt(var / plan.trials), trials=plan.trials)
