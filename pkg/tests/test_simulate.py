import math

import numpy as np
import pytest

from cwf.channel import Field, capacity, info_density_increment, sinr_awgn
from cwf.lengths import (
    AwgnScenario,
    QueueScenario,
    awgn_vlsf_lengths,
    fading_vlsf_coeffs,
    message_threshold,
    queue_vlsf_lengths,
)
from cwf.simulate import (
    TrialPlan,
    simulate_awgn_multiuser,
    simulate_block_fading,
    simulate_error_probability,
    simulate_queue,
    simulate_rayleigh_block_fading,
    sorted_exponential_means,
    trial_stream,
)

SC2 = AwgnScenario((100.0, 300.0), 1.0, 0.0)


# ------------------------------------------------------------- reproducibility

def test_awgn_simulation_bit_identical_reruns():
    a = simulate_awgn_multiuser(SC2, TrialPlan(250, 314))
    b = simulate_awgn_multiuser(SC2, TrialPlan(250, 314))
    assert np.array_equal(a.mean, b.mean)
    assert np.array_equal(a.se, b.se)
    assert np.array_equal(a.cap_hits, b.cap_hits)


def test_awgn_simulation_seed_changes_result():
    a = simulate_awgn_multiuser(SC2, TrialPlan(250, 314))
    b = simulate_awgn_multiuser(SC2, TrialPlan(250, 315))
    assert not np.array_equal(a.mean, b.mean)


def test_trial_streams_are_schedule_independent():
    # the stream of trial i depends only on (seed, i), not on other trials
    first = trial_stream(99, 3).standard_normal(8)
    again = trial_stream(99, 3).standard_normal(8)
    other = trial_stream(99, 4).standard_normal(8)
    assert np.array_equal(first, again)
    assert not np.array_equal(first, other)


def test_queue_reduces_to_plain_walk_without_congestion():
    # huge interval: identical draws, identical stopping times, bit for bit
    plan = TrialPlan(150, 2024, max_symbols=60_000)
    plain = simulate_awgn_multiuser(SC2, plan)
    queued = simulate_queue(QueueScenario(SC2, 1e8), plan)
    assert np.array_equal(plain.mean, queued.mean)
    assert np.array_equal(plain.se, queued.se)


# ------------------------------------------------------------ Wald consistency

def test_wald_identity_and_single_user_mean():
    # independent fixed-horizon oracle walk, built directly on the increment
    payload, snr, trials, horizon = 100.0, 1.0, 4000, 500
    gamma = message_threshold(payload)
    cap = capacity(snr, Field.REAL_AWGN)
    rng = np.random.default_rng(8)
    x = math.sqrt(snr) * rng.standard_normal((trials, horizon))
    y = x + rng.standard_normal((trials, horizon))
    cum = np.cumsum(info_density_increment(x, y, snr, 1.0), axis=1)
    crossed = cum >= gamma
    assert crossed[:, -1].all(), "horizon too short for the oracle walk"
    idx = np.argmax(crossed, axis=1)
    stop_info = cum[np.arange(trials), idx]
    tau = idx + 1.0

    # Wald: E[accumulated at stop] == capacity * E[stop]
    diff = stop_info - cap * tau
    assert abs(diff.mean()) <= 4.0 * diff.std(ddof=1) / math.sqrt(trials)

    # the packaged simulator agrees with the oracle walk
    sc = AwgnScenario((payload,), snr, 0.0)
    sim = simulate_awgn_multiuser(sc, TrialPlan(trials, 9))
    se = math.hypot(sim.se[0], tau.std(ddof=1) / math.sqrt(trials))
    assert abs(sim.mean[0] - tau.mean()) <= 5.0 * se
    # and with the analytic prediction at the 5% level
    assert sim.mean[0] == pytest.approx(awgn_vlsf_lengths(sc)[0], rel=0.05)


# ------------------------------------------------- interference cancellation

def test_cancellation_strictly_shortens_second_user():
    plan = TrialPlan(1500, 77)
    with_ic = simulate_awgn_multiuser(SC2, plan)
    control = simulate_awgn_multiuser(SC2, plan, interference_cancellation=False)
    gap = control.mean[1] - with_ic.mean[1]
    se = math.hypot(with_ic.se[1], control.se[1])
    assert gap >= 3.0 * se
    # control run sits near the full-interference closed form
    full = message_threshold(300.0) / capacity(sinr_awgn(1.0, 2), Field.REAL_AWGN)
    assert control.mean[1] == pytest.approx(full, rel=0.05)


def test_stopping_times_ordered_by_payload():
    sc = AwgnScenario((50.0, 120.0, 260.0), 1.0, 0.0)
    out = simulate_awgn_multiuser(sc, TrialPlan(400, 11))
    assert out.mean[0] <= out.mean[1] <= out.mean[2]
    assert out.cap_hits.sum() == 0
    assert np.all(out.mean >= 1.0)


def test_cap_hits_are_counted_not_hidden():
    out = simulate_awgn_multiuser(SC2, TrialPlan(60, 5, max_symbols=50))
    assert out.cap_hits[1] == 60  # nobody finishes 300 bits in 50 symbols
    assert out.cap_flagged
    assert out.mean[1] == pytest.approx(50.0)


# ---------------------------------------------------------------- block fading

def test_block_fading_matches_coeff_prediction():
    gains = np.array([1.5, 0.5])
    payload, power = 300.0, 1.0
    expected = fading_vlsf_coeffs(gains, power) * message_threshold(payload)
    out = simulate_block_fading(gains, payload, power, TrialPlan(1500, 21))
    assert out.mean == pytest.approx(expected, rel=0.05)


def test_block_fading_equal_gains_symmetric():
    out = simulate_block_fading([1.0, 1.0], 300.0, 1.0, TrialPlan(1500, 22))
    se = math.hypot(out.se[0], out.se[1])
    assert abs(out.mean[0] - out.mean[1]) <= 4.0 * se
    shared = fading_vlsf_coeffs([1.0, 1.0], 1.0)[0] * message_threshold(300.0)
    assert out.mean == pytest.approx([shared, shared], rel=0.05)


def test_block_fading_single_user_complex_rate():
    out = simulate_block_fading([1.0], 200.0, 1.0, TrialPlan(1200, 23))
    want = message_threshold(200.0) / math.log(2.0)  # ln(1+p) per complex symbol
    assert out.mean[0] == pytest.approx(want, rel=0.05)


def test_rayleigh_block_fading_ordering_and_reproducibility():
    a = simulate_rayleigh_block_fading(2, 200.0, 1.0, TrialPlan(300, 31))
    b = simulate_rayleigh_block_fading(2, 200.0, 1.0, TrialPlan(300, 31))
    assert np.array_equal(a.mean, b.mean)
    assert a.mean[0] < a.mean[1]  # best channel decodes first


# --------------------------------------------------------------------- queue

def test_queue_simulation_respects_analytic_bound():
    sc = AwgnScenario((300.0, 1000.0), 1.0, 0.0)
    qs = QueueScenario(sc, 1700.0)
    bound = queue_vlsf_lengths(qs).lengths
    out = simulate_queue(qs, TrialPlan(1200, 41))
    assert np.all(out.mean <= bound * 1.05)
    assert out.mean[1] == pytest.approx(bound[1], rel=0.05)


def test_queue_divergence_flag_on_starved_cap():
    sc = AwgnScenario((300.0, 1000.0), 1.0, 0.0)
    out = simulate_queue(QueueScenario(sc, 40.0), TrialPlan(40, 43, max_symbols=300))
    assert out.cap_flagged
    assert out.cap_hits[1] == 40


# --------------------------------------------------------------- error rates

def test_error_rate_below_union_bound():
    est = simulate_error_probability(8.0, 1.0, TrialPlan(3000, 51))
    bound = 1.0 / (8.0 * math.log(2.0))
    assert est.upper95 <= bound
    assert est.cap_hits == 0
    assert est.errors > 0  # the event is not vanishingly rare at K=8


def test_error_rate_zero_without_competitors():
    est = simulate_error_probability(0.0, 1.0, TrialPlan(200, 52), threshold=5.0)
    assert est.rate == 0.0


def test_error_rate_vanishes_at_large_threshold():
    est = simulate_error_probability(8.0, 1.0, TrialPlan(1500, 53), threshold=20.0)
    assert est.rate <= 2.0 / 1500.0


def test_error_rate_decreases_with_threshold():
    low = simulate_error_probability(8.0, 1.0, TrialPlan(2500, 54), threshold=5.0)
    high = simulate_error_probability(8.0, 1.0, TrialPlan(2500, 54), threshold=9.0)
    assert high.rate < low.rate


# ----------------------------------------------------------- order statistics

def test_sorted_exponential_means_against_harmonic_sums():
    est = sorted_exponential_means(3, TrialPlan(150_000, 61))
    exact = np.array([11.0 / 6.0, 5.0 / 6.0, 1.0 / 3.0])
    assert np.all(np.abs(est.mean - exact) <= 4.0 * est.se)


def test_sorted_exponential_means_deterministic_partial_chunk():
    a = sorted_exponential_means(2, TrialPlan(70_001, 62))
    b = sorted_exponential_means(2, TrialPlan(70_001, 62))
    assert np.array_equal(a.mean, b.mean)
