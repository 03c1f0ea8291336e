"""Figure-style parameter sweeps emitted as deterministic CSV.

Every output starts with '#'-prefixed metadata (tool version, config hash,
seed), then a fixed header, then one row per grid point in grid order.
Numbers are formatted with 9 significant digits, so re-running a config with
the same seed reproduces the file byte for byte.
"""

from __future__ import annotations

import io
import math
import sys
from pathlib import Path

import numpy as np
from scipy.special import ndtri

from . import __version__
from .channel import LN2, Field, capacity, dispersion, sinr_awgn, sinr_fading
from .config import ExperimentConfig, db_to_linear, point_seed
from .lengths import (
    AwgnScenario,
    QueueScenario,
    _blocklength_real,
    awgn_vlsf_lengths,
    fading_vlsf_coeffs,
    fixed_length_blocklength,
    message_threshold,
    queue_vlsf_lengths,
    rayleigh_order_means,
)
from .quadrature import QuadratureError
from .simulate import (
    TrialPlan,
    simulate_awgn_multiuser,
    simulate_queue,
    simulate_rayleigh_block_fading,
)
from .waterfill import FastFadingScenario, evaluate_thresholds, optimize_threshold


def format_value(v) -> str:
    """CSV cell formatting: 9 significant digits, empty for missing."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.9g}"
    return str(v)


def write_csv(path, metadata: dict, header: list[str], rows: list[list]) -> str:
    """Serialize and (optionally) write one sweep; returns the CSV text."""
    buf = io.StringIO()
    for key, value in metadata.items():
        buf.write(f"# {key}={value}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(format_value(v) for v in row) + "\n")
    text = buf.getvalue()
    if path is not None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(text.encode("utf-8"))
    return text


def _metadata(cfg: ExperimentConfig) -> dict:
    meta = {
        "cwf_version": __version__,
        "kind": cfg.kind,
        "config_hash": cfg.config_hash(),
        "snr_unit": "dB; linear power p = 10**(dB/10)",
    }
    if cfg.trials > 0:
        meta["seed"] = cfg.resolved_seed
        meta["trials"] = cfg.trials
    return meta


def _complex_blocklength(payload_bits: float, snr: float, epsilon: float) -> int:
    """Fixed-length baseline in complex symbols: one complex symbol carries
    two real dimensions, so solve the real normal approximation at 2n uses."""
    kappa = payload_bits * LN2
    c = capacity(snr, Field.REAL_AWGN)
    v = dispersion(snr)
    qinv = float(ndtri(1.0 - epsilon))
    n = math.ceil(_blocklength_real(kappa, c, v, qinv) / 2.0 - 1e-9)

    def ok(m):
        return kappa <= 2 * m * c - math.sqrt(2 * m * v) * qinv

    while not ok(n):
        n += 1
    while n > 1 and ok(n - 1):
        n -= 1
    return n


def run_thm1_sweep(cfg: ExperimentConfig, out=None):
    """Fixed-length baseline vs cancellation-aware lengths over an SNR grid."""
    s = len(cfg.payload_bits)
    header = ["snr_db", "power", "epsilon"]
    header += [f"payload_bits_{u}" for u in range(1, s + 1)]
    header += [f"vlsf_len_{u}" for u in range(1, s + 1)]
    header += [f"vlsf_raw_len_{u}" for u in range(1, s + 1)]
    header += ["fixed_n", "savings_ratio"]
    header += [f"sim_mean_{u}" for u in range(1, s + 1)]
    header += [f"sim_ci95_{u}" for u in range(1, s + 1)]
    header += ["trials", "point_seed"]

    rows = []
    for i, snr_db in enumerate(cfg.snr_db):
        p = db_to_linear(snr_db)
        sc = AwgnScenario(cfg.payload_bits, p, cfg.epsilon)
        ell = awgn_vlsf_lengths(sc)
        raw = awgn_vlsf_lengths(AwgnScenario(cfg.payload_bits, p, 0.0))
        fixed_n = fixed_length_blocklength(cfg.payload_bits[-1], sinr_awgn(p, s), cfg.epsilon)
        row = [snr_db, p, cfg.epsilon, *cfg.payload_bits, *ell, *raw,
               fixed_n, 1.0 - ell[-1] / fixed_n]
        if cfg.trials > 0:
            seed = point_seed(cfg.resolved_seed, i)
            outcome = simulate_awgn_multiuser(sc, TrialPlan(cfg.trials, seed))
            row += [*outcome.mean, *(1.96 * outcome.se), cfg.trials, seed]
        else:
            row += [None] * (2 * s) + [None, None]
        rows.append(row)
    return write_csv(out, _metadata(cfg), header, rows)


def run_queue_sweep(cfg: ExperimentConfig, out=None):
    """Queued lengths and savings across the packet-interval grid."""
    s = len(cfg.payload_bits)
    header = ["snr_db", "power", "t_sub", "epsilon", "r", "info_per_interval"]
    for u in range(1, s + 1):
        header += [f"full_intervals_{u}", f"leftover_nats_{u}",
                   f"leftover_stage_{u}", f"queue_len_{u}"]
    header += ["fixed_n", "savings_ratio"]
    header += [f"sim_mean_{u}" for u in range(1, s + 1)]
    header += [f"sim_ci95_{u}" for u in range(1, s + 1)]
    header += ["sim_diverged", "trials", "point_seed"]

    rows = []
    index = 0
    for snr_db in cfg.snr_db:
        p = db_to_linear(snr_db)
        sc = AwgnScenario(cfg.payload_bits, p, cfg.epsilon)
        fixed_n = fixed_length_blocklength(cfg.payload_bits[-1], sinr_awgn(p, s), cfg.epsilon)
        for t_sub in cfg.t_sub:
            qs = QueueScenario(sc, t_sub)
            br = queue_vlsf_lengths(qs)
            row = [snr_db, p, t_sub, cfg.epsilon, br.r, br.info_per_interval]
            for u in range(s):
                row += [br.full_intervals[u], br.leftover_nats[u],
                        br.leftover_stage[u], br.lengths[u]]
            row += [fixed_n, 1.0 - br.lengths[-1] / fixed_n]
            if cfg.trials > 0:
                seed = point_seed(cfg.resolved_seed, index)
                outcome = simulate_queue(qs, TrialPlan(cfg.trials, seed))
                row += [*outcome.mean, *(1.96 * outcome.se),
                        outcome.cap_flagged, cfg.trials, seed]
            else:
                row += [None] * (2 * s) + [None, None, None]
            rows.append(row)
            index += 1
    return write_csv(out, _metadata(cfg), header, rows)


def run_fading_sweep(cfg: ExperimentConfig, out=None):
    """Typical-gain fading lengths vs the fixed baseline over an SNR grid."""
    s = cfg.s_count
    payload = cfg.payload_bits[0]
    gains = rayleigh_order_means(s)
    header = ["snr_db", "power", "s_count", "payload_bits"]
    header += [f"coeff_a_{u}" for u in range(1, s + 1)]
    header += [f"typical_len_{u}" for u in range(1, s + 1)]
    header += ["fixed_n", "savings_ratio"]
    header += [f"sim_mean_{u}" for u in range(1, s + 1)]
    header += [f"sim_ci95_{u}" for u in range(1, s + 1)]
    header += ["trials", "point_seed"]

    gamma = message_threshold(payload)
    rows = []
    for i, snr_db in enumerate(cfg.snr_db):
        p = db_to_linear(snr_db)
        coeffs = fading_vlsf_coeffs(gains, p)
        typical = (1.0 - cfg.epsilon) * coeffs * gamma
        worst_snr = sinr_fading(p, gains, 1, s)  # weakest user, everyone active
        fixed_n = _complex_blocklength(payload, worst_snr, cfg.epsilon)
        row = [snr_db, p, s, payload, *coeffs, *typical,
               fixed_n, 1.0 - typical[-1] / fixed_n]
        if cfg.trials > 0:
            seed = point_seed(cfg.resolved_seed, i)
            outcome = simulate_rayleigh_block_fading(s, payload, p, TrialPlan(cfg.trials, seed))
            row += [*outcome.mean, *(1.96 * outcome.se), cfg.trials, seed]
        else:
            row += [None] * (2 * s) + [None, None]
        rows.append(row)
    return write_csv(out, _metadata(cfg), header, rows)


def run_waterfill_sweep(cfg: ExperimentConfig, out=None):
    """Threshold optimization per (power, user-count) grid point.

    A quadrature failure aborts only the affected row: its numeric cells stay
    empty, the status column carries the diagnostic, and the sweep continues.
    """
    header = ["snr_db", "power", "s_count", "gamma_single", "gamma_multi",
              "cl_single", "cl_multi", "mc_single_mean", "mc_single_ci95",
              "mc_multi_mean", "mc_multi_ci95", "trials", "point_seed", "status"]
    rows = []
    failures = 0
    index = 0
    for snr_db in cfg.snr_db:
        p = db_to_linear(snr_db)
        for s in cfg.s_counts:
            sc = FastFadingScenario(s_count=s, power=p)
            try:
                if cfg.trials > 0:
                    seed = point_seed(cfg.resolved_seed, index)
                    res = evaluate_thresholds(sc, cfg.trials, seed)
                    mc = [res.mc_capacity_single.mean, res.mc_capacity_single.ci95,
                          res.mc_capacity_multi.mean, res.mc_capacity_multi.ci95,
                          cfg.trials, seed]
                else:
                    res = optimize_threshold(sc)
                    mc = [None] * 6
                rows.append([snr_db, p, s, res.gamma_single, res.gamma_multi,
                             res.cl_at_single, res.cl_at_multi, *mc, "ok"])
            except QuadratureError as exc:
                failures += 1
                print(f"waterfill point (snr_db={snr_db}, S={s}) aborted: {exc}",
                      file=sys.stderr)
                rows.append([snr_db, p, s] + [None] * 10 + [f"error: {type(exc).__name__}"])
            index += 1
    text = write_csv(out, _metadata(cfg), header, rows)
    return text, failures
