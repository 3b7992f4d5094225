"""Trial engine for the scheduled composite channel power.

Reproducibility contract: trial t draws from a dedicated stream seeded by
(master_seed, t), so the sample set depends only on the seed and never on
worker count, chunking, or completion order. Aggregation processes chunks in
trial order with exact per-chunk summation, making the reduction
order-independent to the last bit.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import channel, ris_opt

__all__ = [
    "TrialBatchResult",
    "trial_rng",
    "run_trials",
    "empirical_moments",
    "ks_statistic",
    "draw_x_samples",
]

_CHUNK_TRIALS = 1024
DEFAULT_SAMPLE_CAP = 1_000_000
_X_SAMPLE_CHUNK = 100_000  # fixed: part of the draw_x_samples sample-set identity


@dataclass(frozen=True)
class TrialBatchResult:
    """Samples and summary statistics of one Monte Carlo batch.

    alpha_samples holds the first min(n_trials, cap) scheduled powers in
    trial order; means/stderrs cover all n_trials regardless of the cap.
    """

    alpha_samples: np.ndarray
    capacity_mean: float
    capacity_stderr: float
    snr_mean: float
    snr_stderr: float
    n_trials: int
    master_seed: int


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    """Independent stream for one trial, derived from (master_seed, index)."""
    return np.random.default_rng(np.random.SeedSequence((master_seed, trial_index)))


def _alpha_chunk(args):
    cfg, stats, master_seed, lo, hi = args
    out = np.empty(hi - lo)
    for t in range(lo, hi):
        realization = channel.draw_realization(stats, cfg, trial_rng(master_seed, t))
        out[t - lo] = ris_opt.schedule_alpha(realization)
    return lo, out


def run_trials(
    cfg: channel.ScenarioConfig,
    n_trials: int,
    master_seed: int,
    n_workers: int = 1,
    sample_cap: int = DEFAULT_SAMPLE_CAP,
) -> TrialBatchResult:
    """Run n_trials independent channel draws with best-user scheduling.

    Each trial records alpha_opt; capacity/SNR means and standard errors are
    accumulated over all trials with compensated (exact per-chunk) summation.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    stats = channel.derive_link_stats(cfg)
    bounds = list(range(0, n_trials, _CHUNK_TRIALS)) + [n_trials]
    jobs = [
        (cfg, stats, int(master_seed), lo, hi)
        for lo, hi in zip(bounds[:-1], bounds[1:])
        if hi > lo
    ]

    if n_workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            chunks = sorted(pool.map(_alpha_chunk, jobs))
    else:
        chunks = [_alpha_chunk(job) for job in jobs]

    stored = []
    stored_n = 0
    cap_sums, cap_sq_sums = [], []
    snr_sums, snr_sq_sums = [], []
    for _, alphas in chunks:  # already in trial order
        if stored_n < sample_cap:
            take = min(sample_cap - stored_n, alphas.size)
            stored.append(alphas[:take])
            stored_n += take
        capacity = np.log2(1.0 + stats.p_tx * alphas)
        snr = stats.p_tx * alphas
        cap_sums.append(math.fsum(capacity))
        cap_sq_sums.append(math.fsum(capacity * capacity))
        snr_sums.append(math.fsum(snr))
        snr_sq_sums.append(math.fsum(snr * snr))

    n = float(n_trials)
    cap_mean = math.fsum(cap_sums) / n
    snr_mean = math.fsum(snr_sums) / n

    def stderr(sq_sums, mean):
        if n_trials < 2:
            return float("nan")
        var = max(0.0, (math.fsum(sq_sums) - n * mean * mean) / (n - 1.0))
        return math.sqrt(var / n)

    return TrialBatchResult(
        alpha_samples=np.concatenate(stored) if stored else np.empty(0),
        capacity_mean=cap_mean,
        capacity_stderr=stderr(cap_sq_sums, cap_mean),
        snr_mean=snr_mean,
        snr_stderr=stderr(snr_sq_sums, snr_mean),
        n_trials=n_trials,
        master_seed=int(master_seed),
    )


def empirical_moments(samples):
    """Sample estimates (mean of x, mean of x^2) of the first two moments."""
    samples = np.asarray(samples, dtype=float)
    if samples.size < 2:
        raise ValueError("need at least 2 samples")
    return float(np.mean(samples)), float(np.mean(samples * samples))


def ks_statistic(samples, cdf):
    """One-sample Kolmogorov-Smirnov sup-distance against a reference cdf."""
    samples = np.sort(np.asarray(samples, dtype=float))
    n = samples.size
    if n < 1:
        raise ValueError("need at least 1 sample")
    ref = np.asarray(cdf(samples), dtype=float)
    grid = np.arange(1, n + 1) / n
    return float(max(np.max(grid - ref), np.max(ref - (grid - 1.0 / n))))


def draw_x_samples(sigma_h, sigma_f, sigma_g, Q, n, master_seed):
    """Vectorized single-user composite-power samples
    X = (|h| + sigma_g*sqrt(Q)*||f||)^2 for moment and distribution checks.

    Drawn in fixed-size chunks with per-chunk streams (master_seed, chunk),
    so the sample set is reproducible and independent of how many chunks run.
    """
    Q = int(Q)
    out = np.empty(n)
    done = 0
    chunk_index = 0
    while done < n:
        m = min(_X_SAMPLE_CHUNK, n - done)
        rng = np.random.default_rng(np.random.SeedSequence((int(master_seed), chunk_index)))
        h = (rng.standard_normal(m) + 1j * rng.standard_normal(m)) * (sigma_h / math.sqrt(2.0))
        f_parts = rng.standard_normal((m, 2 * Q)) * (sigma_f / math.sqrt(2.0))
        f_norm = np.sqrt(np.sum(f_parts * f_parts, axis=1))
        z = np.abs(h) + sigma_g * math.sqrt(Q) * f_norm
        out[done : done + m] = z * z
        done += m
        chunk_index += 1
    return out
