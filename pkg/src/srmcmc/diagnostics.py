"""Convergence diagnostics over completed transcripts.

Plain (non-split) Gelman-Rubin potential scale reduction factor, scalar
summary extraction, empirical marginals, and the iterations-to-threshold
protocol: several parallel chains, convergence declared once the PSRF of the
monitored statistic drops below a threshold (default 1.05).
"""
from __future__ import annotations

import math

import numpy as np

DEGENERATE_VAR = 1e-300
DEFAULT_THRESHOLD = 1.05
DEFAULT_CHAINS = 10

STATISTICS = ("cardinality", "log_weight")  # plus ("indicator", i)


def psrf(series) -> float:
    """Gelman-Rubin R-hat for an (m chains x n values) array.

    B = n * var of chain means, W = mean of per-chain variances,
    Vhat = (n-1)/n W + B/n, R-hat = sqrt(Vhat / W). Degenerate cases: zero
    within-chain variance with disagreeing chains is +inf (stuck chains must
    not read as converged); all-constant identical chains give 1.0.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 2:
        raise ValueError("series must be an (m, n) array")
    m, n = x.shape
    if m < 2 or n < 2:
        raise ValueError("need at least 2 chains and 2 values per chain")
    chain_means = x.mean(axis=1)
    B = n * chain_means.var(ddof=1)
    W = x.var(axis=1, ddof=1).mean()
    if W < DEGENERATE_VAR:
        return 1.0 if B < DEGENERATE_VAR else math.inf
    vhat = (n - 1) / n * W + B / n
    return math.sqrt(vhat / W)


def extract_summary(transcripts, statistic):
    """Aligned (m, n) array of a scalar statistic across transcripts.

    ``statistic`` is "cardinality", "log_weight", or ("indicator", i).
    """
    if len(transcripts) < 2:
        raise ValueError("need at least 2 transcripts")
    lengths = {len(t) for t in transcripts}
    if len(lengths) != 1:
        raise ValueError(f"transcripts have unequal lengths: {sorted(lengths)}")
    rows = []
    for t in transcripts:
        if statistic == "cardinality":
            rows.append(t.cardinalities())
        elif statistic == "log_weight":
            rows.append(np.asarray(t.log_weights, dtype=float))
        elif isinstance(statistic, tuple) and statistic[0] == "indicator":
            rows.append(t.indicator(statistic[1]))
        else:
            raise ValueError(f"unknown statistic {statistic!r}")
    return np.vstack(rows)


def psrf_curve(series, stride=None):
    """(prefix length, R-hat) pairs at stride multiples over growing prefixes."""
    x = np.asarray(series, dtype=float)
    n = x.shape[1]
    if stride is None:
        stride = max(1, n // 200)
    points = []
    for stop in range(stride, n + 1, stride):
        if stop < 2:
            continue
        points.append((stop, psrf(x[:, :stop])))
    return points


def iterations_to_threshold(transcripts, statistic, threshold=DEFAULT_THRESHOLD,
                            window_stride=None):
    """Smallest retained-step count n with PSRF over the first n values <= threshold.

    Evaluated at stride multiples; None if the threshold is never reached.
    """
    if threshold <= 1.0:
        raise ValueError("threshold must exceed 1")
    series = extract_summary(transcripts, statistic)
    for stop, r in psrf_curve(series, stride=window_stride):
        if r <= threshold:
            return stop
    return None


def empirical_marginals(transcripts):
    """Pooled per-element inclusion frequencies with naive standard errors.

    The standard errors assume independent draws and are not corrected for
    autocorrelation.
    """
    if not transcripts:
        raise ValueError("need at least one transcript")
    n = transcripts[0].n
    counts = np.zeros(n)
    total = 0
    for t in transcripts:
        total += len(t)
        for state in t.states:
            for i in state:
                counts[i] += 1
    est = counts / total
    se = np.sqrt(est * (1.0 - est) / total)
    return est, se
