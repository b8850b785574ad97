"""Error bars for correlated Monte Carlo series: batch means and ESS."""

import math

import numpy as np


def batch_means(series, n_batches=None):
    """Mean, standard error and effective sample size of a correlated series.

    The series is split into batches of equal length (default ~sqrt(N)
    batches); the variance of the batch means estimates the variance of the
    overall mean including autocorrelation.  ESS is the i.i.d. sample count
    that would give the same standard error.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if n == 0:
        raise ValueError("empty series")
    mean = float(x.mean())
    if n < 8:
        se = float(x.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return mean, se, float(n)
    if n_batches is None:
        n_batches = max(8, int(math.sqrt(n)))
    blen = n // n_batches
    trimmed = x[: n_batches * blen].reshape(n_batches, blen)
    bmeans = trimmed.mean(axis=1)
    var_mean = float(bmeans.var(ddof=1) / n_batches)
    se = math.sqrt(var_mean)
    var_x = float(x.var(ddof=1))
    if var_mean > 0 and var_x > 0:
        ess = var_x / var_mean
    else:
        ess = float(n)
    return mean, se, ess


def integrated_autocorrelation_time(series, max_lag=None):
    """Initial-positive-sequence estimate of the integrated autocorrelation.

    Returns tau such that var(mean) ~ var(x) * tau / N; tau = 1 for an
    i.i.d. series.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < 4:
        return 1.0
    x = x - x.mean()
    var = float(np.dot(x, x) / n)
    if var == 0:
        return 1.0
    if max_lag is None:
        max_lag = min(n // 4, 2048)
    tau = 1.0
    for lag in range(1, max_lag):
        rho = float(np.dot(x[:-lag], x[lag:]) / ((n - lag) * var))
        if rho <= 0:
            break
        tau += 2.0 * rho
    return tau


def summarize(records, fields=None):
    """Per-field mean/SE/ESS over a list of measurement dicts."""
    if not records:
        return {}
    if fields is None:
        fields = [k for k, v in records[0].items() if isinstance(v, (int, float))]
    out = {}
    for f in fields:
        series = [r[f] for r in records]
        mean, se, ess = batch_means(series)
        out[f] = {"mean": mean, "se": se, "ess": ess}
    return out
