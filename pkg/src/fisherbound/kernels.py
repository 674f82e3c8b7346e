"""Hot Monte Carlo inner loops, with a numba path and a pure-numpy path.

The numba versions are compiled with ``@njit`` when numba imports and
``FISHERBOUND_DISABLE_NUMBA`` is unset (or ``0``). Otherwise the numpy
versions are bound to the public names. Both paths consume the same
pre-drawn random arrays, so they agree to floating-point summation order.

Each kernel is exposed three ways: ``<name>`` (the selected backend),
``<name>_numpy`` and ``<name>_loop`` (the loop body; compiled when numba is
active, plain Python otherwise).
"""

from __future__ import annotations

import math
import os

import numpy as np

DISABLE_ENV = "FISHERBOUND_DISABLE_NUMBA"

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

NUMBA_DISABLED = os.environ.get(DISABLE_ENV, "").strip() not in ("", "0")
USE_NUMBA = numba is not None and not NUMBA_DISABLED

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_LOG2 = math.log(2.0)


def _jit(func):
    if numba is None or NUMBA_DISABLED:
        return func
    return numba.njit(cache=True, nogil=True)(func)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


# -- averaging estimator over AWGN-processed Gaussian samples ----------------


def awgn_average_numpy(z_sample, z_noise, theta, sigma, sigma_noise):
    y = theta + sigma * z_sample + sigma_noise * z_noise
    return y.mean(axis=1)


def _awgn_average_loop(z_sample, z_noise, theta, sigma, sigma_noise):
    trials, n = z_sample.shape
    out = np.empty(trials)
    for t in range(trials):
        acc = 0.0
        for i in range(n):
            acc += theta + sigma * z_sample[t, i] + sigma_noise * z_noise[t, i]
        out[t] = acc / n
    return out


awgn_average_loop = _jit(_awgn_average_loop)


# -- log p(y|x) - log p(y) for Gaussian location through AWGN -----------------


def gaussian_log_ratio_numpy(x, y, theta, sigma_noise, marginal_sd):
    cond = -0.5 * ((y - x) / sigma_noise) ** 2 - math.log(sigma_noise)
    marg = -0.5 * ((y - theta) / marginal_sd) ** 2 - math.log(marginal_sd)
    return (cond - marg).sum(axis=1)


def _gaussian_log_ratio_loop(x, y, theta, sigma_noise, marginal_sd):
    m, d = x.shape
    out = np.empty(m)
    log_ratio_sd = math.log(marginal_sd) - math.log(sigma_noise)
    for k in range(m):
        acc = 0.0
        for j in range(d):
            a = (y[k, j] - x[k, j]) / sigma_noise
            b = (y[k, j] - theta[j]) / marginal_sd
            acc += 0.5 * (b * b - a * a) + log_ratio_sd
        out[k] = acc
    return out


gaussian_log_ratio_loop = _jit(_gaussian_log_ratio_loop)


# -- table lookup log ratio for discrete pipelines ----------------------------


def table_log_ratio_numpy(xi, yi, log_kernel, log_marginal):
    return log_kernel[xi, yi] - log_marginal[yi]


def _table_log_ratio_loop(xi, yi, log_kernel, log_marginal):
    m = xi.shape[0]
    out = np.empty(m)
    for k in range(m):
        out[k] = log_kernel[xi[k], yi[k]] - log_marginal[yi[k]]
    return out


table_log_ratio_loop = _jit(_table_log_ratio_loop)


# -- log(2 p / (p + q)) terms for Jensen-Shannon Monte Carlo -------------------


def js_log_terms_numpy(logp, logq):
    return _LOG2 + logp - np.logaddexp(logp, logq)


def _js_log_terms_loop(logp, logq):
    m = logp.shape[0]
    out = np.empty(m)
    for k in range(m):
        a = logp[k]
        b = logq[k]
        hi = a if a > b else b
        out[k] = _LOG2 + a - (hi + math.log(math.exp(a - hi) + math.exp(b - hi)))
    return out


js_log_terms_loop = _jit(_js_log_terms_loop)


if USE_NUMBA:
    awgn_average = awgn_average_loop
    gaussian_log_ratio = gaussian_log_ratio_loop
    table_log_ratio = table_log_ratio_loop
    js_log_terms = js_log_terms_loop
else:
    awgn_average = awgn_average_numpy
    gaussian_log_ratio = gaussian_log_ratio_numpy
    table_log_ratio = table_log_ratio_numpy
    js_log_terms = js_log_terms_numpy
