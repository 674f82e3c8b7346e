"""Mutual information, channel capacity, KL and Jensen-Shannon divergences.

All quantities are in nats. The Jensen-Shannon divergence here is the
*unhalved* sum ``KL(P||M) + KL(Q||M)`` with ``M = (P + Q)/2``, so it ranges
over ``[0, 2 ln 2]``; halve it yourself if you need the more common
convention.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Protocol, runtime_checkable

import numpy as np

from . import kernels, pipeline
from .channels import AwgnChannel, Channel, DiscreteChannel
from .errors import (
    CapabilityError,
    ConvergenceError,
    DivergenceInfiniteError,
    ValidationError,
)
from .models import DiscreteModel, GaussianLocation, StatModel
from .rng import DEFAULT_CHUNK, SeedLike, chunk_moments, combine_moments, map_chunks

LN2 = math.log(2.0)
JS_MAX = 2.0 * LN2


@dataclass(frozen=True)
class MIEstimate:
    value: float
    std_error: float = 0.0
    n_samples: int = 0
    method: str = "exact_discrete"
    quantity: str = "I(X;Y)"

    def to_dict(self):
        return {
            "quantity": self.quantity,
            "value_nats": self.value,
            "std_error": self.std_error,
            "method": self.method,
            "n_samples": self.n_samples,
        }

    @property
    def bits(self) -> float:
        return self.value / LN2


@dataclass(frozen=True)
class DivergenceValue:
    value: float
    kind: str
    method: str = "exact_discrete"
    std_error: float = 0.0

    def to_dict(self):
        return asdict(self)


@runtime_checkable
class SampledDensity(Protocol):
    """Anything with ``logpdf(x)`` and ``rvs(size=..., random_state=...)``;
    scipy frozen distributions qualify."""

    def logpdf(self, x): ...

    def rvs(self, size=None, random_state=None): ...


# -- elementary discrete quantities ----------------------------------------------


def _as_pmf(p, name="p") -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValidationError(f"{name} must be a non-empty 1-D pmf")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValidationError(f"{name} must be nonnegative and sum to 1")
    return p


def entropy(p) -> float:
    return float(pipeline._entropy(_as_pmf(p)))


def binary_entropy(p: float) -> float:
    if p in (0.0, 1.0):
        return 0.0
    return -p * math.log(p) - (1.0 - p) * math.log1p(-p)


def mutual_information_pmf(px, matrix) -> float:
    """``I(X;Y)`` for input pmf ``px`` through row-stochastic ``matrix``."""
    px = np.asarray(px, dtype=float)
    w = np.asarray(matrix, dtype=float)
    py = px @ w
    joint = px[:, None] * w
    mask = joint > 0
    ratio = np.where(mask, w, 1.0) / np.where(mask, py[None, :], 1.0)
    return float(np.sum(joint[mask] * np.log(ratio[mask])))


# -- mutual information ---------------------------------------------------------------


def mi_exact_discrete(model: DiscreteModel, channel: DiscreteChannel, theta) -> MIEstimate:
    pipeline.kind(model, channel)
    if not isinstance(channel, DiscreteChannel):
        raise CapabilityError("mi_exact_discrete needs a matrix channel")
    return MIEstimate(mutual_information_pmf(model.pmf(theta), channel.matrix), method="exact_discrete")


def mi_gaussian_awgn(sigma: float, sigma_noise: float, n: int = 1, dim: int = 1) -> MIEstimate:
    """Total ``I(X_1..X_n; Y_1..Y_n)`` for ``n`` independent AWGN links."""
    if not sigma > 0 or not sigma_noise >= 0:
        raise ValidationError("sigma must be positive and sigma_noise nonnegative")
    if sigma_noise == 0:
        value = math.inf
    elif math.isinf(sigma_noise):
        value = 0.0
    else:
        value = 0.5 * n * dim * math.log1p((sigma / sigma_noise) ** 2)
    quantity = "I(X;Y)" if n == 1 else "I(X_1..X_n;Pi)"
    return MIEstimate(value, method="closed_form_gaussian", quantity=quantity)


def mi_quantizer(model: GaussianLocation, channel, theta) -> MIEstimate:
    """``H(Y) - H(Y|X)`` for a Gaussian sample through a quantizer."""
    py = pipeline.output_pmf(model, channel, theta)
    value = float(pipeline._entropy(py)) - pipeline.quantizer_conditional_entropy(model, channel, theta)
    return MIEstimate(value, method="exact_discrete" if not channel.dither else "quadrature")


def mi_monte_carlo(
    model: StatModel,
    channel: Channel,
    theta,
    n_samples: int = 1_000_000,
    seed: SeedLike = 0,
    chunk: int = DEFAULT_CHUNK,
) -> MIEstimate:
    """Sample mean of ``ln p(Y|X) - ln p_theta(Y)`` over ``(X, Y)`` draws.

    The denominator is exact for every supported pairing (closed-form
    Gaussian marginal, or the exact output pmf), so the estimator is
    unbiased; the standard error comes from the per-draw variance.
    """
    k = pipeline.kind(model, channel)
    theta = model.check_theta(theta)

    if k == "gaussian_awgn":
        if channel.deterministic:
            raise CapabilityError("noiseless AWGN has infinite mutual information")
        msd = pipeline.gaussian_awgn_marginal_sd(model, channel)

        def work(rng, size):
            x = model.sample(theta, rng, size=size)
            y = channel.sample(x, rng)
            return chunk_moments(kernels.gaussian_log_ratio(x, y, theta, channel.sigma_noise, msd))

    elif k == "discrete":
        with np.errstate(divide="ignore"):
            log_w = np.log(channel.matrix)
            log_py = np.log(pipeline.output_pmf(model, channel, theta))

        def work(rng, size):
            x = model.sample(theta, rng, size=size)
            y = channel.sample(x, rng)
            return chunk_moments(kernels.table_log_ratio(x, y, log_w, log_py))

    else:  # gaussian_quantizer
        with np.errstate(divide="ignore"):
            log_py = np.log(pipeline.output_pmf(model, channel, theta))

        def work(rng, size):
            x = model.sample(theta, rng, size=size)
            y = channel.sample(x, rng)
            pmf = channel.output_pmf(x)
            with np.errstate(divide="ignore"):
                log_cond = np.log(np.take_along_axis(pmf, y[:, None], axis=1)[:, 0])
            return chunk_moments(log_cond - log_py[y])

    parts = map_chunks(work, seed, n_samples, chunk)
    mean, se, n = combine_moments(parts)
    return MIEstimate(mean, se, n, "monte_carlo")


def mutual_information(
    model: StatModel,
    channel: Channel,
    theta,
    method: str = "auto",
    n_samples: int = 1_000_000,
    seed: SeedLike = 0,
) -> MIEstimate:
    """Dispatch to the exact oracle for the pairing, or Monte Carlo."""
    k = pipeline.kind(model, channel)
    if method == "mc":
        return mi_monte_carlo(model, channel, theta, n_samples, seed)
    if method not in ("auto", "exact"):
        raise ValidationError(f"unknown MI method {method!r}")
    if k == "discrete":
        return mi_exact_discrete(model, channel, theta)
    if k == "gaussian_awgn":
        model.check_theta(theta)
        return mi_gaussian_awgn(model.sigma, channel.sigma_noise, 1, model.dim)
    return mi_quantizer(model, channel, theta)


# -- capacity -------------------------------------------------------------------------


@dataclass(frozen=True)
class CapacityResult:
    capacity: float
    input_pmf: np.ndarray
    gap: float
    iterations: int

    def to_dict(self):
        return {
            "quantity": "capacity",
            "value_nats": self.capacity,
            "input_pmf": self.input_pmf.tolist(),
            "gap": self.gap,
            "iterations": self.iterations,
        }


def _row_divergences(w, q):
    # D(W(.|x) || q) for every row x
    mask = w > 0
    safe_q = np.where(mask, q[None, :], 1.0)
    safe_w = np.where(mask, w, 1.0)
    return np.sum(np.where(mask, w * np.log(safe_w / safe_q), 0.0), axis=1)


def capacity_blahut_arimoto(channel, tol: float = 1e-12, max_iter: int = 100_000) -> CapacityResult:
    """Capacity of a discrete memoryless channel by alternating maximization.

    Starts from the uniform input and stops when the standard sandwich
    ``max_x D(W_x||q) - I(r, W)`` falls below ``tol``.
    """
    w = channel.matrix if isinstance(channel, DiscreteChannel) else DiscreteChannel(channel).matrix
    if tol <= 0:
        raise ValidationError("tol must be positive")
    m = w.shape[0]
    r = np.full(m, 1.0 / m)
    gap = math.inf
    for it in range(1, max_iter + 1):
        q = r @ w
        d = _row_divergences(w, q)
        lower = float(r @ d)
        upper = float(d.max())
        gap = upper - lower
        if gap < tol:
            return CapacityResult(lower, r, gap, it)
        r = r * np.exp(d - upper)
        r /= r.sum()
    raise ConvergenceError(
        f"Blahut-Arimoto did not reach gap {tol:g} in {max_iter} iterations (last gap {gap:.3e})",
        gap=gap,
        iterations=max_iter,
    )


# -- divergences ----------------------------------------------------------------------


def _kl_discrete(p, q) -> float:
    p = _as_pmf(p, "p")
    q = _as_pmf(q, "q")
    if p.shape != q.shape:
        raise ValidationError("p and q must live on the same alphabet")
    support = p > 0
    if np.any(q[support] == 0):
        raise DivergenceInfiniteError("q does not dominate p: KL is infinite")
    return float(np.sum(p[support] * np.log(p[support] / q[support])))


def _mc_mean(fn, seed, n_samples, chunk=DEFAULT_CHUNK, stream=0):
    parts = map_chunks(lambda rng, size: chunk_moments(fn(rng, size)), seed, n_samples, chunk, stream)
    mean, se, _ = combine_moments(parts)
    return mean, se


def _draw(dist, rng, size):
    x = np.asarray(dist.rvs(size=size, random_state=rng))
    return x


def _logpdf(dist, x):
    return np.asarray(dist.logpdf(x), dtype=float).reshape(-1)


def kl_divergence(p, q, method: str = "auto", n_samples: int = 1_000_000, seed: SeedLike = 0) -> DivergenceValue:
    """``KL(p||q)``: exact for pmf arrays, Monte Carlo for sampled densities."""
    if isinstance(p, SampledDensity) and isinstance(q, SampledDensity):
        if method not in ("auto", "mc"):
            raise ValidationError("sampled densities only support method='mc'")

        def terms(rng, size):
            x = _draw(p, rng, size)
            return _logpdf(p, x) - _logpdf(q, x)

        mean, se = _mc_mean(terms, seed, n_samples)
        return DivergenceValue(mean, "KL", "monte_carlo", se)
    if method not in ("auto", "exact"):
        raise ValidationError("pmf inputs only support method='exact'")
    return DivergenceValue(_kl_discrete(p, q), "KL")


def js_divergence(p, q, method: str = "auto", n_samples: int = 1_000_000, seed: SeedLike = 0) -> DivergenceValue:
    """Unhalved Jensen-Shannon divergence ``KL(p||m) + KL(q||m)``."""
    if isinstance(p, SampledDensity) and isinstance(q, SampledDensity):
        if method not in ("auto", "mc"):
            raise ValidationError("sampled densities only support method='mc'")

        def from_p(rng, size):
            x = _draw(p, rng, size)
            return kernels.js_log_terms(_logpdf(p, x), _logpdf(q, x))

        def from_q(rng, size):
            x = _draw(q, rng, size)
            return kernels.js_log_terms(_logpdf(q, x), _logpdf(p, x))

        mp, sp = _mc_mean(from_p, seed, n_samples, stream=0)
        mq, sq = _mc_mean(from_q, seed, n_samples, stream=1)
        return DivergenceValue(mp + mq, "JS", "monte_carlo", math.hypot(sp, sq))
    if method not in ("auto", "exact"):
        raise ValidationError("pmf inputs only support method='exact'")
    p = _as_pmf(p, "p")
    q = _as_pmf(q, "q")
    if p.shape != q.shape:
        raise ValidationError("p and q must live on the same alphabet")
    m = 0.5 * (p + q)
    value = _kl_discrete(p, m) + _kl_discrete(q, m)
    return DivergenceValue(min(max(value, 0.0), JS_MAX), "JS")


def mi_prior_from_js(js_value: float) -> float:
    """``I(V;Pi)`` for a uniform binary prior V over two hypotheses."""
    if not -1e-12 <= js_value <= JS_MAX + 1e-12:
        raise ValidationError(f"JS value {js_value!r} outside [0, 2 ln 2]")
    return 0.5 * js_value
