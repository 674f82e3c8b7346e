"""Model x channel compositions: output marginals and their theta-derivatives.

Supported pairings:

* discrete model -> matrix channel (everything exact),
* Gaussian location -> AWGN (closed forms),
* one-dimensional Gaussian location -> quantizer, plain or dithered
  (exact via normal CDFs; conditional entropy by adaptive quadrature).
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate
from scipy.special import ndtr

from .channels import AwgnChannel, Channel, DiscreteChannel, QuantizerChannel, push_forward_discrete
from .errors import CapabilityError, ShapeError
from .models import DiscreteModel, GaussianLocation, StatModel

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _phi(t):
    return _INV_SQRT_2PI * np.exp(-0.5 * np.square(t))


def _ndtr_integral(t):
    # antiderivative of the standard normal CDF
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    finite = np.isfinite(t)
    tf = t[finite]
    out[finite] = tf * ndtr(tf) + _phi(tf)
    return out


def kind(model: StatModel, channel: Channel) -> str:
    if isinstance(model, DiscreteModel) and isinstance(channel, DiscreteChannel):
        if model.alphabet_size != channel.input_size:
            raise ShapeError(
                f"model alphabet size {model.alphabet_size} != channel input size {channel.input_size}"
            )
        return "discrete"
    if isinstance(model, GaussianLocation) and isinstance(channel, AwgnChannel):
        return "gaussian_awgn"
    if isinstance(model, GaussianLocation) and isinstance(channel, QuantizerChannel):
        if model.dim != 1:
            raise CapabilityError("quantizer pipelines are implemented for one-dimensional models only")
        return "gaussian_quantizer"
    raise CapabilityError(
        f"no oracle for {type(model).__name__} through {type(channel).__name__}"
    )


def has_discrete_output(model: StatModel, channel: Channel) -> bool:
    return kind(model, channel) in ("discrete", "gaussian_quantizer")


def _quantizer_cdf_terms(model: GaussianLocation, channel: QuantizerChannel, theta):
    theta = model.check_theta(theta)[0]
    s = model.sigma
    lo, hi = channel.bin_bounds()
    if not channel.dither:
        a = (lo - theta) / s
        b = (hi - theta) / s
        pmf = ndtr(b) - ndtr(a)
        grad = (_phi(a) - _phi(b)) / s
        return pmf, grad
    # average the bin probability over the uniform dither u:
    # E_u Phi((e - u - theta)/s) = (s/w) [G((e + w/2 - theta)/s) - G((e - w/2 - theta)/s)]
    w = channel.width
    h = 0.5 * w

    def avg_cdf(edge):
        out = np.empty_like(edge)
        out[np.isneginf(edge)] = 0.0
        out[np.isposinf(edge)] = 1.0
        fin = np.isfinite(edge)
        e = edge[fin]
        out[fin] = (s / w) * (_ndtr_integral((e + h - theta) / s) - _ndtr_integral((e - h - theta) / s))
        return out

    def avg_cdf_grad(edge):
        out = np.zeros_like(edge)
        fin = np.isfinite(edge)
        e = edge[fin]
        out[fin] = -(ndtr((e + h - theta) / s) - ndtr((e - h - theta) / s)) / w
        return out

    pmf = avg_cdf(hi) - avg_cdf(lo)
    grad = avg_cdf_grad(hi) - avg_cdf_grad(lo)
    return pmf, grad


def output_pmf(model: StatModel, channel: Channel, theta) -> np.ndarray:
    k = kind(model, channel)
    if k == "discrete":
        return push_forward_discrete(model, channel, theta)
    if k == "gaussian_quantizer":
        return _quantizer_cdf_terms(model, channel, theta)[0]
    raise CapabilityError("output is continuous; no pmf")


def output_pmf_jacobian(model: StatModel, channel: Channel, theta) -> np.ndarray:
    """d p_theta(y) / d theta_j, shape ``(|Y|, dim)``, by exact differentiation."""
    k = kind(model, channel)
    if k == "discrete":
        # d/dtheta sum_x p(y|x) p_theta(x) = sum_x p(y|x) p_theta(x) S_theta(x)
        p = model.pmf(theta)
        s = model.score_table(theta)
        return channel.matrix.T @ (p[:, None] * s)
    if k == "gaussian_quantizer":
        return _quantizer_cdf_terms(model, channel, theta)[1][:, None]
    raise CapabilityError("output is continuous; no pmf")


def gaussian_awgn_marginal_sd(model: GaussianLocation, channel: AwgnChannel) -> float:
    return math.sqrt(model.sigma**2 + channel.sigma_noise**2)


def _entropy(p, axis=-1):
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, -p * np.log(np.where(p > 0, p, 1.0)), 0.0)
    return terms.sum(axis=axis)


def quantizer_conditional_entropy(model: GaussianLocation, channel: QuantizerChannel, theta) -> float:
    """H(Y|X) in nats; zero for the deterministic quantizer."""
    if not channel.dither:
        return 0.0
    theta = model.check_theta(theta)[0]
    s = model.sigma
    h = 0.5 * channel.width
    # p(.|x) is piecewise linear with kinks at edge +- w/2 and degenerate
    # outside [first interior edge - w/2, last interior edge + w/2]
    pts = np.sort(np.concatenate([channel.interior - h, channel.interior + h]))

    def integrand(x):
        return _phi((x - theta) / s) / s * float(_entropy(channel.output_pmf(np.array(x))))

    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        if b > a:
            val, _ = integrate.quad(integrand, a, b, epsabs=1e-14, epsrel=1e-12, limit=200)
            total += val
    return total
