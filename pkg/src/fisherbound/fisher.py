"""Fisher information of raw and channel-processed samples.

Two independent routes to ``Tr I_Y(theta)`` are provided:

* :func:`fisher_output_exact` differentiates the output marginal,
  ``I_Y = sum_y grad p(y) grad p(y)^T / p(y)``;
* :func:`fisher_trace_decomposition` goes through the posterior,
  ``Tr I_Y = E_Y || E[S_theta(X) | Y] ||^2``.

Agreement between them is the main consistency check of the package.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from . import pipeline
from .channels import Channel, DiscreteChannel
from .errors import CapabilityError, ValidationError
from .models import DiscreteModel, GaussianLocation, ProductModel, StatModel
from .rng import DEFAULT_CHUNK, SeedLike, chunk_moments, combine_moments, map_chunks

log = logging.getLogger(__name__)

DEFAULT_FD_STEP = 1e-5
NEGLIGIBLE_MASS = 1e-300


@dataclass
class FisherMatrix:
    entries: np.ndarray
    theta: np.ndarray
    method: str

    def __post_init__(self):
        self.entries = np.atleast_2d(np.asarray(self.entries, dtype=float))
        self.theta = np.atleast_1d(np.asarray(self.theta, dtype=float))

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def is_psd(self, tol: float = 1e-10) -> bool:
        sym = np.max(np.abs(self.entries - self.entries.T), initial=0.0) <= tol
        return bool(sym and np.linalg.eigvalsh(0.5 * (self.entries + self.entries.T)).min() >= -tol)

    def to_dict(self):
        return {
            "theta": self.theta.tolist(),
            "entries": self.entries.tolist(),
            "trace": self.trace,
            "method": self.method,
        }


def fisher_input(model: StatModel, theta) -> FisherMatrix:
    theta = model.check_theta(theta)
    method = "exact_sum" if isinstance(model, DiscreteModel) else "closed_form"
    return FisherMatrix(model.fisher_information(theta), theta, method)


def _sym(m):
    return 0.5 * (m + m.T)


def fisher_output_exact(
    model: StatModel, channel: Channel, theta, fd_step: float | None = None, richardson: bool = False
) -> FisherMatrix:
    """Fisher information of the channel output.

    Discrete-output pipelines use the exact Jacobian of ``p_theta(y)``
    unless ``fd_step`` is given, in which case central differences of
    ``ln p_theta(y)`` are used instead (one Richardson step on top when
    ``richardson`` is set). Outputs with probability below 1e-300 are
    dropped (and counted in the log).
    """
    theta = model.check_theta(theta)
    k = pipeline.kind(model, channel)
    if k == "gaussian_awgn":
        s2 = model.sigma**2 + channel.sigma_noise**2
        return FisherMatrix(np.eye(model.dim) / s2, theta, "closed_form")

    py = pipeline.output_pmf(model, channel, theta)
    keep = py >= NEGLIGIBLE_MASS
    if not np.all(keep):
        log.warning("dropping %d output cells with p_theta(y) < %g", int((~keep).sum()), NEGLIGIBLE_MASS)
    if fd_step is None:
        jac = pipeline.output_pmf_jacobian(model, channel, theta)[keep]
        info = (jac / py[keep, None]).T @ jac
        return FisherMatrix(_sym(info), theta, "exact_jacobian")

    def central(h):
        out = np.empty((int(keep.sum()), model.dim))
        for j in range(model.dim):
            e = np.zeros(model.dim)
            e[j] = h
            with np.errstate(divide="ignore"):
                up = np.log(pipeline.output_pmf(model, channel, theta + e))[keep]
                down = np.log(pipeline.output_pmf(model, channel, theta - e))[keep]
            out[:, j] = (up - down) / (2.0 * h)
        return out

    scores = central(fd_step)
    if richardson:
        scores = (4.0 * central(0.5 * fd_step) - scores) / 3.0
    info = (scores * py[keep, None]).T @ scores
    return FisherMatrix(_sym(info), theta, "richardson" if richardson else "finite_difference")


@dataclass
class DecompositionResult:
    """``Tr I_Y`` via ``E_Y ||E[S|Y]||^2`` with its per-output pieces."""

    trace: float
    method: str
    std_error: float = 0.0
    n_samples: int = 0
    output_prob: np.ndarray | None = None
    conditional_score: np.ndarray | None = None
    terms: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self):
        out = {"trace": self.trace, "method": self.method, "std_error": self.std_error, "n_samples": self.n_samples}
        if self.terms is not None:
            out["terms"] = self.terms.tolist()
        return out


def _quantizer_conditional_scores(model: GaussianLocation, channel, theta) -> tuple[np.ndarray, np.ndarray]:
    # P(Y=j) and E[S 1{Y=j}] by composite Gauss-Legendre over x; the
    # integrand is smooth between the kinks of p(j|x), so panels are split
    # at every kink and kept narrower than sigma/2
    t = theta[0]
    s = model.sigma
    h = 0.5 * channel.width if channel.dither else 0.0
    breaks = np.concatenate([channel.interior - h, channel.interior + h])
    span = 12.0 * s
    knots = np.unique(np.concatenate([[t - span, t + span], breaks[np.abs(breaks - t) < span]]))
    panels = []
    for a, b in zip(knots[:-1], knots[1:]):
        pieces = max(1, int(np.ceil((b - a) / (0.5 * s))))
        panels.append(np.linspace(a, b, pieces + 1))
    edges = np.unique(np.concatenate(panels))
    nodes, weights = _GL_NODES, _GL_WEIGHTS
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    x = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    wts = (half[:, None] * weights[None, :]).ravel()
    dens = wts * pipeline._phi((x - t) / s) / s
    cond = channel.output_pmf(x)  # (nodes, levels)
    mass = dens @ cond
    first = (dens * (x - t) / s**2) @ cond
    # mass beyond +-12 sigma (~1e-33) goes to the bins at the cut points
    tail = ndtr(-span / s)
    tail_moment = pipeline._phi(span / s) / s
    left = channel.output_pmf(np.array(t - span))
    right = channel.output_pmf(np.array(t + span))
    mass = mass + tail * (left + right)
    first = first + tail_moment * (right - left)
    return mass, first


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def fisher_trace_decomposition(
    model: StatModel,
    channel: Channel,
    theta,
    method: str = "exact",
    n_samples: int = 1_000_000,
    seed: SeedLike = 0,
) -> DecompositionResult:
    """``E_Y || E_X[S_theta(X) | Y] ||^2`` computed from the posterior of X."""
    theta = model.check_theta(theta)
    k = pipeline.kind(model, channel)
    if method not in ("exact", "mc"):
        raise ValidationError(f"unknown method {method!r}")

    if k == "discrete":
        px = model.pmf(theta)
        joint = px[:, None] * channel.matrix  # (X, Y)
        py = joint.sum(axis=0)
        keep = py >= NEGLIGIBLE_MASS
        post = joint[:, keep] / py[keep]
        cond = post.T @ model.score_table(theta)  # (Y_kept, d)
        terms = py[keep] * np.sum(cond**2, axis=1)
        if method == "mc":
            return _mc_discrete_decomposition(py, keep, cond, n_samples, seed)
        return DecompositionResult(float(terms.sum()), "exact_posterior", output_prob=py[keep],
                                   conditional_score=cond, terms=terms)

    if k == "gaussian_awgn":
        # E[S | Y] = (E[X|Y] - theta)/sigma^2 = (Y - theta) / (sigma^2 + sigma_n^2)
        s2 = model.sigma**2 + channel.sigma_noise**2
        if method == "exact":
            return DecompositionResult(model.dim / s2, "closed_form_posterior")

        def work(rng, size):
            x = model.sample(theta, rng, size=size)
            y = channel.sample(x, rng)
            cond = (y - theta) / s2
            return chunk_moments(np.sum(cond * cond, axis=1))

        mean, se, n = combine_moments(map_chunks(work, seed, n_samples, DEFAULT_CHUNK))
        return DecompositionResult(mean, "monte_carlo_posterior", se, n)

    # gaussian_quantizer
    mass, first = _quantizer_conditional_scores(model, channel, theta)
    keep = mass >= NEGLIGIBLE_MASS
    cond = first[keep] / mass[keep]
    terms = mass[keep] * cond**2
    if method == "mc":
        return _mc_discrete_decomposition(mass, keep, cond[:, None], n_samples, seed)
    return DecompositionResult(float(terms.sum()), "quadrature_posterior", output_prob=mass[keep],
                               conditional_score=cond[:, None], terms=terms)


def _mc_discrete_decomposition(py, keep, cond, n_samples, seed) -> DecompositionResult:
    probs = py[keep] / py[keep].sum()
    norms = np.sum(np.atleast_2d(cond) ** 2, axis=1)
    cdf = np.cumsum(probs)

    def work(rng, size):
        idx = np.minimum(np.searchsorted(cdf, rng.random(size), side="right"), probs.size - 1)
        return chunk_moments(norms[idx])

    mean, se, n = combine_moments(map_chunks(work, seed, n_samples, DEFAULT_CHUNK))
    return DecompositionResult(mean, "monte_carlo_posterior", se, n)


def _kl_pmf(p, q):
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


@dataclass
class FdCheckResult:
    max_relative_deviation: float
    exact_diagonal: np.ndarray
    kl_diagonal: np.ndarray
    h: float


def fisher_fd_check(model: StatModel, channel: Channel, theta, h: float = 1e-4) -> FdCheckResult:
    """Compare diag(I_Y) with ``2 KL(p_theta || p_{theta + h e_j}) / h^2``."""
    if h < 1e-7:
        warnings.warn(f"fd step h={h:g} is below 1e-7; cancellation will dominate", RuntimeWarning, stacklevel=2)
    theta = model.check_theta(theta)
    if not pipeline.has_discrete_output(model, channel):
        raise CapabilityError("fisher_fd_check needs a discrete-output pipeline")
    exact = np.diag(fisher_output_exact(model, channel, theta).entries).copy()
    p = pipeline.output_pmf(model, channel, theta)
    approx = np.empty(model.dim)
    for j in range(model.dim):
        e = np.zeros(model.dim)
        e[j] = h
        approx[j] = 2.0 * _kl_pmf(p, pipeline.output_pmf(model, channel, theta + e)) / h**2
    scale = np.maximum(np.abs(exact), np.abs(approx))
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.where(scale > 1e-12, np.abs(exact - approx) / scale, 0.0)
    return FdCheckResult(float(rel.max()), exact, approx, h)


def product_output_trace(model: DiscreteModel, channel: DiscreteChannel, theta, copies: int) -> float:
    """Trace of the output Fisher matrix of the ``copies``-fold product
    model, every block set to ``theta``, built on the full product
    alphabet."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    prod = ProductModel(model, copies)
    big = channel.tensor_power(copies)
    return fisher_output_exact(prod, big, np.tile(theta, copies)).trace


def fisher_output(model: StatModel, channel: Channel, theta) -> FisherMatrix:
    return fisher_output_exact(model, channel, theta)
