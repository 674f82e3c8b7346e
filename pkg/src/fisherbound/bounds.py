"""Evaluate and verify the Fisher-information / mutual-information inequalities.

Every check returns a :class:`BoundReport` pairing the two sides of an
inequality ``lhs <= rhs``. The verdict uses a guard band: ``holds`` when
``lhs <= rhs + 4 * uncertainty`` (absolute 1e-9 when both sides are
exact), ``violated`` otherwise, and ``inconclusive`` when either side or
the uncertainty is not a finite number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy import stats

from . import pipeline
from .channels import Channel, DiscreteChannel, QuantizerChannel, RandomizedResponseChannel
from .errors import CapabilityError, ParameterError, ValidationError
from .fisher import fisher_output_exact
from .info import DivergenceValue, js_divergence, mi_prior_from_js, mutual_information
from .models import GaussianLocation, StatModel
from .rng import SeedLike

GUARD_SIGMAS = 4.0
EXACT_ATOL = 1e-9


def verdict(lhs: float, rhs: float, uncertainty: float = 0.0) -> str:
    if not all(math.isfinite(v) for v in (lhs, uncertainty)) or math.isnan(rhs):
        return "inconclusive"
    guard = GUARD_SIGMAS * uncertainty if uncertainty > 0 else EXACT_ATOL
    return "holds" if lhs <= rhs + guard else "violated"


@dataclass
class BoundReport:
    name: str
    lhs: float
    rhs: float
    uncertainty: float = 0.0
    components: dict = field(default_factory=dict)

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def verdict(self) -> str:
        return verdict(self.lhs, self.rhs, self.uncertainty)

    @property
    def holds(self) -> bool:
        return self.verdict == "holds"

    def to_dict(self):
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "verdict": self.verdict,
            "uncertainty": self.uncertainty,
            "components": {k: _jsonable(v) for k, v in self.components.items()},
        }


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, np.generic):
        return v.item()
    return v


# -- single-letter bound ----------------------------------------------------------------


def thm1_verify(
    model: StatModel,
    channel: Channel,
    theta,
    mi_method: str = "auto",
    n_samples: int = 1_000_000,
    seed: SeedLike = 0,
) -> BoundReport:
    """``Tr I_Y(theta) <= 2 N^2 I_theta(X;Y)`` at a single theta."""
    theta = model.check_theta(theta)
    try:
        lhs = fisher_output_exact(model, channel, theta).trace
        mi = mutual_information(model, channel, theta, mi_method, n_samples, seed)
    except CapabilityError as exc:
        raise CapabilityError(f"thm1_verify: {exc}") from exc
    N = float(model.subgaussian_param(theta))
    factor = 2.0 * N * N
    return BoundReport(
        "fisher_mi_bound",
        lhs,
        factor * mi.value,
        factor * mi.std_error,
        {
            "N": N,
            "mi_nats": mi.value,
            "mi_std_error": mi.std_error,
            "mi_method": mi.method,
            "theta": theta,
            "model": model.to_dict(),
            "channel": channel.to_dict(),
        },
    )


def cor1_transcript_bound(N: float, total_mi: float) -> float:
    """Upper bound ``2 N^2 I(X_1..X_n; Pi)`` on the transcript Fisher trace."""
    if total_mi < 0:
        raise ValidationError("total mutual information must be nonnegative")
    if N < 0:
        raise ValidationError("N must be nonnegative")
    return 2.0 * N * N * total_mi


def cor2_gaussian_bound(sigma: float, total_mi: float) -> float:
    return cor1_transcript_bound(1.0 / sigma, total_mi)


def van_trees_lower_bound(d: int, sigma: float, sup_total_mi: float, constant: float = 2.0) -> float:
    """Minimax squared-error lower bound for N(theta, sigma^2 I_d) on [-1, 1]^d:
    ``d^2 / ((constant / sigma^2) sup I + pi^2 d)``.

    ``constant`` is 2 for the valid bound; other values exist only to show
    what a smaller preconstant would imply.
    """
    if d < 1 or not sigma > 0 or sup_total_mi < 0:
        raise ValidationError("need d >= 1, sigma > 0 and nonnegative information")
    if math.isinf(sup_total_mi):
        return 0.0
    return d * d / (constant / sigma**2 * sup_total_mi + math.pi**2 * d)


# -- path bound via Jensen-Shannon ------------------------------------------------------------


@dataclass(frozen=True)
class PathSpec:
    """Straight segment ``theta_l = l theta1 + (1 - l) theta0`` with
    quadrature nodes/weights on [0, 1] (weights sum to 1)."""

    theta0: np.ndarray
    theta1: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray

    @classmethod
    def gauss_legendre(cls, theta0, theta1, n_nodes: int = 16) -> "PathSpec":
        x, w = np.polynomial.legendre.leggauss(n_nodes)
        return cls(
            np.atleast_1d(np.asarray(theta0, dtype=float)),
            np.atleast_1d(np.asarray(theta1, dtype=float)),
            0.5 * (x + 1.0),
            0.5 * w,
        )

    def __post_init__(self):
        if self.theta0.shape != self.theta1.shape:
            raise ValidationError("path endpoints must have the same shape")
        if np.any(self.nodes < 0) or np.any(self.nodes > 1):
            raise ValidationError("quadrature nodes must lie in [0, 1]")
        if abs(float(np.sum(self.weights)) - 1.0) > 1e-12:
            raise ValidationError("quadrature weights must sum to 1")

    def point(self, lam: float) -> np.ndarray:
        return lam * self.theta1 + (1.0 - lam) * self.theta0

    @property
    def sq_length(self) -> float:
        return float(np.sum((self.theta1 - self.theta0) ** 2))

    def integrate(self, fn) -> float:
        return float(sum(w * fn(self.point(l)) for l, w in zip(self.nodes, self.weights)))


def _path_subgaussian(model: StatModel, path: PathSpec) -> float:
    pts = [path.theta0, path.theta1] + [path.point(l) for l in path.nodes]
    return max(float(model.subgaussian_param(p)) for p in pts)


def _check_path(model: StatModel, path: PathSpec):
    for lam in np.concatenate([[0.0, 1.0], path.nodes]):
        try:
            model.check_theta(path.point(lam))
        except ParameterError as exc:
            raise ParameterError(f"path leaves the parameter set at lambda={lam:g}: {exc}") from exc


def transcript_js(
    model: StatModel,
    channel: Channel,
    n: int,
    theta0,
    theta1,
    n_samples: int = 1_000_000,
    seed: SeedLike = 0,
):
    """JS divergence between transcript laws ``Q_theta0`` and ``Q_theta1``
    for ``n`` nodes sending one message each through independent copies of
    ``channel``."""
    k = pipeline.kind(model, channel)
    if k in ("discrete", "gaussian_quantizer"):
        p0 = pipeline.output_pmf(model, channel, theta0)
        p1 = pipeline.output_pmf(model, channel, theta1)
        q0, q1 = np.ones(1), np.ones(1)
        for _ in range(n):
            q0, q1 = np.kron(q0, p0), np.kron(q1, p1)
        return js_divergence(q0 / q0.sum(), q1 / q1.sum())
    sd = pipeline.gaussian_awgn_marginal_sd(model, channel)
    mean0 = np.tile(np.atleast_1d(theta0), n)
    mean1 = np.tile(np.atleast_1d(theta1), n)
    if mean0.size == 1:
        d0, d1 = stats.norm(mean0[0], sd), stats.norm(mean1[0], sd)
    else:
        cov = sd**2 * np.eye(mean0.size)
        d0, d1 = stats.multivariate_normal(mean0, cov), stats.multivariate_normal(mean1, cov)
    return js_divergence(d0, d1, n_samples=n_samples, seed=seed)


def thm2_js_bound(
    model: StatModel,
    channel: Channel,
    n: int,
    path: PathSpec,
    N: float | None = None,
    mi_method: str = "auto",
    n_samples: int = 1_000_000,
    seed: SeedLike = 0,
) -> BoundReport:
    """``JS(Q_theta0||Q_theta1) <= (|theta1 - theta0|^2 N^2 / 2) int_0^1 I_{theta_l} dl``.

    The per-node channels are independent, so the total information at each
    node is ``n`` times the single-link value. When ``N`` is not given the
    largest declared N over the endpoints and quadrature nodes is used.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    _check_path(model, path)
    if N is None:
        N = _path_subgaussian(model, path)
    mi_parts = []

    def total_mi(theta):
        est = mutual_information(model, channel, theta, mi_method, n_samples, seed)
        mi_parts.append(est)
        return n * est.value

    integral = path.integrate(total_mi)
    mi_se = math.sqrt(sum((w * n * e.std_error) ** 2 for w, e in zip(path.weights, mi_parts)))
    factor = 0.5 * path.sq_length * N * N
    if path.sq_length == 0.0:
        lhs = DivergenceValue(0.0, "JS")
    else:
        lhs = transcript_js(model, channel, n, path.theta0, path.theta1, n_samples, seed)
    return BoundReport(
        "js_path_bound",
        lhs.value,
        factor * integral,
        math.hypot(lhs.std_error, factor * mi_se),
        {
            "N": N,
            "n": n,
            "path_integral_nats": integral,
            "quadrature_nodes": len(path.nodes),
            "sq_length": path.sq_length,
            "js_method": lhs.method,
            "js_std_error": lhs.std_error,
            # MC estimates can stray slightly outside [0, 2 ln 2]
            "prior_mi_lhs": 0.5 * lhs.value if lhs.method == "monte_carlo" else mi_prior_from_js(lhs.value),
            "prior_mi_rhs": 0.5 * factor * integral,
        },
    )


@dataclass
class TaylorCheck:
    deltas: np.ndarray
    js: np.ndarray
    quadratic: np.ndarray
    ratios: np.ndarray

    @property
    def spread(self) -> float:
        """max/min of the cubic-residual ratios (1.0 when all equal)."""
        r = self.ratios[self.deltas != 0]
        if r.size == 0 or np.all(r == 0):
            return 1.0
        if np.any(r == 0):
            return math.inf
        return float(r.max() / r.min())

    @property
    def max_ratio(self) -> float:
        return float(np.max(self.ratios, initial=0.0))


def regularity_iv_taylor_check(
    model: StatModel,
    channel: Channel,
    theta,
    delta_grid: Iterable[float] = (0.1, 0.05, 0.025),
    direction=None,
) -> TaylorCheck:
    """Residual of ``JS(Q_theta||Q_theta+D) ~ D^T I D / 4`` scaled by ``|D|^3``.

    Steps are taken along ``direction`` (unit first axis by default).
    """
    theta = model.check_theta(theta)
    if not pipeline.has_discrete_output(model, channel):
        raise CapabilityError("regularity_iv_taylor_check needs a discrete-output pipeline")
    u = np.zeros(model.dim)
    u[0] = 1.0
    if direction is not None:
        u = np.asarray(direction, dtype=float)
        u = u / np.linalg.norm(u)
    info = fisher_output_exact(model, channel, theta).entries
    p = pipeline.output_pmf(model, channel, theta)
    deltas = np.asarray(list(delta_grid), dtype=float)
    js_vals, quad, ratios = [], [], []
    for d in deltas:
        step = d * u
        js = 0.0 if d == 0 else js_divergence(p, pipeline.output_pmf(model, channel, theta + step)).value
        q = 0.25 * float(step @ info @ step)
        js_vals.append(js)
        quad.append(q)
        ratios.append(0.0 if d == 0 else abs(js - q) / abs(d) ** 3)
    return TaylorCheck(deltas, np.array(js_vals), np.array(quad), np.array(ratios))


def twist_bound_rhs(c: float, mi_path_integral: float, K: float = 1.0) -> float:
    """Shape of the bounded-likelihood-ratio bound ``K (ln c)^2 int I``.

    ``K`` is an unspecified absolute constant; the default of 1 carries no
    meaning beyond making the shape computable.
    """
    if c < 1:
        raise ValidationError("likelihood-ratio bound c must be >= 1")
    if mi_path_integral < 0:
        raise ValidationError("path integral must be nonnegative")
    return K * math.log(c) ** 2 * mi_path_integral


def twist_path_integral(model, channel, n: int = 1, n_nodes: int = 16) -> float:
    """``int_0^1 I_l(X_1..X_n; Pi) dl`` along a twist family."""
    path = PathSpec.gauss_legendre(0.0, 1.0, n_nodes)
    return path.integrate(lambda t: n * mutual_information(model, channel, t).value)


# -- sweeps -------------------------------------------------------------------------------------


def _grid(start, stop, step):
    count = int(round((stop - start) / step)) + 1
    return [round(start + i * step, 10) for i in range(count)]


BERNOULLI_THETAS = _grid(0.1, 0.9, 0.1)
BSC_PS = _grid(0.0, 0.5, 0.05)
GAUSS_SIGMAS = (0.5, 1.0, 2.0)
AWGN_NOISES = (0.25, 0.5, 1.0, 2.0, 4.0)
QUANTIZER_BITS = (1, 2, 3, 4)
RR_EPSILONS = (0.1, 0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0)


@dataclass
class SweepRow:
    name: str
    param1: float
    param2: float
    report: BoundReport

    def as_row(self) -> dict:
        r = self.report
        return {
            "name": self.name,
            "param1": self.param1,
            "param2": self.param2,
            "lhs": r.lhs,
            "rhs": r.rhs,
            "slack": r.slack,
            "verdict": r.verdict,
        }


def thm1_grid_sweep(mc_samples: int = 1_000_000, seed: SeedLike = 0, quantizer_range=(-2.0, 2.0)) -> list[SweepRow]:
    """The standard grid: Bernoulli x BSC, Gaussian x AWGN (Monte Carlo MI),
    Gaussian x quantizers (plain and dithered), Bernoulli x randomized
    response."""
    from .models import BernoulliModel
    from .channels import AwgnChannel, BinarySymmetricChannel

    rows: list[SweepRow] = []
    bern = BernoulliModel()
    for t in BERNOULLI_THETAS:
        for p in BSC_PS:
            rows.append(SweepRow("bernoulli_bsc", t, p, thm1_verify(bern, BinarySymmetricChannel(p), t)))
    for i, s in enumerate(GAUSS_SIGMAS):
        for j, sn in enumerate(AWGN_NOISES):
            rep = thm1_verify(GaussianLocation(s), AwgnChannel(sn), 0.0, "mc", mc_samples, _sweep_seed(seed, i, j))
            rows.append(SweepRow("gaussian_awgn_mc", s, sn, rep))
    g = GaussianLocation(1.0)
    for dither in (False, True):
        for k in QUANTIZER_BITS:
            for t in (0.0, 0.5):
                q = QuantizerChannel(k, *quantizer_range, dither=dither)
                rows.append(SweepRow("gaussian_quantizer" + ("_dither" if dither else ""), k, t, thm1_verify(g, q, t)))
    for t in BERNOULLI_THETAS:
        for eps in RR_EPSILONS:
            rows.append(SweepRow("bernoulli_rr", t, eps, thm1_verify(bern, RandomizedResponseChannel(eps), t)))
    return rows


def _sweep_seed(seed, *key):
    from .rng import as_seed_sequence

    ss = as_seed_sequence(seed)
    return np.random.SeedSequence(ss.entropy, spawn_key=tuple(ss.spawn_key) + (1000,) + key)


def quantizer_recovery(model: GaussianLocation, bits: int, theta=0.0, low=-2.0, high=2.0, dither=False) -> BoundReport:
    """``I(X;Y) <= k ln 2`` for a k-bit quantizer, with the Fisher bound's
    right side carried along in the components."""
    q = QuantizerChannel(bits, low, high, dither)
    mi = mutual_information(model, q, theta)
    N = model.subgaussian_param(theta)
    return BoundReport(
        "kbit_mi_cap",
        mi.value,
        bits * math.log(2),
        0.0,
        {"bits": bits, "thm1_rhs": 2 * N * N * mi.value, "thm1_rhs_cap": 2 * N * N * bits * math.log(2)},
    )


def rr_information_report(epsilons: Iterable[float], theta=0.5) -> list[dict]:
    """``I(X;Y)`` of binary randomized response versus ``eps`` and ``eps^2``.

    ``I <= eps`` is a hard check; ``I / eps^2`` is only reported.
    """
    from .models import BernoulliModel

    model = BernoulliModel()
    out = []
    for eps in epsilons:
        mi = mutual_information(model, RandomizedResponseChannel(eps), theta).value
        out.append({
            "epsilon": eps,
            "mi_nats": mi,
            "mi_over_eps": mi / eps,
            "mi_over_eps_sq": mi / eps**2,
            "verdict": verdict(mi, eps),
        })
    return out
