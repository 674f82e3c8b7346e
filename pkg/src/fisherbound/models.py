"""Parametric families with score functions, samplers and sub-Gaussian audits.

Parameters are always handled as float arrays of shape ``(dim,)``; scalars
are accepted for one-dimensional families. Scores come back with shape
``x.shape[:-1] + (dim,)`` for vector samples and ``x.shape + (dim,)`` for
discrete (integer) samples.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError, LikelihoodRatioError, ParameterError, ValidationError
from .rng import SeedLike, make_rng

BOUNDARY_MARGIN = 1e-9

# lambda * N values probed by certify_subgaussian when no grid is given
STANDARD_LAMBDA_GRID = (-2.0, -1.0, -0.5, 0.5, 1.0, 2.0)


class StatModel(ABC):
    """A family ``{P_theta}`` on a fixed sample space."""

    family: str = "abstract"
    dim: int = 1
    discrete: bool = False

    def check_theta(self, theta) -> np.ndarray:
        arr = np.atleast_1d(np.asarray(theta, dtype=float))
        if arr.shape != (self.dim,):
            raise ParameterError(f"{self.family}: theta must have length {self.dim}, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ParameterError(f"{self.family}: theta must be finite")
        return arr

    @abstractmethod
    def log_density(self, theta, x) -> np.ndarray:
        ...

    @abstractmethod
    def score(self, theta, x) -> np.ndarray:
        ...

    @abstractmethod
    def sample(self, theta, rng: SeedLike, size=None):
        ...

    @abstractmethod
    def subgaussian_param(self, theta) -> float:
        """Declared parameter N with E exp(l<u,S>) <= exp(l^2 N^2 / 2)."""

    @abstractmethod
    def fisher_information(self, theta) -> np.ndarray:
        ...

    @abstractmethod
    def to_dict(self) -> dict:
        ...


class DiscreteModel(StatModel):
    """Model on the alphabet ``{0, ..., alphabet_size - 1}``."""

    discrete = True
    alphabet_size: int = 2

    @abstractmethod
    def pmf(self, theta) -> np.ndarray:
        ...

    @abstractmethod
    def score_table(self, theta) -> np.ndarray:
        """Score of every alphabet symbol, shape ``(alphabet_size, dim)``."""

    def _check_x(self, x) -> np.ndarray:
        arr = np.asarray(x)
        if arr.dtype.kind == "f":
            if not np.all(np.mod(arr, 1) == 0):
                raise DomainError(f"{self.family}: samples must be integers")
            arr = arr.astype(np.int64)
        elif arr.dtype.kind not in "iub":
            raise DomainError(f"{self.family}: samples must be integers")
        if np.any(arr < 0) or np.any(arr >= self.alphabet_size):
            raise DomainError(f"{self.family}: sample outside alphabet of size {self.alphabet_size}")
        return arr.astype(np.int64)

    def log_density(self, theta, x):
        x = self._check_x(x)
        with np.errstate(divide="ignore"):
            logp = np.log(self.pmf(theta))
        return logp[x]

    def score(self, theta, x):
        x = self._check_x(x)
        return self.score_table(theta)[x]

    def sample(self, theta, rng, size=None):
        rng = make_rng(rng)
        cdf = np.cumsum(self.pmf(theta))
        u = rng.random(size)
        idx = np.searchsorted(cdf, u, side="right")
        return np.minimum(idx, self.alphabet_size - 1)

    def fisher_information(self, theta):
        p = self.pmf(theta)
        s = self.score_table(theta)
        return (s * p[:, None]).T @ s


class BernoulliModel(DiscreteModel):
    family = "bernoulli"
    dim = 1
    alphabet_size = 2

    def check_theta(self, theta):
        arr = super().check_theta(theta)
        if not BOUNDARY_MARGIN <= arr[0] <= 1.0 - BOUNDARY_MARGIN:
            raise ParameterError(f"bernoulli: theta={arr[0]!r} not in (0, 1)")
        return arr

    def pmf(self, theta):
        t = self.check_theta(theta)[0]
        return np.array([1.0 - t, t])

    def score_table(self, theta):
        t = self.check_theta(theta)[0]
        return np.array([[-1.0 / (1.0 - t)], [1.0 / t]])

    def subgaussian_param(self, theta):
        t = self.check_theta(theta)[0]
        return max(1.0 / t, 1.0 / (1.0 - t))

    def fisher_information(self, theta):
        t = self.check_theta(theta)[0]
        return np.array([[1.0 / (t * (1.0 - t))]])

    def to_dict(self):
        return {"family": self.family}


@dataclass(frozen=True)
class GaussianLocation(StatModel):
    """N(theta, sigma^2 I_dim); ``box`` optionally restricts theta to
    ``[-box, box]^dim``."""

    sigma: float = 1.0
    dim: int = 1
    box: float | None = None

    family = "gaussian_location"
    discrete = False

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValidationError("gaussian_location: sigma must be positive")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValidationError("gaussian_location: dim must be a positive integer")
        if self.box is not None and not self.box > 0:
            raise ValidationError("gaussian_location: box must be positive")

    def check_theta(self, theta):
        arr = super().check_theta(theta)
        if self.box is not None and np.any(np.abs(arr) > self.box):
            raise ParameterError(f"gaussian_location: theta outside [-{self.box}, {self.box}]^{self.dim}")
        return arr

    def _check_x(self, x):
        arr = np.asarray(x, dtype=float)
        if self.dim == 1 and (arr.ndim == 0 or arr.shape[-1] != 1):
            arr = arr[..., None]
        if arr.shape[-1] != self.dim:
            raise DomainError(f"gaussian_location: samples must have trailing dimension {self.dim}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("gaussian_location: samples must be finite")
        return arr

    def log_density(self, theta, x):
        theta = self.check_theta(theta)
        z = (self._check_x(x) - theta) / self.sigma
        return -0.5 * np.sum(z * z, axis=-1) - self.dim * (math.log(self.sigma) + 0.5 * math.log(2 * math.pi))

    def score(self, theta, x):
        theta = self.check_theta(theta)
        return (self._check_x(x) - theta) / self.sigma**2

    def sample(self, theta, rng, size=None):
        theta = self.check_theta(theta)
        rng = make_rng(rng)
        shape = (self.dim,) if size is None else tuple(np.atleast_1d(size)) + (self.dim,)
        return theta + self.sigma * rng.standard_normal(shape)

    def subgaussian_param(self, theta=None):
        return 1.0 / self.sigma

    def fisher_information(self, theta=None):
        return np.eye(self.dim) / self.sigma**2

    def to_dict(self):
        out = {"family": self.family, "sigma": self.sigma, "dim": self.dim}
        if self.box is not None:
            out["box"] = self.box
        return out


def twist_normalizer(f0, f1, theta: float) -> tuple[float, float]:
    """``C_theta = sum f1^theta f0^(1-theta)`` and its derivative in theta."""
    f0, f1 = _check_twist_pair(f0, f1)
    theta = float(theta)
    if not 0.0 <= theta <= 1.0:
        raise ParameterError(f"twist: theta={theta!r} not in [0, 1]")
    if theta == 0.0:
        c = 1.0
    elif theta == 1.0:
        c = 1.0
    else:
        c = float(np.sum(f1**theta * f0 ** (1.0 - theta)))
    dc = float(np.sum(f1**theta * f0 ** (1.0 - theta) * np.log(f1 / f0)))
    return c, dc


def _check_twist_pair(f0, f1) -> tuple[np.ndarray, np.ndarray]:
    f0 = np.asarray(f0, dtype=float)
    f1 = np.asarray(f1, dtype=float)
    if f0.ndim != 1 or f0.shape != f1.shape or f0.size < 2:
        raise ValidationError("twist: f0 and f1 must be 1-D pmfs on the same alphabet")
    if np.any(f0 < 0) or np.any(f1 < 0):
        raise ValidationError("twist: pmfs must be nonnegative")
    if np.any(f0 == 0) or np.any(f1 == 0):
        raise LikelihoodRatioError("twist: zero-mass symbol makes the likelihood-ratio bound infinite")
    for name, f in (("f0", f0), ("f1", f1)):
        if abs(f.sum() - 1.0) > 1e-9:
            raise ValidationError(f"twist: {name} must sum to 1")
    return f0, f1


class TwistFamily(DiscreteModel):
    """Exponential twist ``f_theta ~ f1^theta f0^(1-theta)`` for theta in [0, 1].

    The endpoints are admissible: the family reduces to ``f0`` and ``f1``
    there and every quantity stays finite.
    """

    family = "twist"
    dim = 1

    def __init__(self, f0: Sequence[float], f1: Sequence[float]):
        self.f0, self.f1 = _check_twist_pair(f0, f1)
        self.alphabet_size = self.f0.size
        self.log_lr = np.log(self.f1 / self.f0)
        self.c = float(np.exp(np.max(np.abs(self.log_lr))))

    def check_theta(self, theta):
        arr = super().check_theta(theta)
        if not 0.0 <= arr[0] <= 1.0:
            raise ParameterError(f"twist: theta={arr[0]!r} not in [0, 1]")
        return arr

    def normalizer(self, theta) -> tuple[float, float]:
        return twist_normalizer(self.f0, self.f1, self.check_theta(theta)[0])

    def pmf(self, theta):
        t = self.check_theta(theta)[0]
        if t == 0.0:
            return self.f0.copy()
        if t == 1.0:
            return self.f1.copy()
        logw = t * np.log(self.f1) + (1.0 - t) * np.log(self.f0)
        return np.exp(logw - logsumexp(logw))

    def score_table(self, theta):
        c, dc = self.normalizer(theta)
        return (self.log_lr - dc / c)[:, None]

    def subgaussian_param(self, theta=None):
        # score is bounded by 2 ln c on the whole path
        return 2.0 * math.log(self.c)

    def to_dict(self):
        return {"family": self.family, "f0": self.f0.tolist(), "f1": self.f1.tolist()}


class ProductModel(DiscreteModel):
    """``copies`` independent draws from a discrete ``base``, each with its
    own parameter block.

    Joint symbols are mixed-radix with the first copy most significant,
    which matches ``np.kron`` ordering.
    """

    def __init__(self, base: DiscreteModel, copies: int):
        if copies < 1:
            raise ValidationError("product: copies must be >= 1")
        self.base = base
        self.copies = int(copies)
        self.dim = base.dim * self.copies
        self.alphabet_size = base.alphabet_size**self.copies
        self.family = f"product[{base.family}]^{self.copies}"

    def blocks(self, theta) -> list[np.ndarray]:
        theta = super().check_theta(theta)
        return [theta[i * self.base.dim:(i + 1) * self.base.dim] for i in range(self.copies)]

    def check_theta(self, theta):
        for block in self.blocks(theta):
            self.base.check_theta(block)
        return np.atleast_1d(np.asarray(theta, dtype=float))

    def pmf(self, theta):
        out = np.ones(1)
        for block in self.blocks(theta):
            out = np.kron(out, self.base.pmf(block))
        return out

    def score_table(self, theta):
        k = self.base.alphabet_size
        digits = np.indices((k,) * self.copies).reshape(self.copies, -1)
        parts = [self.base.score_table(block)[digits[i]] for i, block in enumerate(self.blocks(theta))]
        return np.concatenate(parts, axis=1)

    def subgaussian_param(self, theta):
        return max(self.base.subgaussian_param(b) for b in self.blocks(theta))

    def to_dict(self):
        return {"family": "product", "base": self.base.to_dict(), "copies": self.copies}


# -- sub-Gaussian audit --------------------------------------------------------


@dataclass
class SubGaussianCertificate:
    certified: bool
    N: float
    max_gap: float
    failing_lambda: float | None = None
    method: str = "exact"

    def to_dict(self):
        return {
            "certified": self.certified,
            "N": self.N,
            "max_gap": self.max_gap,
            "failing_lambda": self.failing_lambda,
            "method": self.method,
        }


def _directions(dim: int, count: int, rng) -> np.ndarray:
    axes = np.eye(dim)
    extra = max(count - dim, 0)
    if extra == 0:
        return axes[:max(count, 1)]
    u = rng.standard_normal((extra, dim))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    return np.vstack([axes, u])


def certify_subgaussian(
    model: StatModel,
    theta,
    lambda_grid: Iterable[float] | None = None,
    direction_count: int = 10,
    mc_samples: int = 200_000,
    seed: SeedLike = 0,
    z: float = 4.0,
) -> SubGaussianCertificate:
    """Audit the declared N against the MGF inequality on a lambda grid.

    ``max_gap`` is the largest ``log E exp(l<u,S>) - l^2 N^2 / 2`` over the
    grid and directions (<= 0 when the bound holds). Discrete models are
    checked exactly; continuous ones by Monte Carlo, where a point passes if
    the MGF estimate is within ``z`` standard errors of the bound. A grid
    point whose MGF estimate has relative error above 1/2 is reported as
    failing instead of certified.
    """
    N = float(model.subgaussian_param(theta))
    if lambda_grid is None:
        scale = 1.0 / N if N > 0 else 1.0
        lambda_grid = [t * scale for t in STANDARD_LAMBDA_GRID]
    lambdas = np.asarray(list(lambda_grid), dtype=float)
    rng = make_rng(seed)
    dirs = _directions(model.dim, direction_count, rng)

    if isinstance(model, DiscreteModel):
        p = model.pmf(theta)
        proj = model.score_table(theta) @ dirs.T  # (K, m)
        worst, failing = -np.inf, None
        for lam in lambdas:
            log_mgf = logsumexp(lam * proj, b=p[:, None], axis=0)
            gap = float(np.max(log_mgf - 0.5 * lam**2 * N**2))
            if gap > worst:
                worst = gap
            if gap > 1e-12 and failing is None:
                failing = float(lam)
        return SubGaussianCertificate(failing is None, N, worst, failing, "exact")

    x = model.sample(theta, rng, size=mc_samples)
    proj = model.score(theta, x) @ dirs.T  # (n, m)
    worst, failing = -np.inf, None
    for lam in lambdas:
        # work with exp(l<u,S> - max) so large l cannot overflow; the
        # relative standard error is scale-free
        e = lam * proj
        top = e.max(axis=0)
        vals = np.exp(e - top)
        scaled = vals.mean(axis=0)
        rel_se = vals.std(axis=0, ddof=1) / (scaled * math.sqrt(mc_samples))
        if np.any(rel_se > 0.5):
            return SubGaussianCertificate(False, N, math.inf, float(lam), "monte_carlo")
        gaps = top + np.log(scaled) - 0.5 * lam**2 * N**2
        worst = max(worst, float(np.max(gaps)))
        if np.any(gaps > np.log1p(z * rel_se)) and failing is None:
            failing = float(lam)
    return SubGaussianCertificate(failing is None, N, worst, failing, "monte_carlo")


# -- JSON descriptors -----------------------------------------------------------


def model_from_dict(desc: dict) -> StatModel:
    family = desc.get("family")
    if family == "gaussian_location":
        return GaussianLocation(
            sigma=float(desc.get("sigma", 1.0)),
            dim=int(desc.get("dim", 1)),
            box=None if desc.get("box") is None else float(desc["box"]),
        )
    if family == "bernoulli":
        return BernoulliModel()
    if family == "twist":
        return TwistFamily(desc["f0"], desc["f1"])
    if family == "product":
        base = model_from_dict(desc["base"])
        if not isinstance(base, DiscreteModel):
            raise ValidationError("product: base family must be discrete")
        return ProductModel(base, int(desc["copies"]))
    raise ValidationError(f"unknown model family {family!r}")


# functional aliases


def log_density(model: StatModel, theta, x):
    return model.log_density(theta, x)


def score(model: StatModel, theta, x):
    return model.score(theta, x)


def sample(model: StatModel, theta, rng, size=None):
    return model.sample(theta, rng, size)
