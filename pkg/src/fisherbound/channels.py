"""Transition kernels p(y|x) applied to statistical samples."""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from typing import Callable

import numpy as np
from scipy.special import expit

from .errors import DomainError, ShapeError, UnsupportedOperationError, ValidationError
from .rng import SeedLike, make_rng

ROW_SUM_TOL = 1e-12


class Channel(ABC):
    kind: str = "abstract"
    input_kind: str = "real"  # "real" | "discrete" | "any"
    output_kind: str = "real"  # "real" | "discrete" | "any"
    input_size: int | None = None
    output_size: int | None = None
    deterministic: bool = False

    @abstractmethod
    def kernel_log_density(self, x, y) -> np.ndarray:
        ...

    @abstractmethod
    def sample(self, x, rng: SeedLike):
        ...

    @abstractmethod
    def to_dict(self) -> dict:
        ...


class DiscreteChannel(Channel):
    """Row-stochastic matrix channel: ``matrix[x, y] = p(y|x)``."""

    kind = "matrix"
    input_kind = "discrete"
    output_kind = "discrete"

    def __init__(self, matrix):
        m = np.array(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
            raise ValidationError("matrix channel: expected a non-empty 2-D array")
        if np.any(m < 0) or not np.all(np.isfinite(m)):
            raise ValidationError("matrix channel: entries must be finite and nonnegative")
        bad = np.abs(m.sum(axis=1) - 1.0) > 1e-9
        if np.any(bad):
            raise ValidationError(f"matrix channel: rows {np.flatnonzero(bad).tolist()} do not sum to 1")
        # remove the residual rounding so rows sum to 1 to machine precision
        self.matrix = m / m.sum(axis=1, keepdims=True)
        self.matrix.setflags(write=False)
        self.input_size, self.output_size = m.shape
        self.deterministic = bool(np.all((self.matrix == 0) | (self.matrix == 1)))

    def _check(self, arr, size, what):
        arr = np.asarray(arr)
        if arr.dtype.kind == "f" and np.all(np.mod(arr, 1) == 0):
            arr = arr.astype(np.int64)
        if arr.dtype.kind not in "iub" or np.any(arr < 0) or np.any(arr >= size):
            raise DomainError(f"{self.kind} channel: {what} outside alphabet of size {size}")
        return arr.astype(np.int64)

    def kernel_log_density(self, x, y):
        x = self._check(x, self.input_size, "input")
        y = self._check(y, self.output_size, "output")
        with np.errstate(divide="ignore"):
            return np.log(self.matrix[x, y])

    def output_pmf(self, x) -> np.ndarray:
        return self.matrix[self._check(x, self.input_size, "input")]

    def sample(self, x, rng):
        x = self._check(x, self.input_size, "input")
        rng = make_rng(rng)
        cdf = np.cumsum(self.matrix, axis=1)[x]
        u = rng.random(x.shape)
        y = np.sum(u[..., None] >= cdf, axis=-1)
        return np.minimum(y, self.output_size - 1)

    def tensor_power(self, copies: int) -> "DiscreteChannel":
        m = np.ones((1, 1))
        for _ in range(copies):
            m = np.kron(m, self.matrix)
        return DiscreteChannel(m)

    def to_dict(self):
        return {"channel": "matrix", "rows": self.matrix.tolist()}


class BinarySymmetricChannel(DiscreteChannel):
    kind = "bsc"

    def __init__(self, p: float):
        if not 0.0 <= p <= 1.0:
            raise ValidationError("bsc: crossover probability must be in [0, 1]")
        self.p = float(p)
        super().__init__([[1.0 - p, p], [p, 1.0 - p]])

    def to_dict(self):
        return {"channel": "bsc", "p": self.p}


class BinaryErasureChannel(DiscreteChannel):
    """Outputs ``{0, 1, 2}`` with 2 the erasure symbol."""

    kind = "bec"

    def __init__(self, erasure: float):
        if not 0.0 <= erasure <= 1.0:
            raise ValidationError("bec: erasure probability must be in [0, 1]")
        self.erasure = float(erasure)
        e = self.erasure
        super().__init__([[1.0 - e, 0.0, e], [0.0, 1.0 - e, e]])

    def to_dict(self):
        return {"channel": "bec", "erasure": self.erasure}


class RandomizedResponseChannel(DiscreteChannel):
    """Binary randomized response: keep with probability e^eps / (1 + e^eps)."""

    kind = "rr"

    def __init__(self, epsilon: float):
        if not epsilon > 0:
            raise ValidationError("rr: epsilon must be positive")
        self.epsilon = float(epsilon)
        flip = float(expit(-self.epsilon))
        self.flip = flip
        super().__init__([[1.0 - flip, flip], [flip, 1.0 - flip]])

    def to_dict(self):
        return {"channel": "rr", "epsilon": self.epsilon}


def identity_channel(size: int) -> DiscreteChannel:
    ch = DiscreteChannel(np.eye(size))
    ch.kind = "identity"
    return ch


class AwgnChannel(Channel):
    """``Y = X + W`` with ``W ~ N(0, sigma_noise^2 I)``.

    ``sigma_noise = 0`` is allowed for simulation (noiseless relay) but has
    no density.
    """

    kind = "awgn"
    input_kind = "real"
    output_kind = "real"

    def __init__(self, sigma_noise: float, dim: int = 1):
        if not sigma_noise >= 0 or not math.isfinite(sigma_noise):
            raise ValidationError("awgn: sigma_noise must be finite and nonnegative")
        self.sigma_noise = float(sigma_noise)
        self.dim = int(dim)
        self.deterministic = self.sigma_noise == 0.0

    def kernel_log_density(self, x, y):
        if self.deterministic:
            raise UnsupportedOperationError("awgn with sigma_noise=0 is deterministic and has no density")
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        z = (y - x) / self.sigma_noise
        if z.ndim == 0:
            z = z[None]
        return -0.5 * np.sum(z * z, axis=-1) - z.shape[-1] * (
            math.log(self.sigma_noise) + 0.5 * math.log(2 * math.pi)
        )

    def sample(self, x, rng):
        x = np.asarray(x, dtype=float)
        rng = make_rng(rng)
        if self.deterministic:
            return x.copy()
        return x + self.sigma_noise * rng.standard_normal(x.shape)

    def to_dict(self):
        return {"channel": "awgn", "sigma_noise": self.sigma_noise}


class QuantizerChannel(Channel):
    """``bits``-bit uniform quantizer on ``[low, high]``.

    ``2**bits`` equal-width bins; the outer bins absorb the tails and a
    point on a bin edge goes to the bin on its right. With ``dither`` the
    input is shifted by ``U ~ Uniform(-w/2, w/2)`` (``w`` the bin width)
    before quantizing, which makes the kernel non-degenerate.
    """

    kind = "quantizer"
    input_kind = "real"
    output_kind = "discrete"

    def __init__(self, bits: int, low: float = -1.0, high: float = 1.0, dither: bool = False):
        if int(bits) != bits or bits < 1:
            raise ValidationError("quantizer: bits must be a positive integer")
        if not high > low:
            raise ValidationError("quantizer: range must satisfy low < high")
        self.bits = int(bits)
        self.low = float(low)
        self.high = float(high)
        self.dither = bool(dither)
        self.levels = 2**self.bits
        self.width = (self.high - self.low) / self.levels
        self.edges = np.linspace(self.low, self.high, self.levels + 1)
        self.interior = self.edges[1:-1]
        self.input_size = None
        self.output_size = self.levels
        self.deterministic = not self.dither

    @staticmethod
    def _scalar_input(x):
        x = np.asarray(x, dtype=float)
        if x.ndim >= 1 and x.shape[-1] == 1:
            x = x[..., 0]
        return x

    def quantize(self, x) -> np.ndarray:
        x = self._scalar_input(x)
        return np.searchsorted(self.interior, x, side="right")

    def bin_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.concatenate([[-np.inf], self.interior])
        hi = np.concatenate([self.interior, [np.inf]])
        return lo, hi

    def output_pmf(self, x) -> np.ndarray:
        """``p(y|x)`` for every bin, shape ``x.shape + (levels,)``."""
        x = self._scalar_input(x)
        if not self.dither:
            return np.eye(self.levels)[self.quantize(x)]
        lo, hi = self.bin_bounds()
        half = 0.5 * self.width
        a = np.maximum(x[..., None] - half, lo)
        b = np.minimum(x[..., None] + half, hi)
        return np.clip(b - a, 0.0, None) / self.width

    def kernel_log_density(self, x, y):
        if not self.dither:
            raise UnsupportedOperationError(
                "deterministic quantizer has a point-mass kernel; use output_pmf(x) instead"
            )
        y = np.asarray(y)
        if y.dtype.kind not in "iu" or np.any(y < 0) or np.any(y >= self.levels):
            raise DomainError(f"quantizer: output outside {{0, ..., {self.levels - 1}}}")
        pmf = self.output_pmf(x)
        with np.errstate(divide="ignore"):
            return np.log(np.take_along_axis(pmf, y[..., None].astype(np.int64), axis=-1)[..., 0])

    def sample(self, x, rng):
        x = self._scalar_input(x)
        if self.dither:
            rng = make_rng(rng)
            x = x + rng.uniform(-0.5 * self.width, 0.5 * self.width, size=x.shape)
        return self.quantize(x)

    def to_dict(self):
        return {"channel": "quantizer", "bits": self.bits, "range": [self.low, self.high], "dither": self.dither}


class FunctionChannel(Channel):
    """Deterministic map ``y = fn(x)``; used for transcript-dependent relays."""

    kind = "function"
    input_kind = "any"
    output_kind = "any"
    deterministic = True

    def __init__(self, fn: Callable, name: str = "function"):
        self.fn = fn
        self.name = name

    def kernel_log_density(self, x, y):
        raise UnsupportedOperationError("function channel is deterministic and has no density")

    def sample(self, x, rng=None):
        return self.fn(x)

    def to_dict(self):
        return {"channel": "function", "name": self.name}


def push_forward_discrete(model, channel: DiscreteChannel, theta) -> np.ndarray:
    """Exact output pmf ``p_theta(y) = sum_x p(y|x) p_theta(x)``."""
    if not getattr(model, "discrete", False):
        raise ShapeError("push_forward_discrete needs a discrete model")
    if not isinstance(channel, DiscreteChannel):
        raise ShapeError("push_forward_discrete needs a matrix channel")
    if model.alphabet_size != channel.input_size:
        raise ShapeError(
            f"model alphabet size {model.alphabet_size} != channel input size {channel.input_size}"
        )
    return model.pmf(theta) @ channel.matrix


def sample_channel(channel: Channel, x, rng):
    return channel.sample(x, rng)


def channel_from_dict(desc: dict) -> Channel:
    kind = desc.get("channel")
    if kind == "awgn":
        return AwgnChannel(float(desc["sigma_noise"]), int(desc.get("dim", 1)))
    if kind == "bsc":
        return BinarySymmetricChannel(float(desc["p"]))
    if kind == "bec":
        return BinaryErasureChannel(float(desc["erasure"]))
    if kind == "quantizer":
        low, high = desc.get("range", [-1.0, 1.0])
        return QuantizerChannel(int(desc["bits"]), float(low), float(high), bool(desc.get("dither", False)))
    if kind == "rr":
        return RandomizedResponseChannel(float(desc["epsilon"]))
    if kind == "matrix":
        return DiscreteChannel(desc["rows"])
    if kind == "identity":
        return identity_channel(int(desc["size"]))
    raise ValidationError(f"unknown channel kind {kind!r}")
