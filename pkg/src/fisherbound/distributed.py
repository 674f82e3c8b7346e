"""Blackboard protocols over n nodes and Monte Carlo risk of their estimators.

On round t every node i, in index order, writes ``Y_{i,t}`` drawn from a
channel chosen by ``channel_factory(i, t, transcript_so_far)`` and applied
to its own sample ``X_i``. The transcript is stored round-major.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import kernels
from .bounds import van_trees_lower_bound
from .channels import AwgnChannel, Channel
from .errors import ParameterError, ProtocolError, ValidationError
from .info import mi_gaussian_awgn, mutual_information
from .models import GaussianLocation, StatModel
from .rng import SeedLike, as_seed_sequence, chunk_sizes, make_rng, substream

ChannelFactory = Callable[[int, int, "Transcript"], Channel]

DEFAULT_TRIALS = 100_000
SUP_GRID_POINTS = 11


@dataclass
class Transcript:
    n: int
    T: int
    messages: list = field(default_factory=list)  # messages[t][i]

    def get(self, i: int, t: int):
        return self.messages[t][i]

    def round(self, t: int) -> list:
        return self.messages[t]

    @property
    def complete(self) -> bool:
        return len(self.messages) == self.T and all(len(r) == self.n for r in self.messages)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.messages)

    def flat(self) -> list:
        """Messages in write order: round-major, node index within round."""
        return [m for r in self.messages for m in r]


@dataclass
class ProtocolConfig:
    model: StatModel
    theta: np.ndarray
    n: int
    T: int = 1
    channel: Optional[Channel] = None
    channel_factory: Optional[ChannelFactory] = None
    seed: int = 0

    def __post_init__(self):
        self.theta = self.model.check_theta(self.theta)
        if self.n < 1 or self.T < 1:
            raise ValidationError("need n >= 1 and T >= 1")
        if (self.channel is None) == (self.channel_factory is None):
            raise ValidationError("give exactly one of channel or channel_factory")

    @property
    def static(self) -> bool:
        return self.channel is not None

    def channel_for(self, i: int, t: int, partial: Transcript) -> Channel:
        if self.channel is not None:
            return self.channel
        return self.channel_factory(i, t, partial)


def _check_input(channel: Channel, model: StatModel):
    want = "discrete" if model.discrete else "real"
    if channel.input_kind not in (want, "any"):
        raise ProtocolError(
            f"channel {channel.kind!r} takes {channel.input_kind} inputs but {model.family} samples are {want}"
        )
    if want == "discrete" and channel.input_size not in (None, model.alphabet_size):
        raise ProtocolError(
            f"channel input alphabet {channel.input_size} != model alphabet {model.alphabet_size}"
        )


def run_protocol(config: ProtocolConfig, rng: SeedLike | None = None) -> Transcript:
    """One execution of the protocol; draws samples first, then messages."""
    rng = make_rng(config.seed if rng is None else rng)
    model = config.model
    xs = model.sample(config.theta, rng, size=config.n)
    tr = Transcript(config.n, config.T)
    for t in range(config.T):
        tr.messages.append([])
        for i in range(config.n):
            ch = config.channel_for(i, t, tr)
            _check_input(ch, model)
            tr.messages[t].append(_scalarize(ch.sample(xs[i], rng)))
    return tr


def _scalarize(y):
    arr = np.asarray(y)
    if arr.ndim == 0:
        return arr.item()
    if arr.size == 1:
        return arr.reshape(-1)[0].item()
    return arr


def averaging_estimator(transcript) -> np.ndarray:
    """Mean of the first-round messages.

    Accepts a :class:`Transcript`, a 1-D array of scalar messages, or a
    batch: ``(trials, n)`` for scalar messages, ``(trials, n, d)`` for
    vector ones.
    """
    if isinstance(transcript, Transcript):
        msgs = transcript.round(0)
        try:
            arr = np.asarray(msgs, dtype=float)
        except (TypeError, ValueError) as exc:
            raise TypeError("averaging estimator needs numeric messages") from exc
        return np.atleast_1d(arr.mean(axis=0))
    arr = np.asarray(transcript)
    if arr.dtype.kind not in "fiub":
        raise TypeError("averaging estimator needs numeric messages")
    if arr.ndim == 3:
        return arr.mean(axis=1)
    return arr.mean(axis=-1)


@dataclass
class EstimationResult:
    estimator: str
    n_trials: int
    empirical_mse: float
    mse_std_error: float
    mean_estimate: np.ndarray
    mean_std_error: np.ndarray
    lower_bound: float
    total_mi: float
    closed_form_mse: Optional[float] = None
    mi_label: str = "exact"

    @property
    def ci(self) -> float:
        """Half-width of the normal-approximation 95% interval on the MSE."""
        return 1.959963984540054 * self.mse_std_error

    @property
    def tightness_ratio(self) -> float:
        return self.lower_bound / self.empirical_mse if self.empirical_mse > 0 else math.inf

    @property
    def closed_form_ratio(self) -> Optional[float]:
        if self.closed_form_mse is None:
            return None
        return self.lower_bound / self.closed_form_mse

    def to_dict(self):
        return {
            "estimator": self.estimator,
            "n_trials": self.n_trials,
            "empirical_mse": self.empirical_mse,
            "mse_std_error": self.mse_std_error,
            "ci": self.ci,
            "mean_estimate": np.atleast_1d(self.mean_estimate).tolist(),
            "mean_std_error": np.atleast_1d(self.mean_std_error).tolist(),
            "lower_bound": self.lower_bound,
            "total_mi_nats": self.total_mi,
            "mi_label": self.mi_label,
            "closed_form_mse": self.closed_form_mse,
            "tightness_ratio": self.tightness_ratio,
        }


def sup_total_mi(config: ProtocolConfig, grid_points: int = SUP_GRID_POINTS, box: float = 1.0) -> tuple[float, str]:
    """sup over a ``grid_points``-per-axis grid of ``[-box, box]^d`` of the
    summed per-node information. Exact for independent one-round channels;
    labelled as a surrogate for transcript-dependent factories."""
    model = config.model
    if isinstance(model, GaussianLocation) and isinstance(config.channel, AwgnChannel):
        # theta-free
        est = mi_gaussian_awgn(model.sigma, config.channel.sigma_noise, config.n * config.T, model.dim)
        return est.value, "exact" if config.T == 1 else "per-node-sum surrogate"
    if not config.static:
        return math.nan, "unavailable"
    axes = [np.linspace(-box, box, grid_points)] * model.dim
    best = -math.inf
    for pt in np.array(np.meshgrid(*axes, indexing="ij")).reshape(model.dim, -1).T:
        try:
            val = mutual_information(model, config.channel, pt).value
        except ParameterError:
            continue
        best = max(best, val)
    return config.n * config.T * best, "exact" if config.T == 1 else "per-node-sum surrogate"


def _lower_bound(config: ProtocolConfig, total: float) -> float:
    model = config.model
    if not isinstance(model, GaussianLocation) or math.isnan(total):
        return math.nan
    return van_trees_lower_bound(model.dim, model.sigma, total)


def empirical_mse(
    config: ProtocolConfig,
    estimator: Callable = averaging_estimator,
    n_trials: int = DEFAULT_TRIALS,
    seed: SeedLike | None = None,
    chunk_trials: int | None = None,
) -> EstimationResult:
    """Mean squared error of ``estimator`` over independent protocol runs.

    Trial chunk ``c`` draws from sub-stream ``(1, c)`` of the seed, so the
    result does not depend on how chunks are scheduled. For a static
    channel the estimator receives a batch of first-round messages of shape
    ``(trials, n)`` (or ``(trials, n, d)``); otherwise one
    :class:`Transcript` at a time.
    """
    if n_trials < 100:
        raise ValidationError("n_trials must be >= 100")
    seed = config.seed if seed is None else seed
    ss = as_seed_sequence(seed)
    model = config.model
    d = model.dim
    if chunk_trials is None:
        chunk_trials = max(1, min(n_trials, (1 << 20) // max(config.n * d, 1)))
    sq_parts, est_sum, est_sq, count = [], np.zeros(d), np.zeros(d), 0
    for c, size in enumerate(chunk_sizes(n_trials, chunk_trials)):
        rng = substream(ss, 1, c)
        if config.static and config.T == 1:
            _check_input(config.channel, model)
            x = model.sample(config.theta, rng, size=(size, config.n))
            y = np.asarray(config.channel.sample(x, rng), dtype=float)
            if d == 1 and y.ndim == 3:
                y = y[..., 0]
            try:
                est = np.asarray(estimator(y), dtype=float).reshape(size, d)
            except Exception as exc:
                raise ProtocolError(f"estimator failed in trial chunk starting at {c * chunk_trials}: {exc}") from exc
        else:
            rows = []
            for k in range(size):
                tr = run_protocol(config, rng)
                try:
                    rows.append(np.asarray(estimator(tr), dtype=float).reshape(d))
                except Exception as exc:
                    raise ProtocolError(f"estimator failed on trial {c * chunk_trials + k}: {exc}") from exc
            est = np.array(rows)
        err = np.sum((est - config.theta) ** 2, axis=1)
        sq_parts.append(err)
        est_sum += est.sum(axis=0)
        est_sq += np.sum(est**2, axis=0)
        count += size
    return _finish(config, np.concatenate(sq_parts), est_sum, est_sq, count, getattr(estimator, "__name__", "estimator"))


def _finish(config, sq, est_sum, est_sq, count, name, closed_form=None) -> EstimationResult:
    mse = float(sq.mean())
    mse_se = float(sq.std(ddof=1) / math.sqrt(count))
    mean = est_sum / count
    var = np.maximum(est_sq / count - mean**2, 0.0) * count / (count - 1)
    total, label = sup_total_mi(config)
    lb = _lower_bound(config, total)
    if closed_form is None:
        closed_form = averaging_closed_form_mse(config)
    return EstimationResult(name, count, mse, mse_se, mean, np.sqrt(var / count), lb, total, closed_form, label)


def averaging_closed_form_mse(config: ProtocolConfig) -> Optional[float]:
    """``d (sigma^2 / n)(1 + sigma_noise^2 / sigma^2)`` for AWGN over Gaussian."""
    if isinstance(config.model, GaussianLocation) and isinstance(config.channel, AwgnChannel) and config.T == 1:
        s2 = config.model.sigma**2
        return config.model.dim * (s2 + config.channel.sigma_noise**2) / config.n
    return None


def simulate_awgn_averaging(
    sigma: float,
    sigma_noise: float,
    n: int,
    theta: float = 0.0,
    n_trials: int = DEFAULT_TRIALS,
    seed: SeedLike = 0,
    chunk_trials: int | None = None,
) -> EstimationResult:
    """Averaging estimator over n AWGN links from N(theta, sigma^2), d = 1.

    Same protocol as :func:`empirical_mse` with a static AWGN channel but
    fused into one kernel pass per chunk (numba when available).
    """
    config = ProtocolConfig(GaussianLocation(sigma), theta, n, channel=AwgnChannel(sigma_noise), seed=0)
    if n_trials < 100:
        raise ValidationError("n_trials must be >= 100")
    ss = as_seed_sequence(seed)
    if chunk_trials is None:
        chunk_trials = max(1, min(n_trials, (1 << 20) // n))
    th = float(config.theta[0])
    parts = []
    for c, size in enumerate(chunk_sizes(n_trials, chunk_trials)):
        rng = substream(ss, 1, c)
        z_x = rng.standard_normal((size, n))
        z_w = rng.standard_normal((size, n))
        parts.append(kernels.awgn_average(z_x, z_w, th, float(sigma), float(sigma_noise)))
    est = np.concatenate(parts)
    sq = (est - th) ** 2
    return _finish(config, sq, np.array([est.sum()]), np.array([np.sum(est**2)]), est.size, "averaging_estimator")


@dataclass
class TightnessResult:
    sigma: float
    sigma_noise: float
    n: int
    lower_bound: float
    closed_form_mse: float
    result: EstimationResult

    @property
    def ratio_closed_form(self) -> float:
        return self.lower_bound / self.closed_form_mse

    @property
    def ratio_empirical(self) -> float:
        return self.result.tightness_ratio

    def to_dict(self):
        return {
            "sigma": self.sigma,
            "sigma_noise": self.sigma_noise,
            "n": self.n,
            "lower_bound": self.lower_bound,
            "closed_form_mse": self.closed_form_mse,
            "ratio_closed_form": self.ratio_closed_form,
            "ratio_empirical": self.ratio_empirical,
            "result": self.result.to_dict(),
        }


def awgn_tightness_experiment(
    sigma: float,
    sigma_noise: float,
    n: int,
    n_trials: int = DEFAULT_TRIALS,
    seed: SeedLike = 0,
    theta: float = 0.0,
) -> TightnessResult:
    """Lower bound over achieved MSE of the averaging estimator.

    Tends to 1 as ``sigma^2 / sigma_noise^2 -> 0`` with ``n`` large enough
    that the prior term is negligible.
    """
    if sigma_noise < sigma:
        raise ValidationError("the tightness regime needs sigma_noise >= sigma")
    res = simulate_awgn_averaging(sigma, sigma_noise, n, theta, n_trials, seed)
    return TightnessResult(sigma, sigma_noise, n, res.lower_bound, res.closed_form_mse, res)


CSV_COLUMNS = ("trial_group", "n", "sigma", "sigma_noise", "mi_total_nats", "lower_bound", "empirical_mse", "ci", "ratio")


def results_csv(rows: list[tuple[str, TightnessResult]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for group, tr in rows:
        r = tr.result
        w.writerow([group, tr.n] + [f"{v:.12g}" for v in (
            tr.sigma, tr.sigma_noise, r.total_mi, r.lower_bound, r.empirical_mse, r.ci, r.tightness_ratio)])
    return buf.getvalue()
