import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from fisherbound import (
    AwgnChannel,
    BernoulliModel,
    BinaryErasureChannel,
    BinarySymmetricChannel,
    CapabilityError,
    ConvergenceError,
    DiscreteChannel,
    DivergenceInfiniteError,
    GaussianLocation,
    QuantizerChannel,
    ShapeError,
    TwistFamily,
    ValidationError,
    capacity_blahut_arimoto,
    js_divergence,
    kl_divergence,
    mi_gaussian_awgn,
    mi_monte_carlo,
    mutual_information,
)
from fisherbound.info import binary_entropy, mi_exact_discrete, mi_prior_from_js, mutual_information_pmf

LN2 = math.log(2)
MI_BSC = LN2 - binary_entropy(0.25)


def pmfs(k):
    return st.lists(st.floats(1e-3, 1.0), min_size=k, max_size=k).map(lambda v: np.array(v) / np.sum(v))


def channels(m, k):
    return st.lists(pmfs(k), min_size=m, max_size=m).map(np.array)


def _mi_mpmath(px, w):
    mpmath.mp.dps = 40
    py = [mpmath.fsum(mpmath.mpf(px[i]) * w[i][j] for i in range(len(px))) for j in range(len(w[0]))]
    return float(mpmath.fsum(
        mpmath.mpf(px[i]) * w[i][j] * mpmath.log(mpmath.mpf(w[i][j]) / py[j])
        for i in range(len(px)) for j in range(len(w[0])) if w[i][j] > 0 and px[i] > 0
    ))


# -- exact discrete MI ----------------------------------------------------------------------


def test_mi_exact_examples():
    b = BernoulliModel()
    est = mi_exact_discrete(b, BinarySymmetricChannel(0.25), 0.5)
    assert est.value == pytest.approx(0.1308, abs=1e-4)
    assert est.value == pytest.approx(_mi_mpmath([0.5, 0.5], [[0.75, 0.25], [0.25, 0.75]]), abs=1e-15)
    assert est.std_error == 0.0
    assert mi_exact_discrete(b, DiscreteChannel(np.eye(2)), 0.5).value == pytest.approx(LN2, abs=1e-15)
    assert mi_exact_discrete(b, BinarySymmetricChannel(0.5), 0.3).value == pytest.approx(0.0, abs=1e-15)


def test_mi_alphabet_mismatch():
    with pytest.raises((ShapeError, CapabilityError)):
        mi_exact_discrete(BernoulliModel(), DiscreteChannel(np.eye(3)), 0.5)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 5).flatmap(lambda m: st.integers(2, 5).flatmap(lambda k: st.tuples(pmfs(m), channels(m, k)))))
def test_mi_matches_oracle_and_bounds(args):
    px, w = args
    val = mutual_information_pmf(px, w)
    assert val == pytest.approx(_mi_mpmath(px, w.tolist()), abs=1e-12)
    assert -1e-15 <= val <= min(math.log(w.shape[0]), math.log(w.shape[1])) + 1e-12


# -- Gaussian AWGN ----------------------------------------------------------------------------


def test_mi_gaussian_awgn():
    assert mi_gaussian_awgn(1, 1).value == pytest.approx(0.3466, abs=1e-4)
    assert mi_gaussian_awgn(1, 1, n=100).value == pytest.approx(50 * LN2, rel=1e-14)
    assert mi_gaussian_awgn(1, 1e8).value < 1e-15
    assert mi_gaussian_awgn(1, 0.0).value == math.inf
    with pytest.raises(ValidationError):
        mi_gaussian_awgn(-1, 1)


# -- Monte Carlo MI ------------------------------------------------------------------------------


def test_mc_gaussian_awgn():
    est = mi_monte_carlo(GaussianLocation(1), AwgnChannel(1), 0.0, n_samples=1_000_000, seed=3)
    assert abs(est.value - 0.5 * LN2) < 0.002
    assert abs(est.value - 0.5 * LN2) <= 4 * est.std_error


def test_mc_bernoulli_bsc():
    est = mi_monte_carlo(BernoulliModel(), BinarySymmetricChannel(0.25), 0.5, n_samples=1_000_000, seed=3)
    assert abs(est.value - MI_BSC) < 0.001
    assert est.value >= -3 * est.std_error


def test_mc_independent_output():
    est = mi_monte_carlo(BernoulliModel(), BinarySymmetricChannel(0.5), 0.3, n_samples=100_000, seed=3)
    assert abs(est.value) <= 3 * max(est.std_error, 1e-15)


@pytest.mark.parametrize("dither", [False, True])
def test_mc_quantizer_matches_quadrature(dither):
    g, q = GaussianLocation(1.0), QuantizerChannel(2, -1.5, 1.5, dither)
    exact = mutual_information(g, q, 0.3, "exact")
    est = mi_monte_carlo(g, q, 0.3, n_samples=400_000, seed=5)
    assert abs(est.value - exact.value) <= 4 * est.std_error


def test_mc_quantizer_one_bit_half_nat():
    # 1-bit sign quantizer of N(0, 1): I = H(Y) = ln 2
    g, q = GaussianLocation(1.0), QuantizerChannel(1, -1, 1)
    assert mutual_information(g, q, 0.0).value == pytest.approx(LN2, abs=1e-10)


def test_mc_multidimensional_awgn():
    g, ch = GaussianLocation(0.5, dim=3), AwgnChannel(1.0, dim=3)
    est = mi_monte_carlo(g, ch, np.zeros(3), n_samples=300_000, seed=2)
    assert abs(est.value - 1.5 * math.log(1.25)) <= 4 * est.std_error


@pytest.mark.parametrize("model, channel, theta", [
    (GaussianLocation(1), AwgnChannel(0.5), 0.2),
    (BernoulliModel(), BinarySymmetricChannel(0.2), 0.4),
])
def test_mc_threaded_equals_sequential(monkeypatch, model, channel, theta):
    monkeypatch.setenv("FISHERBOUND_THREADS", "1")
    a = mi_monte_carlo(model, channel, theta, n_samples=100_000, seed=9, chunk=1 << 13)
    monkeypatch.setenv("FISHERBOUND_THREADS", "4")
    b = mi_monte_carlo(model, channel, theta, n_samples=100_000, seed=9, chunk=1 << 13)
    assert a.value == b.value and a.std_error == b.std_error


def test_mi_estimate_json_record():
    rec = mi_monte_carlo(BernoulliModel(), BinarySymmetricChannel(0.1), 0.4, n_samples=1000, seed=1).to_dict()
    assert set(rec) == {"quantity", "value_nats", "std_error", "method", "n_samples"}


# -- capacity ---------------------------------------------------------------------------------------


def test_capacity_examples():
    r = capacity_blahut_arimoto(BinarySymmetricChannel(0.25))
    assert r.capacity == pytest.approx(MI_BSC, abs=1e-10)
    np.testing.assert_allclose(r.input_pmf, [0.5, 0.5], atol=1e-10)
    assert capacity_blahut_arimoto(DiscreteChannel(np.eye(2))).capacity == pytest.approx(LN2, abs=1e-12)
    assert capacity_blahut_arimoto(BinaryErasureChannel(0.3)).capacity == pytest.approx(0.7 * LN2, abs=1e-12)


def test_capacity_z_channel_closed_form():
    # Z-channel with crossover q: C = ln(1 + (1-q) q^{q/(1-q)})
    q = 0.3
    r = capacity_blahut_arimoto(DiscreteChannel([[1, 0], [q, 1 - q]]), tol=1e-13)
    assert r.capacity == pytest.approx(math.log(1 + (1 - q) * q ** (q / (1 - q))), abs=1e-10)


def test_capacity_errors():
    with pytest.raises(ValidationError):
        capacity_blahut_arimoto(DiscreteChannel([[0.5, 0.5]]), tol=0)
    with pytest.raises(ConvergenceError) as info:
        capacity_blahut_arimoto(DiscreteChannel([[0.9, 0.1, 0.0], [0.0, 0.2, 0.8], [0.3, 0.3, 0.4]]),
                                tol=1e-15, max_iter=3)
    assert info.value.gap > 0


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 5).flatmap(lambda m: st.integers(2, 5).flatmap(
    lambda k: st.tuples(channels(m, k), st.lists(pmfs(m), min_size=20, max_size=20)))))
def test_capacity_dominates_any_input(args):
    w, inputs = args
    tol = 1e-9
    cap = capacity_blahut_arimoto(DiscreteChannel(w), tol=tol).capacity
    for px in inputs:
        assert mutual_information_pmf(px, w) <= cap + tol


# -- divergences ---------------------------------------------------------------------------------------


def test_kl_examples():
    assert kl_divergence([0.3, 0.7], [0.3, 0.7]).value == 0.0
    assert kl_divergence([0.25, 0.75], [0.5, 0.5]).value == pytest.approx(0.75 * math.log(1.5) + 0.25 * math.log(0.5))
    est = kl_divergence(stats.norm(0, 1), stats.norm(0.5, 1), n_samples=400_000, seed=1)
    assert abs(est.value - 0.125) <= 4 * est.std_error
    with pytest.raises(DivergenceInfiniteError):
        kl_divergence([0.5, 0.5], [1.0, 0.0])


def test_js_examples():
    assert js_divergence([0.2, 0.8], [0.2, 0.8]).value == 0.0
    assert js_divergence([0.0, 1.0], [1.0, 0.0]).value == pytest.approx(2 * LN2, abs=1e-15)
    direct = sum(p * math.log(p / m) + q * math.log(q / m)
                 for p, q, m in ((0.75, 0.25, 0.5), (0.25, 0.75, 0.5)))
    val = js_divergence([0.25, 0.75], [0.75, 0.25]).value
    assert val == pytest.approx(direct, abs=1e-15)
    assert val == pytest.approx(0.2616, abs=1e-4)


def test_js_sampled_gaussians():
    # JS(N(0,1), N(0.5,1)) by quadrature as the oracle
    from scipy import integrate

    p, q = stats.norm(0, 1), stats.norm(0.5, 1)

    def f(x):
        a, b = p.pdf(x), q.pdf(x)
        m = 0.5 * (a + b)
        return a * math.log(a / m) + b * math.log(b / m)

    ref, _ = integrate.quad(f, -12, 12)
    est = js_divergence(p, q, n_samples=400_000, seed=4)
    assert abs(est.value - ref) <= 4 * est.std_error


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 8).flatmap(lambda k: st.tuples(pmfs(k), pmfs(k), pmfs(k))))
def test_js_metric_properties(triple):
    p, q, r = triple
    a = js_divergence(p, q).value
    assert a == js_divergence(q, p).value
    assert 0.0 <= a <= 2 * LN2
    assert math.sqrt(a) <= math.sqrt(js_divergence(p, r).value) + math.sqrt(js_divergence(q, r).value) + 1e-12
    assert kl_divergence(p, q).value >= 0.0


def test_prior_mi_from_js():
    assert mi_prior_from_js(0.0) == 0.0
    assert mi_prior_from_js(2 * LN2) == pytest.approx(LN2)
    assert mi_prior_from_js(0.2616) == pytest.approx(0.1308)
    with pytest.raises(ValidationError):
        mi_prior_from_js(2.0)


def test_mi_below_capacity_on_twist():
    fam = TwistFamily([0.2, 0.3, 0.5], [0.5, 0.25, 0.25])
    ch = DiscreteChannel([[0.8, 0.2], [0.5, 0.5], [0.1, 0.9]])
    cap = capacity_blahut_arimoto(ch).capacity
    for t in np.linspace(0, 1, 11):
        assert mutual_information(fam, ch, t).value <= cap + 1e-12
