import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fisherbound import (
    AwgnChannel,
    BernoulliModel,
    BinarySymmetricChannel,
    BoundReport,
    CapabilityError,
    FunctionChannel,
    GaussianLocation,
    ParameterError,
    PathSpec,
    QuantizerChannel,
    TwistFamily,
    ValidationError,
    regularity_iv_taylor_check,
    thm1_grid_sweep,
    thm1_verify,
    thm2_js_bound,
    van_trees_lower_bound,
)
from fisherbound.bounds import (
    cor1_transcript_bound,
    cor2_gaussian_bound,
    quantizer_recovery,
    rr_information_report,
    twist_bound_rhs,
    twist_path_integral,
    verdict,
)

LN2 = math.log(2)
finite = st.floats(-1e6, 1e6)


@given(finite, finite, st.floats(0, 1e3))
def test_verdict_rule(lhs, rhs, unc):
    v = verdict(lhs, rhs, unc)
    guard = 4 * unc if unc > 0 else 1e-9
    assert v == ("holds" if lhs <= rhs + guard else "violated")


def test_verdict_inconclusive():
    assert verdict(math.nan, 1.0) == "inconclusive"
    assert verdict(1.0, 2.0, math.inf) == "inconclusive"
    r = BoundReport("x", 2.0, 1.0, 0.3)
    assert r.verdict == "holds" and r.slack == -1.0
    assert BoundReport("x", 2.0, 1.0, 0.2).verdict == "violated"


def test_report_json_shape():
    d = thm1_verify(BernoulliModel(), BinarySymmetricChannel(0.25), 0.5).to_dict()
    assert list(d) == ["name", "lhs", "rhs", "slack", "verdict", "uncertainty", "components"]


def test_thm1_gaussian_awgn_closed_form():
    rep = thm1_verify(GaussianLocation(0.5), AwgnChannel(1.0), 0.0)
    assert rep.lhs == pytest.approx(1 / 1.25)
    assert rep.rhs == pytest.approx(2 * 4 * 0.5 * math.log(1.25))
    assert rep.holds


def test_thm1_capability_message():
    with pytest.raises(CapabilityError, match="thm1_verify"):
        thm1_verify(GaussianLocation(1.0), FunctionChannel(np.sin), 0.0)


def test_transcript_bounds():
    assert cor1_transcript_bound(1.0, 34.657) == pytest.approx(69.314)
    assert cor1_transcript_bound(3.0, 0.0) == 0.0
    assert cor2_gaussian_bound(0.1, 1.0) == pytest.approx(200.0)
    with pytest.raises(ValidationError):
        cor1_transcript_bound(1.0, -0.1)


def test_van_trees_examples():
    assert van_trees_lower_bound(1, 1.0, 50 * LN2) == pytest.approx(1 / (100 * LN2 + math.pi**2), rel=1e-14)
    assert van_trees_lower_bound(1, 1.0, math.inf) == 0.0
    mi = 5000 * math.log(1.01)
    assert mi == pytest.approx(49.75, abs=5e-3)
    assert van_trees_lower_bound(1, 0.1, mi) == pytest.approx(1.0040e-4, rel=1e-4)
    with pytest.raises(ValidationError):
        van_trees_lower_bound(1, 0.0, 1.0)


@given(st.floats(0, 1e4), st.floats(1e-3, 1e3), st.floats(0.1, 5), st.integers(1, 5))
def test_van_trees_strictly_decreasing(mi, step, sigma, d):
    assert van_trees_lower_bound(d, sigma, mi + step) < van_trees_lower_bound(d, sigma, mi)


def test_path_spec():
    path = PathSpec.gauss_legendre(0.4, 0.6)
    assert np.all((path.nodes >= 0) & (path.nodes <= 1))
    assert path.weights.sum() == pytest.approx(1.0, abs=1e-14)
    assert path.integrate(lambda t: t[0] ** 3) == pytest.approx((0.6**4 - 0.4**4) / 4 / 0.2, rel=1e-14)
    with pytest.raises(ValidationError):
        PathSpec(np.zeros(1), np.ones(1), np.array([0.5, 1.5]), np.array([0.5, 0.5]))


def test_path_leaving_parameter_set():
    with pytest.raises(ParameterError, match="lambda"):
        thm2_js_bound(BernoulliModel(), BinarySymmetricChannel(0.1), 1, PathSpec.gauss_legendre(0.5, 1.0))


def test_thm2_degenerate_path():
    rep = thm2_js_bound(BernoulliModel(), BinarySymmetricChannel(0.25), 2, PathSpec.gauss_legendre(0.3, 0.3))
    assert rep.lhs == 0.0 and rep.rhs == 0.0 and rep.holds


@pytest.mark.parametrize("n", [1, 2, 5])
def test_thm2_bernoulli_transcripts(n):
    rep = thm2_js_bound(BernoulliModel(), BinarySymmetricChannel(0.25), n, PathSpec.gauss_legendre(0.3, 0.7))
    assert rep.holds
    assert 0 <= rep.lhs <= 2 * LN2
    assert rep.components["prior_mi_lhs"] == pytest.approx(rep.lhs / 2)


def test_thm2_twist_full_path():
    fam = TwistFamily([0.6, 0.4], [0.4, 0.6])
    rep = thm2_js_bound(fam, BinarySymmetricChannel(0.25), 4, PathSpec.gauss_legendre(0.0, 1.0))
    assert rep.holds
    assert rep.components["N"] == pytest.approx(2 * math.log(1.5))


@pytest.mark.parametrize(
    "model, channel, n, t0, t1",
    [
        (BernoulliModel(), BinarySymmetricChannel(0.25), 1, 0.4, 0.6),
        (BernoulliModel(), BinarySymmetricChannel(0.1), 3, 0.4, 0.6),
        (TwistFamily([0.6, 0.4], [0.4, 0.6]), BinarySymmetricChannel(0.25), 4, 0.0, 1.0),
        (GaussianLocation(1.0), QuantizerChannel(2, -2, 2), 1, 0.0, 0.5),
        (GaussianLocation(1.0), AwgnChannel(1.0), 1, 0.0, 0.5),
    ],
)
def test_thm2_quadrature_converged(model, channel, n, t0, t1):
    r16 = thm2_js_bound(model, channel, n, PathSpec.gauss_legendre(t0, t1, 16), n_samples=1000, seed=1).rhs
    r32 = thm2_js_bound(model, channel, n, PathSpec.gauss_legendre(t0, t1, 32), n_samples=1000, seed=1).rhs
    assert abs(r16 - r32) <= 1e-3 * abs(r32)


def test_taylor_check_examples():
    b, ch = BernoulliModel(), BinarySymmetricChannel(0.25)
    chk = regularity_iv_taylor_check(b, ch, 0.3, delta_grid=(0.0, 0.1))
    assert chk.js[0] == 0.0 and chk.quadratic[0] == 0.0
    flat = regularity_iv_taylor_check(b, BinarySymmetricChannel(0.5), 0.4)
    assert np.all(flat.ratios == 0.0) and flat.spread == 1.0


def test_taylor_ratios_bounded_at_symmetric_point():
    # at theta = 1/2 the cubic term cancels, so the scaled residual shrinks
    chk = regularity_iv_taylor_check(BernoulliModel(), BinarySymmetricChannel(0.25), 0.5,
                                     delta_grid=(0.1, 0.05, 0.025, 0.0125))
    assert np.all(np.diff(chk.ratios) <= 0)
    assert chk.max_ratio < 1.0


def test_taylor_requires_discrete_output():
    with pytest.raises(CapabilityError):
        regularity_iv_taylor_check(GaussianLocation(1.0), AwgnChannel(1.0), 0.0)


def test_twist_bound_examples():
    assert twist_bound_rhs(1.0, 0.3, K=7.0) == 0.0
    assert twist_bound_rhs(1.5, 0.1308) == pytest.approx(0.02151, abs=1e-5)
    with pytest.raises(ValidationError):
        twist_bound_rhs(0.9, 0.1)
    fam = TwistFamily([0.6, 0.4], [0.4, 0.6])
    assert twist_path_integral(fam, BinarySymmetricChannel(0.25)) > 0


@pytest.mark.parametrize("bits", [1, 2, 3, 4])
def test_quantizer_recovery(bits):
    rep = quantizer_recovery(GaussianLocation(1.0), bits, theta=0.3)
    assert rep.holds
    assert rep.components["thm1_rhs"] <= rep.components["thm1_rhs_cap"] + 1e-12


def test_randomized_response_report():
    eps = (0.1, 0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0)
    rows = rr_information_report(eps)
    assert all(r["verdict"] == "holds" for r in rows)
    # small-eps behaviour is quadratic: I / eps^2 settles near 1/8 at theta = 1/2
    assert rows[0]["mi_over_eps_sq"] == pytest.approx(0.125, rel=0.01)


def test_sweep_shape_and_determinism():
    a = thm1_grid_sweep(mc_samples=20_000, seed=3)
    b = thm1_grid_sweep(mc_samples=20_000, seed=3)
    assert len(a) == 99 + 15 + 16 + 72
    assert [r.as_row() for r in a] == [r.as_row() for r in b]
    assert all(r.report.holds for r in a)
