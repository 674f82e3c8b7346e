import math

import numpy as np
import pytest

from fisherbound import (
    AwgnChannel,
    BernoulliModel,
    BinarySymmetricChannel,
    FunctionChannel,
    GaussianLocation,
    ProtocolConfig,
    ProtocolError,
    Transcript,
    ValidationError,
    averaging_estimator,
    awgn_tightness_experiment,
    empirical_mse,
    identity_channel,
    run_protocol,
    simulate_awgn_averaging,
    sup_total_mi,
)
from fisherbound.distributed import CSV_COLUMNS, averaging_closed_form_mse, results_csv

LN2 = math.log(2)


def awgn_config(sigma=1.0, sigma_noise=1.0, n=3, theta=0.0, seed=0):
    return ProtocolConfig(GaussianLocation(sigma), theta, n, channel=AwgnChannel(sigma_noise), seed=seed)


def test_run_protocol_shape_and_clt():
    cfg = awgn_config(n=3)
    tr = run_protocol(cfg, 1)
    assert tr.complete and len(tr.round(0)) == 3
    assert all(isinstance(m, float) for m in tr.round(0))
    res = empirical_mse(cfg, n_trials=100_000, seed=2)
    se = math.sqrt(2 / 3 / 100_000)
    assert abs(res.mean_estimate[0]) <= 4 * se


def test_transcript_dependent_round():
    def factory(i, t, partial):
        if t == 0:
            return AwgnChannel(1.0)
        return FunctionChannel(lambda x, prev=partial.get(i, 0): prev, name="relay")

    cfg = ProtocolConfig(GaussianLocation(1.0), 0.2, 1, T=2, channel_factory=factory, seed=5)
    tr = run_protocol(cfg)
    assert tr.get(0, 1) == tr.get(0, 0)
    total, label = sup_total_mi(cfg)
    assert math.isnan(total) and label == "unavailable"


def test_run_protocol_reproducible():
    cfg = awgn_config(n=5, seed=17)
    np.testing.assert_array_equal(run_protocol(cfg).as_array(), run_protocol(cfg).as_array())


def test_protocol_input_mismatch():
    cfg = ProtocolConfig(GaussianLocation(1.0), 0.0, 2, channel=BinarySymmetricChannel(0.1))
    with pytest.raises(ProtocolError):
        run_protocol(cfg)
    cfg = ProtocolConfig(BernoulliModel(), 0.5, 2, channel=identity_channel(3))
    with pytest.raises(ProtocolError):
        run_protocol(cfg)


def test_config_validation():
    with pytest.raises(ValidationError):
        awgn_config(n=0)
    with pytest.raises(ValidationError):
        ProtocolConfig(GaussianLocation(1.0), 0.0, 2)


def test_averaging_estimator_examples():
    tr = Transcript(3, 1, [[1.0, 2.0, 3.0]])
    assert averaging_estimator(tr)[0] == pytest.approx(2.0)
    with pytest.raises(TypeError):
        averaging_estimator(Transcript(2, 1, [["a", "b"]]))
    with pytest.raises(TypeError):
        averaging_estimator(np.array([["a", "b"]]))


def test_section4_mse():
    res = simulate_awgn_averaging(1.0, 1.0, 100, theta=0.3, n_trials=100_000, seed=7)
    assert abs(res.empirical_mse - 0.02) <= 0.0003
    assert abs(res.empirical_mse - 0.02) <= 4 * res.mse_std_error
    assert abs(res.mean_estimate[0] - 0.3) <= 4 * res.mean_std_error[0]
    assert res.total_mi == pytest.approx(50 * LN2)
    assert res.lower_bound <= res.empirical_mse + 4 * res.ci
    assert res.tightness_ratio == pytest.approx(0.632, abs=0.01)


def test_fused_kernel_agrees_with_generic_path():
    cfg = awgn_config(1.0, 2.0, n=20, theta=0.1)
    generic = empirical_mse(cfg, n_trials=50_000, seed=3)
    fused = simulate_awgn_averaging(1.0, 2.0, 20, theta=0.1, n_trials=50_000, seed=4)
    se = math.hypot(generic.mse_std_error, fused.mse_std_error)
    assert abs(generic.empirical_mse - fused.empirical_mse) <= 4 * se
    assert generic.lower_bound == fused.lower_bound


def test_noiseless_channel():
    cfg = awgn_config(1.0, 0.0, n=10, theta=0.0)
    res = empirical_mse(cfg, n_trials=50_000, seed=1)
    assert averaging_closed_form_mse(cfg) == pytest.approx(0.1)
    assert abs(res.empirical_mse - 0.1) <= 4 * res.mse_std_error
    assert res.total_mi == math.inf and res.lower_bound == 0.0


def test_mse_scales_with_noise():
    lo = simulate_awgn_averaging(1.0, 10.0, 50, n_trials=20_000, seed=1)
    hi = simulate_awgn_averaging(1.0, 20.0, 50, n_trials=20_000, seed=1)
    # (1 + 400) / (1 + 100)
    assert hi.empirical_mse / lo.empirical_mse == pytest.approx(401 / 101, rel=0.05)


def test_seed_split_halves():
    a = simulate_awgn_averaging(1.0, 1.0, 100, n_trials=50_000, seed=21)
    b = simulate_awgn_averaging(1.0, 1.0, 100, n_trials=50_000, seed=22)
    assert abs(a.empirical_mse - b.empirical_mse) <= 4 * math.hypot(a.mse_std_error, b.mse_std_error)


def test_mse_reproducible_and_chunk_scheduled():
    a = simulate_awgn_averaging(1.0, 1.0, 100, n_trials=10_000, seed=5, chunk_trials=1000)
    b = simulate_awgn_averaging(1.0, 1.0, 100, n_trials=10_000, seed=5, chunk_trials=1000)
    assert a.empirical_mse == b.empirical_mse


def test_trial_floor():
    with pytest.raises(ValidationError):
        empirical_mse(awgn_config(), n_trials=50)


def test_estimator_failure_reports_trial():
    def broken(tr):
        raise RuntimeError("boom")

    cfg = ProtocolConfig(BernoulliModel(), 0.5, 2, channel_factory=lambda i, t, p: BinarySymmetricChannel(0.1))
    with pytest.raises(ProtocolError, match="trial 0"):
        empirical_mse(cfg, broken, n_trials=100, seed=1)


def test_sup_total_mi_grid():
    cfg = ProtocolConfig(BernoulliModel(), 0.5, 4, channel=BinarySymmetricChannel(0.25))
    total, label = sup_total_mi(cfg)
    # the grid on [-1, 1] hits theta = 0.4 and 0.6 as nearest interior points
    from fisherbound import mutual_information

    assert total == pytest.approx(4 * mutual_information(BernoulliModel(), BinarySymmetricChannel(0.25), 0.4).value)
    assert label == "exact"


def test_tightness_examples():
    tr = awgn_tightness_experiment(1.0, 1.0, 100, n_trials=20_000, seed=1)
    assert tr.ratio_closed_form == pytest.approx(0.632, abs=1e-3)
    small = awgn_tightness_experiment(1.0, 1.0, 10, n_trials=20_000, seed=1)
    assert small.ratio_closed_form == pytest.approx(0.298, abs=1e-3)
    with pytest.raises(ValidationError):
        awgn_tightness_experiment(1.0, 0.5, 10)


def test_tightness_trend():
    # sigma^2 / sigma_n^2 in {1, 0.1, 0.01} with n * ratio = 100
    ratios, closed = [], []
    for r in (1.0, 0.1, 0.01):
        tr = awgn_tightness_experiment(math.sqrt(r), 1.0, int(round(100 / r)), n_trials=20_000, seed=3)
        ratios.append(tr.ratio_empirical)
        closed.append(tr.ratio_closed_form)
    assert ratios[0] < ratios[1] < ratios[2]
    assert closed[0] < closed[1] < closed[2]


def test_results_csv_format():
    tr = awgn_tightness_experiment(1.0, 1.0, 100, n_trials=1000, seed=1)
    text = results_csv([("a", tr)])
    header, row = text.strip().split("\n")
    assert tuple(header.split(",")) == CSV_COLUMNS
    assert row.split(",")[0] == "a"
