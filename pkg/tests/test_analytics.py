import numpy as np
import pytest

from asseopf.analytics import (
    compare_methods,
    ecdf,
    ecdf_eval,
    summarize,
    validation_error,
)


def test_small_sample_summary():
    rep = summarize([1.0, 2.0, 3.0])
    assert rep.mean == 2.0
    assert ecdf_eval([1.0, 2.0, 3.0], 2.0) == pytest.approx(2 / 3)


def test_ecdf_right_continuous_steps():
    x, y = ecdf([3.0, 1.0, 2.0])
    assert np.array_equal(x, [1.0, 2.0, 3.0])
    assert np.allclose(y, [1 / 3, 2 / 3, 1.0])
    assert ecdf_eval([1.0, 2.0, 3.0], 0.5) == 0.0
    assert ecdf_eval([1.0, 2.0, 3.0], np.inf) == 1.0


def test_constant_samples():
    rep = summarize([4.0, 4.0, 4.0])
    assert rep.variance == 0.0
    assert all(v == 4.0 for v in rep.quantiles.values())


def test_summary_requires_two_samples():
    with pytest.raises(ValueError):
        summarize([1.0])


def test_quantiles_nondecreasing():
    rng = np.random.default_rng(0)
    z = rng.standard_normal(500)
    ps = np.linspace(0.01, 0.99, 21)
    rep = summarize(z, p_list=ps)
    qs = [rep.quantiles[float(p)] for p in ps]
    assert np.all(np.diff(qs) >= 0)


def test_cdf_grid_monotone_zero_to_one():
    rng = np.random.default_rng(1)
    rep = summarize(rng.gamma(2.0, size=1000))
    assert np.all(np.diff(rep.cdf_y) >= 0)
    assert rep.cdf_y[0] > 0.0
    assert rep.cdf_y[-1] == 1.0


def test_validation_error_perfect_predictions():
    z = np.array([1.0, 2.0, 5.0, -1.0])
    assert validation_error(z, z) == 0.0


def test_validation_error_mean_predictor():
    rng = np.random.default_rng(2)
    z = rng.standard_normal(100)
    pred = np.full(100, z.mean())
    assert validation_error(z, pred) == pytest.approx(99 / 100, rel=1e-12)


def test_validation_error_scale_invariant():
    rng = np.random.default_rng(3)
    z = rng.standard_normal(50)
    zhat = z + 0.1 * rng.standard_normal(50)
    base = validation_error(z, zhat)
    for c in (2.0, -0.3, 1e6):
        assert validation_error(c * z, c * zhat) == pytest.approx(base, rel=1e-12)


def test_validation_error_degenerate_truth():
    with pytest.raises(ValueError):
        validation_error([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])


def test_validation_error_length_mismatch():
    with pytest.raises(ValueError):
        validation_error([1.0, 2.0], [1.0])


def test_compare_methods_identity_zero_error():
    rep = summarize([1.0, 2.0, 3.0, 4.0], method="MC", response="y")
    rows = compare_methods([rep], rep)
    assert rows[0]["err_mean_pct"] == 0.0


def test_compare_methods_normalized_error_formula():
    # means that mirror the reference comparison: 2711.7 vs 2713.2
    mc = summarize([2711.7, 2711.7], method="MC", response="cost")
    mc.mean = 2711.7
    other = summarize([2713.2, 2713.2], method="ASSE", response="cost")
    other.mean = 2713.2
    rows = compare_methods([other], mc)
    expected = 100.0 * (2711.7 - 2713.2) / 2711.7
    assert rows[0]["err_mean_pct"] == pytest.approx(expected, rel=1e-12)
    assert rows[0]["err_mean_pct"] == pytest.approx(-0.0553, abs=1e-4)


def test_compare_methods_requires_baseline_and_matching_response():
    rep = summarize([1.0, 2.0], method="ASSE", response="a")
    base = summarize([1.0, 2.0], method="MC", response="b")
    with pytest.raises(ValueError):
        compare_methods([rep], base)
    with pytest.raises(ValueError):
        compare_methods([rep], None)
