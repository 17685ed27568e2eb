import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from homfields.core import ParetoAlpha, UsageError
from homfields.mc import (
    MCEstimate,
    MCRunError,
    compare,
    estimate,
    ratio_estimate,
    replicate,
    run_mc,
    substream,
    weighted_estimate,
)

from conftest import assert_within


def test_constant_estimator_has_zero_se():
    e = run_mc(lambda rng, n: np.full(n, 3.0), 1000, 0)
    assert e.mean == 3.0 and e.se == 0.0


def test_pareto_square_root_moment():
    p = ParetoAlpha(1.0)
    assert_within(run_mc(lambda rng, n: p.sample(rng, n) ** 0.5, 10**6, 3), 2.0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32), st.integers(2, 20_000), st.integers(1, 8))
def test_results_do_not_depend_on_worker_count(seed, reps, workers):
    fn = lambda rng, n: rng.standard_normal(n)
    a = replicate(fn, reps, seed, workers=1)
    b = replicate(fn, reps, seed, workers=workers)
    assert a.tobytes() == b.tobytes()
    ea, eb = estimate(a), estimate(b)
    assert (ea.mean, ea.se) == (eb.mean, eb.se)


def test_streams_are_distinct():
    a = substream(1, "lhs").random(4)
    b = substream(1, "rhs").random(4)
    c = substream(1, "lhs", chunk=1).random(4)
    assert not np.array_equal(a, b) and not np.array_equal(a, c)
    assert np.array_equal(a, substream(1, "lhs").random(4))


def test_tuple_results_and_missing_weights():
    v, w = replicate(lambda rng, n: (np.ones(n), None), 10, 0)
    assert v.shape == (10,) and w is None


def test_failures_are_collected():
    def bad(rng, n):
        raise ValueError("boom")

    with pytest.raises(MCRunError) as exc:
        replicate(bad, 10_000, 0, workers=2)
    assert exc.value.failed == 10_000


def test_reps_validation():
    with pytest.raises(UsageError):
        replicate(lambda rng, n: np.zeros(n), 0, 0)
    with pytest.raises(UsageError):
        run_mc(lambda rng, n: np.zeros(n), 1, 0)


def test_ratio_estimate_matches_weighted_mean():
    v = np.array([1.0, 2.0, 3.0, 4.0])
    w = np.array([1.0, 0.0, 1.0, 2.0])
    assert ratio_estimate(v * w, w).mean == pytest.approx((1 + 3 + 8) / 4)
    assert weighted_estimate(v).mean == 2.5


def test_comparison_rules():
    a = MCEstimate(1.0, 0.1, 100)
    assert compare(a, a).z == 0 and compare(a, a).passed
    far = compare(MCEstimate(0.0, 0.1, 100), MCEstimate(10 * np.hypot(0.1, 0.1), 0.1, 100))
    assert not far.passed and far.z == pytest.approx(-10)
    exact = compare(MCEstimate(2.0, 0.0, 10), MCEstimate(2.0, 0.0, 10), test_id="t")
    assert exact.passed and exact.summary() == "t PASS z=0.00"
    assert not compare(MCEstimate(2.0, 0.0, 10), MCEstimate(2.5, 0.0, 10)).passed
