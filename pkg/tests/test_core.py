import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from homfields.core import (
    ContractError,
    FieldSample,
    FunctionalSpec,
    HomogeneousNorm,
    ParetoAlpha,
    UsageError,
    check_homogeneity,
    eval_functional,
    indicator_box,
    integral_FI,
    origin_normalized,
    product_power,
    sup_window,
)
from homfields.lattice import Lattice, enumerate_window
from homfields.mc import estimate, replicate

from conftest import assert_within

vec = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=5)


def test_norm_examples():
    assert HomogeneousNorm("alpha_sum", 1.0, 2)(np.array([1.0, 1.0])) == 1.0
    assert HomogeneousNorm("alpha_sum", 2.0, 1)(np.array([-3.0])) == 3.0
    assert HomogeneousNorm("sup")(np.array([0.2, -0.7, 0.5])) == 0.7


def test_norm_rejects_bad_arguments():
    with pytest.raises(UsageError):
        HomogeneousNorm("l7")
    with pytest.raises(UsageError):
        HomogeneousNorm("alpha_sum", 0.0, 1)
    with pytest.raises(UsageError):
        HomogeneousNorm("alpha_sum", 1.0, 2)(np.ones(3))


@settings(max_examples=200, deadline=None)
@given(vec, st.floats(1e-3, 1e3), st.sampled_from(["sup", "euclidean", "alpha_sum"]),
       st.floats(0.3, 3.0))
def test_norm_positive_homogeneity(x, c, kind, alpha):
    x = np.array(x)
    n = HomogeneousNorm(kind, alpha, len(x)) if kind == "alpha_sum" else HomogeneousNorm(kind)
    assert n(c * x) == pytest.approx(c * n(x), rel=1e-12, abs=1e-300)
    assert n(x) >= 0
    assert n(np.zeros_like(x)) == 0


def test_pareto_moment_and_survival():
    r = ParetoAlpha(1.0)
    m = replicate(lambda rng, n: r.sample(rng, n) ** 0.5, 10**6, 1, stream="pareto-moment")
    assert_within(estimate(m), 2.0)
    r2 = ParetoAlpha(2.0)
    s = replicate(lambda rng, n: r2.sample(rng, n), 10**5, 2, stream="pareto-surv")
    assert s.min() >= 1.0
    assert_within(estimate(s > 2.0), 0.25)
    assert r2.survival(2.0) == 0.25


def test_pareto_rejects_nonpositive_index():
    with pytest.raises(UsageError):
        ParetoAlpha(0.0)


def _window(n):
    return enumerate_window(Lattice([[1.0]]), n)


def test_functional_examples():
    w = _window(1)
    norm = HomogeneousNorm("alpha_sum", 1.0, 1)
    f = FieldSample(w, np.array([0.3, 0.9, 0.1]), 1.0)
    assert eval_functional(indicator_box([[0]], lower=[0.5]), f, norm) == 1.0
    g = FieldSample(w, np.array([1.0, 2.0, 3.0]), 1.0)
    assert eval_functional(integral_FI([[-1], [0], [1]]), g, norm) == 6.0
    h = FieldSample(w, np.array([0.1, 0.4, 0.2]), 1.0)
    assert eval_functional(sup_window([[-1], [0], [1]]), h, norm) == 0.4


def test_functional_validation():
    with pytest.raises(UsageError):
        FunctionalSpec("median", [[0]])
    with pytest.raises(UsageError):
        product_power([[0], [1]], [1.0])
    with pytest.raises(UsageError):
        product_power([[0]], [1.0], tag="deg0")


def test_shifted_functional_reads_translated_points():
    F = product_power([[1]], [1.0])
    w = _window(2)
    norms = np.array([[1.0, 2.0, 3.0, 4.0, 5.0]])
    # (F o B^1)(f) = |f(0)|
    assert F.shifted([1]).evaluate_norms(norms, w)[0] == 3.0


def test_field_sample_contract():
    w = _window(1)
    with pytest.raises(UsageError):
        FieldSample(w, np.array([1.0, np.nan, 0.0]), 1.0)
    with pytest.raises(UsageError):
        FieldSample(w, np.ones(2), 1.0)
    f = FieldSample(w, np.array([1.0, 2.0, 3.0]), 1.0)
    s = f.shifted([1])
    assert s.window.coords[:, 0].tolist() == [0, 1, 2]
    assert s.values[s.origin_index, 0] == 1.0  # (B^1 f)(0) = f(-1)
    with pytest.raises(UsageError):
        f.shifted([2])


def test_origin_normalized_and_homogeneity_check():
    w = _window(1)
    norms = np.array([[2.0, 4.0, 1.0]])
    assert origin_normalized(norms, w.origin_index).tolist() == [[0.5, 1.0, 0.25]]
    ratio = product_power([[1], [-1]], [0.5, -0.5], tag="deg0")
    assert check_homogeneity(ratio, 1.0, norms, w, (0.5, 3.0))
    lin = product_power([[1]], [2.0], tag="degAlpha")
    assert check_homogeneity(lin, 2.0, norms, w, (0.5, 3.0))
    assert not check_homogeneity(lin, 1.0, norms, w, (0.5, 3.0))
    wrong = indicator_box([[1]], lower=[1.0], tag="deg0")
    assert not check_homogeneity(wrong, 1.0, norms, w, (0.1,))
