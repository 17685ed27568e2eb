import numpy as np
import pytest

from homfields.core import (
    ContractError,
    RandomScaleField,
    ScaledField,
    UsageError,
    indicator_box,
    product_power,
    sup_window,
)
from homfields.lattice import Lattice, enumerate_window
from homfields.mc import MCEstimate, compare, estimate, replicate, weighted_estimate
from homfields.tailfields import (
    LocalField,
    RandomShiftField,
    SyntheticDiscreteField,
    check_identity_boll,
    check_spectral_identity,
    check_tail_identity,
    exceedance_functional,
    fdd_Y_check,
    fdd_Y_theta_side,
    local_field,
    shift_base_window,
    tail_field,
    tail_measure_crosscheck,
    tail_measure_estimate,
)

from conftest import assert_within

REPS = 20_000


@pytest.fixture
def w4(Z1):
    return enumerate_window(Z1, 4)


def test_synthetic_fields(w4):
    rng = np.random.default_rng(0)
    s = SyntheticDiscreteField("singleton", w4).sample_norms(rng, 3)
    assert np.all(s[:, w4.origin_index] == 1) and s.sum() == 3
    g = SyntheticDiscreteField("geometric_decay", w4, rho=0.5).sample_norms(rng, 2)
    assert np.allclose(g[0], 0.5 ** np.abs(w4.coords[:, 0]))
    c = SyntheticDiscreteField("constant", w4, law=([0.0, 2.0], [0.5, 0.5])).sample_norms(rng, 50)
    assert np.all(c == c[:, :1]) and set(np.unique(c)) <= {0.0, 2.0}
    with pytest.raises(UsageError):
        SyntheticDiscreteField("bump", w4)


def test_local_field_of_brown_resnick_is_direct(br4):
    theta = local_field(br4)
    assert theta.mode == "direct"
    n = theta.sample_norms(np.random.default_rng(1), 100)
    assert np.all(n[:, br4.window.origin_index] == 1.0)


def test_direct_mode_rejects_unnormalized_base(w4):
    base = SyntheticDiscreteField("constant", w4, law=([0.0, 2.0], [0.5, 0.5]))
    with pytest.raises(ContractError):
        LocalField(base, "direct").sample(np.random.default_rng(0), 10)


def test_weighted_local_field_is_normalized(w4):
    base = SyntheticDiscreteField("constant", w4, law=([0.0, 2.0], [0.5, 0.5]))
    theta = local_field(base)
    assert theta.mode == "weighted"
    v, w = replicate(lambda rng, n: (np.ones(n), theta.sample_norms_weighted(rng, n)[1]), 10_000, 2)
    # E|Z(0)|^alpha = 1 and F = 1 give weighted mean exactly 1
    assert weighted_estimate(v, w).mean == pytest.approx(1.0)
    with pytest.raises(UsageError):
        theta.sample(np.random.default_rng(0), 5)


def test_weighted_and_resampled_local_fields_agree(w4):
    base = ScaledField(SyntheticDiscreteField("geometric_decay", w4), 1.0)
    base = RandomScaleField(base, [0.5, 1.5], [0.5, 0.5])
    weighted = LocalField(base, "weighted")
    resampled = LocalField(base, "resampled", bank=10_000)
    h = w4.index([1])
    nw, ww = replicate(lambda rng, n: weighted.sample_norms_weighted(rng, n), REPS, 3, stream="w")
    nr = replicate(lambda rng, n: resampled.sample_norms(rng, n), REPS, 3, stream="r")
    assert np.allclose(nr[:, w4.origin_index], 1.0)
    rep = compare(weighted_estimate(nw[:, h], ww), estimate(nr[:, h]))
    assert rep.passed, rep.summary()


def test_resampling_a_degenerate_base_fails(w4):
    base = SyntheticDiscreteField("constant", w4, law=([0.0], [1.0]))
    with pytest.raises(ContractError):
        LocalField(base, "resampled", bank=100).sample(np.random.default_rng(0), 5)


def test_tail_field_properties(br4):
    y = tail_field(local_field(br4))
    n = replicate(lambda rng, k: y.sample_norms(rng, k), 10**5, 4, stream="y")
    o = br4.window.origin_index
    assert n[:, o].min() >= 1.0
    assert_within(estimate(n[:, o] > 2.0), 0.5)
    # log|Y(0)| = log R is independent of Theta(1)
    a, b = np.log(n[:, o]), n[:, o + 1] / n[:, o]
    prod = (a - a.mean()) * (b - b.mean())
    assert_within(estimate(prod / (a.std() * b.std())), 0.0)


def test_shift_base_window_and_coverage_errors(Z1, br_factory):
    out = enumerate_window(Z1, 2)
    supp = np.array([[-1], [0], [1]])
    bw = shift_base_window(Z1, out.coords, supp)
    assert bw.coords[:, 0].tolist() == list(range(-3, 4))
    with pytest.raises(UsageError):
        RandomShiftField(br_factory(out), supp, out_window=out)
    with pytest.raises(UsageError):
        RandomShiftField(br_factory(bw), supp, probs=[0.5, 0.5, 0.0], out_window=out)


def test_point_mass_shift_reproduces_base(br4):
    zn = RandomShiftField(br4, [[0]])
    a = zn.sample(np.random.default_rng(9), 50)
    b = br4.sample(np.random.default_rng(9), 50)
    assert np.allclose(a, b)


def test_singleton_random_shift_is_a_moving_singleton(Z1):
    out = enumerate_window(Z1, 2)
    supp = out.coords
    base = SyntheticDiscreteField("singleton", shift_base_window(Z1, out.coords, supp))
    zn = RandomShiftField(base, supp, out_window=out)
    n = zn.sample_norms(np.random.default_rng(0), 200)
    assert np.all((n > 0).sum(axis=1) == 1)
    assert np.allclose(n.max(axis=1), 5.0)  # |supp|^(1/alpha) at the chosen N


@pytest.mark.parametrize("variant", ["ii", "iii"])
@pytest.mark.parametrize("h", [0, 1])
def test_random_shift_stays_in_the_class(Z1, br_factory, variant, h):
    out = enumerate_window(Z1, 3)
    supp = np.array([[-1], [0], [1]])
    base = br_factory(shift_base_window(Z1, out.coords, supp))
    if variant == "iii":
        base = local_field(base)
    zn = RandomShiftField(base, supp, variant=variant, out_window=out)
    F = indicator_box([[0], [1]], lower=(0.5, 0.3), upper=(np.inf, 2.0))
    rep = check_identity_boll(br_factory(out), zn, F, [h], REPS, 5)
    assert rep.passed, rep.summary()


def test_identity_self_and_scaled(br4):
    F = sup_window([[-1], [0], [1]])
    assert check_identity_boll(br4, br4, F, [1], REPS, 6).passed
    scaled = ScaledField(br4, 3.0)
    raw = check_identity_boll(br4, scaled, F, [1], REPS, 6)
    assert not raw.passed
    assert check_identity_boll(br4, scaled, F, [1], REPS, 6, normalize=True).passed


def test_identity_requires_covered_points(br4):
    with pytest.raises(UsageError):
        check_identity_boll(br4, br4, sup_window([[5]]), [0], 10, 0)


def test_spectral_identity_singleton_is_exact(w4):
    theta = local_field(SyntheticDiscreteField("singleton", w4))
    G = indicator_box([[1]], lower=[1.0])
    rep = check_spectral_identity(theta, G, [1], 1000, 0)
    assert rep.lhs.mean == rep.rhs.mean == 0 and rep.lhs.se == 0 and rep.passed


def test_spectral_identity_brown_resnick(br4):
    for G in (indicator_box([[1]], lower=[1.0]),
              product_power([[1], [-1]], [0.5, -0.5], tag="deg0")):
        rep = check_spectral_identity(local_field(br4), G, [1], REPS, 7)
        assert rep.passed, rep.summary()


def test_deg0_tag_is_enforced(br4):
    wrong = indicator_box([[1]], lower=[1.0], tag="deg0")
    with pytest.raises(Exception) as exc:
        check_spectral_identity(local_field(br4), wrong, [1], 100, 0)
    assert "deg0" in str(exc.value)


def test_tail_identity(br4):
    y = tail_field(local_field(br4))
    one = indicator_box([[0]])
    exact = check_tail_identity(y, one, [0], 1.0, 1000, 0)
    assert exact.lhs.mean == exact.rhs.mean == 1.0 and exact.passed
    rep = check_tail_identity(y, one, [1], 2.0, REPS, 8)
    assert rep.passed, rep.summary()
    with pytest.raises(UsageError):
        check_tail_identity(y, one, [1], 0.0, 10, 0)


def test_fdd_theta_side_closed_form():
    for a in (0.5, 1.0, 2.0):
        for x in (0.5, 1.0, 3.0):
            assert fdd_Y_theta_side(np.array([[1.0]]), [x], a)[0] == pytest.approx(
                max(0.0, 1 - x**-a))


def test_fdd_singleton_two_points(w4):
    theta = local_field(SyntheticDiscreteField("singleton", w4))
    rep = fdd_Y_check(theta, [[0], [1]], [2.0, 3.0], REPS, 9)
    assert rep.rhs.mean == pytest.approx(0.5) and rep.rhs.se == 0
    assert rep.passed


def test_fdd_brown_resnick_three_points(br4):
    rep = fdd_Y_check(local_field(br4), [[0], [1], [2]], [2.0, 1.5, 3.0], REPS, 10)
    assert rep.passed, rep.summary()


def test_exceedance_functional():
    H = exceedance_functional([[0], [1]], [1.0, 1.5])
    assert H.eps == 1.0 and H.name == "exc[0>1][1>1.5]"
    assert H.scaled_argument(2.0).F.lower == (2.0, 3.0)


def test_tail_measure_of_unit_exceedance(Z1, br_factory):
    H = exceedance_functional([[0]], [1.0])
    z = br_factory(enumerate_window(Z1, 1))
    direct = tail_measure_estimate(H, "direct", z, 1000, 0)
    assert direct.mean == pytest.approx(1.0) and direct.se == 0
    H2 = exceedance_functional([[0]], [2.0])
    assert tail_measure_estimate(H2, "direct", z, 1000, 0).mean == pytest.approx(0.5)


def test_tail_measure_crosscheck(Z1, br_factory):
    H = exceedance_functional([[1]], [1.5])
    est, reports = tail_measure_crosscheck(
        H, br_factory(enumerate_window(Z1, 1)), local_field(br_factory(enumerate_window(Z1, 8))),
        REPS, 11, K=np.arange(-3, 4)[:, None], support=np.arange(-2, 3)[:, None])
    assert set(est) == {"direct", "bizha", "theta_shift"}
    assert all(r.passed for r in reports), [r.summary() for r in reports]


def test_tail_measure_input_errors(br4):
    H = exceedance_functional([[0]], [1.0])
    with pytest.raises(UsageError):
        tail_measure_estimate(H, "other", br4, 10, 0)
    with pytest.raises(UsageError):
        tail_measure_estimate(H, "bizha", br4, 10, 0)
    with pytest.raises(UsageError):
        tail_measure_estimate(H, "theta_shift", br4, 10, 0)
