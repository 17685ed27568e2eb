import numpy as np
import pytest

from homfields.core import UsageError
from homfields.gaussian_br import (
    BrownResnick,
    SpectralModel,
    VariogramSpec,
    covariance_matrix,
    random_tilt_config,
    sample_gaussian,
    tilt_mean_shift,
    tilting_check,
)
from homfields.lattice import Lattice, enumerate_window
from homfields.mc import estimate, replicate

from conftest import assert_within


def test_variogram_properties():
    v = VariogramSpec(1.5, 1.3)
    h = np.array([[0.0], [1.0], [-1.0], [2.5]])
    g = v(h)
    assert g[0] == 0 and np.all(g >= 0) and g[1] == g[2]
    with pytest.raises(UsageError):
        VariogramSpec(1.0, 2.5)


def test_covariance_examples():
    v = VariogramSpec(1.0, 1.0)
    assert covariance_matrix(v, [[3.0]])[0, 0] == pytest.approx(3.0)
    C = covariance_matrix(v, [[0.0], [2.0]])
    assert np.all(C[0] == 0) and np.all(C[:, 0] == 0)
    s = 0.7
    C = covariance_matrix(VariogramSpec(s, 1.0), [[1.0], [2.0]])
    assert np.allclose(C, [[s, s], [s, 2 * s]])


def test_gaussian_sampling():
    assert np.all(sample_gaussian(np.zeros((3, 3)), np.random.default_rng(0), 5) == 0)
    x = replicate(lambda rng, n: sample_gaussian(np.eye(3), rng, n), 10**5, 4, stream="g")
    for k in range(3):
        # E X^2 = 1
        assert_within(estimate(x[:, k] ** 2), 1.0)
    C = covariance_matrix(VariogramSpec(1.0, 1.0), [[1.0], [2.0]])
    y = replicate(lambda rng, n: sample_gaussian(C, rng, n), 10**5, 5, stream="bm")
    assert_within(estimate(y[:, 0] * y[:, 1]), 1.0)


def test_brown_resnick_normalization(br4):
    z = replicate(lambda rng, n: br4.sample_norms(rng, n), 10**5, 6, stream="br-norm")
    o = br4.window.origin_index
    assert np.all(z[:, o] == 1.0)
    for j in (1, 2, 4, 6, 8):
        assert_within(estimate(z[:, j] ** br4.alpha), 1.0)


def test_brown_resnick_rademacher_and_vectors(Z1):
    m = SpectralModel(VariogramSpec(1.0, 1.0), d=2, alpha=2.0, sign_mode="rademacher")
    br = BrownResnick(m, enumerate_window(Z1, 2))
    n = replicate(lambda rng, k: br.sample_norms(rng, k), 20_000, 7)
    assert np.allclose(n[:, br.window.origin_index], 1.0, atol=1e-12)
    assert_within(estimate(n[:, 0] ** 2), 1.0)


def test_tiny_variogram_gives_constant_field(Z1):
    m = SpectralModel(VariogramSpec(1e-8, 1.0), d=1, alpha=1.0)
    z = BrownResnick(m, enumerate_window(Z1, 3)).sample(np.random.default_rng(1), 10)
    assert np.allclose(z, z[:, :1, :], atol=1e-3)


def test_tilt_shift_examples():
    assert np.all(tilt_mean_shift(np.zeros(3), 1.0) == 0)
    assert tilt_mean_shift([0.8], 0.8)[0] == 0.8
    with pytest.raises(UsageError):
        tilt_mean_shift([0.1], 0.0)


def test_tilting_moments():
    cfg = random_tilt_config(np.random.default_rng(11))
    reports = tilting_check(cfg, 10**5, 12)
    assert all(r.passed for r in reports), [r.summary() for r in reports]
