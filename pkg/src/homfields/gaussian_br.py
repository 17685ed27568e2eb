"""Gaussian fields with stationary increments on finite windows and the
Brown-Resnick spectral fields built from them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from homfields.core import FieldSampler, HomogeneousNorm, NumericalError, UsageError
from homfields.lattice import Window
from homfields.mc import ComparisonReport, compare, estimate, replicate, MCEstimate

SIGN_MODES = ("plus_one", "rademacher")


@dataclass(frozen=True)
class VariogramSpec:
    """Power variogram ``gamma(h) = sigma * |h|_2^kappa``."""

    sigma: float = 1.0
    kappa: float = 1.0
    family: str = "power"

    def __post_init__(self):
        if self.family != "power":
            raise UsageError(f"unknown variogram family {self.family!r}")
        if not self.sigma > 0:
            raise UsageError("sigma must be positive")
        if not 0 < self.kappa <= 2:
            raise UsageError("kappa must lie in (0, 2]")

    def __call__(self, h) -> np.ndarray:
        h = np.asarray(h, dtype=float)
        if h.ndim == 0:
            h = h.reshape(1)
        r = np.sqrt((h * h).sum(axis=-1)) if h.ndim > 1 else np.abs(h)
        return self.sigma * r**self.kappa


def covariance_matrix(v: VariogramSpec, points) -> np.ndarray:
    """Covariance of the centered field with ``Y(0) = 0`` and variogram ``v``:
    ``C[s, t] = (gamma(s) + gamma(t) - gamma(t - s)) / 2``."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if len(pts) == 0:
        raise UsageError("need at least one point")
    g = v(pts)
    gd = v(pts[:, None, :] - pts[None, :, :])
    return 0.5 * (g[:, None] + g[None, :] - gd)


def cholesky_factor(C: np.ndarray, jitter: float = 1e-10) -> np.ndarray:
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise UsageError("covariance must be square")
    if not np.allclose(C, C.T, rtol=0, atol=1e-12 * max(1.0, np.abs(C).max(initial=0))):
        raise UsageError("covariance must be symmetric")
    if len(C) == 0:
        return C.copy()
    if not np.any(C):
        return np.zeros_like(C)
    M = C + jitter * np.eye(len(C))
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        eig = np.linalg.eigvalsh(C)
        raise NumericalError(
            f"Cholesky failed with jitter {jitter:g}: size {len(C)}, "
            f"min eigenvalue {eig.min():.3g}, max eigenvalue {eig.max():.3g}"
        ) from None
    return L


def sample_gaussian(C, rng: np.random.Generator, n: int | None = None, jitter: float = 1e-10):
    """Zero-mean Gaussian vector(s) with covariance ``C``; shape ``(m,)`` or ``(n, m)``."""
    L = cholesky_factor(C, jitter)
    m = len(L)
    g = rng.standard_normal((1 if n is None else n, m))
    out = g @ L.T
    return out[0] if n is None else out


@dataclass(frozen=True)
class SpectralModel:
    variogram: VariogramSpec
    d: int = 1
    alpha: float = 1.0
    sign_mode: str = "plus_one"
    jitter: float = 1e-10

    def __post_init__(self):
        if self.d < 1:
            raise UsageError("d must be >= 1")
        if not self.alpha > 0:
            raise UsageError("alpha must be positive")
        if self.sign_mode not in SIGN_MODES:
            raise UsageError(f"unknown sign mode {self.sign_mode!r}")
        if self.jitter < 0:
            raise UsageError("jitter must be nonnegative")

    @property
    def norm(self) -> HomogeneousNorm:
        return HomogeneousNorm("alpha_sum", self.alpha, self.d)


class BrownResnick(FieldSampler):
    """Brown-Resnick spectral field ``Z_i(t) = xi_i exp(Y_i(t) - alpha Var(Y_i(t)) / 2)``
    with independent components ``Y_i`` pinned at ``Y_i(0) = 0``."""

    def __init__(self, model: SpectralModel, window: Window):
        self.model = model
        self.window = window
        self.alpha = model.alpha
        self.d = model.d
        self.norm = model.norm
        g = model.variogram(window.points)
        # points with zero variance (the origin) are pinned to Y = 0 exactly
        self._free = np.nonzero(g > 0)[0]
        self._var = g
        C = covariance_matrix(model.variogram, window.points[self._free])
        self._L = cholesky_factor(C, model.jitter)
        self._C = C

    @property
    def chol(self) -> np.ndarray:
        return self._L

    @property
    def covariance(self) -> np.ndarray:
        return self._C

    def sample_gaussian(self, rng, n) -> np.ndarray:
        m = len(self.window)
        Y = np.zeros((n, self.d, m))
        if len(self._free):
            g = rng.standard_normal((n, self.d, len(self._free)))
            Y[:, :, self._free] = g @ self._L.T
        return Y

    def sample(self, rng, n):
        Y = self.sample_gaussian(rng, n)
        W = Y - 0.5 * self.alpha * self._var
        Z = np.exp(W)
        if self.model.sign_mode == "rademacher":
            xi = rng.integers(0, 2, size=(n, self.d, 1)) * 2.0 - 1.0
            Z = xi * Z
        return np.ascontiguousarray(Z.transpose(0, 2, 1))


def br_spectral_sample(model: SpectralModel, w: Window, rng, n: int = 1):
    from homfields.core import FieldSample

    values = BrownResnick(model, w).sample(rng, n)
    samples = [FieldSample(w, v, model.alpha) for v in values]
    return samples[0] if n == 1 else samples


# ---------------------------------------------------------------------------
# exponential tilting


def tilt_mean_shift(cov_XY, v: float) -> np.ndarray:
    """Mean shift of ``X`` under the measure with density ``exp(Y - v/2)``:
    the vector ``Cov(X(t_k), Y)``."""
    if not v > 0:
        raise UsageError("Var(Y) must be positive")
    return np.array(cov_XY, dtype=float, copy=True)


@dataclass(frozen=True)
class TiltConfig:
    """Jointly Gaussian ``(X(t_1..t_m), Y)`` given by its joint covariance."""

    cov_X: np.ndarray
    cov_XY: np.ndarray
    var_Y: float

    def joint(self) -> np.ndarray:
        m = len(self.cov_XY)
        J = np.empty((m + 1, m + 1))
        J[:m, :m] = self.cov_X
        J[:m, m] = J[m, :m] = self.cov_XY
        J[m, m] = self.var_Y
        return J


def random_tilt_config(rng: np.random.Generator, m_max: int = 5,
                       variogram: VariogramSpec | None = None) -> TiltConfig:
    """Random points of Z, Gaussian X with the given variogram, and
    ``Y = sum_k a_k X(t_k) + b * eps`` rescaled so that ``Var(Y)`` is in [0.2, 1]."""
    variogram = variogram or VariogramSpec(1.0, 1.0)
    m = int(rng.integers(1, m_max + 1))
    pts = rng.choice(np.arange(-6, 7), size=m, replace=False).astype(float)
    pts[pts == 0] = 7.0
    C = covariance_matrix(variogram, pts[:, None])
    a = rng.normal(size=m)
    b = abs(rng.normal()) + 0.1
    cXY = C @ a
    v = float(a @ C @ a + b * b)
    target = rng.uniform(0.2, 1.0)
    s = np.sqrt(target / v)
    return TiltConfig(C, s * cXY, target)


def tilting_check(cfg: TiltConfig, reps: int, seed: int, *, workers: int = 1,
                  z_crit: float = 4.0, stream="tilt") -> list[ComparisonReport]:
    """Compare importance-weighted moments of ``X`` against the shifted Gaussian.

    First moments: ``E[w X(t)]`` vs ``Cov(X(t), Y)``.
    Second moments: ``E[w X(t)^2]`` vs ``Var(X(t)) + Cov(X(t), Y)^2``.
    """
    L = cholesky_factor(cfg.joint(), 1e-12)
    m = len(cfg.cov_XY)
    v = cfg.var_Y

    def draw(rng, n):
        g = rng.standard_normal((n, m + 1)) @ L.T
        X, Y = g[:, :m], g[:, m]
        w = np.exp(Y - 0.5 * v)
        return np.concatenate([w[:, None] * X, w[:, None] * X * X], axis=1)

    vals = replicate(draw, reps, seed, stream=stream, workers=workers)
    shift = tilt_mean_shift(cfg.cov_XY, v)
    second = np.diag(cfg.cov_X) + shift**2
    reports = []
    for k in range(m):
        reports.append(compare(estimate(vals[:, k]), MCEstimate(float(shift[k]), 0.0, reps),
                               z_crit, f"tilt-mean[{k}]"))
        reports.append(compare(estimate(vals[:, m + k]), MCEstimate(float(second[k]), 0.0, reps),
                               z_crit, f"tilt-second[{k}]"))
    return reports
