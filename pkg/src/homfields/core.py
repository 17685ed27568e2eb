"""Shared domain types: homogeneous norms, Pareto variables, field samples,
functional specifications and the sampler base class."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class UsageError(ValueError):
    """Raised when an operation is called outside its preconditions."""


class NumericalError(RuntimeError):
    """Raised when a numerical routine (e.g. a factorization) fails."""


class ContractError(RuntimeError):
    """Raised when a sampled quantity violates a declared contract."""


# ---------------------------------------------------------------------------
# norms

NORM_KINDS = ("alpha_sum", "euclidean", "sup")


@dataclass(frozen=True)
class HomogeneousNorm:
    """1-homogeneous map on R^d.

    ``alpha_sum`` computes ``(sum_i |x_i|^alpha / d)^(1/alpha)``; ``euclidean``
    and ``sup`` are the usual norms.  ``d`` is optional for the latter two.
    """

    kind: str = "sup"
    alpha: float | None = None
    d: int | None = None

    def __post_init__(self):
        if self.kind not in NORM_KINDS:
            raise UsageError(f"unknown norm kind {self.kind!r}")
        if self.kind == "alpha_sum":
            if self.alpha is None or self.alpha <= 0:
                raise UsageError("alpha_sum norm needs alpha > 0")
            if self.d is None or self.d < 1:
                raise UsageError("alpha_sum norm needs d >= 1")

    def __call__(self, x) -> np.ndarray:
        """Norm over the last axis of ``x``."""
        x = np.asarray(x, dtype=float)
        if self.d is not None and x.shape[-1] != self.d:
            raise UsageError(f"expected vectors of length {self.d}, got {x.shape[-1]}")
        a = np.abs(x)
        if self.kind == "sup":
            return a.max(axis=-1)
        if self.kind == "euclidean":
            return np.sqrt((a * a).sum(axis=-1))
        if a.shape[-1] == 1:
            # (|x|^alpha)^(1/alpha) is |x| up to round-off
            return a[..., 0].copy()
        return (np.power(a, self.alpha).sum(axis=-1) / a.shape[-1]) ** (1.0 / self.alpha)


def eval_norm(n: HomogeneousNorm, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise UsageError("eval_norm expects a single vector")
    return float(n(x))


# ---------------------------------------------------------------------------
# Pareto


@dataclass(frozen=True)
class ParetoAlpha:
    """alpha-Pareto law: survival t^-alpha on [1, inf)."""

    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise UsageError("Pareto index must be positive")

    def sample(self, rng: np.random.Generator, size=None) -> np.ndarray:
        # 1 - U lies in (0, 1], so R >= 1
        u = 1.0 - rng.random(size)
        return u ** (-1.0 / self.alpha)

    def survival(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= 1.0, np.maximum(t, 1.0) ** (-self.alpha), 1.0)


def sample_pareto(p: ParetoAlpha, rng: np.random.Generator, size=None):
    return p.sample(rng, size)


# ---------------------------------------------------------------------------
# field samples


@dataclass(frozen=True, eq=False)
class FieldSample:
    """Realization of an R^d-valued field on a finite lattice window."""

    window: "Window"  # noqa: F821 - defined in homfields.lattice
    values: np.ndarray
    alpha: float
    origin_index: int | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.shape[0] != len(self.window):
            raise UsageError("values must have one row per window point")
        if not np.all(np.isfinite(values)):
            raise UsageError("field values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        oi = self.origin_index
        if oi is None:
            oi = self.window.origin_index
        if oi is None or np.any(self.window.coords[oi] != 0):
            raise UsageError("window must contain the origin")
        object.__setattr__(self, "origin_index", int(oi))

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def norms(self, norm: HomogeneousNorm) -> np.ndarray:
        return norm(self.values)

    def scaled(self, c: float) -> "FieldSample":
        return FieldSample(self.window, c * self.values, self.alpha)

    def shifted(self, j) -> "FieldSample":
        """B^j f, i.e. t -> f(t - j), carried on the translated window."""
        from homfields.lattice import translate_window

        w = translate_window(self.window, j)
        return FieldSample(w, self.values, self.alpha, w.origin_index)


# ---------------------------------------------------------------------------
# functionals

FUNCTIONAL_KINDS = ("indicator_box", "product_power", "sup_window", "integral_FI")
HOMOGENEITY_TAGS = ("deg0", "degAlpha", "general")


def _as_points(points) -> np.ndarray:
    arr = np.asarray(points, dtype=np.int64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr[:, None]
    return arr


@dataclass(frozen=True, eq=False)
class FunctionalSpec:
    """Test functional acting on a field through its norm values.

    indicator_box
        ``prod_k 1{lower_k <= |f(p_k)| <= upper_k}``
    product_power
        ``prod_k |f(p_k)|^e_k`` (degree ``sum e_k``)
    sup_window
        ``max_{t in V} |f(t)|``
    integral_FI
        ``sum_{t in V} |f(t)| * weight``
    """

    kind: str
    points: np.ndarray = field(default_factory=lambda: np.zeros((0, 1), dtype=np.int64))
    lower: tuple = ()
    upper: tuple = ()
    exponents: tuple = ()
    tag: str = "general"
    weight: float = 1.0
    name: str = ""

    def __post_init__(self):
        if self.kind not in FUNCTIONAL_KINDS:
            raise UsageError(f"unknown functional kind {self.kind!r}")
        if self.tag not in HOMOGENEITY_TAGS:
            raise UsageError(f"unknown homogeneity tag {self.tag!r}")
        pts = _as_points(self.points)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        k = len(pts)
        if k == 0:
            raise UsageError("functional needs at least one point")
        if self.kind == "indicator_box":
            lo = tuple(float(v) for v in self.lower) or (0.0,) * k
            hi = tuple(float(v) for v in self.upper) or (np.inf,) * k
            if len(lo) != k or len(hi) != k:
                raise UsageError("indicator_box needs one bound pair per point")
            object.__setattr__(self, "lower", lo)
            object.__setattr__(self, "upper", hi)
        if self.kind == "product_power":
            ex = tuple(float(v) for v in self.exponents)
            if len(ex) != k:
                raise UsageError("product_power needs one exponent per point")
            object.__setattr__(self, "exponents", ex)
        deg = self.degree
        if self.tag == "deg0" and deg is not None and deg != 0:
            raise UsageError(f"functional of degree {deg} cannot be tagged deg0")
        if not self.name:
            object.__setattr__(self, "name", self.kind)

    @property
    def degree(self) -> float | None:
        """Homogeneity degree when it is known structurally, else None."""
        if self.kind == "product_power":
            return float(sum(self.exponents))
        if self.kind in ("sup_window", "integral_FI"):
            return 1.0
        trivial = all(lo <= 0 for lo in self.lower) and all(np.isinf(hi) for hi in self.upper)
        return 0.0 if trivial else None

    def shifted(self, h) -> "FunctionalSpec":
        """The functional ``f -> F(B^h f)``: every referenced point moves by -h."""
        h = np.asarray(h, dtype=np.int64).reshape(1, -1)
        return FunctionalSpec(
            self.kind, self.points - h, self.lower, self.upper, self.exponents,
            self.tag, self.weight, self.name,
        )

    def indices(self, window) -> np.ndarray:
        return window.indices_of(self.points)

    def evaluate_norms(self, norms: np.ndarray, window) -> np.ndarray:
        """Vectorized evaluation on a bank of norm arrays of shape (n, |window|)."""
        idx = self.indices(window)
        v = np.asarray(norms, dtype=float)[..., idx]
        if self.kind == "indicator_box":
            lo = np.asarray(self.lower)
            hi = np.asarray(self.upper)
            return np.all((v >= lo) & (v <= hi), axis=-1).astype(float)
        if self.kind == "product_power":
            ex = np.asarray(self.exponents)
            with np.errstate(divide="ignore", invalid="ignore"):
                out = np.prod(np.power(v, ex), axis=-1)
            # 0 * inf conventions: terms with a zero base and negative exponent give 0
            return np.where(np.isfinite(out), out, 0.0)
        if self.kind == "sup_window":
            return v.max(axis=-1)
        return self.weight * v.sum(axis=-1)


def sup_window(points, name="sup") -> FunctionalSpec:
    return FunctionalSpec("sup_window", points, name=name)


def integral_FI(points, weight=1.0, name="FI") -> FunctionalSpec:
    return FunctionalSpec("integral_FI", points, weight=weight, name=name)


def indicator_box(points, lower=(), upper=(), tag="general", name="box") -> FunctionalSpec:
    return FunctionalSpec("indicator_box", points, lower=lower, upper=upper, tag=tag, name=name)


def product_power(points, exponents, tag="general", name="pow") -> FunctionalSpec:
    return FunctionalSpec("product_power", points, exponents=exponents, tag=tag, name=name)


def eval_functional(F: FunctionalSpec, f: FieldSample, norm: HomogeneousNorm) -> float:
    """Evaluate ``F`` on a single sample (points must lie in ``f.window``)."""
    return float(F.evaluate_norms(f.norms(norm)[None, :], f.window)[0])


def origin_normalized(norms: np.ndarray, origin_index: int) -> np.ndarray:
    """``|f| / |f(0)|`` with the convention 0/0 = 0."""
    base = norms[..., origin_index : origin_index + 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        out = norms / base
    return np.where(base > 0, out, 0.0)


def check_homogeneity(F: FunctionalSpec, alpha: float, norms: np.ndarray, window,
                      scales: Sequence[float], rtol: float = 1e-10) -> bool:
    """Randomized check of the scaling law implied by ``F.tag``."""
    if F.tag == "general":
        return True
    deg = 0.0 if F.tag == "deg0" else alpha
    base = F.evaluate_norms(norms, window)
    for c in scales:
        scaled = F.evaluate_norms(c * norms, window)
        target = c**deg * base
        if not np.allclose(scaled, target, rtol=rtol, atol=0.0):
            return False
    return True


# ---------------------------------------------------------------------------
# samplers


class FieldSampler:
    """Base class for field samplers on a fixed window.

    Subclasses implement :meth:`sample` returning an array of shape
    ``(n, |window|, d)``.  Weighted samplers (local fields built by change of
    measure) override :meth:`sample_weighted`.
    """

    window = None
    alpha: float = 1.0
    norm: HomogeneousNorm = HomogeneousNorm("sup")
    d: int = 1

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def sample_weighted(self, rng, n):
        return self.sample(rng, n), None

    def sample_norms(self, rng, n) -> np.ndarray:
        return self.norm(self.sample(rng, n))

    def sample_norms_weighted(self, rng, n):
        values, w = self.sample_weighted(rng, n)
        return self.norm(values), w

    def field_samples(self, rng, n) -> list[FieldSample]:
        values = self.sample(rng, n)
        return [FieldSample(self.window, v, self.alpha) for v in values]


class ScaledField(FieldSampler):
    """``c * Z`` for a base sampler ``Z``."""

    def __init__(self, base: FieldSampler, c: float):
        if not c > 0:
            raise UsageError("scale must be positive")
        self.base, self.c = base, float(c)
        self.window, self.alpha, self.norm, self.d = base.window, base.alpha, base.norm, base.d

    def sample(self, rng, n):
        return self.c * self.base.sample(rng, n)


class RandomScaleField(FieldSampler):
    """``S * Z`` with ``S`` drawn from a finite law independent of ``Z``."""

    def __init__(self, base: FieldSampler, values, probs):
        self.base = base
        self.values = np.asarray(values, dtype=float)
        self.probs = np.asarray(probs, dtype=float)
        if self.values.shape != self.probs.shape or not np.isclose(self.probs.sum(), 1.0):
            raise UsageError("scale law must be a probability vector over the values")
        self.window, self.alpha, self.norm, self.d = base.window, base.alpha, base.norm, base.d

    def sample(self, rng, n):
        z = self.base.sample(rng, n)
        s = rng.choice(self.values, size=n, p=self.probs)
        return s[:, None, None] * z
