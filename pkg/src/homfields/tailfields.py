"""Local (spectral tail) fields, tail fields, random-shift representations,
Monte Carlo checks of the shift identities and tail-measure estimators."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from homfields.core import (
    ContractError,
    FieldSampler,
    FunctionalSpec,
    HomogeneousNorm,
    ParetoAlpha,
    UsageError,
    check_homogeneity,
    indicator_box,
    origin_normalized,
)
from homfields.lattice import Lattice, Window, fmt_point
from homfields.mc import (
    ComparisonReport,
    MCEstimate,
    compare,
    estimate,
    ratio_estimate,
    replicate,
    weighted_estimate,
)

SYNTHETIC_KINDS = ("singleton", "geometric_decay", "constant")
LOCAL_MODES = ("direct", "weighted", "resampled")
ORIGIN_TOL = 1e-12


def _unit_vector(norm: HomogeneousNorm, d: int) -> np.ndarray:
    e = np.zeros(d)
    e[0] = 1.0
    return e / float(norm(e))


def _coords(points, l: int) -> np.ndarray:
    return np.asarray(points, dtype=np.int64).reshape(-1, l)


# ---------------------------------------------------------------------------
# closed-form test fields


class SyntheticDiscreteField(FieldSampler):
    """Closed-form fields used as oracles.

    ``singleton``: mass at the origin only.  ``geometric_decay``: norm
    ``rho^|k|_1`` at integer coordinates ``k`` with independent random signs.
    ``constant``: ``Z(t) = Z(0)`` where ``|Z(0)|`` follows ``law``, either
    ``"unit"``, ``"exponential"`` (``|Z(0)|^alpha ~ Exp(1)``) or a pair
    ``(values, probs)``.
    """

    def __init__(self, kind: str, window: Window, alpha: float = 1.0, d: int = 1,
                 rho: float = 0.5, law="unit", norm: HomogeneousNorm | None = None):
        if kind not in SYNTHETIC_KINDS:
            raise UsageError(f"unknown synthetic field {kind!r}")
        if kind == "geometric_decay" and not 0 < rho < 1:
            raise UsageError("rho must lie in (0, 1)")
        if window.origin_index is None:
            raise UsageError("window must contain the origin")
        self.kind, self.window, self.alpha, self.d, self.rho = kind, window, float(alpha), d, rho
        self.norm = norm or HomogeneousNorm("alpha_sum", alpha, d)
        self._e = _unit_vector(self.norm, d)
        if kind == "constant":
            if isinstance(law, str):
                if law not in ("unit", "exponential"):
                    raise UsageError(f"unknown law {law!r}")
            else:
                vals, probs = (np.asarray(x, dtype=float) for x in law)
                if vals.shape != probs.shape or np.any(vals < 0) or not np.isclose(probs.sum(), 1):
                    raise UsageError("law must be (nonnegative values, probabilities)")
                law = (vals, probs / probs.sum())
        self.law = law
        self._decay = rho ** np.abs(window.coords).sum(axis=1)

    def sample(self, rng, n):
        m, o = len(self.window), self.window.origin_index
        if self.kind == "singleton":
            out = np.zeros((n, m, self.d))
            out[:, o, :] = self._e
            return out
        if self.kind == "geometric_decay":
            signs = rng.integers(0, 2, size=(n, m)) * 2.0 - 1.0
            signs[:, o] = 1.0
            return (signs * self._decay)[:, :, None] * self._e
        if self.law == "unit":
            r = np.ones(n)
        elif self.law == "exponential":
            r = rng.exponential(size=n) ** (1.0 / self.alpha)
        else:
            r = rng.choice(self.law[0], size=n, p=self.law[1])
        return np.broadcast_to(r[:, None, None] * self._e, (n, m, self.d)).copy()


# ---------------------------------------------------------------------------
# local and tail fields


class LocalField(FieldSampler):
    """Spectral tail field ``Theta`` of a base spectral sampler.

    ``direct`` passes base samples through and requires ``|Z(0)| = 1``.
    ``weighted`` emits ``Z / |Z(0)|`` with importance weight ``|Z(0)|^alpha``;
    rows of zero weight carry ``Theta = 0`` and must be ignored by callers
    (every estimator here weights them out).  ``resampled`` draws a bank of
    ``bank`` weighted candidates per call and resamples it multinomially.
    """

    def __init__(self, base: FieldSampler, mode: str = "direct", bank: int = 10_000):
        if mode not in LOCAL_MODES:
            raise UsageError(f"unknown local-field mode {mode!r}")
        if base.window.origin_index is None:
            raise UsageError("base window must contain the origin")
        self.base, self.mode, self.bank = base, mode, int(bank)
        self.window, self.alpha, self.norm, self.d = base.window, base.alpha, base.norm, base.d

    def _normalized(self, rng, n):
        z = self.base.sample(rng, n)
        r0 = self.norm(z[:, self.window.origin_index, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            theta = z / r0[:, None, None]
        theta[r0 == 0] = 0.0
        return theta, r0**self.alpha

    def sample_weighted(self, rng, n):
        if self.mode == "direct":
            z = self.base.sample(rng, n)
            r0 = self.norm(z[:, self.window.origin_index, :])
            if np.any(np.abs(r0 - 1.0) > ORIGIN_TOL):
                raise ContractError("direct local field needs |Z(0)| = 1 on every sample")
            return z, None
        if self.mode == "weighted":
            return self._normalized(rng, n)
        out = []
        left = n
        while left > 0:
            theta, w = self._normalized(rng, self.bank)
            total = w.sum()
            if not total > 0:
                raise ContractError("degenerate base: all importance weights are zero")
            k = min(left, self.bank)
            pick = rng.choice(self.bank, size=k, p=w / total)
            out.append(theta[pick])
            left -= k
        return np.concatenate(out), None

    def sample(self, rng, n):
        theta, w = self.sample_weighted(rng, n)
        if w is not None:
            raise UsageError("weighted local field: use sample_weighted")
        return theta


def local_field(base: FieldSampler, mode: str = "auto", *, bank: int = 10_000,
                declared_normalized: bool = False, check_reps: int = 0,
                seed: int = 0) -> LocalField:
    """Wrap ``base`` as a local-field sampler.

    ``mode="auto"`` picks ``direct`` when a probe batch has ``|Z(0)| = 1``
    throughout and ``weighted`` otherwise.  With ``declared_normalized`` and
    ``check_reps > 0`` the normalization ``E|Z(0)|^alpha = 1`` is probed and a
    warning is raised when the 95% interval excludes 1.
    """
    if mode == "auto":
        from homfields.mc import substream

        z = base.sample(substream(seed, "local-field-probe"), 64)
        r0 = base.norm(z[:, base.window.origin_index, :])
        mode = "direct" if np.all(np.abs(r0 - 1.0) <= ORIGIN_TOL) else "weighted"
    if declared_normalized and check_reps > 1:
        o = base.window.origin_index

        def draw(rng, n):
            return base.norm(base.sample(rng, n)[:, o, :]) ** base.alpha

        est = estimate(replicate(draw, check_reps, seed, stream="local-field-normalization"))
        lo, hi = est.ci95
        if not lo <= 1.0 <= hi:
            warnings.warn(f"E|Z(0)|^alpha = {est} is not compatible with 1", stacklevel=2)
    return LocalField(base, mode, bank)


class TailField(FieldSampler):
    """``Y = R * Theta`` with ``R`` alpha-Pareto and independent of ``Theta``."""

    def __init__(self, theta: FieldSampler):
        self.theta = theta
        self.window, self.alpha, self.norm, self.d = theta.window, theta.alpha, theta.norm, theta.d
        self._pareto = ParetoAlpha(self.alpha)

    def sample_weighted(self, rng, n):
        th, w = self.theta.sample_weighted(rng, n)
        r = self._pareto.sample(rng, n)
        return r[:, None, None] * th, w

    def sample(self, rng, n):
        y, w = self.sample_weighted(rng, n)
        if w is not None:
            raise UsageError("weighted tail field: use sample_weighted")
        return y


def tail_field(theta: FieldSampler) -> TailField:
    return TailField(theta)


# ---------------------------------------------------------------------------
# random-shift representation


def shift_base_window(L: Lattice, out_coords, support) -> Window:
    """Smallest window on which ``Z`` must be simulated so that the random
    shift can be evaluated on ``out_coords`` for every ``N`` in ``support``."""
    out = _coords(out_coords, L.l)
    sup = _coords(support, L.l)
    diffs = np.concatenate([
        (out[:, None, :] - sup[None, :, :]).reshape(-1, L.l),
        (sup[:, None, :] - sup[None, :, :]).reshape(-1, L.l),
        np.zeros((1, L.l), dtype=np.int64),
    ])
    return Window(L, np.unique(diffs, axis=0))


class RandomShiftField(FieldSampler):
    """Random-shift representer ``Z_N`` of the class generated by ``base``.

    ``N`` has the finite law ``probs`` on ``support``.  Variant ``ii``:
    ``Z_N(t) = |Z(0)| Z(t - N) / (sum_h |Z(h - N)|^alpha p(h))^(1/alpha)``.
    Variant ``iii`` needs a base with ``|Theta(0)| = 1`` and an independent
    Pareto ``R``; it normalizes by ``max_h p(h)^(1/alpha) |Theta(h - N)|``
    times ``(sum_h 1{R |Theta(h - N)| > 1} p(h))^(1/alpha)`` and scales by
    ``p(N)^(1/alpha)``.
    """

    def __init__(self, base: FieldSampler, support, probs=None, variant: str = "ii",
                 out_window: Window | None = None):
        if variant not in ("ii", "iii"):
            raise UsageError(f"unknown random-shift variant {variant!r}")
        bw = base.window
        l = bw.l
        sup = _coords(support, l)
        if len(sup) == 0:
            raise UsageError("shift support must be nonempty")
        p = np.full(len(sup), 1.0 / len(sup)) if probs is None else np.asarray(probs, dtype=float)
        if p.shape != (len(sup),) or np.any(p <= 0) or not math.isclose(p.sum(), 1.0, rel_tol=1e-9):
            raise UsageError("shift law must be strictly positive on its support and sum to 1")
        if out_window is None:
            keep = [k for k in bw.coords if bw.contains_all(k[None, :] - sup)]
            out_window = Window(bw.lattice, np.array(keep, dtype=np.int64).reshape(-1, l))
        if out_window.origin_index is None:
            raise UsageError("output window must contain the origin")
        need_out = (out_window.coords[None, :, :] - sup[:, None, :])
        need_sum = (sup[None, :, :] - sup[:, None, :])
        if not (bw.contains_all(need_out.reshape(-1, l)) and bw.contains_all(need_sum.reshape(-1, l))
                and bw.origin_index is not None):
            raise UsageError("shifted points leave the base window; enlarge it "
                             "(see shift_base_window)")
        self.base, self.variant = base, variant
        self.support, self.probs = sup, p / p.sum()
        self.window, self.alpha, self.norm, self.d = out_window, base.alpha, base.norm, base.d
        # idx_out[j, i]: base index of out_i - N_j;  idx_sum[j, k]: base index of h_k - N_j
        self._idx_out = np.stack([bw.indices_of(row) for row in need_out])
        self._idx_sum = np.stack([bw.indices_of(row) for row in need_sum])
        self._pareto = ParetoAlpha(self.alpha)

    def sample_weighted(self, rng, n):
        z, w = self.base.sample_weighted(rng, n)
        a = self.alpha
        j = rng.choice(len(self.probs), size=n, p=self.probs)
        rows = np.arange(n)[:, None]
        zs = z[rows, self._idx_out[j]]  # (n, |out|, d)
        nz = self.norm(z)
        nh = nz[rows, self._idx_sum[j]]  # (n, |supp|)
        n0 = nz[:, self.base.window.origin_index]
        if self.variant == "ii":
            s = (nh**a * self.probs).sum(axis=1) ** (1.0 / a)
            with np.errstate(divide="ignore", invalid="ignore"):
                scale = np.where(s > 0, n0 / s, 0.0)
        else:
            live = n0 > 0 if w is None else (n0 > 0) & (w > 0)
            if np.any(np.abs(n0[live] - 1.0) > ORIGIN_TOL):
                raise ContractError("variant iii needs a base with |Theta(0)| = 1")
            r = self._pareto.sample(rng, n)
            mx = (self.probs ** (1.0 / a) * nh).max(axis=1)
            cnt = ((r[:, None] * nh > 1.0) * self.probs).sum(axis=1)
            den = mx * cnt ** (1.0 / a)
            with np.errstate(divide="ignore", invalid="ignore"):
                scale = np.where(live & (den > 0), self.probs[j] ** (1.0 / a) / den, 0.0)
        return scale[:, None, None] * zs, w

    def sample(self, rng, n):
        out, w = self.sample_weighted(rng, n)
        if w is not None:
            raise UsageError("weighted base: use sample_weighted")
        return out


def random_shift_ZN(base: FieldSampler, support, probs=None, variant: str = "ii",
                    out_window: Window | None = None) -> RandomShiftField:
    return RandomShiftField(base, support, probs, variant, out_window)


# ---------------------------------------------------------------------------
# identity checks


def _bank(sampler: FieldSampler, fn, reps, seed, stream, workers):
    """Per-replication values ``fn(norms)`` and weights (None if unweighted)."""

    def draw(rng, n):
        norms, w = sampler.sample_norms_weighted(rng, n)
        v = fn(norms)
        if w is not None:
            # zero-weight rows are placeholders; keep their values finite
            v = np.where(w > 0, v, 0.0)
        return v, w

    return replicate(draw, reps, seed, stream=stream, workers=workers)


def _side_estimate(sampler, fn, reps, seed, stream, workers) -> MCEstimate:
    v, w = _bank(sampler, fn, reps, seed, stream, workers)
    return weighted_estimate(v, w)


def _require(window: Window, points, what: str):
    if not window.contains_all(points):
        raise UsageError(f"{what} lies outside the sampler window")


def _streams(test_id: str, streams):
    return streams if streams is not None else (f"{test_id}:lhs", f"{test_id}:rhs")


def identity_side(F: FunctionalSpec, h, alpha: float, window: Window):
    """``f -> |f(h)|^alpha F(f / |f(h)|)`` on norm banks (0 when ``f(h) = 0``)."""
    ih = window.index(h)

    def fn(norms):
        nh = norms[:, ih]
        with np.errstate(divide="ignore", invalid="ignore"):
            scaled = np.where(nh[:, None] > 0, norms / nh[:, None], 0.0)
        return np.where(nh > 0, nh**alpha * F.evaluate_norms(scaled, window), 0.0)

    return fn


def check_identity_boll(s1: FieldSampler, s2: FieldSampler, F: FunctionalSpec, h,
                        reps: int, seed: int, *, z_crit: float = 4.0, workers: int = 1,
                        normalize: bool = False, test_id: str | None = None,
                        streams=None) -> ComparisonReport:
    """Compare ``E|Z(h)|^alpha F(Z/|Z(h)|)`` between two samplers.

    With ``normalize`` each side is divided by its own ``E|Z(h)|^alpha``
    (a ratio estimator), which compares the classes up to a scale factor.
    """
    h = np.asarray(h, dtype=np.int64).reshape(-1)
    test_id = test_id or f"eq-boll h={fmt_point(h)} F={F.name}"
    for s in (s1, s2):
        _require(s.window, h, "h")
        _require(s.window, F.points, "functional point")
    ids = _streams(test_id, streams)
    ests = []
    for s, stream in zip((s1, s2), ids):
        fn = identity_side(F, h, s.alpha, s.window)
        if not normalize:
            ests.append(_side_estimate(s, fn, reps, seed, stream, workers))
            continue
        ih = s.window.index(h)
        v, w = _bank(s, lambda nr: np.stack([fn(nr), nr[:, ih] ** s.alpha], axis=1),
                     reps, seed, stream, workers)
        w = np.ones(len(v)) if w is None else w
        ests.append(ratio_estimate(v[:, 0] * w, v[:, 1] * w))
    return compare(ests[0], ests[1], z_crit, test_id)


def _gamma0(G: FunctionalSpec, window: Window):
    """0-homogeneous version of ``G``: itself if tagged deg0, else ``G(f / |f(0)|)``."""
    if G.tag == "deg0":
        def deg0(norms):
            if not check_homogeneity(G, 1.0, norms, window, (0.5, 3.0)):
                raise ContractError(f"{G.name} is tagged deg0 but is not scale invariant")
            return G.evaluate_norms(norms, window)

        return deg0
    o = window.origin_index
    return lambda norms: G.evaluate_norms(origin_normalized(norms, o), window)


def check_spectral_identity(theta: FieldSampler, G: FunctionalSpec, h, reps: int, seed: int,
                            *, z_crit: float = 4.0, workers: int = 1,
                            test_id: str | None = None, streams=None) -> ComparisonReport:
    """``E|Theta(h)|^alpha G(Theta)`` vs ``E 1{|Theta(-h)| != 0} G(B^h Theta)``."""
    h = np.asarray(h, dtype=np.int64).reshape(-1)
    w = theta.window
    test_id = test_id or f"eq-eqDo20 h={fmt_point(h)} G={G.name}"
    _require(w, h, "h")
    _require(w, -h, "-h")
    _require(w, G.points, "functional point")
    Gs = G.shifted(h)
    _require(w, Gs.points, "shifted functional point")
    a = theta.alpha
    ih, imh = w.index(h), w.index(-h)
    g_lhs = _gamma0(G, w)
    g_rhs = _gamma0(Gs, w)

    def lhs(norms):
        return norms[:, ih] ** a * g_lhs(norms)

    def rhs(norms):
        base = norms[:, imh]
        if G.tag == "deg0":
            val = g_rhs(norms)
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                scaled = np.where(base[:, None] > 0, norms / base[:, None], 0.0)
            val = Gs.evaluate_norms(scaled, w)
        return np.where(base != 0, val, 0.0)

    s_l, s_r = _streams(test_id, streams)
    return compare(_side_estimate(theta, lhs, reps, seed, s_l, workers),
                   _side_estimate(theta, rhs, reps, seed, s_r, workers), z_crit, test_id)


def check_tail_identity(y: FieldSampler, G: FunctionalSpec, h, x: float, reps: int, seed: int,
                        *, z_crit: float = 4.0, workers: int = 1,
                        test_id: str | None = None, streams=None) -> ComparisonReport:
    """``E G(x B^h Y) 1{x|Y(-h)| > 1}`` vs ``x^alpha E G(Y) 1{|Y(h)| > x}``."""
    if not x > 0:
        raise UsageError("x must be positive")
    h = np.asarray(h, dtype=np.int64).reshape(-1)
    w = y.window
    test_id = test_id or f"eq-tYY h={fmt_point(h)} x={x:g} G={G.name}"
    _require(w, h, "h")
    _require(w, -h, "-h")
    _require(w, G.points, "functional point")
    Gs = G.shifted(h)
    _require(w, Gs.points, "shifted functional point")
    ih, imh = w.index(h), w.index(-h)
    a = y.alpha

    def lhs(norms):
        return Gs.evaluate_norms(x * norms, w) * (x * norms[:, imh] > 1.0)

    def rhs(norms):
        return x**a * G.evaluate_norms(norms, w) * (norms[:, ih] > x)

    s_l, s_r = _streams(test_id, streams)
    return compare(_side_estimate(y, lhs, reps, seed, s_l, workers),
                   _side_estimate(y, rhs, reps, seed, s_r, workers), z_crit, test_id)


def fdd_Y_theta_side(norms_at_points: np.ndarray, x, alpha: float) -> np.ndarray:
    """``max(1, M) - M`` with ``M = max_i |Theta(t_i)|^alpha / x_i^alpha``."""
    m = (norms_at_points**alpha / np.asarray(x, dtype=float) ** alpha).max(axis=-1)
    return np.maximum(1.0, m) - m


def fdd_Y_check(theta: FieldSampler, points, x, reps: int, seed: int, *, z_crit: float = 4.0,
                workers: int = 1, test_id: str | None = None, streams=None) -> ComparisonReport:
    """``P(|Y(t_i)| <= x_i for all i)`` from ``Y = R Theta`` against the
    Theta-only expectation."""
    w = theta.window
    pts = _coords(points, w.l)
    x = np.asarray(x, dtype=float).reshape(-1)
    if len(x) != len(pts) or np.any(x <= 0):
        raise UsageError("need one positive level per point")
    _require(w, pts, "point")
    idx = w.indices_of(pts)
    test_id = test_id or ("eq-eB points=" + ";".join(map(fmt_point, pts))
                          + " x=" + ",".join(f"{v:g}" for v in x))
    a = theta.alpha
    s_l, s_r = _streams(test_id, streams)
    lhs = _side_estimate(tail_field(theta), lambda nr: np.all(nr[:, idx] <= x, axis=1).astype(float),
                         reps, seed, s_l, workers)
    rhs = _side_estimate(theta, lambda nr: fdd_Y_theta_side(nr[:, idx], x, a),
                         reps, seed, s_r, workers)
    return compare(lhs, rhs, z_crit, test_id)


# ---------------------------------------------------------------------------
# tail measure


@dataclass(frozen=True, eq=False)
class TailFunctional:
    """Nonnegative ``H`` that vanishes when ``sup_{K0} |f| < eps``."""

    F: FunctionalSpec
    eps: float
    K0: np.ndarray

    def __post_init__(self):
        if not self.eps > 0:
            raise UsageError("eps must be positive")
        k0 = _coords(self.K0, self.F.points.shape[1])
        if len(k0) == 0:
            raise UsageError("K0 must be nonempty")
        object.__setattr__(self, "K0", k0)

    @property
    def name(self) -> str:
        return self.F.name

    def scaled_argument(self, c: float) -> "TailFunctional":
        """``f -> H(f / c)`` for indicator boxes (thresholds scale by ``c``)."""
        if self.F.kind != "indicator_box":
            raise UsageError("argument scaling is implemented for indicator boxes")
        G = FunctionalSpec("indicator_box", self.F.points, tuple(c * v for v in self.F.lower),
                           tuple(c * v for v in self.F.upper), tag=self.F.tag,
                           name=f"{self.F.name}/{c:g}")
        return TailFunctional(G, c * self.eps, self.K0)


def exceedance_functional(points, levels, name=None) -> TailFunctional:
    """``H(f) = prod_k 1{|f(p_k)| >= u_k}``, declared with K0 = the points and
    eps = min u (if every point is below min u, some factor vanishes)."""
    levels = tuple(float(u) for u in np.atleast_1d(levels))
    pts = np.asarray(points, dtype=np.int64)
    pts = pts.reshape(len(levels), -1)
    F = indicator_box(pts, lower=levels, upper=(np.inf,) * len(levels),
                      name=name or "exc" + "".join(f"[{fmt_point(p)}>{u:g}]" for p, u in zip(pts, levels)))
    return TailFunctional(F, min(levels), pts)


def _check_vanishing(H: TailFunctional, args: np.ndarray, window: Window, k0_idx):
    sup = args[:, k0_idx].max(axis=1)
    below = sup < H.eps
    if np.any(below) and np.any(H.F.evaluate_norms(args[below], window) != 0):
        raise ContractError(f"{H.name} does not vanish below eps on K0")


TAIL_VARIANTS = ("direct", "bizha", "theta_shift")


def tail_measure_estimate(H: TailFunctional, variant: str, sampler: FieldSampler, reps: int,
                          seed: int, *, K=None, support=None, probs=None, workers: int = 1,
                          stream: str | None = None) -> MCEstimate:
    """Estimate ``nu_Z[H]``.

    ``direct``: ``sampler`` gives ``Z``; uses
    ``E[M^alpha eps^-alpha H(eps u Z / M)]`` with ``M = sup_{K0} |Z|``.
    ``bizha``: ``sampler`` gives ``Theta``; averages over shifts ``t`` in ``K``
    of ``H(eps B^t Y)`` divided by the exceedance count of ``B^t Y`` on ``K``.
    ``theta_shift``: ``sampler`` gives ``Theta``; the direct estimator on the
    random shift ``B^N Theta / I(B^N Theta)`` with ``N`` distributed on
    ``support`` with ``probs``.
    """
    if variant not in TAIL_VARIANTS:
        raise UsageError(f"unknown tail-measure variant {variant!r}")
    stream = stream or f"tail-{variant}-{H.name}"
    if variant == "theta_shift":
        if support is None:
            raise UsageError("theta_shift needs a shift support")
        sampler = RandomShiftField(sampler, support, probs, "ii")
        variant = "direct"
    if variant == "direct":
        return _tail_direct(H, sampler, reps, seed, stream, workers)
    if K is None:
        raise UsageError("bizha needs the window K")
    return _tail_shift_average(H, sampler, _coords(K, sampler.window.l), reps, seed, stream, workers)


def _tail_direct(H, sampler, reps, seed, stream, workers):
    w = sampler.window
    _require(w, H.K0, "K0")
    _require(w, H.F.points, "functional point")
    k0 = w.indices_of(H.K0)
    a, eps = sampler.alpha, H.eps
    pareto = ParetoAlpha(a)

    def draw(rng, n):
        norms, wt = sampler.sample_norms_weighted(rng, n)
        u = pareto.sample(rng, n)
        m = norms[:, k0].max(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            unit = np.where(m[:, None] > 0, norms / m[:, None], 0.0)
        _check_vanishing(H, 0.999 * eps * unit, w, k0)
        v = np.where(m > 0, (m / eps) ** a * H.F.evaluate_norms(eps * u[:, None] * unit, w), 0.0)
        if wt is not None:
            v = np.where(wt > 0, v, 0.0)
        return v, wt

    v, wt = replicate(draw, reps, seed, stream=stream, workers=workers)
    return weighted_estimate(v, wt)


def _tail_shift_average(H, theta, K, reps, seed, stream, workers):
    w = theta.window
    l = w.l
    if not all(tuple(k) in {tuple(c) for c in K.tolist()} for k in H.K0.tolist()):
        raise UsageError("K must contain K0")
    # count_t = sum_{s in K} 1{|Y(s - t)| > 1};  H(eps B^t Y) uses points p - t
    cnt_idx = np.stack([w.indices_of(K - t) if w.contains_all(K - t) else _missing(K - t)
                        for t in K])
    shifted = [H.F.shifted(t) for t in K]
    for G in shifted:
        _require(w, G.points, "shifted functional point")
    k0_idx = [w.indices_of(H.K0 - t) if w.contains_all(H.K0 - t) else _missing(H.K0 - t)
              for t in K]
    a, eps = theta.alpha, H.eps
    y = tail_field(theta)

    def draw(rng, n):
        norms, wt = y.sample_norms_weighted(rng, n)
        total = np.zeros(n)
        args = eps * norms
        for j, G in enumerate(shifted):
            sup = args[:, k0_idx[j]].max(axis=1)
            hv = G.evaluate_norms(args, w)
            if np.any(hv[sup < H.eps] != 0):
                raise ContractError(f"{H.name} does not vanish below eps on K0")
            c = (norms[:, cnt_idx[j]] > 1.0).sum(axis=1)
            total += np.where(c > 0, hv / np.maximum(c, 1), 0.0)
        v = eps**-a * total
        if wt is not None:
            v = np.where(wt > 0, v, 0.0)
        return v, wt

    v, wt = replicate(draw, reps, seed, stream=stream, workers=workers)
    return weighted_estimate(v, wt)


def _missing(points):
    raise UsageError(f"window does not cover the shifted points {np.asarray(points).tolist()}")


def tail_measure_crosscheck(H: TailFunctional, z_sampler: FieldSampler, theta: FieldSampler,
                            reps: int, seed: int, *, K, support, probs=None,
                            z_crit: float = 4.0, workers: int = 1):
    """All three estimates of ``nu_Z[H]`` and their pairwise comparisons."""
    est = {
        "direct": tail_measure_estimate(H, "direct", z_sampler, reps, seed, workers=workers),
        "bizha": tail_measure_estimate(H, "bizha", theta, reps, seed, K=K, workers=workers),
        "theta_shift": tail_measure_estimate(H, "theta_shift", theta, reps, seed,
                                             support=support, probs=probs, workers=workers),
    }
    names = list(est)
    reports = [compare(est[a], est[b], z_crit, f"eq-tail-measure {a}~{b} H={H.name}")
               for i, a in enumerate(names) for b in names[i + 1:]]
    return est, reports


# ---------------------------------------------------------------------------
# integrability probe


@dataclass(frozen=True)
class ProbeRow:
    radius: float
    estimate: MCEstimate
    rel_change: float | None


def integrability_probe(theta: FieldSampler, support, probs, radii, reps: int, seed: int,
                        *, workers: int = 1) -> list[ProbeRow]:
    """Window-truncated ``sum_t p(t) E[sup_{|s| <= a} |Theta(s - t)|^alpha /
    sum_r |Theta(r - t)|^alpha p(r)]`` for each radius ``a``.

    A diagnostic only: rows report the relative change between successive radii.
    """
    w = theta.window
    l = w.l
    sup = _coords(support, l)
    p = np.full(len(sup), 1.0 / len(sup)) if probs is None else np.asarray(probs, dtype=float)
    radii = sorted(float(a) for a in radii)
    tables = []
    for a in radii:
        inner = w.coords[np.all(np.abs(w.lattice.embed(w.coords)) <= a + 1e-9, axis=1)]
        rows = []
        for t in sup:
            if not (w.contains_all(inner - t) and w.contains_all(sup - t)):
                raise UsageError(f"window too small for radius {a:g}")
            rows.append((w.indices_of(inner - t), w.indices_of(sup - t)))
        tables.append(rows)
    alpha = theta.alpha

    def draw(rng, n):
        norms, wt = theta.sample_norms_weighted(rng, n)
        na = norms**alpha
        out = np.zeros((n, len(radii)))
        for k, rows in enumerate(tables):
            for pt, (i_s, i_r) in zip(p, rows):
                den = (na[:, i_r] * p).sum(axis=1)
                num = na[:, i_s].max(axis=1)
                with np.errstate(divide="ignore", invalid="ignore"):
                    out[:, k] += pt * np.where(den > 0, num / den, 0.0)
        if wt is not None:
            out[wt <= 0] = 0.0
        return out, wt

    vals, wt = replicate(draw, reps, seed, stream="integrability-probe", workers=workers)
    result, prev = [], None
    for k, a in enumerate(radii):
        e = weighted_estimate(vals[:, k], wt)
        rel = None if prev is None or prev.mean == 0 else abs(e.mean - prev.mean) / abs(prev.mean)
        result.append(ProbeRow(a, e, rel))
        prev = e
    return result
