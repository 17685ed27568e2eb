"""Max-stable fields through the de Haan representation
``X(t) = max_i Gamma_i^(-1/alpha) |Z_i(t)|`` and Monte Carlo checks of
their finite-dimensional and supremum distributions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from homfields.core import FieldSample, FieldSampler, UsageError
from homfields.lattice import Lattice, Window, block_window, fmt_point
from homfields.mc import (
    ComparisonReport,
    MCEstimate,
    compare,
    estimate,
    replicate,
    weighted_estimate,
)

MIN_TERMS = 10
QUANTILE_LEVEL = 0.9999


@dataclass(frozen=True)
class DeHaanConfig:
    """Truncation settings.

    The Poisson sum stops once ``Gamma_n^(-1/alpha) * Q < epsilon * min_t X(t)``
    where ``Q`` is ``bound`` when given, else the empirical 0.9999 quantile of
    ``sup_t |Z(t)|`` over ``quantile_probes`` draws.
    """

    epsilon: float = 0.5
    max_terms: int = 5000
    quantile_probes: int = 20_000
    bound: float | None = None

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise UsageError("epsilon must lie in (0, 1)")
        if self.max_terms < 1:
            raise UsageError("max_terms must be >= 1")
        if self.quantile_probes < 1:
            raise UsageError("quantile_probes must be >= 1")
        if self.bound is not None and not self.bound > 0:
            raise UsageError("bound must be positive")


@dataclass
class DeHaanResult:
    window: Window
    alpha: float
    values: np.ndarray  # (reps, |window|)
    terms: np.ndarray
    truncated: np.ndarray
    margin: np.ndarray  # Gamma_n^(-1/alpha) Q / min X at stop
    q_hat: float
    monotone: bool

    @property
    def reps(self) -> int:
        return len(self.values)

    @property
    def any_truncated(self) -> bool:
        return bool(self.truncated.any())

    def field_sample(self, i: int) -> FieldSample:
        return FieldSample(self.window, self.values[i][:, None], self.alpha)


def estimate_sup_quantile(spectral: FieldSampler, probes: int, seed: int,
                          level: float = QUANTILE_LEVEL, workers: int = 1) -> float:
    sups = replicate(lambda rng, n: spectral.sample_norms(rng, n).max(axis=1),
                     probes, seed, stream="dehaan-quantile", workers=workers)
    return float(np.quantile(sups, level))


def dehaan_simulate(spectral: FieldSampler, cfg: DeHaanConfig, reps: int, seed: int, *,
                    workers: int = 1, stream="dehaan") -> DeHaanResult:
    """Simulate ``reps`` independent max-stable fields on ``spectral.window``."""
    a = spectral.alpha
    q = cfg.bound if cfg.bound is not None else estimate_sup_quantile(
        spectral, cfg.quantile_probes, seed, workers=workers)

    def draw(rng, n):
        m = len(spectral.window)
        X = np.zeros((n, m))
        G = np.zeros(n)
        terms = np.zeros(n, dtype=np.int64)
        done = np.zeros(n, dtype=bool)
        margin = np.full(n, np.inf)
        monotone = True
        while True:
            act = np.nonzero(~done)[0]
            if len(act) == 0:
                break
            G[act] += rng.exponential(size=len(act))
            z = spectral.sample_norms(rng, len(act))
            new = np.maximum(X[act], G[act, None] ** (-1.0 / a) * z)
            monotone &= bool(np.all(new >= X[act]))
            X[act] = new
            terms[act] += 1
            mn = X[act].min(axis=1)
            with np.errstate(divide="ignore"):
                marg = G[act] ** (-1.0 / a) * q / mn
            margin[act] = marg
            stop = (terms[act] >= MIN_TERMS) & (marg < cfg.epsilon)
            stop |= terms[act] >= cfg.max_terms
            done[act[stop]] = True
        trunc = margin >= cfg.epsilon
        return X, terms, trunc, margin, np.full(n, monotone)

    X, terms, trunc, margin, mono = replicate(draw, reps, seed, stream=stream, workers=workers)
    return DeHaanResult(spectral.window, a, X, terms, trunc, margin, q, bool(mono.all()))


def fdd_neglog(spectral: FieldSampler, points, x, reps: int, seed: int, *,
               workers: int = 1, stream="fdd-neglog") -> MCEstimate:
    """Monte Carlo estimate of ``E max_i |Z(t_i)|^alpha / x_i^alpha``."""
    w = spectral.window
    idx = w.indices_of(points)
    x = np.asarray(x, dtype=float).reshape(-1)
    if len(x) != len(idx) or np.any(x <= 0):
        raise UsageError("need one positive level per point")
    a = spectral.alpha

    def draw(rng, n):
        norms, wt = spectral.sample_norms_weighted(rng, n)
        v = (norms[:, idx] ** a / x**a).max(axis=1)
        return v, wt

    v, wt = replicate(draw, reps, seed, stream=stream, workers=workers)
    return weighted_estimate(v, wt)


def empirical_neglog(result: DeHaanResult, points, x) -> MCEstimate:
    """``-ln`` of the empirical joint probability with a delta-method SE."""
    idx = result.window.indices_of(points)
    x = np.asarray(x, dtype=float).reshape(-1)
    hit = np.all(result.values[:, idx] <= x, axis=1).astype(float)
    p = estimate(hit)
    if p.mean <= 0:
        return MCEstimate(math.inf, math.inf, p.reps)
    return MCEstimate(-math.log(p.mean), p.se / p.mean, p.reps)


def joint_cdf_check(spectral: FieldSampler, points, x, reps: int, seed: int, cfg: DeHaanConfig,
               *, z_crit: float = 4.0, workers: int = 1, result: DeHaanResult | None = None,
               test_id: str | None = None) -> ComparisonReport:
    """Empirical ``-ln P(X(t_i) <= x_i)`` against ``E max |Z(t_i)|^alpha / x_i^alpha``
    from an independent bank."""
    pts = np.asarray(points, dtype=np.int64).reshape(-1, spectral.window.l)
    test_id = test_id or ("eq-kode points=" + ";".join(map(fmt_point, pts))
                          + " x=" + ",".join(f"{float(v):g}" for v in np.ravel(x)))
    if result is None:
        result = dehaan_simulate(spectral, cfg, reps, seed, workers=workers)
    lhs = empirical_neglog(result, pts, x)
    rhs = fdd_neglog(spectral, pts, x, reps, seed, workers=workers, stream=f"{test_id}:rhs")
    return compare(lhs, rhs, z_crit, test_id)


def frechet_marginal_check(result: DeHaanResult, point, x: float, *, z_crit: float = 4.0,
                           test_id: str | None = None) -> ComparisonReport:
    """Empirical ``P(X(t) <= x)`` against ``exp(-x^-alpha)``."""
    i = result.window.index(point)
    p = estimate((result.values[:, i] <= x).astype(float))
    exact = MCEstimate(math.exp(-(x ** -result.alpha)), 0.0, p.reps)
    return compare(p, exact, z_crit, test_id or f"eq-kode-marginal t={fmt_point(point)} x={x:g}")


@dataclass(frozen=True)
class SupProbeRow:
    n: float
    neglog_p: MCEstimate | None  # None when no replication stayed below the level
    rhs: MCEstimate
    flagged: bool
    report: ComparisonReport | None


def sup_distribution_probe(make_spectral: Callable[[Window], FieldSampler], L: Lattice,
                           n_list, r: float, reps: int, seed: int, cfg: DeHaanConfig, *,
                           workers: int = 1, z_crit: float = 4.0) -> list[SupProbeRow]:
    """For each block size ``n``: ``-ln P(sup_{[0,n)} X <= r n^(l/alpha))`` from
    de Haan simulation, and ``E sup |Z|^alpha / (r^alpha n^l)`` from the spectral
    field on the same block."""
    if not r > 0:
        raise UsageError("r must be positive")
    n_list = list(n_list)
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise UsageError("n_list must be increasing")
    rows = []
    for n in n_list:
        w = block_window(L, n)
        spectral = make_spectral(w)
        a, l = spectral.alpha, L.l
        level = r * n ** (l / a)
        res = dehaan_simulate(spectral, cfg, reps, seed, workers=workers, stream=f"sup-probe-{n}")
        hit = (res.values.max(axis=1) <= level).astype(float)
        p = estimate(hit)
        rhs_vals = replicate(lambda rng, k: spectral.sample_norms(rng, k).max(axis=1) ** a,
                             reps, seed, stream=f"sup-probe-rhs-{n}", workers=workers)
        e = estimate(rhs_vals)
        rhs = MCEstimate(e.mean / (r**a * n**l), e.se / (r**a * n**l), e.reps)
        if p.mean <= 0:
            rows.append(SupProbeRow(n, None, rhs, True, None))
            continue
        lhs = MCEstimate(-math.log(p.mean), p.se / p.mean, p.reps)
        rows.append(SupProbeRow(n, lhs, rhs, False, compare(lhs, rhs, z_crit, f"eq-LY n={n}")))
    return rows
