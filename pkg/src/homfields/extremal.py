"""Extremal-index estimators: block maxima of the stationary spectral field,
the cluster representation through Theta and Y, and the lattice-refinement
study."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from homfields.core import ContractError, FieldSampler, ParetoAlpha, UsageError
from homfields.lattice import Lattice, Window, block_window, enumerate_window, refine
from homfields.mc import MCEstimate, replicate, weighted_estimate
from homfields.tailfields import RandomShiftField, shift_base_window

SpectralFactory = Callable[[Window], FieldSampler]


@dataclass
class ExtremalEstimate:
    method: str  # "blocks" or "pil"
    value: MCEstimate
    lattice: Lattice
    param: float  # block size n or window radius a
    tau: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.value.mean < 0:
            raise ContractError("extremal index estimate must be nonnegative")


def stationary_block_sampler(factory: SpectralFactory, L: Lattice, n: float) -> RandomShiftField:
    """Random-shift representer on the block ``[0, n)^l`` with ``N`` uniform on
    the block; stationary on the block whatever the base field."""
    block = block_window(L, n)
    base = factory(shift_base_window(L, block.coords, block.coords))
    return RandomShiftField(base, block.coords, None, "ii", block)


def extremal_index_blocks(factory: SpectralFactory, L: Lattice, n_list, reps: int, seed: int,
                          *, stationarize: bool = True, workers: int = 1) -> list[ExtremalEstimate]:
    """``n^-l E max_{[0,n)^l} |Z|^alpha`` for each ``n`` in ``n_list``."""
    n_list = list(n_list)
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise UsageError("n_list must be increasing")
    out = []
    for n in n_list:
        if stationarize:
            z = stationary_block_sampler(factory, L, n)
        else:
            z = factory(block_window(L, n))
        a, l = z.alpha, L.l

        def draw(rng, k, z=z):
            norms, wt = z.sample_norms_weighted(rng, k)
            return norms.max(axis=1) ** a, wt

        mx, wt = replicate(draw, reps, seed, stream=f"blocks-{n}", workers=workers)
        est = weighted_estimate(mx / n**l, wt)
        out.append(ExtremalEstimate("blocks", est, L, float(n),
                                    diagnostics={"points": len(z.window)}))
    return out


def extremal_index_pil(theta: FieldSampler, L: Lattice, radii, reps: int, seed: int, *,
                       tau: float = 0.0, workers: int = 1) -> list[ExtremalEstimate]:
    """``Delta(L)^-1 E[1 / sum_{|s| <= a} |Theta(s)|^tau 1{|Y(s)| > 1}]`` for each
    radius ``a``; ``theta`` must cover the largest radius.

    All radii share the same draws, so the estimate is nonincreasing in ``a``
    replication by replication when ``tau = 0``.
    """
    radii = sorted(float(a) for a in radii)
    w = theta.window
    if w.origin_index is None:
        raise UsageError("window must contain the origin")
    subs = [w.subwindow_indices(a) for a in radii]
    if w.lattice != L:
        raise UsageError("theta must live on the lattice L")
    if not w.contains_all(enumerate_window(L, radii[-1]).coords):
        raise UsageError("window does not cover the requested radius")
    pareto = ParetoAlpha(theta.alpha)

    def draw(rng, n):
        nt, wt = theta.sample_norms_weighted(rng, n)
        r = pareto.sample(rng, n)
        exc = r[:, None] * nt > 1.0
        with np.errstate(divide="ignore"):
            contrib = np.where(exc, np.where(exc, nt, 1.0) ** tau, 0.0)
        live = np.ones(n, dtype=bool) if wt is None else wt > 0
        vals = np.zeros((n, len(radii)))
        for k, idx in enumerate(subs):
            den = contrib[:, idx].sum(axis=1)
            if np.any(live & (den <= 0)):
                raise ContractError("cluster size denominator vanished")
            if tau == 0 and np.any(live & (den < 1)):
                raise ContractError("cluster count below one with tau = 0")
            vals[:, k] = np.where(live, 1.0 / np.where(den > 0, den, 1.0), 0.0)
        return vals, wt

    vals, wt = replicate(draw, reps, seed, stream=f"pil-tau{tau:g}", workers=workers)
    monotone = bool(np.all(np.diff(vals, axis=1) <= 0)) if tau == 0 else None
    diag = {"monotone_in_radius": monotone}
    if tau != 0:
        diag["tau_moment"] = tau_moment_probe(theta, subs[-1], tau, min(reps, 10_000), seed,
                                              workers=workers)
    out = []
    for k, a in enumerate(radii):
        est = weighted_estimate(vals[:, k] / L.delta, wt)
        out.append(ExtremalEstimate("pil", est, L, a, tau, diagnostics=dict(diag)))
    return out


def tau_moment_probe(theta: FieldSampler, idx, tau: float, reps: int, seed: int, *,
                     workers: int = 1) -> MCEstimate:
    """Largest estimated ``E |Theta(s)|^tau 1{Theta(s) != 0}`` over the window
    points ``idx``; raises when it is not finite."""

    def draw(rng, n):
        nt, wt = theta.sample_norms_weighted(rng, n)
        v = nt[:, idx]
        with np.errstate(divide="ignore"):
            return np.where(v > 0, np.where(v > 0, v, 1.0) ** tau, 0.0), wt

    vals, wt = replicate(draw, reps, seed, stream=f"pil-moment-tau{tau:g}", workers=workers)
    ests = [weighted_estimate(vals[:, j], wt) for j in range(vals.shape[1])]
    worst = max(ests, key=lambda e: e.mean)
    if not (np.isfinite(worst.mean) and np.isfinite(worst.se)):
        raise ContractError(f"moment E|Theta(s)|^{tau:g} is not finite on the window")
    return worst


@dataclass(frozen=True)
class RefinementRow:
    level: int
    delta: float
    raw: MCEstimate
    normalized: MCEstimate
    points: int


@dataclass
class RefinementTable:
    rows: list
    tolerance: float = 0.10

    def _change(self, attr: str) -> float:
        if len(self.rows) < 2:
            return float("nan")
        a = getattr(self.rows[-2], attr).mean
        b = getattr(self.rows[-1], attr).mean
        if a == 0:
            return 0.0 if b == 0 else float("inf")
        return abs(b / a - 1.0)

    @property
    def normalized_change(self) -> float:
        """Relative change of the normalized estimate between the last two levels."""
        return self._change("normalized")

    @property
    def raw_change(self) -> float:
        return self._change("raw")

    @property
    def passed(self) -> bool:
        return self.normalized_change < self.tolerance


def refinement_study(factory: SpectralFactory, L: Lattice, levels, block_n: float, reps: int,
                     seed: int, *, workers: int = 1, tolerance: float = 0.10) -> RefinementTable:
    """Blocks estimate on ``2^-k L`` for each level ``k``, raw and divided by
    ``Delta(2^-k L) = 2^(-k l) Delta(L)``."""
    rows = []
    for k in levels:
        Lk = refine(L, int(k))
        est = extremal_index_blocks(factory, Lk, [block_n], reps, seed, workers=workers)[0]
        d = Lk.delta
        norm = MCEstimate(est.value.mean / d, est.value.se / d, est.value.reps)
        rows.append(RefinementRow(int(k), d, est.value, norm, est.diagnostics["points"]))
    return RefinementTable(rows, tolerance)
