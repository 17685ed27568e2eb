"""Anchoring maps on windowed fields (infargsup, first exceedance), the
cluster functionals S_V and B_V,tau, axiom checks and event drift probes."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from homfields.core import FieldSample, FieldSampler, HomogeneousNorm, UsageError
from homfields.mc import replicate


@dataclass(frozen=True)
class AnchorResult:
    """Location of an anchoring map: integer lattice coordinates, or infinite."""

    coords: tuple | None

    @property
    def is_infinite(self) -> bool:
        return self.coords is None

    def minus(self, j) -> "AnchorResult":
        if self.coords is None:
            return self
        return AnchorResult(tuple(int(a - b) for a, b in zip(self.coords, np.ravel(j))))

    def __repr__(self):
        return "AnchorResult(INFINITE)" if self.coords is None else f"AnchorResult({list(self.coords)})"


INFINITE = AnchorResult(None)


def _check(f: FieldSample):
    if len(f.window) == 0:
        raise UsageError("empty window")


def infargsup(f: FieldSample, norm: HomogeneousNorm) -> AnchorResult:
    """Lexicographically smallest window point where ``|f|`` attains its maximum."""
    _check(f)
    nv = f.norms(norm)
    # window coordinates are stored in lexicographic order
    i = int(np.flatnonzero(nv == nv.max())[0])
    return AnchorResult(tuple(int(c) for c in f.window.coords[i]))


def first_exceedance(f: FieldSample, norm: HomogeneousNorm) -> AnchorResult:
    """Lexicographically smallest window point with ``|f| > 1``, else INFINITE."""
    _check(f)
    hits = np.flatnonzero(f.norms(norm) > 1.0)
    if len(hits) == 0:
        return INFINITE
    return AnchorResult(tuple(int(c) for c in f.window.coords[hits[0]]))


ANCHORS: dict[str, Callable] = {"infargsup": infargsup, "first_exceedance": first_exceedance}


# ---------------------------------------------------------------------------
# cluster functionals


def cell_weight(f: FieldSample, continuous: bool) -> float:
    """``Delta(L)`` when the lattice approximates a continuum, else 1."""
    return f.window.lattice.delta if continuous else 1.0


def S_V(f: FieldSample, V, alpha: float, norm: HomogeneousNorm, *, continuous=False) -> float:
    """``sum_{t in V} |f(t)|^alpha`` times the cell weight."""
    idx = f.window.indices_of(V)
    return float(np.sum(f.norms(norm)[idx] ** alpha) * cell_weight(f, continuous))


def B_V_tau(f: FieldSample, V, tau: float, norm: HomogeneousNorm, *, continuous=False) -> float:
    """``sum_{t in V} |f(t)|^tau 1{|f(t)| >= 1}`` times the cell weight."""
    idx = f.window.indices_of(V)
    v = f.norms(norm)[idx]
    exc = v >= 1.0
    return float(np.sum(np.where(exc, v, 1.0)[exc] ** tau) * cell_weight(f, continuous))


# ---------------------------------------------------------------------------
# axiom checks

AXIOMS = ("A1", "A3", "A2", "hom0")


@dataclass
class AxiomTally:
    checked: int = 0
    failed: int = 0
    witnesses: list = field(default_factory=list)

    @property
    def passed(self) -> int:
        return self.checked - self.failed

    def record(self, ok: bool, witness, keep: int = 5):
        self.checked += 1
        if not ok:
            self.failed += 1
            if len(self.witnesses) < keep:
                self.witnesses.append(witness)


@dataclass
class AxiomReport:
    name: str
    tallies: dict
    skipped_shifts: int = 0
    a2_out_of_domain: int = 0
    a2_literal_failures: int = 0

    def holds(self, axiom: str) -> bool:
        t = self.tallies[axiom]
        return t.checked > 0 and t.failed == 0

    def rows(self):
        for ax in AXIOMS:
            t = self.tallies[ax]
            yield ax, t.checked, t.passed, t.failed, t.witnesses


def axiom_check(J: Callable, corpus: list[FieldSample], shifts, scales, norm: HomogeneousNorm,
                name: str = "") -> AxiomReport:
    """Check the anchoring axioms on every corpus element.

    A1: ``J(B^j f) - j == J(f)`` for each shift ``j`` (pairs whose translated
    window loses the origin are skipped).  A3: ``|f(J(f))| > 0``.  A2:
    ``|f(J(f))| > min(1, |f(0)|)``, asserted on fields with ``|f(0)| > 1``;
    literal failures elsewhere are counted separately.  hom0:
    ``J(c f) == J(f)`` for each scale ``c``.
    """
    tallies = {ax: AxiomTally() for ax in AXIOMS}
    rep = AxiomReport(name or getattr(J, "__name__", "J"), tallies)
    for k, f in enumerate(corpus):
        loc = J(f, norm)
        for j in shifts:
            j = np.atleast_1d(np.asarray(j, dtype=np.int64))
            if (-j) not in f.window:
                rep.skipped_shifts += 1
                continue
            got = J(f.shifted(j), norm).minus(j)
            tallies["A1"].record(got == loc, (k, j.tolist(), loc, got))
        if not loc.is_infinite:
            nv = f.norms(norm)
            val = float(nv[f.window.index(loc.coords)])
            n0 = float(nv[f.origin_index])
            tallies["A3"].record(val > 0, (k, loc, val))
            literal = val > min(1.0, n0)
            if n0 > 1.0:
                tallies["A2"].record(literal, (k, loc, val, n0))
            else:
                rep.a2_out_of_domain += 1
                rep.a2_literal_failures += int(not literal)
        for c in scales:
            got = J(f.scaled(c), norm)
            tallies["hom0"].record(got == loc, (k, float(c), loc, got))
    return rep


# ---------------------------------------------------------------------------
# event drift probe


@dataclass(frozen=True)
class EventRow:
    radius: float
    freq_S: float
    freq_B: float
    freq_far: float
    freq_joint: float


def event_probe(y: FieldSampler, radii, M: float, tau: float, reps: int, seed: int, *,
                workers: int = 1, continuous: bool = False) -> list[EventRow]:
    """Frequencies of ``S_V(Y) < M``, ``B_V,tau(Y) < M`` and of a quiet far field
    ``sup_{a/2 <= |t|_1 <= a} |Y(t)| < 1`` on ``V = [-a, a]^l``, per radius."""
    radii = [float(a) for a in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise UsageError("radii must be increasing")
    w = y.window
    pts = w.points
    l1 = np.abs(pts).sum(axis=1)
    cw = w.lattice.delta if continuous else 1.0
    sets = []
    for a in radii:
        inner = w.subwindow_indices(a)
        far = np.flatnonzero((l1 >= a / 2 - 1e-9) & (l1 <= a + 1e-9))
        far = far[np.isin(far, inner)]
        sets.append((inner, far))
    alpha = y.alpha

    def draw(rng, n):
        norms, wt = y.sample_norms_weighted(rng, n)
        out = np.zeros((n, len(radii), 4))
        for k, (inner, far) in enumerate(sets):
            v = norms[:, inner]
            s = (v**alpha).sum(axis=1) * cw
            exc = v >= 1.0
            b = (np.where(exc, np.where(exc, v, 1.0) ** tau, 0.0)).sum(axis=1) * cw
            quiet = norms[:, far].max(axis=1, initial=0.0) < 1.0
            out[:, k, 0] = s < M
            out[:, k, 1] = b < M
            out[:, k, 2] = quiet
            out[:, k, 3] = (s < M) & (b < M) & quiet
        return out, wt

    vals, wt = replicate(draw, reps, seed, stream="event-probe", workers=workers)
    if wt is None:
        means = vals.mean(axis=0)
    else:
        means = np.tensordot(wt, vals, axes=(0, 0)) / wt.sum()
    return [EventRow(a, *map(float, means[k])) for k, a in enumerate(radii)]
