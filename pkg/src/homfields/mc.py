"""Deterministic Monte Carlo execution.

Replications are grouped in fixed-size chunks.  Chunk ``c`` of stream ``s``
draws from a Philox generator keyed by ``SeedSequence(seed, spawn_key=(s, c))``,
so replication ``i`` is tied to ``(seed, s, i // chunk, i % chunk)`` whatever
the number of workers.  Reductions run over the concatenated per-replication
values in index order, which makes results bit-identical across worker counts.
"""

from __future__ import annotations

import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from homfields.core import UsageError

CHUNK_SIZE = 4096


class MCRunError(RuntimeError):
    def __init__(self, failed: int, reps: int, first: BaseException):
        super().__init__(f"{failed} of {reps} replications failed: {first!r}")
        self.failed = failed
        self.first = first


def stream_key(stream) -> int:
    if isinstance(stream, str):
        return zlib.crc32(stream.encode())
    if isinstance(stream, (int, np.integer)) and stream >= 0:
        return int(stream)
    raise UsageError(f"invalid stream id {stream!r}")


def substream(seed: int, stream=0, chunk: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(stream_key(stream), int(chunk)))
    return np.random.Generator(np.random.Philox(ss))


def replicate(fn: Callable, reps: int, seed: int, *, stream=0, workers: int = 1,
              chunk_size: int = CHUNK_SIZE):
    """Run ``fn(rng, n)`` over all chunks and concatenate the results.

    ``fn`` returns an array (or tuple of arrays) with leading dimension ``n``.
    """
    if reps < 1:
        raise UsageError("reps must be positive")
    starts = list(range(0, reps, chunk_size))
    jobs = [(c, min(chunk_size, reps - s)) for c, s in enumerate(starts)]

    def run(job):
        c, n = job
        try:
            out = fn(substream(seed, stream, c), n)
        except Exception as exc:  # counted below, fails the run
            return exc, n
        return out, n

    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(run, jobs))
    else:
        results = [run(j) for j in jobs]

    errors = [(r, n) for r, n in results if isinstance(r, BaseException)]
    if errors:
        raise MCRunError(sum(n for _, n in errors), reps, errors[0][0])
    outs = [r for r, _ in results]
    if isinstance(outs[0], tuple):
        return tuple(_concat([o[i] for o in outs]) for i in range(len(outs[0])))
    return _concat(outs)


def _concat(parts):
    if any(p is None for p in parts):
        return None
    return np.concatenate([np.asarray(p) for p in parts], axis=0)


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    se: float
    reps: int

    @property
    def ci95(self) -> tuple[float, float]:
        return (self.mean - 1.96 * self.se, self.mean + 1.96 * self.se)

    def __str__(self):
        return f"{self.mean:.6g} +/- {self.se:.3g} (n={self.reps})"


def estimate(values) -> MCEstimate:
    """Mean and standard error with exactly rounded sums."""
    x = np.asarray(values, dtype=float).ravel()
    n = len(x)
    if n < 2:
        raise UsageError("need at least two replications")
    mean = math.fsum(x) / n
    dev = x - mean
    var = math.fsum(dev * dev) / (n - 1)
    return MCEstimate(mean, math.sqrt(var / n), n)


def ratio_estimate(num, den) -> MCEstimate:
    """Self-normalized estimate ``sum num / sum den`` with delta-method SE."""
    num = np.asarray(num, dtype=float).ravel()
    den = np.asarray(den, dtype=float).ravel()
    n = len(num)
    if n < 2:
        raise UsageError("need at least two replications")
    sden = math.fsum(den)
    if sden <= 0:
        from homfields.core import ContractError

        raise ContractError("all importance weights are zero")
    mean = math.fsum(num) / sden
    r = num - mean * den
    var = math.fsum(r * r) / (n - 1)
    return MCEstimate(mean, math.sqrt(var / n) / (sden / n), n)


def weighted_estimate(values, weights=None) -> MCEstimate:
    if weights is None:
        return estimate(values)
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    return ratio_estimate(values * weights, weights)


def run_mc(estimator: Callable, reps: int, master_seed: int, workers: int = 1,
           stream=0) -> MCEstimate:
    """Estimate ``E[estimator]`` where ``estimator(rng, n)`` returns ``n`` draws."""
    if reps < 2:
        raise UsageError("reps must be >= 2")
    return estimate(replicate(estimator, reps, master_seed, stream=stream, workers=workers))


@dataclass(frozen=True)
class ComparisonReport:
    lhs: MCEstimate
    rhs: MCEstimate
    z: float
    z_crit: float
    passed: bool
    test_id: str = ""

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"{self.test_id} {verdict} z={self.z:.2f}"


def compare(lhs: MCEstimate, rhs: MCEstimate, z_crit: float = 4.0, test_id: str = "") -> ComparisonReport:
    diff = lhs.mean - rhs.mean
    s = math.hypot(lhs.se, rhs.se)
    if s == 0.0:
        same = abs(diff) <= 1e-12 * max(1.0, abs(lhs.mean), abs(rhs.mean))
        z = 0.0 if same else math.copysign(math.inf, diff)
    else:
        z = diff / s
    return ComparisonReport(lhs, rhs, z, z_crit, abs(z) <= z_crit, test_id)
