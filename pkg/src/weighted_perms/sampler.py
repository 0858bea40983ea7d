"""Samplers for A_n-weighted permutations (as cycle counts) and GEM/PD sticks."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .exact import DegenerateMeasureError, h_table, resolve_restriction
from .model import RestrictionSet, WeightModel

EXACT_TABLE_MAX_N = 200
CDF_TABLE_MAX_N = 1024
CHUNK = 1000


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream: int = 0

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=(self.stream,))))


@dataclass(frozen=True)
class CycleCountVector:
    """Counts C_m (sparse, m -> C_m > 0) with sum m C_m = n.

    ``order`` optionally keeps cycle lengths in the order they were drawn.
    """

    n: int
    counts: tuple[tuple[int, int], ...]
    order: tuple[int, ...] | None = None

    def __post_init__(self):
        if sum(m * c for m, c in self.counts) != self.n:
            raise ValueError("sum m C_m differs from n")
        if any(c <= 0 or m < 1 for m, c in self.counts):
            raise ValueError("counts must be positive at positive lengths")

    @classmethod
    def from_lengths(cls, n: int, lengths: Sequence[int], keep_order: bool = False) -> "CycleCountVector":
        c: dict[int, int] = {}
        for m in lengths:
            c[m] = c.get(m, 0) + 1
        return cls(n, tuple(sorted(c.items())), tuple(lengths) if keep_order else None)

    def count(self, m: int) -> int:
        return dict(self.counts).get(m, 0)

    def dense(self) -> np.ndarray:
        out = np.zeros(self.n + 1, dtype=np.int64)
        for m, c in self.counts:
            out[m] = c
        return out

    @property
    def T(self) -> int:
        return sum(c for _, c in self.counts)

    def cycle_type(self) -> tuple[int, ...]:
        return tuple(m for m, c in reversed(self.counts) for _ in range(c))

    def respects(self, A: RestrictionSet) -> bool:
        return all(m in A for m, _ in self.counts)

    def sparse(self) -> str:
        return " ".join(f"{m}:{c}" for m, c in self.counts)


class SequentialSampler:
    """Draws l1 from its exact law, then restarts on the remainder.

    The restriction set stays the one fixed for degree n.  Lengths come out in
    size-biased order, so the first one is the length of the cycle through 1.
    """

    def __init__(self, model: WeightModel, A, n: int | None = None):
        self.A = A = resolve_restriction(A, n)
        self.model = model
        self.n = n = A.n
        if n <= EXACT_TABLE_MAX_N:
            hs = h_table(model, A, kind="rational").to_kind("float", scale=float(model.r)).coeffs
        else:
            hs = h_table(model, A, kind="float").coeffs
        if hs[n] == 0:
            raise DegenerateMeasureError(f"h_{n} = 0 for restriction {A.digest}")
        self.hs = np.asarray(hs, dtype=float)
        mask = A.mask(n)
        # theta_k r^k on allowed k, zero elsewhere
        self.a = np.where(mask, model.scaled_theta_array(n), 0.0)
        self.cdf = self._cdf_table() if n <= CDF_TABLE_MAX_N else None

    def _weights(self, m: int) -> np.ndarray:
        # P[l = k | remainder m] proportional to theta_k r^k h~_{m-k}
        return self.a[1 : m + 1] * self.hs[m - 1 :: -1] if m > 0 else np.zeros(0)

    def _cdf_table(self) -> np.ndarray:
        tab = np.ones((self.n + 1, self.n), dtype=float)
        for m in range(1, self.n + 1):
            w = self._weights(m)
            tot = w.sum()
            if tot > 0:
                tab[m, :m] = np.cumsum(w) / tot
        return tab

    def _step(self, m: int, u: float) -> int:
        if self.cdf is not None:
            row = self.cdf[m, :m]
            k = int(np.searchsorted(row, u, side="right")) + 1
            return min(k, m)
        w = self._weights(m)
        c = np.cumsum(w)
        if not c[-1] > 0:
            raise DegenerateMeasureError(f"no admissible cycle length at remainder {m}")
        return min(int(np.searchsorted(c, u * c[-1], side="right")) + 1, m)

    def sample_lengths(self, rng: np.random.Generator) -> list[int]:
        m, out = self.n, []
        while m > 0:
            k = self._step(m, rng.random())
            out.append(k)
            m -= k
        return out

    def sample(self, rng: np.random.Generator) -> CycleCountVector:
        return CycleCountVector.from_lengths(self.n, self.sample_lengths(rng), keep_order=True)

    def sample_many(self, count: int, rng: np.random.Generator) -> list[list[int]]:
        return [self.sample_lengths(rng) for _ in range(count)]


def sample_sequential(model: WeightModel, A, n: int | None, rng: np.random.Generator) -> CycleCountVector:
    return SequentialSampler(model, A, n).sample(rng)


class AcceptanceCollapseError(RuntimeError):
    """Too many rejected proposals; the tilt is probably poor."""


def choose_tilt(model: WeightModel, A, n: int | None = None, iters: int = 200) -> float:
    """Solve sum_{m in A_n} theta_m t^m = n by bisection, capped at r(1 - 1/(2n))."""
    A = resolve_restriction(A, n)
    n = A.n
    r = float(model.r)
    cap = r * (1 - 1 / (2 * n))
    if n == 1:
        return cap / 2
    idx = np.array(A.allowed, dtype=float)
    lth = np.log(np.maximum(model.scaled_theta_array(n)[idx.astype(int)], 1e-300)) - idx * math.log(r)

    def mean_v(t: float) -> float:
        return float(np.exp(lth + idx * math.log(t)).sum())

    hi_val = mean_v(cap)
    if not math.isfinite(hi_val):
        return r * (1 - 1 / n)
    if hi_val <= n:
        return cap
    lo, hi = 0.0, cap
    for _ in range(iters):
        mid = (lo + hi) / 2
        if mean_v(mid) < n:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


class ConditionedPoissonSampler:
    """Independent Poisson(theta_m t^m / m) for m in A_n, m <= n, kept when sum m k_m = n."""

    def __init__(self, model: WeightModel, A, n: int | None = None, t: float | None = None,
                 max_attempts: int = 10**7):
        self.A = A = resolve_restriction(A, n)
        self.n = A.n
        self.model = model
        self.t = choose_tilt(model, A) if t is None else float(t)
        r = float(model.r)
        if not 0 < self.t < r:
            raise ValueError("tilt must lie in (0, r)")
        self.ms = np.array(A.allowed, dtype=np.int64)
        th = model.scaled_theta_array(self.n)[self.ms]
        self.means = th * np.exp(self.ms * (math.log(self.t) - math.log(r))) / self.ms
        self.max_attempts = max_attempts
        self.attempts = 0
        self.accepted = 0

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.attempts if self.attempts else float("nan")

    def _batch(self) -> int:
        return max(1, min(8192, 2_000_000 // max(1, len(self.ms))))

    def sample_counts(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """``count`` accepted count rows, columns aligned with ``self.ms``."""
        rows, have, tried = [], 0, 0
        budget = self.max_attempts * max(1, count)
        while have < count:
            if tried >= budget:
                raise AcceptanceCollapseError(
                    f"{have} of {count} accepted after {tried} proposals at t = {self.t:.6g}")
            k = rng.poisson(self.means, size=(self._batch(), len(self.ms)))
            ok = k[k @ self.ms == self.n]
            tried += k.shape[0]
            rows.append(ok[: count - have])
            have += len(rows[-1])
        self.attempts += tried
        self.accepted += have
        out = np.concatenate(rows) if rows else np.zeros((0, len(self.ms)), dtype=np.int64)
        assert np.all(out @ self.ms == self.n)
        return out

    def to_vector(self, row: np.ndarray) -> CycleCountVector:
        nz = np.nonzero(row)[0]
        return CycleCountVector(self.n, tuple((int(self.ms[i]), int(row[i])) for i in nz))

    def sample(self, rng: np.random.Generator) -> CycleCountVector:
        return self.to_vector(self.sample_counts(1, rng)[0])


def sample_conditioned_poisson(model: WeightModel, A, n: int | None, rng: np.random.Generator,
                               t_tilt: float | None = None) -> CycleCountVector:
    return ConditionedPoissonSampler(model, A, n, t_tilt).sample(rng)


def sample_gem(vartheta: float, depth: int, rng: np.random.Generator, count: int | None = None):
    """Stick-breaking with V = 1 - U^{1/vartheta}.

    Returns (gem, pd): the first ``depth`` fragments in stick order and the
    same fragments sorted decreasingly.  With ``count`` both are arrays of
    shape (count, depth).
    """
    if depth < 1:
        raise ValueError("depth >= 1")
    shape = (depth,) if count is None else (count, depth)
    V = 1 - rng.random(shape) ** (1 / float(vartheta))
    left = np.cumprod(1 - V, axis=-1)
    before = np.concatenate([np.ones(shape[:-1] + (1,)), left[..., :-1]], axis=-1)
    gem = V * before
    pd = -np.sort(-gem, axis=-1)
    return gem, pd


# batch driver ---------------------------------------------------------------------


def default_threads() -> int:
    env = os.environ.get("WEIGHTED_PERMS_THREADS")
    if env:
        return max(1, int(env))
    return max(1, min(8, os.cpu_count() or 1))


def run_chunks(fn: Callable[[int, np.random.Generator], list], count: int, seed: int,
               threads: int | None = None, chunk: int = CHUNK) -> list:
    """Run ``fn(size, rng)`` over fixed-size chunks, one stream per chunk.

    Chunk boundaries and streams do not depend on the thread count, so the
    concatenated result is reproducible for a given seed.
    """
    sizes = [min(chunk, count - i) for i in range(0, count, chunk)]
    jobs = [(size, RngStream(seed, j).generator()) for j, size in enumerate(sizes)]
    threads = threads or default_threads()
    if threads == 1 or len(jobs) <= 1:
        parts = [fn(size, g) for size, g in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda job: fn(*job), jobs))
    out: list = []
    for p in parts:
        out.extend(p)
    return out


def sequential_lengths(model: WeightModel, A, count: int, seed: int, n: int | None = None,
                       threads: int | None = None) -> list[list[int]]:
    """``count`` draws of cycle lengths (size-biased order) from the sequential sampler."""
    s = SequentialSampler(model, A, n)
    return run_chunks(s.sample_many, count, seed, threads)


def conditioned_poisson_counts(model: WeightModel, A, count: int, seed: int, n: int | None = None,
                               t_tilt: float | None = None, threads: int | None = None):
    """(ms, rows): accepted count rows from the conditioned-Poisson sampler."""
    s = ConditionedPoissonSampler(model, A, n, t_tilt)
    rows = run_chunks(lambda size, g: list(s.sample_counts(size, g)), count, seed, threads)
    return s.ms, np.array(rows, dtype=np.int64).reshape(len(rows), len(s.ms))
