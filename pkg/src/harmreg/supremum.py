"""Seeded supremum estimation: block sampling plus local refinement.

Candidates are rows of a float array; the objective maps a batch of rows to
values, with ``-inf``/``nan`` marking infeasible rows.  Initial candidates come
in fixed-size blocks, block ``k`` drawn from its own stream, so a run with a
larger budget evaluates a superset of a smaller run's initial samples.  Blocks
may be evaluated on a thread pool; results are merged in block order, which
keeps the output independent of the schedule.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from harmreg.errors import NumericalError

BLOCK_SIZE = 1024
REFINE_ROUNDS = 3
REFINE_POINTS = 100
_U64 = (1 << 64) - 1


def max_threads() -> int:
    env = os.environ.get("HARMREG_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, os.cpu_count() or 1)


def stream_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for the stream ``(seed, *keys)``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed) & _U64, *keys]))


@dataclass
class SupResult:
    value: float
    argmax: np.ndarray
    samples_used: int
    trace: list = field(default_factory=list)


def _clean(values: np.ndarray) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    return np.where(np.isnan(v), -np.inf, v)


def maximize(
    objective: Callable[[np.ndarray], np.ndarray],
    draw: Callable[[np.random.Generator, int], np.ndarray],
    perturb: Callable[[np.ndarray, int, np.random.Generator, int], np.ndarray],
    budget: int,
    seed: int,
    *,
    block_size: int = BLOCK_SIZE,
    rounds: int = REFINE_ROUNDS,
    per_round: int = REFINE_POINTS,
    threads: int | None = None,
) -> SupResult:
    """Sampled supremum of ``objective`` with ``rounds`` of refinement.

    ``perturb(center, round, rng, count)`` proposes ``count`` candidates near
    the current argmax; callers halve their neighbourhood per round.
    The trace holds ``(samples_used, running max)`` after every block and
    every refinement round and is non-decreasing by construction.
    """
    if budget < 1:
        raise ValueError("budget must be positive")
    n_blocks = -(-budget // block_size)

    def run_block(k):
        cands = draw(stream_rng(seed, 0, k), block_size)
        take = min(block_size, budget - k * block_size)
        cands = cands[:take]
        return cands, _clean(objective(cands))

    workers = min(threads or max_threads(), n_blocks)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_block, range(n_blocks)))
    else:
        results = [run_block(k) for k in range(n_blocks)]

    best, best_x, used = -np.inf, None, 0
    trace = []
    for cands, vals in results:
        used += len(vals)
        i = int(np.argmax(vals))
        if vals[i] > best:
            best, best_x = float(vals[i]), cands[i].copy()
        if np.isfinite(best):
            trace.append((used, best))
    if best_x is None or not np.isfinite(best):
        raise NumericalError("no feasible sample in the initial budget", {"budget": budget})

    for r in range(rounds):
        cands = perturb(best_x, r, stream_rng(seed, 1, r), per_round)
        vals = _clean(objective(cands))
        used += len(vals)
        i = int(np.argmax(vals))
        if vals[i] > best:
            best, best_x = float(vals[i]), cands[i].copy()
        trace.append((used, best))
    return SupResult(best, best_x, used, trace)


def box_perturb(widths: np.ndarray, project: Callable[[np.ndarray], np.ndarray] | None = None):
    """Uniform proposals in a box of half-widths ``widths / 2**round``.

    The centre itself is always the first proposal.
    """
    w0 = np.asarray(widths, dtype=float)

    def perturb(center, r, rng, count):
        offs = rng.uniform(-1.0, 1.0, (count, center.size)) * (w0 / 2.0**r)
        offs[0] = 0.0
        out = center[None, :] + offs
        return project(out) if project is not None else out

    return perturb


@dataclass
class SeminormEstimate:
    """A sampled supremum together with where it was attained.

    ``witness`` is a dict of arrays from which ``value`` can be recomputed;
    ``trace`` lists ``(samples_used, value)`` pairs.
    """

    value: float
    samples_used: int
    witness: dict
    trace: list

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "samples_used": self.samples_used,
            "witness": {k: np.asarray(v).tolist() for k, v in self.witness.items()},
            "trace": [[int(b), float(v)] for b, v in self.trace],
        }


def derive_seed(seed: int, *keys: int) -> int:
    """Child seed for a named sub-computation; fixed scheme ``SeedSequence([seed, *keys])``."""
    ss = np.random.SeedSequence([int(seed) & _U64, *keys])
    return int(ss.generate_state(1, dtype=np.uint64)[0])
