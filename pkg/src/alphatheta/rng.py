"""Seeded random streams and deterministic replicate parallelism.

Every replicate batch draws from its own stream derived from a master seed
and a 64-bit chunk index::

    stream(seed, i) = Generator(PCG64(SeedSequence(seed, spawn_key=(i,))))

Replicates are cut into fixed-size chunks before any work is scheduled, so
the worker count only decides *where* a chunk runs, never what it draws.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

DEFAULT_CHUNK = 1000


def stream(seed: int, index: int = 0) -> np.random.Generator:
    """Independent generator for ``(seed, index)``."""
    if index < 0 or index >= 2**64:
        raise ValueError("stream index must fit in 64 bits")
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.PCG64(ss))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def worker_count(workers: int | None = None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("ALPHATHETA_WORKERS")
    return max(1, int(env)) if env else 1


def _run_chunk(job):
    func, seed, index, count, args = job
    return func(stream(seed, index), count, *args)


def run_replicates(func, n_reps: int, seed: int, *args, chunk: int = DEFAULT_CHUNK,
                   workers: int | None = None) -> list:
    """Run ``func(rng, count, *args)`` over ``n_reps`` replicates.

    ``func`` must be a picklable top-level function returning a sequence of
    per-replicate results. Results come back in replicate order, identical
    for any worker count.
    """
    jobs = []
    done = 0
    index = 0
    while done < n_reps:
        count = min(chunk, n_reps - done)
        jobs.append((func, seed, index, count, args))
        done += count
        index += 1
    nw = worker_count(workers)
    if nw == 1 or len(jobs) == 1:
        parts = [_run_chunk(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=nw) as pool:
            parts = list(pool.map(_run_chunk, jobs))
    out = []
    for part in parts:
        out.extend(part)
    return out


def sub_seed(seed: int, *key: int) -> int:
    """Deterministic 63-bit seed for the experiment named by ``key``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))
