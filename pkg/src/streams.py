# src/streams.py
# Reproducible random substreams and the parallel replication driver.

import logging
import math
import time
import zlib
from typing import Callable, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from .errors import ParameterDomainError

log = logging.getLogger(__name__)

# replications handed to one worker task
BLOCK_SIZE = 1_000

Kernel = Callable[[np.random.Generator], Sequence[float]]


def experiment_key(experiment: str) -> int:
    return zlib.crc32(experiment.encode("utf-8"))


def substream(seed: int, experiment: str, index: int) -> np.random.Generator:
    """Philox generator keyed by (seed, experiment, replication index).

    The key is SeedSequence(entropy=seed, spawn_key=(crc32(experiment), index)),
    so a replication draws the same numbers whichever worker runs it.
    """
    seq = np.random.SeedSequence(entropy=seed, spawn_key=(experiment_key(experiment), index))
    return np.random.Generator(np.random.Philox(seq))


def resolve_threads(threads: int) -> int:
    if threads < 0:
        raise ParameterDomainError(f"thread count must be >= 0, got {threads}")
    return -1 if threads == 0 else threads


def _run_block(kernel: Kernel, seed: int, experiment: str, start: int, stop: int) -> np.ndarray:
    rows = [
        np.atleast_1d(np.asarray(kernel(substream(seed, experiment, i)), dtype=float))
        for i in range(start, stop)
    ]
    return np.vstack(rows)


def run_replications(
    kernel: Kernel, reps: int, seed: int, experiment: str, threads: int = 1
) -> np.ndarray:
    """Run `kernel` once per replication and stack the rows in replication order.

    The kernel must be picklable (a module-level function or a partial of
    one) when more than one worker is used.
    """
    if reps < 1:
        raise ParameterDomainError(f"need at least one replication, got {reps}")
    n_jobs = resolve_threads(threads)
    blocks = [(start, min(start + BLOCK_SIZE, reps)) for start in range(0, reps, BLOCK_SIZE)]
    started = time.perf_counter()
    if n_jobs == 1 or len(blocks) == 1:
        parts = [_run_block(kernel, seed, experiment, a, b) for a, b in blocks]
    else:
        parts = Parallel(n_jobs=n_jobs)(
            delayed(_run_block)(kernel, seed, experiment, a, b) for a, b in blocks
        )
    values = np.vstack(parts)
    log.debug(
        "%s: %d replications in %.2fs (n_jobs=%d)",
        experiment,
        reps,
        time.perf_counter() - started,
        n_jobs,
    )
    return values


def summarize(values: np.ndarray) -> Tuple[float, float]:
    """Sample mean and its standard error (sample std / sqrt(n))."""
    values = np.asarray(values, dtype=float)
    n = len(values)
    mean = float(np.mean(values))
    if n < 2:
        return mean, 0.0
    return mean, float(np.std(values, ddof=1) / math.sqrt(n))
