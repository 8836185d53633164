""" Seeded random streams, worker pools and filesystem helpers. """

# =============================================================================
# IMPORTS
# =============================================================================
import contextlib
import logging
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

logger = logging.getLogger(__name__)

# =============================================================================
# CONSTANTS
# =============================================================================
THREADS_ENV = "REALPG_THREADS"

# purpose tags leading every stream key
INIT = 0
DATA = 1
TRAIN = 2
EVAL = 3
SHUFFLE = 4
ORACLE = 5


# =============================================================================
# UTILITY FUNCTIONS
# =============================================================================
@contextlib.contextmanager
def make_temp_directory():
    import shutil
    import tempfile

    temp_dir = tempfile.mkdtemp()
    try:
        yield temp_dir
    finally:
        shutil.rmtree(temp_dir)


def stream(seed, *key):
    """Independent numpy generator keyed by `(seed, *key)`.

    Two calls with the same arguments return generators producing the same
    sequence; distinct keys give statistically independent sequences, so a
    draw never depends on how many other streams were opened before it.

    Parameters
    ----------
    seed : int
        Run seed.

    key : int
        Non-negative integers, e.g. `(TRAIN, step, prompt_idx, sample_idx)`.

    Returns
    -------
    numpy.random.Generator
    """
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(sequence)


def n_workers():
    """Worker cap from `REALPG_THREADS` (unset or 0 means `os.cpu_count()`)."""
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        logger.warning("ignoring non-integer %s=%r", THREADS_ENV, raw)
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return n


def parallel_map(fn, items):
    """Map `fn` over `items` on a thread pool, preserving input order.

    Results are always returned in input order so any reduction the caller
    performs afterwards is independent of scheduling.
    """
    items = list(items)
    workers = min(n_workers(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
