"""This module contains a variety of helper functions shared across gcntune:
seed stream derivation, array checksums, series smoothing and a small
thread pool. These should
generally be used to keep randomness and bookkeeping consistent across the
trainer, the population scheduler and the baseline searches.
"""

import threading
import zlib
from hashlib import sha1
from typing import Any, Callable, Dict, Iterable, List, Sequence, Tuple, Union

import numpy as np

# Named random streams. Every random draw in gcntune comes from one of these.
STREAMS = ('data', 'init', 'dropout', 'hyper', 'pbt', 'agent', 'split',
           'trial')


def _stream_key(key: Union[int, str]) -> int:
    """Convert a stream name or counter into a non-negative integer."""

    if isinstance(key, str):
        return zlib.crc32(key.encode('utf8'))

    key = int(key)
    if key < 0:
        raise ValueError("Seed keys must be non-negative, got {}".format(key))
    return key


def derive_seed(root: int, *keys: Union[int, str]) -> int:
    """Derive a child seed from the root seed and a path of keys (stream
    names and counters). The same (root, keys) always gives the same seed,
    and different key paths give independent seeds.

    :param root: The root seed for the run.
    :param keys: Stream names and counters, eg. ('dropout', epoch, attempt).
    :rtype: int
    """

    seq = np.random.SeedSequence(
        entropy=int(root),
        spawn_key=tuple(_stream_key(key) for key in keys))
    state = seq.generate_state(2, dtype=np.uint32)
    return int(state[0]) << 32 | int(state[1])


def make_rng(seed: int) -> np.random.Generator:
    """Create a counter based (Philox) random generator for the given seed."""

    return np.random.Generator(np.random.Philox(int(seed)))


def checksum(arrays: Iterable[np.ndarray]) -> str:
    """Get a sha1 hexdigest over the shapes and bytes of the given arrays."""

    sha = sha1()
    for array in arrays:
        array = np.ascontiguousarray(array)
        sha.update(str(array.shape).encode('utf8'))
        sha.update(array.tobytes())
    return sha.hexdigest()


def smooth(series: List[float], window: int) -> List[float]:
    """Trailing moving average of the series. The first window-1 points
    average over what's available so far."""

    if window < 1:
        raise ValueError("Smoothing window must be at least 1.")

    values = np.asarray(series, dtype=float)
    if not len(values):
        return []

    sums = np.cumsum(values)
    out = []
    for i in range(len(values)):
        start = i - window
        total = sums[i] - (sums[start] if start >= 0 else 0.0)
        out.append(float(total / min(i + 1, window)))
    return out


def run_threaded(tasks: Sequence[Callable[[], Any]], max_threads: int) \
        -> Tuple[List[Any], Dict[int, Exception]]:
    """Run each task, at most max_threads at a time. Results (and any
    exceptions raised) are returned by task index, so the outcome doesn't
    depend on which thread finished first.

    :param tasks: Callables taking no arguments.
    :param max_threads: With 1, tasks run in order in the calling thread.
    :returns: A list of results (None for failed tasks) and a dict of the
        exceptions raised, by task index.
    """

    results = [None] * len(tasks)  # type: List[Any]
    errors = {}  # type: Dict[int, Exception]

    def _run(idx):
        try:
            results[idx] = tasks[idx]()
        except Exception as err:  # pylint: disable=broad-except
            errors[idx] = err

    if max_threads <= 1:
        for i in range(len(tasks)):
            _run(i)
        return results, errors

    # Used as a stack, so the first task goes last.
    pending = list(reversed(range(len(tasks))))
    threads = []  # type: List[threading.Thread]

    while pending or threads:
        while pending and len(threads) < max_threads:
            thread = threading.Thread(target=_run, args=(pending.pop(),),
                                      daemon=True)
            threads.append(thread)
            thread.start()

        threads[0].join(timeout=0.05)

        # Join the threads that are done.
        for thread in threads:
            if not thread.is_alive():
                thread.join()
        threads = [thr for thr in threads if thr.is_alive()]

    return results, errors
