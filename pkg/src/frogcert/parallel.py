"""Replica-parallel execution with an order-fixed reduction."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count(workers: int | None = None) -> int:
    if workers is None:
        env = os.environ.get("FROGCERT_THREADS")
        workers = int(env) if env else 1
    return max(1, int(workers))


def replica_chunks(n: int, chunk: int) -> list[range]:
    return [range(a, min(a + chunk, n)) for a in range(0, n, chunk)]


def map_chunks(fn, n: int, workers: int | None = None, chunk: int = 1024) -> list:
    """Apply ``fn`` to consecutive replica ranges and return results in range order.

    Threads are enough: the compiled kernels release the GIL.  The output
    order depends only on ``n`` and ``chunk``, never on ``workers``.
    """
    parts = replica_chunks(n, chunk)
    workers = worker_count(workers)
    if workers == 1 or len(parts) <= 1:
        return [fn(p) for p in parts]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, parts))
