"""Index-keyed map over replications, serial or in worker processes."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor


def _run_chunk(fn, chunk):
    return [(i, fn(i)) for i in chunk]


def indexed_map(fn, n: int, workers: int = 1) -> list:
    """Return ``[fn(0), ..., fn(n-1)]``.

    ``fn`` must derive all randomness from its index.  Results are
    reassembled by index, so the output is identical for any ``workers``.
    """
    if workers <= 1 or n < 2:
        return [fn(i) for i in range(n)]
    size = max(1, -(-n // (4 * workers)))
    chunks = [range(s, min(n, s + size)) for s in range(0, n, size)]
    out = [None] * n
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(_run_chunk, [fn] * len(chunks), chunks):
            for i, value in part:
                out[i] = value
    return out
