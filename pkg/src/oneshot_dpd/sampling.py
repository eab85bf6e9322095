"""Reproducible random substreams and multinomial sampling."""

from __future__ import annotations

import numpy as np

from .errors import InputError


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Counter-based generator for the stream identified by ``(seed, *keys)``.

    The stream depends only on the key tuple, never on the order in which
    replications are executed, so results do not depend on parallelism.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def sample_counts(probs, N: int, rng: np.random.Generator) -> np.ndarray:
    """Multinomial draw of size ``N`` by sequential conditional binomials."""
    probs = np.asarray(probs, dtype=float)
    if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
        raise InputError("probabilities must be nonnegative and sum to one")
    N = int(N)
    if N < 0:
        raise InputError("sample size must be nonnegative")
    counts = np.zeros(probs.size, dtype=np.int64)
    remaining, mass = N, 1.0
    for j in range(probs.size - 1):
        if remaining == 0:
            break
        share = min(1.0, max(0.0, probs[j] / mass)) if mass > 0 else 0.0
        counts[j] = rng.binomial(remaining, share)
        remaining -= counts[j]
        mass -= probs[j]
    counts[-1] += remaining
    return counts


def largest_remainder_counts(probs, N: int) -> np.ndarray:
    """Integer counts summing to ``N`` closest to ``N * probs`` (Hamilton rounding)."""
    raw = np.asarray(probs, dtype=float) * int(N)
    base = np.floor(raw).astype(np.int64)
    short = int(N) - int(base.sum())
    order = np.argsort(-(raw - base), kind="stable")
    base[order[:short]] += 1
    return base
