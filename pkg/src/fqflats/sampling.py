"""Sampling module - seeded, reproducible random subsets and flats

Every generator is numpy's counter-based Philox keyed by the run seed in the
low 64 bits and a label-derived stream id in the high 64 bits. The stream id
is the first 8 bytes of SHA-256(label), big endian, so each check draws from
its own stream regardless of which other checks run.
"""

import hashlib
import logging

import numpy as np

from .constants import LOGGER_NAME
from .errors import InvalidParameters
from .flats import Flat, _check_dims, flat_from_span
from .gf import FieldCtx
from .linalg import rref_array

log = logging.getLogger(LOGGER_NAME)

_MASK64 = (1 << 64) - 1


def stream_id(label: str) -> int:
    return int.from_bytes(hashlib.sha256(label.encode("utf-8")).digest()[:8], "big")


def make_rng(seed: int, label: str) -> np.random.Generator:
    key = (seed & _MASK64) | (stream_id(label) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_subset(rng: np.random.Generator, n: int, size: int | None = None) -> np.ndarray:
    """Sorted uniform subset of range(n) without replacement

    Without size, the size is drawn uniformly from [1, n].
    """
    if n < 1:
        raise InvalidParameters(f"cannot sample from an empty range (n={n})")
    if size is None:
        size = int(rng.integers(1, n, endpoint=True))
    if not 0 <= size <= n:
        raise InvalidParameters(f"subset size {size} outside 0..{n}")
    return np.sort(rng.choice(n, size=size, replace=False))


def sample_at_least(rng: np.random.Generator, n: int, minimum: int) -> np.ndarray:
    """Uniform subset whose size is drawn from [minimum, n]"""
    if not 0 <= minimum <= n:
        raise InvalidParameters(f"minimum size {minimum} outside 0..{n}")
    return sample_subset(rng, n, int(rng.integers(minimum, n, endpoint=True)))


def _random_rows(rng: np.random.Generator, ctx: FieldCtx, rows: int, cols: int) -> np.ndarray:
    return rng.integers(0, ctx.q, size=(rows, cols), dtype=np.int64)


def random_full_rank(rng: np.random.Generator, ctx: FieldCtx, rows: int, cols: int) -> np.ndarray:
    """rows x cols matrix of rank rows, by rejection"""
    if rows > cols:
        raise InvalidParameters(f"{rows} rows cannot have full rank in dimension {cols}")
    while True:
        m = _random_rows(rng, ctx, rows, cols)
        if len(rref_array(ctx, m)[1]) == rows:
            return m


def random_flat(rng: np.random.Generator, ctx: FieldCtx, d: int, k: int) -> Flat:
    """Random k-flat, built from a random spanning set so canonicalization does real work"""
    _check_dims(d, k)
    directions = random_full_rank(rng, ctx, k, d)
    base = _random_rows(rng, ctx, 1, d)[0]
    return flat_from_span(ctx, [list(row) for row in directions], list(base))


def random_invertible(rng: np.random.Generator, ctx: FieldCtx, n: int) -> np.ndarray:
    return random_full_rank(rng, ctx, n, n)
