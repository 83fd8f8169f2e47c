"""Deterministic per-purpose random stream derivation.

Every random draw in the library flows through a named stream derived from a
single root seed.  Streams for different purposes (geometry, each channel
block, initial RIS phases, ...) are independent, so adding a new consumer
never perturbs the draws seen by existing ones.
"""

import zlib

import numpy as np

__all__ = ["stream"]


def _as_uint32(label) -> int:
    if isinstance(label, (int, np.integer)):
        if label < 0:
            raise ValueError(f"stream labels must be non-negative, got {label}")
        return int(label) & 0xFFFFFFFF
    if isinstance(label, str):
        # crc32 is stable across platforms and Python versions, unlike hash().
        return zlib.crc32(label.encode("utf-8")) & 0xFFFFFFFF
    raise TypeError(f"stream labels must be int or str, got {type(label).__name__}")


def stream(root_seed: int, *labels) -> np.random.Generator:
    """Return a Generator for the stream named by ``labels`` under ``root_seed``.

    Identical (root_seed, labels) always yields the identical stream.
    """
    key = tuple(_as_uint32(lab) for lab in labels)
    return np.random.default_rng(np.random.SeedSequence(root_seed, spawn_key=key))
