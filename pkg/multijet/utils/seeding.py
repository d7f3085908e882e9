"""
Counter-based random streams.

Every random draw in multijet comes from a stream identified by the run's
root seed and a tuple of keys (a label and usually a chunk index). Streams
use numpy's Philox bit generator so that a stream can be rebuilt from its
keys alone, independently of how work is spread across threads.
"""

import hashlib

import numpy as np

from ..exceptions import ValidationError

MAX_SEED = 2**64 - 1


def label_key(label: str) -> int:
    """Map a text label to a stable 32-bit integer key."""
    return int.from_bytes(hashlib.sha256(label.encode("utf-8")).digest()[:4], "big")


def _normalise_keys(keys: tuple[int | str, ...]) -> tuple[int, ...]:
    normalised = []
    for key in keys:
        if isinstance(key, str):
            normalised.append(label_key(key))
        elif isinstance(key, int | np.integer) and key >= 0:
            normalised.append(int(key))
        else:
            raise ValidationError(
                f"Stream keys must be labels or non-negative integers, got {key!r}",
                field="keys",
            )
    return tuple(normalised)


def validate_seed(seed: int) -> int:
    """Check that a root seed is an unsigned 64-bit integer."""
    if not 0 <= int(seed) <= MAX_SEED:
        raise ValidationError(f"Seed must be in [0, 2^64), got {seed}", field="seed")
    return int(seed)


def stream(seed: int, *keys: int | str) -> np.random.Generator:
    """
    Build the generator for (seed, keys).

    Args:
        seed: Root seed of the run (unsigned 64-bit)
        *keys: Labels and counters identifying the sub-stream

    Returns:
        A Philox-backed numpy Generator
    """
    sequence = np.random.SeedSequence(
        entropy=validate_seed(seed), spawn_key=_normalise_keys(keys)
    )
    return np.random.Generator(np.random.Philox(sequence))
