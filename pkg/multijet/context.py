"""
Shared application context for multijet.

This module holds the worker-pool settings that are initialised once by the
CLI and read by library calls that do not pass an explicit thread count.
"""

_threads: int = 1
_chunk_size: int = 4096


def init_context(threads: int, chunk_size: int) -> None:
    """
    Initialize the shared worker-pool settings.

    Called once at CLI startup.

    Args:
        threads: Number of worker threads
        chunk_size: Draws per seeded chunk
    """
    global _threads, _chunk_size
    _threads = max(1, int(threads))
    _chunk_size = max(1, int(chunk_size))


def get_threads() -> int:
    """Get the shared worker thread count."""
    return _threads


def get_chunk_size() -> int:
    """Get the shared chunk size."""
    return _chunk_size
