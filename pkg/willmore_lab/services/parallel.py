"""Chunked evaluation of per-point work on a thread pool.

Chunk boundaries depend only on the chunk size, and results come back in chunk
order, so any reduction over them is the same for every thread count.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Sequence, TypeVar

import numpy as np

from willmore_lab.config import get_settings

logger = logging.getLogger(__name__)

CHUNK_SIZE = 2048

T = TypeVar("T")


def map_chunks(fn: Callable[..., T], arrays: Sequence[np.ndarray], chunk_size: int = CHUNK_SIZE) -> List[T]:
    arrays = [np.asarray(a) for a in arrays]
    total = len(arrays[0]) if arrays else 0
    chunks = [tuple(a[i:i + chunk_size] for a in arrays) for i in range(0, total, chunk_size)]
    threads = min(get_settings().threads, len(chunks))
    if threads <= 1:
        return [fn(*chunk) for chunk in chunks]
    logger.debug("Evaluating %d chunks on %d threads", len(chunks), threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda chunk: fn(*chunk), chunks))


def evaluate_fields(fn: Callable[..., Dict[str, np.ndarray]], arrays: Sequence[np.ndarray],
                    chunk_size: int = CHUNK_SIZE) -> Dict[str, np.ndarray]:
    """Run ``fn`` chunkwise and concatenate each named output along the last (point) axis."""
    parts = map_chunks(fn, arrays, chunk_size)
    if not parts:
        return {}
    return {key: np.concatenate([np.asarray(p[key]) for p in parts], axis=-1) for key in parts[0]}
