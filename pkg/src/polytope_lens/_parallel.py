"""Order-preserving thread fan-out.

Work items are split into contiguous chunks; each result lands at its item
index, so output never depends on the worker count. NumPy releases the GIL in
the heavy kernels, which is where threads pay off.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")

_threads = 1


def set_threads(n: int) -> None:
    global _threads
    if n < 1:
        raise ValueError("thread count must be >= 1")
    _threads = n


def get_threads() -> int:
    return _threads


def pmap(fn: Callable[[T], R], items: Sequence[T], threads: int | None = None) -> list[R]:
    n = threads or _threads
    if n <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def chunks(n: int, size: int) -> list[slice]:
    return [slice(i, min(i + size, n)) for i in range(0, n, size)]
