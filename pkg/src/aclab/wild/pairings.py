"""Perfect matchings of a finite set of leaves."""

from __future__ import annotations

from typing import Iterator

Pairing = tuple[tuple[int, int], ...]


def double_factorial_odd(n: int) -> int:
    """``(2n - 1)!!``, the number of perfect matchings of ``2n`` points."""
    out = 1
    for k in range(1, 2 * n, 2):
        out *= k
    return out


def _pairings(items: tuple[int, ...]) -> Iterator[Pairing]:
    if not items:
        yield ()
        return
    first = items[0]
    for j in range(1, len(items)):
        rest = items[1:j] + items[j + 1 :]
        for tail in _pairings(rest):
            yield ((first, items[j]),) + tail


def enumerate_pairings(n_leaves: int, limit: int = 12) -> Iterator[Pairing]:
    """All perfect matchings of ``0..n_leaves-1``; pairs are ``(a, b)`` with ``a < b``."""
    if n_leaves < 0 or n_leaves % 2:
        raise ValueError(f"need an even, non-negative number of leaves, got {n_leaves}")
    if n_leaves > limit:
        raise ValueError(f"{n_leaves} leaves exceeds the enumeration limit {limit}")
    return _pairings(tuple(range(n_leaves)))
