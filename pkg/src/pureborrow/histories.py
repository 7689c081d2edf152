"""Borrow paths and the history algebra used by the memory-free semantics.

A history records, per borrow path, the variable holding the value most
recently stored behind that path.  Histories compose sequentially (later
writes shadow earlier ones) and in parallel (domains must be disjoint).
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True, slots=True)
class BorrowPath:
    """A borrow identifier followed by a sequence of projection indices."""

    bid: int
    indices: tuple = ()

    def child(self, i: int) -> "BorrowPath":
        return BorrowPath(self.bid, self.indices + (i,))

    def extends(self, other: "BorrowPath") -> bool:
        """True if self is other or a descendant of other."""
        return (
            self.bid == other.bid
            and self.indices[: len(other.indices)] == other.indices
        )

    def __str__(self):
        return ".".join([f"b{self.bid}"] + [str(i) for i in self.indices])


class DisjointnessError(Exception):
    """Parallel histories touched overlapping borrow paths."""

    def __init__(self, paths):
        self.paths = tuple(paths)
        super().__init__(
            "parallel branches wrote overlapping borrow paths: "
            + ", ".join(str(p) for p in self.paths)
        )


@dataclass(frozen=True, slots=True)
class History:
    entries: tuple  # of (BorrowPath, var name), paths distinct

    def __post_init__(self):
        paths = [p for p, _ in self.entries]
        if len(set(paths)) != len(paths):
            raise ValueError("duplicate path in history")

    def get(self, path: BorrowPath):
        for p, v in self.entries:
            if p == path:
                return v
        return None

    def __contains__(self, path: BorrowPath):
        return self.get(path) is not None

    def items(self):
        return self.entries


EMPTY = History(())


def hist_single(path: BorrowPath, var: str) -> History:
    return History(((path, var),))


def hist_domain(h: History) -> frozenset:
    return frozenset(p for p, _ in h.entries)


def hist_seq(first: History, second: History) -> History:
    """Sequential composition: entries of `second` shadow those of `first`."""
    dom2 = hist_domain(second)
    kept = tuple((p, v) for p, v in first.entries if p not in dom2)
    return History(kept + second.entries)


def hist_par(left: History, right: History) -> History:
    """Parallel composition; overlapping domains are a separation violation."""
    overlap = hist_domain(left) & hist_domain(right)
    if overlap:
        raise DisjointnessError(sorted(overlap, key=str))
    return History(left.entries + right.entries)


def hist_restrict(h: History, path: BorrowPath) -> History:
    """Keep only the entries at `path` or below it."""
    return History(tuple((p, v) for p, v in h.entries if p.extends(path)))
