"""Allocations, allocation vectors and the pick-by-list picking sequence."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import Valuation
from .errors import ValidationError

AllocationVector = tuple[int, ...]


@dataclass(frozen=True)
class Allocation:
    """An ordered partition of items 0..m-1 into one bundle per agent."""

    bundles: tuple[frozenset[int], ...]

    def __init__(self, bundles: Iterable[Iterable[int]]):
        object.__setattr__(self, "bundles", tuple(frozenset(b) for b in bundles))

    @property
    def n(self) -> int:
        return len(self.bundles)

    @property
    def m(self) -> int:
        return sum(len(b) for b in self.bundles)

    def __getitem__(self, i: int) -> frozenset[int]:
        return self.bundles[i]

    def __iter__(self):
        return iter(self.bundles)

    def __len__(self) -> int:
        return len(self.bundles)

    def validate(self, n: int, m: int) -> "Allocation":
        if len(self.bundles) != n:
            raise ValidationError(f"allocation has {len(self.bundles)} bundles, instance has {n} agents")
        seen: set[int] = set()
        for i, b in enumerate(self.bundles):
            bad = [g for g in b if not 0 <= g < m]
            if bad:
                raise ValidationError(f"bundle {i} holds unknown items {sorted(bad)}")
            dup = seen & b
            if dup:
                raise ValidationError(f"items {sorted(dup)} appear in more than one bundle")
            seen |= b
        if len(seen) != m:
            missing = sorted(set(range(m)) - seen)
            raise ValidationError(f"items {missing} are not allocated")
        return self

    def replace(self, i: int, bundle: Iterable[int]) -> "Allocation":
        out = list(self.bundles)
        out[i] = frozenset(bundle)
        return Allocation(out)

    def as_lists(self) -> list[list[int]]:
        return [sorted(b) for b in self.bundles]


@dataclass(frozen=True)
class Certificate:
    """Witness allocation for one agent: that bundle is kept, the rest reshuffled."""

    agent: int
    witness: Allocation
    basis: Allocation | None = None


def allocation_vector(x: Allocation) -> AllocationVector:
    """Owner of each item: ``a[g] = i`` iff ``g in X_i``."""
    owners = [-1] * x.m
    for i, bundle in enumerate(x.bundles):
        for g in bundle:
            if not 0 <= g < len(owners):
                raise ValidationError(f"item {g} lies outside 0..{len(owners) - 1}")
            owners[g] = i
    if -1 in owners:
        raise ValidationError("allocation does not cover a contiguous item range")
    return tuple(owners)


def from_vector(a: Sequence[int], n: int) -> Allocation:
    bundles: list[set[int]] = [set() for _ in range(n)]
    for g, i in enumerate(a):
        bundles[i].add(g)
    return Allocation(bundles)


def rounds_of(a: Sequence[int], i: int) -> tuple[list[int], list[int]]:
    """Rounds in which agent i picks, and the rounds in which somebody else does."""
    mine = [t for t, who in enumerate(a) if who == i]
    others = [t for t, who in enumerate(a) if who != i]
    return mine, others


def pick_by_list(a: Sequence[int], valuations: Sequence[Valuation]) -> Allocation:
    """Round t: agent ``a[t]`` takes the highest-valued remaining item.

    Ties go to the smallest item index. Only singleton values matter, so
    this works unchanged for chores and for non-monotone valuations.
    """
    n, m = len(valuations), len(a)
    if any(v.m != m for v in valuations):
        raise ValidationError(f"allocation vector has {m} rounds but valuations cover a different item count")
    # one preference list per agent, consumed lazily
    prefs = {}
    cursor = {}
    taken = [False] * m
    bundles: list[set[int]] = [set() for _ in range(n)]
    for who in a:
        if not 0 <= who < n:
            raise ValidationError(f"allocation vector names agent {who}, only {n} agents")
        if who not in prefs:
            v = valuations[who]
            prefs[who] = sorted(range(m), key=lambda g: (-v.item_value(g), g))
            cursor[who] = 0
        order, k = prefs[who], cursor[who]
        while taken[order[k]]:
            k += 1
        g = order[k]
        cursor[who] = k + 1
        taken[g] = True
        bundles[who].add(g)
    return Allocation(bundles)
