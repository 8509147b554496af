"""Valuation model and the numeric primitives the rest of the toolkit builds on.

Items and agents are 0-indexed here. Item sets are any iterable of item
indices; table valuations index subsets by bitmask (bit ``g`` <-> item ``g``).
All values are :class:`fractions.Fraction`; nothing in a fairness decision
ever touches a float.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Literal, Sequence

from .errors import ValidationError

Value = Fraction
Kind = Literal["goods", "chores"]
ItemSet = Iterable[int]

DEFAULT_TABLE_LIMIT = 16


def to_value(x) -> Fraction:
    """Convert ints, Fractions and ``"p/q"`` strings to an exact Fraction.

    >>> to_value("6/4")
    Fraction(3, 2)
    >>> to_value(7)
    Fraction(7, 1)
    """
    if isinstance(x, bool):
        raise ValidationError(f"boolean is not a value: {x!r}")
    if isinstance(x, float):
        # exact decimal reading of the literal, not the binary float
        return Fraction(repr(x))
    try:
        return Fraction(x)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise ValidationError(f"not an exact rational value: {x!r}") from exc


def mask_of(items: ItemSet) -> int:
    mask = 0
    for g in items:
        mask |= 1 << g
    return mask


def items_of(mask: int) -> frozenset[int]:
    out = []
    g = 0
    while mask:
        if mask & 1:
            out.append(g)
        mask >>= 1
        g += 1
    return frozenset(out)


class Valuation:
    """Common interface of additive and table valuations."""

    m: int

    def value(self, items: ItemSet) -> Fraction:
        raise NotImplementedError

    def value_mask(self, mask: int) -> Fraction:
        return self.value(items_of(mask))

    def item_value(self, g: int) -> Fraction:
        raise NotImplementedError

    def item_values(self) -> tuple[Fraction, ...]:
        return tuple(self.item_value(g) for g in range(self.m))

    def one_less(self, items: ItemSet) -> Fraction:
        """max over g in S of v(S - g); 0 on the empty set."""
        s = frozenset(items)
        if not s:
            return Fraction(0)
        return max(self.value(s - {g}) for g in s)

    def negate(self) -> "Valuation":
        raise NotImplementedError

    def relabel(self, perm: Sequence[int]) -> "Valuation":
        """The valuation S -> v({perm[i] : i in S})."""
        raise NotImplementedError

    def to_table(self, limit: int = DEFAULT_TABLE_LIMIT) -> "TableValuation":
        raise NotImplementedError

    def is_nonnegative(self) -> bool:
        raise NotImplementedError

    def is_nonpositive(self) -> bool:
        raise NotImplementedError


@dataclass(frozen=True)
class AdditiveValuation(Valuation):
    values: tuple[Fraction, ...]

    def __init__(self, values: Iterable):
        object.__setattr__(self, "values", tuple(to_value(x) for x in values))

    @property
    def m(self) -> int:
        return len(self.values)

    def value(self, items: ItemSet) -> Fraction:
        vals = self.values
        return sum((vals[g] for g in items), Fraction(0))

    def value_mask(self, mask: int) -> Fraction:
        return self.value(items_of(mask))

    def item_value(self, g: int) -> Fraction:
        return self.values[g]

    def item_values(self) -> tuple[Fraction, ...]:
        return self.values

    def one_less(self, items: ItemSet) -> Fraction:
        vals = [self.values[g] for g in set(items)]
        if not vals:
            return Fraction(0)
        return sum(vals, Fraction(0)) - min(vals)

    def negate(self) -> "AdditiveValuation":
        return AdditiveValuation(-x for x in self.values)

    def relabel(self, perm: Sequence[int]) -> "AdditiveValuation":
        return AdditiveValuation(self.values[p] for p in perm)

    def to_table(self, limit: int = DEFAULT_TABLE_LIMIT) -> "TableValuation":
        m = self.m
        if m > limit:
            raise ValidationError(f"cannot expand {m} items into a table (limit {limit})")
        table = [Fraction(0)] * (1 << m)
        for mask in range(1, 1 << m):
            low = mask & -mask
            table[mask] = table[mask ^ low] + self.values[low.bit_length() - 1]
        return TableValuation(table, limit=limit)

    def is_nonnegative(self) -> bool:
        return all(x >= 0 for x in self.values)

    def is_nonpositive(self) -> bool:
        return all(x <= 0 for x in self.values)


@dataclass(frozen=True)
class TableValuation(Valuation):
    """Explicit value for each of the 2^m subsets, indexed by bitmask."""

    table: tuple[Fraction, ...]
    m: int
    monotone: bool = False

    def __init__(self, table: Iterable, monotone: bool = False, limit: int = DEFAULT_TABLE_LIMIT):
        tbl = tuple(to_value(x) for x in table)
        size = len(tbl)
        if size == 0 or size & (size - 1):
            raise ValidationError(f"table length {size} is not a power of two")
        m = size.bit_length() - 1
        if m > limit:
            raise ValidationError(f"table on {m} items exceeds the limit of {limit}")
        if tbl[0] != 0:
            raise ValidationError(f"v(empty set) must be 0, got {tbl[0]}")
        object.__setattr__(self, "table", tbl)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "monotone", monotone)
        if monotone:
            bad = _monotonicity_violation(tbl, m, strict=False)
            if bad is not None:
                s, g = bad
                raise ValidationError(
                    f"table flagged monotone but v({sorted(items_of(s))} + {g}) < v({sorted(items_of(s))})"
                )

    def value(self, items: ItemSet) -> Fraction:
        return self.table[mask_of(items)]

    def value_mask(self, mask: int) -> Fraction:
        return self.table[mask]

    def item_value(self, g: int) -> Fraction:
        return self.table[1 << g]

    def one_less(self, items: ItemSet) -> Fraction:
        mask = mask_of(items)
        if not mask:
            return Fraction(0)
        best = None
        rest = mask
        while rest:
            low = rest & -rest
            rest ^= low
            val = self.table[mask ^ low]
            if best is None or val > best:
                best = val
        return best

    def negate(self) -> "TableValuation":
        return TableValuation((-x for x in self.table), limit=self.m)

    def relabel(self, perm: Sequence[int]) -> "TableValuation":
        m = self.m
        new = [Fraction(0)] * (1 << m)
        for mask in range(1 << m):
            src = 0
            for i in range(m):
                if mask >> i & 1:
                    src |= 1 << perm[i]
            new[mask] = self.table[src]
        return TableValuation(new, monotone=self.monotone, limit=m)

    def to_table(self, limit: int = DEFAULT_TABLE_LIMIT) -> "TableValuation":
        return self

    def is_nonnegative(self) -> bool:
        return all(x >= 0 for x in self.table)

    def is_nonpositive(self) -> bool:
        return all(x <= 0 for x in self.table)


def _monotonicity_violation(table: Sequence[Fraction], m: int, strict: bool):
    """First (S, g) with v(S + g) < v(S) (or <= when strict), else None."""
    for mask in range(1 << m):
        base = table[mask]
        for g in range(m):
            bit = 1 << g
            if mask & bit:
                continue
            up = table[mask | bit]
            if up < base or (strict and up == base):
                return mask, g
    return None


def is_strongly_monotone(v: Valuation) -> bool:
    """v(Y) < v(Z) for every proper subset Y of Z.

    For additive valuations this is exactly "every item has positive value".
    """
    if isinstance(v, AdditiveValuation):
        return all(x > 0 for x in v.values)
    t = v.to_table()
    return _monotonicity_violation(t.table, t.m, strict=True) is None


@dataclass(frozen=True)
class Instance:
    valuations: tuple[Valuation, ...]
    kind: Kind = "goods"

    def __init__(self, valuations: Iterable[Valuation], kind: Kind = "goods"):
        vals = tuple(valuations)
        object.__setattr__(self, "valuations", vals)
        object.__setattr__(self, "kind", kind)
        self._validate()

    def _validate(self) -> None:
        if self.kind not in ("goods", "chores"):
            raise ValidationError(f"kind must be 'goods' or 'chores', got {self.kind!r}")
        if not self.valuations:
            raise ValidationError("an instance needs at least one agent")
        ms = {v.m for v in self.valuations}
        if len(ms) != 1:
            raise ValidationError(f"valuations disagree on the item count: {sorted(ms)}")
        types = {type(v) for v in self.valuations}
        if len(types) != 1:
            raise ValidationError("valuations must be all additive or all tables")
        for i, v in enumerate(self.valuations):
            if self.kind == "goods" and not v.is_nonnegative():
                raise ValidationError(f"agent {i}: goods instance has a negative value")
            if self.kind == "chores" and not v.is_nonpositive():
                raise ValidationError(f"agent {i}: chores instance has a positive value")

    @classmethod
    def additive(cls, rows: Iterable[Iterable], kind: Kind = "goods") -> "Instance":
        return cls([AdditiveValuation(r) for r in rows], kind)

    @property
    def n(self) -> int:
        return len(self.valuations)

    @property
    def m(self) -> int:
        return self.valuations[0].m

    @property
    def is_additive(self) -> bool:
        return isinstance(self.valuations[0], AdditiveValuation)

    @cached_property
    def disutilities(self) -> tuple[Valuation, ...]:
        return tuple(v.negate() for v in self.valuations)

    def cost(self, i: int) -> Valuation:
        """Agent i's valuation for goods, the disutility for chores."""
        if self.kind == "goods":
            return self.valuations[i]
        return self.disutilities[i]


@dataclass(frozen=True)
class OrderingPermutation:
    """``perm[r]`` is the item holding rank r; ``inverse[g]`` the rank of item g."""

    perm: tuple[int, ...]
    inverse: tuple[int, ...]

    @classmethod
    def from_perm(cls, perm: Sequence[int]) -> "OrderingPermutation":
        inv = [0] * len(perm)
        for r, g in enumerate(perm):
            inv[g] = r
        return cls(tuple(perm), tuple(inv))

    @property
    def is_identity(self) -> bool:
        return all(r == g for r, g in enumerate(self.perm))

    def to_ranks(self, items: ItemSet) -> frozenset[int]:
        return frozenset(self.inverse[g] for g in items)

    def to_items(self, ranks: ItemSet) -> frozenset[int]:
        return frozenset(self.perm[r] for r in ranks)


def sort_items(v: Valuation, items: ItemSet) -> list[int]:
    """Items by singleton value, highest first; ties go to the smaller index."""
    return sorted(items, key=lambda g: (-v.item_value(g), g))


def ordering(v: Valuation) -> OrderingPermutation:
    return OrderingPermutation.from_perm(sort_items(v, range(v.m)))


def ordered_valuation(v: Valuation) -> tuple[Valuation, OrderingPermutation]:
    """Relabel items so singleton values are non-increasing in the index.

    >>> w, pi = ordered_valuation(AdditiveValuation([2, 5, 2]))
    >>> pi.perm, [int(x) for x in w.item_values()]
    ((1, 0, 2), [5, 2, 2])
    """
    pi = ordering(v)
    return v.relabel(pi.perm), pi


def is_ordered(v: Valuation) -> bool:
    vals = v.item_values()
    return all(vals[g] >= vals[g + 1] for g in range(len(vals) - 1))


def one_less(v: Valuation, items: ItemSet) -> Fraction:
    return v.one_less(items)


def cancelability_witness(v: Valuation):
    """Smallest (S, T, g), ordered by (mask S, mask T, g), breaking cancelability.

    Returns None for cancelable valuations. A violation is a triple with
    g outside S and T, v(S + g) > v(T + g) but v(S) <= v(T).
    """
    t = v.to_table()
    m, tbl = t.m, t.table
    full = (1 << m) - 1
    # per item g: is there any violation at all? sort the g-free subsets by v,
    # then a violation is some S whose v(S + g) beats the minimum of v(T + g)
    # over all T with v(T) >= v(S).
    suffix_min = {}
    bad_any = False
    for g in range(m):
        bit = 1 << g
        subs = [s for s in range(full + 1) if not s & bit]
        subs.sort(key=lambda s: tbl[s])
        mins = [None] * len(subs)
        run = None
        # equal v(S) values form one tier: T ranges over the tier and above
        k = len(subs) - 1
        while k >= 0:
            j = k
            while j > 0 and tbl[subs[j - 1]] == tbl[subs[k]]:
                j -= 1
            for s in subs[j:k + 1]:
                val = tbl[s | bit]
                run = val if run is None or val < run else run
            for idx in range(j, k + 1):
                mins[idx] = run
            k = j - 1
        table_g = {s: mins[idx] for idx, s in enumerate(subs)}
        suffix_min[g] = table_g
        if any(tbl[s | bit] > table_g[s] for s in subs):
            bad_any = True
    if not bad_any:
        return None
    for s in range(full + 1):
        cands = [g for g in range(m) if not s >> g & 1 and tbl[s | 1 << g] > suffix_min[g][s]]
        if not cands:
            continue
        for tm in range(full + 1):
            if tbl[s] > tbl[tm]:
                continue
            for g in range(m):
                bit = 1 << g
                if (s | tm) & bit:
                    continue
                if tbl[s | bit] > tbl[tm | bit]:
                    return items_of(s), items_of(tm), g
    raise AssertionError("violation detected but no witness found")


def is_cancelable(v: Valuation) -> bool:
    if isinstance(v, AdditiveValuation):
        return True
    return cancelability_witness(v) is None


def dominates(v: Valuation, b: ItemSet, c: ItemSet, alpha=1) -> bool:
    """B dominates alpha*C under v: pointwise after sorting both by value.

    >>> v = AdditiveValuation([5, 3, 4, 4])
    >>> dominates(v, {0, 1}, {2, 3}), dominates(v, {0, 1}, {2, 3}, Fraction(3, 4))
    (False, True)
    """
    b, c = list(b), list(c)
    if len(b) != len(c):
        raise ValueError(f"dominance needs equal sizes, got {len(b)} and {len(c)}")
    alpha = to_value(alpha)
    bv = sorted((v.item_value(g) for g in b), reverse=True)
    cv = sorted((v.item_value(g) for g in c), reverse=True)
    return all(x >= alpha * y for x, y in zip(bv, cv))


@dataclass(frozen=True)
class CorrelationWitness:
    """The binding constraint: v_i(S) >= v_i(T) forces v_j(S) >= alpha * v_j(T)."""

    i: int
    j: int
    s: frozenset[int]
    t: frozenset[int]
    ratio: Fraction


def correlation(valuations: Sequence[Valuation], limit: int = DEFAULT_TABLE_LIMIT):
    """(alpha, witness) where alpha is the largest correlation factor.

    The witness is the pair realising the minimum ratio, or None when no
    constraint binds (alpha = 1).
    """
    tables = [v.to_table(limit) for v in valuations]
    for k, t in enumerate(tables):
        if not t.is_nonnegative():
            raise ValidationError(f"agent {k}: correlation needs non-negative valuations")
    best = Fraction(1)
    witness = None
    if not tables:
        return best, witness
    size = 1 << tables[0].m
    for i, ti in enumerate(tables):
        order = sorted(range(size), key=lambda s: ti.table[s])
        for j, tj in enumerate(tables):
            if i == j:
                continue
            # walk T from the top of v_i's order down, keeping the S with the
            # smallest v_j among all sets at least as good as T for agent i
            k = size - 1
            run_s = None
            while k >= 0:
                lo = k
                while lo > 0 and ti.table[order[lo - 1]] == ti.table[order[k]]:
                    lo -= 1
                for s in order[lo:k + 1]:
                    if run_s is None or tj.table[s] < tj.table[run_s]:
                        run_s = s
                for tm in order[lo:k + 1]:
                    den = tj.table[tm]
                    if den <= 0:
                        continue
                    ratio = tj.table[run_s] / den
                    if ratio < best:
                        best = ratio
                        witness = CorrelationWitness(i, j, items_of(run_s), items_of(tm), ratio)
                k = lo - 1
    return best, witness


def max_correlation(valuations: Sequence[Valuation], limit: int = DEFAULT_TABLE_LIMIT) -> Fraction:
    """Largest alpha in [0, 1] for which the valuations are alpha-correlated.

    A result of 0 means some agent weakly prefers S to T while another
    values S at 0 and T positively; :func:`correlation` names the pair.
    """
    return correlation(valuations, limit)[0]



def set_partitions(items: Sequence[int], max_blocks: int):
    """Partitions of ``items`` into at most ``max_blocks`` unlabeled blocks.

    Restricted-growth order: item k joins an existing block or opens the
    next one. The yielded list is reused between steps; copy it to keep it.
    """
    items = list(items)
    blocks: list[list[int]] = []

    def rec(k: int):
        if k == len(items):
            yield blocks
            return
        g = items[k]
        for b in blocks:
            b.append(g)
            yield from rec(k + 1)
            b.pop()
        if len(blocks) < max_blocks:
            blocks.append([g])
            yield from rec(k + 1)
            blocks.pop()

    yield from rec(0)
