"""Exhaustive ground truth for desk-scale instances.

Epistemic checks fix agent i's bundle and search over set partitions of
the remaining items into at most n-1 unlabeled rival bundles. Which rival
holds which block never matters to agent i, so this is exact and much
smaller than scanning labeled assignments.
"""
from __future__ import annotations

import itertools
import math
import os
import time
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Optional

from .alloc import Allocation
from .core import AdditiveValuation, Instance, set_partitions, to_value
from .errors import BudgetExceeded
from .fairness import ef1_violations, efx_violations, is_efx

BUDGET_ENV = "FAIRDIV_BUDGET"


@dataclass(frozen=True)
class SearchBudget:
    max_agents: int = 8
    max_items: int = 16
    max_leaves: int = 10**7
    time_limit: Optional[float] = None

    @classmethod
    def from_env(cls, base: Optional["SearchBudget"] = None) -> "SearchBudget":
        """Apply ``FAIRDIV_BUDGET="max_items=12,time_limit=30"`` style overrides."""
        budget = base or cls()
        raw_env = os.environ.get(BUDGET_ENV, "").strip()
        if not raw_env:
            return budget
        fields = {}
        for part in raw_env.split(","):
            key, _, raw = part.partition("=")
            key = key.strip()
            if key not in ("max_agents", "max_items", "max_leaves", "time_limit"):
                raise ValueError(f"{BUDGET_ENV}: unknown key {key!r}")
            num = float(raw) if key == "time_limit" else int(float(raw))
            fields[key] = num
        return replace(budget, **fields)

    def check_size(self, n: int, m: int) -> None:
        if n > self.max_agents or m > self.max_items:
            raise BudgetExceeded(
                f"instance n={n}, m={m} exceeds budget (max_agents={self.max_agents}, max_items={self.max_items})"
            )

    def check_leaves(self, count: int, what: str) -> None:
        if count > self.max_leaves:
            raise BudgetExceeded(f"{what}: {count} candidates exceed the budget of {self.max_leaves}")

    def deadline(self) -> Optional[float]:
        return None if self.time_limit is None else time.monotonic() + self.time_limit


def _default_budget(budget: Optional[SearchBudget]) -> SearchBudget:
    return budget if budget is not None else SearchBudget.from_env()


def _tick(deadline: Optional[float]) -> None:
    if deadline is not None and time.monotonic() > deadline:
        raise BudgetExceeded("time limit reached during exhaustive search")


@lru_cache(maxsize=None)
def stirling2(r: int, k: int) -> int:
    if r == k:
        return 1
    if k == 0 or k > r:
        return 0
    return k * stirling2(r - 1, k) + stirling2(r - 1, k - 1)


def partition_count(r: int, max_blocks: int) -> int:
    """Set partitions of r items into at most max_blocks blocks."""
    return sum(stirling2(r, k) for k in range(0, max_blocks + 1))


def enumerate_allocations(n: int, m: int, budget: Optional[SearchBudget] = None) -> Iterator[Allocation]:
    """All n**m labeled allocations, each exactly once."""
    budget = _default_budget(budget)
    budget.check_size(n, m)
    budget.check_leaves(n**m, "allocation enumeration")
    deadline = budget.deadline()
    for owners in itertools.product(range(n), repeat=m):
        _tick(deadline)
        bundles: list[list[int]] = [[] for _ in range(n)]
        for g, i in enumerate(owners):
            bundles[i].append(g)
        yield Allocation(bundles)


def _scaled(values, den: int) -> list[int]:
    return [int(x * den) for x in values]


def _epistemic_search(inst: Instance, x: Allocation, i: int, notion: str, alpha, budget: SearchBudget):
    """Search rival partitions for one satisfying agent i under ``notion`` ('efx' or 'ef1')."""
    budget.check_size(inst.n, inst.m)
    alpha = to_value(alpha)
    n = inst.n
    own_items = x[i]
    rest = [g for g in range(inst.m) if g not in own_items]
    slots = n - 1
    if slots == 0:
        if rest:
            return False, None
        return True, x
    budget.check_leaves(partition_count(len(rest), slots), f"{notion.upper()} partition search")
    deadline = budget.deadline()
    cost = inst.cost(i)
    goods = inst.kind == "goods"

    if isinstance(cost, AdditiveValuation):
        den = math.lcm(*(v.denominator for v in cost.values), alpha.denominator) if cost.values else alpha.denominator
        w = _scaled(cost.values, den)
        a_num, a_den = alpha.numerator, alpha.denominator
        own_total = sum(w[g] for g in own_items)
        own_vals = [w[g] for g in own_items]
        if goods:
            own = own_total
        elif notion == "efx":
            own = own_total - min(own_vals) if own_vals else 0
        else:
            own = own_total - max(own_vals) if own_vals else 0

        # block feasibility on scaled ints: a_den * lhs vs a_num * rhs
        if goods:
            def block_ok(total, lo, hi, size):
                if size == 0:
                    return True
                rhs = total - lo if notion == "efx" else total - hi
                return a_den * own >= a_num * rhs
            # rival value-after-removal only grows as items are added
            partial_ok = block_ok
        else:
            def block_ok(total, lo, hi, size):
                if notion == "ef1" and not own_items:
                    return True
                return a_den * own <= a_num * total
            partial_ok = None

        rest.sort(key=lambda g: (-w[g], g))
        totals: list[int] = []
        los: list[int] = []
        his: list[int] = []
        blocks: list[list[int]] = []
        found: list = []

        def finish() -> bool:
            for b in range(len(blocks)):
                if not block_ok(totals[b], los[b], his[b], len(blocks[b])):
                    return False
            if len(blocks) < slots and not block_ok(0, 0, 0, 0):
                return False
            return True

        remaining = [0] * (len(rest) + 1)
        for k in range(len(rest) - 1, -1, -1):
            remaining[k] = remaining[k + 1] + w[rest[k]]
        need = a_den * own

        def viable(k: int) -> bool:
            # chores: every rival slot must reach need / a_num, and the unplaced
            # items are all there is to close the gaps
            if goods or need <= 0 or (notion == "ef1" and not own_items):
                return True
            gap = sum(max(0, need - a_num * t) for t in totals) + (slots - len(blocks)) * need
            return gap <= a_num * remaining[k]

        def rec(k: int) -> bool:
            if not viable(k):
                return False
            if k == len(rest):
                _tick(deadline)
                if finish():
                    found.append([list(b) for b in blocks])
                    return True
                return False
            g = rest[k]
            wg = w[g]
            for b in range(len(blocks)):
                t0, l0, h0 = totals[b], los[b], his[b]
                totals[b], los[b], his[b] = t0 + wg, min(l0, wg), max(h0, wg)
                ok = partial_ok is None or partial_ok(totals[b], los[b], his[b], len(blocks[b]) + 1)
                if ok:
                    blocks[b].append(g)
                    hit = rec(k + 1)
                    blocks[b].pop()
                else:
                    hit = False
                totals[b], los[b], his[b] = t0, l0, h0
                if hit:
                    return True
            if len(blocks) < slots:
                blocks.append([g])
                totals.append(wg)
                los.append(wg)
                his.append(wg)
                ok = partial_ok is None or partial_ok(wg, wg, wg, 1)
                hit = ok and rec(k + 1)
                blocks.pop()
                totals.pop()
                los.pop()
                his.pop()
                if hit:
                    return True
            return False

        if not rec(0):
            return False, None
        parts = found[0]
    else:
        parts = None
        for blocks in set_partitions(rest, slots):
            _tick(deadline)
            cand = _assemble(x, i, blocks, n)
            if _agent_ok(inst, cand, i, notion, alpha):
                parts = [list(b) for b in blocks]
                break
        if parts is None:
            return False, None
    return True, _assemble(x, i, parts, n)


def _assemble(x: Allocation, i: int, blocks, n: int) -> Allocation:
    it = iter(blocks)
    out = []
    for j in range(n):
        if j == i:
            out.append(x[i])
        else:
            out.append(next(it, ()))
    return Allocation(out)


def _agent_ok(inst: Instance, y: Allocation, i: int, notion: str, alpha: Fraction) -> bool:
    if notion == "efx":
        return not efx_violations(inst, y, i, alpha=alpha)
    return not ef1_violations(inst, y, i)


def is_eefx_satisfied_bruteforce(
    inst: Instance, x: Allocation, i: int, budget: Optional[SearchBudget] = None, alpha=1
) -> tuple[bool, Optional[Allocation]]:
    """Whether some reshuffle of the other agents' items EFX-satisfies agent i.

    With ``alpha`` the EFX condition is scaled (alpha-EEFX). Returns the
    verdict and, when positive, a witness allocation with Y_i = X_i.
    """
    x.validate(inst.n, inst.m)
    return _epistemic_search(inst, x, i, "efx", alpha, _default_budget(budget))


def is_eefx_bruteforce(inst: Instance, x: Allocation, budget: Optional[SearchBudget] = None, alpha=1) -> bool:
    return all(is_eefx_satisfied_bruteforce(inst, x, i, budget, alpha)[0] for i in range(inst.n))


def is_eef1_satisfied_bruteforce(
    inst: Instance, x: Allocation, i: int, budget: Optional[SearchBudget] = None
) -> tuple[bool, Optional[Allocation]]:
    x.validate(inst.n, inst.m)
    return _epistemic_search(inst, x, i, "ef1", 1, _default_budget(budget))


def is_eef1_bruteforce(inst: Instance, x: Allocation, budget: Optional[SearchBudget] = None) -> bool:
    return all(is_eef1_satisfied_bruteforce(inst, x, i, budget)[0] for i in range(inst.n))


def find_efx_allocation(inst: Instance, budget: Optional[SearchBudget] = None) -> Optional[Allocation]:
    for x in enumerate_allocations(inst.n, inst.m, budget):
        if is_efx(inst, x):
            return x
    return None
