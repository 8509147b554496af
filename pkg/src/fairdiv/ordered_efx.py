"""EFX allocations for ordered instances.

Goods go out in the common order 0..m-1 through envy-cycle elimination;
chores go out in reverse (largest disutility first) through the
top-trading variant. Both results are re-checked before being returned.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

from .alloc import Allocation
from .core import (
    DEFAULT_TABLE_LIMIT,
    AdditiveValuation,
    Instance,
    Valuation,
    cancelability_witness,
    is_ordered,
)
from .errors import ValidationError, VerificationError
from .fairness import efx_violations

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnvyGraph:
    """edges[i] lists the agents i points to, ascending."""

    edges: tuple[tuple[int, ...], ...]

    @classmethod
    def goods(cls, vals: Sequence[Valuation], bundles: Sequence[set[int]]) -> "EnvyGraph":
        out = []
        for i, v in enumerate(vals):
            own = v.value(bundles[i])
            out.append(tuple(j for j in range(len(vals)) if j != i and v.value(bundles[j]) > own))
        return cls(tuple(out))

    @classmethod
    def chores(cls, costs: Sequence[Valuation], bundles: Sequence[set[int]]) -> "EnvyGraph":
        # plain envy: i would rather carry j's bundle
        out = []
        for i, d in enumerate(costs):
            own = d.value(bundles[i])
            out.append(tuple(j for j in range(len(costs)) if j != i and d.value(bundles[j]) < own))
        return cls(tuple(out))

    @classmethod
    def top_trading(cls, costs: Sequence[Valuation], bundles: Sequence[set[int]]) -> "EnvyGraph":
        # each envious agent points at the least-burdensome bundle (smallest index on ties)
        out = []
        for i, d in enumerate(costs):
            costs_i = [d.value(b) for b in bundles]
            best = min(range(len(bundles)), key=lambda j: (costs_i[j], j))
            if costs_i[best] < costs_i[i]:
                out.append((best,))
            else:
                out.append(())
        return cls(tuple(out))

    def unenvied(self) -> list[int]:
        hit = {j for succ in self.edges for j in succ}
        return [i for i in range(len(self.edges)) if i not in hit]

    def sinks(self) -> list[int]:
        return [i for i, succ in enumerate(self.edges) if not succ]

    def cycle_into(self) -> list[int]:
        """A cycle when every node has an incoming edge, found by walking envy backwards.

        Returned in forward order: each agent envies the next one.
        """
        enviers = [[] for _ in self.edges]
        for i, succ in enumerate(self.edges):
            for j in succ:
                enviers[j].append(i)
        return _walk(lambda i: enviers[i][0] if enviers[i] else None)[::-1]

    def cycle_out(self) -> list[int]:
        """A cycle when every node has an outgoing edge, walking forward from agent 0."""
        return _walk(lambda i: self.edges[i][0] if self.edges[i] else None)


def _walk(step) -> list[int]:
    path, pos = [], {}
    i = 0
    while i not in pos:
        pos[i] = len(path)
        path.append(i)
        i = step(i)
        if i is None:
            raise VerificationError("envy walk dead-ended; graph has no cycle")
    return path[pos[i]:]


def _rotate(bundles: list[set[int]], cycle: list[int]) -> None:
    # cycle[k] takes the bundle of cycle[k+1]
    moved = [bundles[cycle[(k + 1) % len(cycle)]] for k in range(len(cycle))]
    for agent, b in zip(cycle, moved):
        bundles[agent] = b


def _check_input(inst: Instance, kind: str) -> None:
    if inst.kind != kind:
        raise ValidationError(f"expected a {kind} instance, got {inst.kind}")
    for i, v in enumerate(inst.valuations):
        if not is_ordered(v):
            vals = v.item_values()
            g = next(g for g in range(len(vals) - 1) if vals[g] < vals[g + 1])
            raise ValidationError(f"agent {i} is not ordered: item {g} is worth less than item {g + 1}")
        if kind == "goods" and not v.is_nonnegative():
            raise ValidationError(f"agent {i} has a negative value in a goods instance")
        if kind == "chores" and not v.is_nonpositive():
            raise ValidationError(f"agent {i} has a positive value in a chores instance")
        if isinstance(v, AdditiveValuation):
            continue
        if v.m > DEFAULT_TABLE_LIMIT:
            log.warning("agent %d: table too large, skipping the cancelability check", i)
            continue
        bad = cancelability_witness(v)
        if bad is not None:
            s, t, g = bad
            raise ValidationError(f"agent {i} is not cancelable: S={sorted(s)}, T={sorted(t)}, g={g}")


def _verify(inst: Instance, x: Allocation) -> Allocation:
    bad = efx_violations(inst, x)
    if bad:
        raise VerificationError(f"ordered-instance solver produced a non-EFX allocation: {bad[0]}")
    return x


def efx_ordered_goods(inst: Instance) -> Allocation:
    """Envy-cycle elimination over items in index order.

    Each item goes to the smallest-index agent nobody envies; when everyone
    is envied, bundles rotate along an envy cycle until someone is not.
    """
    _check_input(inst, "goods")
    vals = inst.valuations
    bundles: list[set[int]] = [set() for _ in range(inst.n)]
    for g in range(inst.m):
        graph = EnvyGraph.goods(vals, bundles)
        while not graph.unenvied():
            _rotate(bundles, graph.cycle_into())
            graph = EnvyGraph.goods(vals, bundles)
        bundles[graph.unenvied()[0]].add(g)
    return _verify(inst, Allocation(bundles))


def efx_ordered_chores(inst: Instance) -> Allocation:
    """Top-trading envy-cycle elimination, chores handed out heaviest first.

    An ordered chores instance lists chores by non-decreasing disutility, so
    the loop runs m-1 down to 0. Each chore goes to the smallest-index agent
    who envies nobody; if there is none, bundles rotate along a top-trading
    cycle, after which everyone on it is envy-free.
    """
    _check_input(inst, "chores")
    costs = inst.disutilities
    bundles: list[set[int]] = [set() for _ in range(inst.n)]
    for g in reversed(range(inst.m)):
        graph = EnvyGraph.chores(costs, bundles)
        if not graph.sinks():
            _rotate(bundles, EnvyGraph.top_trading(costs, bundles).cycle_out())
            graph = EnvyGraph.chores(costs, bundles)
            if not graph.sinks():
                raise VerificationError("top-trading rotation left no envy-free agent")
        bundles[graph.sinks()[0]].add(g)
    return _verify(inst, Allocation(bundles))


def efx_ordered(inst: Instance) -> Allocation:
    if inst.kind == "goods":
        return efx_ordered_goods(inst)
    return efx_ordered_chores(inst)
