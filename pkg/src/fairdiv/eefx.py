"""The two-stage EEFX pipeline and its per-agent certificates.

Stage one relabels every agent's items by that agent's value order and solves
the resulting ordered instance exactly (EFX). Its allocation vector then
drives a picking sequence over the real valuations. Every agent gets a
certificate: keep the agent's bundle, and hand the rival bundles of stage one,
item by item, the goods the agent values in the same rank.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .alloc import Allocation, AllocationVector, Certificate, allocation_vector, pick_by_list
from .core import Instance, OrderingPermutation, Valuation, ordered_valuation
from .errors import ValidationError, VerificationError
from .fairness import efx_violations
from .ordered_efx import efx_ordered

__all__ = [
    "Certificate",
    "SolveResult",
    "bar_kri",
    "eefx_certificate",
    "eefx_certificate_chores",
    "eefx_certificate_goods",
    "verify_certificate",
]


@dataclass(frozen=True)
class SolveResult:
    x: Allocation
    x_prime: Allocation
    vector: AllocationVector
    orderings: tuple[OrderingPermutation, ...]
    certificates: tuple[Certificate, ...] = field(default=())

    def agent_view(self, i: int) -> Allocation:
        """The stage-one allocation mapped into agent i's real item labels."""
        pi = self.orderings[i]
        return Allocation(pi.to_items(b) for b in self.x_prime)


def ordered_instance(inst: Instance) -> tuple[Instance, tuple[OrderingPermutation, ...]]:
    pairs = [ordered_valuation(v) for v in inst.valuations]
    return Instance([p[0] for p in pairs], inst.kind), tuple(p[1] for p in pairs)


def _certificate(x: Allocation, x_prime: Allocation, i: int, pi: OrderingPermutation) -> Certificate:
    # ranks in agent i's order: rank 0 is the favourite item (smaller index on ties),
    # so sorting ranks ascending is sorting by value, best first
    m = x.m
    mine_prime = x_prime[i]
    t = [r for r in range(m) if r not in mine_prime]
    mine = pi.to_ranks(x[i])
    g = [r for r in range(m) if r not in mine]
    slot = {tr: gr for tr, gr in zip(t, g)}
    bundles = []
    for j, b in enumerate(x_prime):
        if j == i:
            bundles.append(x[i])
        else:
            bundles.append(pi.to_items(slot[r] for r in b))
    return Certificate(i, Allocation(bundles), x_prime)


def eefx_certificate(x: Allocation, x_prime: Allocation, i: int, valuations: Sequence[Valuation], kind: str) -> Certificate:
    """Certificate for agent i given the final and the stage-one allocation.

    ``x_prime`` lives in the ordered relabelling; the agent's own permutation
    is recomputed from the valuation.
    """
    if len(x[i]) != len(x_prime[i]):
        raise ValidationError(
            f"agent {i} holds {len(x[i])} items but {len(x_prime[i])} in stage one; X is not pickByList of X'"
        )
    _, pi = ordered_valuation(valuations[i])
    cert = _certificate(x, x_prime, i, pi)
    inst = Instance(valuations, kind)
    if not verify_certificate(inst, x, cert.witness, i):
        raise VerificationError(f"certificate for agent {i} does not verify; stage-one input is inconsistent")
    return cert


def eefx_certificate_goods(x: Allocation, x_prime: Allocation, i: int, valuations: Sequence[Valuation]) -> Certificate:
    return eefx_certificate(x, x_prime, i, valuations, "goods")


def eefx_certificate_chores(x: Allocation, x_prime: Allocation, i: int, valuations: Sequence[Valuation]) -> Certificate:
    """Same construction as for goods: ascending disutility is descending value."""
    return eefx_certificate(x, x_prime, i, valuations, "chores")


def verify_certificate(inst: Instance, x: Allocation, y: Allocation, i: int) -> bool:
    """Y keeps agent i's bundle from X and EFX-satisfies that agent."""
    y.validate(inst.n, inst.m)
    if y[i] != x[i]:
        return False
    return not efx_violations(inst, y, i)


def bar_kri(inst: Instance, certificates: bool = True) -> SolveResult:
    """Compute an EEFX allocation, with one verified certificate per agent."""
    ordered, orderings = ordered_instance(inst)
    x_prime = efx_ordered(ordered)
    vector = allocation_vector(x_prime) if inst.m else ()
    x = pick_by_list(vector, inst.valuations) if inst.m else Allocation([()] * inst.n)
    certs = []
    if certificates:
        for i in range(inst.n):
            cert = _certificate(x, x_prime, i, orderings[i])
            if not verify_certificate(inst, x, cert.witness, i):
                raise VerificationError(f"certificate for agent {i} failed verification")
            certs.append(cert)
    return SolveResult(x, x_prime, vector, orderings, tuple(certs))
