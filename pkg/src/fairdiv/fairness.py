"""Fairness checkers, exact maximin shares and the MMS-to-EEFX certificate procedure.

Goods conditions compare agent i's value of their own bundle against rival
bundles; chores conditions compare the disutility ``d_i = -v_i``. With
exact rationals every check is a plain inequality, no tolerance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .alloc import Allocation, Certificate
from .core import (
    AdditiveValuation,
    Instance,
    Valuation,
    correlation,
    is_strongly_monotone,
    set_partitions,
    to_value,
)
from .errors import BudgetExceeded, PreconditionError, ValidationError, VerificationError

MMS_MAX_ITEMS = 12
MMS_MAX_AGENTS = 4


@dataclass(frozen=True)
class Violation:
    """Agent ``agent`` is not satisfied against ``rival``: ``lhs`` vs ``rhs`` failed."""

    agent: int
    rival: int
    lhs: Fraction
    rhs: Fraction


def _min_less(v: Valuation, bundle) -> Fraction:
    s = frozenset(bundle)
    if isinstance(v, AdditiveValuation):
        vals = [v.values[g] for g in s]
        return sum(vals, Fraction(0)) - max(vals)
    return min(v.value(s - {g}) for g in s)


# -- EFX ---------------------------------------------------------------------

def efx_violations(inst: Instance, x: Allocation, agent: Optional[int] = None, alpha=1) -> list[Violation]:
    """Every (i, j) pair where alpha-EFX fails.

    goods:  v_i(X_i) >= alpha * oneLess(v_i)(X_j)
    chores: oneLess(d_i)(X_i) <= alpha * d_i(X_j)
    """
    alpha = to_value(alpha)
    agents = range(inst.n) if agent is None else [agent]
    out = []
    for i in agents:
        c = inst.cost(i)
        if inst.kind == "goods":
            own = c.value(x[i])
            for j in range(inst.n):
                if j != i:
                    other = c.one_less(x[j])
                    if own < alpha * other:
                        out.append(Violation(i, j, own, alpha * other))
        else:
            own = c.one_less(x[i])
            for j in range(inst.n):
                if j != i:
                    other = c.value(x[j])
                    if own > alpha * other:
                        out.append(Violation(i, j, own, alpha * other))
    return out


def is_efx_satisfied(inst: Instance, x: Allocation, i: int) -> bool:
    return not efx_violations(inst, x, i)


def is_efx(inst: Instance, x: Allocation) -> bool:
    return not efx_violations(inst, x)


def is_alpha_efx(inst: Instance, x: Allocation, alpha) -> bool:
    return not efx_violations(inst, x, alpha=alpha)


# -- EF1 ---------------------------------------------------------------------

def ef1_violations(inst: Instance, x: Allocation, agent: Optional[int] = None) -> list[Violation]:
    """goods: X_j empty or v_i(X_i) >= min_g v_i(X_j - g).

    chores (removal from the own bundle): X_i empty or min_g d_i(X_i - g) <= d_i(X_j).
    """
    agents = range(inst.n) if agent is None else [agent]
    out = []
    for i in agents:
        c = inst.cost(i)
        for j in range(inst.n):
            if j == i:
                continue
            if inst.kind == "goods":
                if not x[j]:
                    continue
                own, other = c.value(x[i]), _min_less(c, x[j])
                if own < other:
                    out.append(Violation(i, j, own, other))
            else:
                if not x[i]:
                    continue
                own, other = _min_less(c, x[i]), c.value(x[j])
                if own > other:
                    out.append(Violation(i, j, own, other))
    return out


def is_ef1_satisfied(inst: Instance, x: Allocation, i: int) -> bool:
    return not ef1_violations(inst, x, i)


def is_ef1(inst: Instance, x: Allocation) -> bool:
    return not ef1_violations(inst, x)


# -- proportionality relaxations ----------------------------------------------

def _additive_goods(inst: Instance) -> None:
    if inst.kind != "goods" or not inst.is_additive:
        raise ValidationError("PROP1/PROPm/PROPx are defined here for additive goods only")


def prop1_satisfied(inst: Instance, x: Allocation, i: int) -> bool:
    _additive_goods(inst)
    v = inst.valuations[i]
    outside = [v.values[g] for g in range(inst.m) if g not in x[i]]
    relief = max(outside, default=Fraction(0))
    return v.value(x[i]) >= v.value(range(inst.m)) / inst.n - relief


def propx_satisfied(inst: Instance, x: Allocation, i: int) -> bool:
    _additive_goods(inst)
    v = inst.valuations[i]
    outside = [v.values[g] for g in range(inst.m) if g not in x[i]]
    relief = min(outside, default=Fraction(0))
    return v.value(x[i]) >= v.value(range(inst.m)) / inst.n - relief


def propm_threshold(inst: Instance, x: Allocation, i: int) -> Fraction:
    """v_i(M)/n minus the largest rival-minimum good; empty rivals give no relief."""
    _additive_goods(inst)
    v = inst.valuations[i]
    mins = [min(v.values[g] for g in x[j]) for j in range(inst.n) if j != i and x[j]]
    return v.value(range(inst.m)) / inst.n - max(mins, default=Fraction(0))


def propm_satisfied(inst: Instance, x: Allocation, i: int) -> bool:
    return inst.valuations[i].value(x[i]) >= propm_threshold(inst, x, i)


def is_prop1(inst: Instance, x: Allocation) -> bool:
    return all(prop1_satisfied(inst, x, i) for i in range(inst.n))


def is_propx(inst: Instance, x: Allocation) -> bool:
    return all(propx_satisfied(inst, x, i) for i in range(inst.n))


def is_propm(inst: Instance, x: Allocation) -> bool:
    return all(propm_satisfied(inst, x, i) for i in range(inst.n))


# -- maximin share ------------------------------------------------------------

def _mms_guard(inst: Instance, max_items: int, max_agents: int) -> None:
    if inst.kind != "goods":
        raise ValidationError("maximin share is computed for goods instances only")
    if inst.m > max_items or inst.n > max_agents:
        raise BudgetExceeded(
            f"MMS enumeration limited to m <= {max_items}, n <= {max_agents}; got m={inst.m}, n={inst.n}"
        )


def _mms_additive(values: tuple[Fraction, ...], n: int) -> tuple[Fraction, list[list[int]]]:
    den = math.lcm(*(x.denominator for x in values)) if values else 1
    w = [int(x * den) for x in values]
    live = sorted((g for g in range(len(w)) if w[g] > 0), key=lambda g: (-w[g], g))
    idle = [g for g in range(len(w)) if w[g] == 0]
    total = sum(w)
    ceiling = total // n
    loads = [0] * n
    bins: list[list[int]] = [[] for _ in range(n)]
    best = [-1, None]
    suffix = [0] * (len(live) + 1)
    for k in range(len(live) - 1, -1, -1):
        suffix[k] = suffix[k + 1] + w[live[k]]

    def dfs(k: int) -> bool:
        if k == len(live):
            low = min(loads)
            if low > best[0]:
                best[0] = low
                best[1] = [list(b) for b in bins]
            return best[0] >= ceiling
        # the final minimum cannot beat the average of the t lightest bins
        # after pouring every remaining item into them
        bound = None
        cum = 0
        for t, load in enumerate(sorted(loads), start=1):
            cum += load
            cap = (cum + suffix[k]) // t
            bound = cap if bound is None or cap < bound else bound
        if bound <= best[0]:
            return False
        g = live[k]
        seen = set()
        for b in range(n):
            if loads[b] in seen:
                continue
            seen.add(loads[b])
            loads[b] += w[g]
            bins[b].append(g)
            done = dfs(k + 1)
            bins[b].pop()
            loads[b] -= w[g]
            if done:
                return True
        return False

    dfs(0)
    parts = best[1]
    parts[0].extend(idle)
    return Fraction(best[0], den), parts


def _mms_table(v: Valuation, n: int) -> tuple[Fraction, list[list[int]]]:
    best, witness = None, None
    for blocks in set_partitions(list(range(v.m)), n):
        vals = [v.value(b) for b in blocks]
        if len(blocks) < n:
            vals.append(v.value(()))
        low = min(vals)
        if best is None or low > best:
            best, witness = low, [list(b) for b in blocks]
    witness = witness + [[] for _ in range(n - len(witness))]
    return best, witness


def mms_value(
    inst: Instance, i: int, max_items: int = MMS_MAX_ITEMS, max_agents: int = MMS_MAX_AGENTS
) -> tuple[Fraction, Allocation]:
    """Agent i's maximin share and a partition attaining it."""
    _mms_guard(inst, max_items, max_agents)
    v = inst.valuations[i]
    if inst.m == 0:
        return Fraction(0), Allocation([()] * inst.n)
    if isinstance(v, AdditiveValuation):
        value, parts = _mms_additive(v.values, inst.n)
    else:
        value, parts = _mms_table(v, inst.n)
    return value, Allocation(parts)


def is_alpha_mms(inst: Instance, x: Allocation, alpha, **guard) -> bool:
    alpha = to_value(alpha)
    return all(
        inst.valuations[i].value(x[i]) >= alpha * mms_value(inst, i, **guard)[0] for i in range(inst.n)
    )


# -- MMS -> EEFX ---------------------------------------------------------------

@dataclass(frozen=True, order=True)
class PhiPotential:
    """Lexicographic potential of the conversion procedure.

    poorer: rivals whose bundle is worth at most the fixed agent's bundle;
    peak: the largest one-less value among rivals; peak_count: rivals attaining it.
    """

    poorer: int
    peak: Fraction
    peak_count: int


def phi_potential(v: Valuation, y, k: int) -> PhiPotential:
    own = v.value(y[k])
    rivals = [j for j in range(len(y)) if j != k]
    if not rivals:
        return PhiPotential(0, Fraction(0), 0)
    w = [v.one_less(y[j]) for j in rivals]
    peak = max(w)
    return PhiPotential(
        sum(1 for j in rivals if v.value(y[j]) <= own),
        peak,
        sum(1 for x in w if x == peak),
    )


def top_item(v: Valuation, bundle) -> int:
    """The item whose removal leaves the most value; smallest index on ties."""
    s = frozenset(bundle)
    return min(s, key=lambda g: (-v.value(s - {g}), g))


def mms_to_eefx_certificate(
    inst: Instance,
    x: Allocation,
    k: int,
    on_step: Optional[Callable[[PhiPotential, PhiPotential, int, int, int], None]] = None,
    **guard,
) -> Certificate:
    """Turn an allocation giving agent k their maximin share into an EEFX certificate.

    Rival bundles are reshuffled one good at a time: the top good of a rival
    with maximal one-less value moves to a rival that agent k does not value
    above their own bundle. ``on_step(before, after, item, src, dst)`` observes
    each move.
    """
    if inst.kind != "goods":
        raise PreconditionError("MMS-to-EEFX conversion is defined for goods")
    v = inst.valuations[k]
    if not is_strongly_monotone(v):
        raise PreconditionError(
            f"agent {k}'s valuation is not strongly monotone; MMS allocations need not be EEFX then"
        )
    mms, _ = mms_value(inst, k, **guard)
    own = v.value(x[k])
    if own < mms:
        raise PreconditionError(f"agent {k} gets {own}, below their maximin share {mms}")

    y = [set(b) for b in x]
    rivals = [j for j in range(inst.n) if j != k]
    phi = phi_potential(v, y, k)
    while phi.peak > own:
        poor = [j for j in rivals if v.value(y[j]) <= own]
        if not poor:
            raise VerificationError("every rival is richer than agent k, contradicting their maximin share")
        src = next(j for j in rivals if v.one_less(y[j]) == phi.peak)
        dst = poor[0]
        g = top_item(v, y[src])
        y[src].remove(g)
        y[dst].add(g)
        after = phi_potential(v, y, k)
        if not after < phi:
            raise VerificationError(f"potential did not decrease: {phi} -> {after}")
        if on_step is not None:
            on_step(phi, after, g, src, dst)
        phi = after
    witness = Allocation(y)
    if not is_efx_satisfied(inst, witness, k):
        raise VerificationError(f"conversion ended without EFX-satisfying agent {k}")
    return Certificate(k, witness, x)


# -- reports -----------------------------------------------------------------

@dataclass
class AgentReport:
    agent: int
    bundle_value: Fraction
    efx_satisfied: bool
    ef1_satisfied: bool
    prop1: Optional[bool] = None
    propm: Optional[bool] = None
    propx: Optional[bool] = None
    mms_value: Optional[Fraction] = None
    mms_ratio: Optional[Fraction] = None


@dataclass
class FairnessReport:
    agents: list[AgentReport] = field(default_factory=list)
    is_efx: bool = True
    is_ef1: bool = True
    alpha_correlation: Optional[Fraction] = None


def fairness_report(inst: Instance, x: Allocation, with_mms: bool = True, **guard) -> FairnessReport:
    """Per-agent verdicts for every notion that applies to the instance.

    PROP* flags need additive goods; MMS fields are filled only within the
    enumeration guard, and the ratio stays None when the share is 0.
    """
    props = inst.kind == "goods" and inst.is_additive
    mms_ok = with_mms and inst.kind == "goods"
    if mms_ok:
        try:
            _mms_guard(inst, guard.get("max_items", MMS_MAX_ITEMS), guard.get("max_agents", MMS_MAX_AGENTS))
        except BudgetExceeded:
            mms_ok = False
    rep = FairnessReport()
    for i in range(inst.n):
        ar = AgentReport(
            agent=i,
            bundle_value=inst.valuations[i].value(x[i]),
            efx_satisfied=is_efx_satisfied(inst, x, i),
            ef1_satisfied=is_ef1_satisfied(inst, x, i),
        )
        if props:
            ar.prop1 = prop1_satisfied(inst, x, i)
            ar.propm = propm_satisfied(inst, x, i)
            ar.propx = propx_satisfied(inst, x, i)
        if mms_ok:
            ar.mms_value = mms_value(inst, i, **guard)[0]
            if ar.mms_value > 0:
                ar.mms_ratio = ar.bundle_value / ar.mms_value
        rep.agents.append(ar)
    rep.is_efx = all(a.efx_satisfied for a in rep.agents)
    rep.is_ef1 = all(a.ef1_satisfied for a in rep.agents)
    try:
        vals = inst.valuations if inst.kind == "goods" else inst.disutilities
        rep.alpha_correlation = correlation(vals)[0]
    except ValidationError:
        rep.alpha_correlation = None
    return rep

