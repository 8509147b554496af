"""JSON documents: instances, allocations, certificates and reports.

Documents are 1-indexed (agent 1, item 1); the library is 0-indexed, and
everything here converts at the boundary. Rationals are written as bare
integers or ``"p/q"`` strings in lowest terms.

Instance document::

    {"agents": 2, "items": 3, "kind": "goods",
     "valuations": {"additive": [[5, 3, 1], [2, "9/2", 4]]}}

``"tables"`` replaces ``"additive"`` with one array of 2**m values per
agent, entry ``mask`` holding v(S) where bit j-1 of mask is item j.
Rows are agents (n x m), not items.
"""
from __future__ import annotations

import json
from fractions import Fraction
from typing import Any, Optional

from .alloc import Allocation, Certificate
from .core import AdditiveValuation, Instance, TableValuation, to_value
from .errors import ValidationError
from .fairness import FairnessReport


def fmt_value(x: Fraction) -> Any:
    x = Fraction(x)
    if x.denominator == 1:
        return x.numerator
    return f"{x.numerator}/{x.denominator}"


def _value(raw, where: str) -> Fraction:
    if isinstance(raw, (dict, list)) or raw is None:
        raise ValidationError(f"{where}: expected a number or 'p/q' string, got {raw!r}")
    try:
        return to_value(raw)
    except ValidationError as exc:
        raise ValidationError(f"{where}: {exc}") from None


def loads(text: str, source: str = "<input>") -> Any:
    try:
        return json.loads(text, parse_float=Fraction)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def read(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"{path}: {exc.strerror}") from None
    return loads(text, path)


def _int(doc: dict, key: str, lo: int) -> int:
    val = doc.get(key)
    if not isinstance(val, int) or isinstance(val, bool) or val < lo:
        raise ValidationError(f"'{key}' must be an integer >= {lo}, got {val!r}")
    return val


def parse_instance(doc: Any) -> Instance:
    if not isinstance(doc, dict):
        raise ValidationError("instance document must be a JSON object")
    n = _int(doc, "agents", 1)
    m = _int(doc, "items", 0)
    kind = doc.get("kind", "goods")
    if kind not in ("goods", "chores"):
        raise ValidationError(f"'kind' must be 'goods' or 'chores', got {kind!r}")
    vals = doc.get("valuations")
    if not isinstance(vals, dict) or len(vals) != 1 or not set(vals) <= {"additive", "tables"}:
        raise ValidationError("'valuations' must hold exactly one of 'additive' or 'tables'")
    (form, rows), = vals.items()
    if not isinstance(rows, list) or len(rows) != n:
        raise ValidationError(f"valuations.{form}: expected {n} rows (one per agent)")
    width = m if form == "additive" else 1 << m
    parsed = []
    for a, row in enumerate(rows, start=1):
        if not isinstance(row, list) or len(row) != width:
            raise ValidationError(f"valuations.{form}[{a}]: expected {width} entries")
        nums = [_value(x, f"valuations.{form}[{a}][{k}]") for k, x in enumerate(row, start=1 if form == "additive" else 0)]
        for k, x in enumerate(nums):
            if (kind == "goods" and x < 0) or (kind == "chores" and x > 0):
                label = f"item {k + 1}" if form == "additive" else f"subset mask {k}"
                raise ValidationError(f"agent {a}, {label}: value {x} has the wrong sign for {kind}")
        if form == "additive":
            parsed.append(AdditiveValuation(nums))
        else:
            try:
                parsed.append(TableValuation(nums, monotone=bool(doc.get("monotone", False))))
            except ValidationError as exc:
                raise ValidationError(f"agent {a}: {exc}") from None
    return Instance(parsed, kind)


def dump_instance(inst: Instance, **extra) -> dict:
    if inst.is_additive:
        vals = {"additive": [[fmt_value(x) for x in v.values] for v in inst.valuations]}
    else:
        vals = {"tables": [[fmt_value(x) for x in v.table] for v in inst.valuations]}
    doc = {"agents": inst.n, "items": inst.m, "kind": inst.kind, "valuations": vals}
    doc.update(extra)
    return doc


def bundles_out(x: Allocation) -> list[list[int]]:
    return [[g + 1 for g in sorted(b)] for b in x]


def bundles_in(raw: Any, n: int, m: int, where: str = "allocation") -> Allocation:
    if not isinstance(raw, list) or not all(isinstance(b, list) for b in raw):
        raise ValidationError(f"{where}: expected a list of bundles (lists of item numbers)")
    for b in raw:
        for g in b:
            if not isinstance(g, int) or isinstance(g, bool):
                raise ValidationError(f"{where}: item {g!r} is not an integer")
    try:
        return Allocation([g - 1 for g in b] for b in raw).validate(n, m)
    except ValidationError as exc:
        raise ValidationError(f"{where}: {exc} (items are numbered from 1)") from None


def parse_allocation(doc: Any, inst: Instance) -> Allocation:
    """Accepts a bare list of bundles or any object with an 'allocation' key."""
    raw = doc.get("allocation") if isinstance(doc, dict) else doc
    return bundles_in(raw, inst.n, inst.m)


def parse_stage1(doc: Any, inst: Instance) -> Optional[Allocation]:
    if isinstance(doc, dict) and "stage1" in doc:
        return bundles_in(doc["stage1"], inst.n, inst.m, "stage1")
    return None


def parse_certificates(doc: Any, inst: Instance) -> dict[int, Allocation]:
    raw = doc.get("certificates") if isinstance(doc, dict) else doc
    if not isinstance(raw, list):
        raise ValidationError("expected a 'certificates' list")
    out = {}
    for entry in raw:
        if not isinstance(entry, dict) or "agent" not in entry or "witness" not in entry:
            raise ValidationError("each certificate needs 'agent' and 'witness'")
        k = entry["agent"]
        if not isinstance(k, int) or not 1 <= k <= inst.n:
            raise ValidationError(f"certificate agent {k!r} out of range")
        out[k - 1] = bundles_in(entry["witness"], inst.n, inst.m, f"certificate for agent {k}")
    return out


def certificate_out(cert: Certificate) -> dict:
    return {"agent": cert.agent + 1, "witness": bundles_out(cert.witness)}


def report_out(rep: FairnessReport) -> dict:
    agents = []
    for a in rep.agents:
        entry = {
            "agent": a.agent + 1,
            "bundle_value": fmt_value(a.bundle_value),
            "efx_satisfied": a.efx_satisfied,
            "ef1_satisfied": a.ef1_satisfied,
        }
        for key in ("prop1", "propm", "propx"):
            if getattr(a, key) is not None:
                entry[key] = getattr(a, key)
        if a.mms_value is not None:
            entry["mms_value"] = fmt_value(a.mms_value)
            entry["mms_ratio"] = None if a.mms_ratio is None else fmt_value(a.mms_ratio)
        agents.append(entry)
    return {
        "is_efx": rep.is_efx,
        "is_ef1": rep.is_ef1,
        "alpha_correlation": None if rep.alpha_correlation is None else fmt_value(rep.alpha_correlation),
        "agents": agents,
    }


def dumps(doc: Any) -> str:
    """Pretty JSON with flat lists kept on one line, so matrices stay readable."""
    return _emit(doc, 0) + "\n"


def _flat(x: Any) -> bool:
    return isinstance(x, list) and all(not isinstance(e, (list, dict)) for e in x)


def _emit(x: Any, depth: int) -> str:
    pad = "  " * (depth + 1)
    end = "  " * depth
    if isinstance(x, dict):
        if not x:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_emit(v, depth + 1)}" for k, v in x.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(x, list):
        if _flat(x):
            return json.dumps(x)
        if all(_flat(e) for e in x) and sum(len(e) for e in x) <= 40:
            return "[" + ", ".join(json.dumps(e) for e in x) + "]"
        return "[\n" + ",\n".join(pad + _emit(e, depth + 1) for e in x) + "\n" + end + "]"
    return json.dumps(x)
