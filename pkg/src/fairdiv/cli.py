"""Command-line front end.

Exit codes: 0 success / notion holds, 1 notion fails, 2 invalid input,
3 search budget or size guard exceeded, 4 procedure precondition failed,
5 internal self-check failure.
"""
from __future__ import annotations

import argparse
import math
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Optional, Sequence

from . import documents as docs
from .alloc import allocation_vector, pick_by_list
from .core import (
    DEFAULT_TABLE_LIMIT,
    AdditiveValuation,
    Instance,
    cancelability_witness,
    correlation,
    is_strongly_monotone,
    to_value,
)
from .eefx import bar_kri, eefx_certificate, ordered_instance, verify_certificate
from .errors import BudgetExceeded, PreconditionError, ValidationError, VerificationError
from .fairness import (
    ef1_violations,
    efx_violations,
    fairness_report,
    is_alpha_mms,
    mms_to_eefx_certificate,
    mms_value,
    prop1_satisfied,
    propm_satisfied,
    propx_satisfied,
)
from .oracle import (
    SearchBudget,
    find_efx_allocation,
    is_eef1_satisfied_bruteforce,
    is_eefx_satisfied_bruteforce,
)

EXIT_OK, EXIT_FAILS, EXIT_INPUT, EXIT_BUDGET, EXIT_PRECONDITION, EXIT_INTERNAL = range(6)


def _emit(doc) -> None:
    sys.stdout.write(docs.dumps(doc))


# -- solve -------------------------------------------------------------------

def _require_cancelable(inst: Instance) -> None:
    # cancelability survives relabelling, so check the input labels and
    # report in document numbering rather than the solver's ordered ranks
    for i, v in enumerate(inst.valuations):
        if isinstance(v, AdditiveValuation) or v.m > DEFAULT_TABLE_LIMIT:
            continue
        bad = cancelability_witness(v)
        if bad is not None:
            s, t, g = bad
            raise ValidationError(
                f"agent {i + 1} is not cancelable: v(S+{g + 1}) > v(T+{g + 1}) but not v(S) > v(T) "
                f"for S={sorted(h + 1 for h in s)}, T={sorted(h + 1 for h in t)}"
            )


def _solve_one(path: str, certificates: bool, report: bool) -> dict:
    inst = docs.parse_instance(docs.read(path))
    _require_cancelable(inst)
    res = bar_kri(inst, certificates=certificates)
    out = {
        "source": path,
        "kind": inst.kind,
        "agents": inst.n,
        "items": inst.m,
        "allocation": docs.bundles_out(res.x),
        "stage1": docs.bundles_out(res.x_prime),
        "allocation_vector": [a + 1 for a in res.vector],
    }
    if certificates:
        out["certificates"] = [docs.certificate_out(c) for c in res.certificates]
    if report:
        out["report"] = docs.report_out(fairness_report(inst, res.x))
    return out


def cmd_solve(args) -> int:
    if len(args.instance) == 1:
        _emit(_solve_one(args.instance[0], args.certificates, args.report))
        return EXIT_OK
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            futs = [pool.submit(_solve_one, p, args.certificates, args.report) for p in args.instance]
            results = [f.result() for f in futs]
    else:
        results = [_solve_one(p, args.certificates, args.report) for p in args.instance]
    _emit(results)
    return EXIT_OK


# -- check -------------------------------------------------------------------

def _parse_notions(raw: str) -> list[tuple[str, Optional[Fraction]]]:
    known = {"efx", "ef1", "eefx", "eef1", "prop1", "propm", "propx", "mms"}
    out = []
    for tok in raw.split(","):
        tok = tok.strip()
        if not tok:
            continue
        name, _, arg = tok.partition(":")
        if name not in known:
            raise ValidationError(f"unknown notion {name!r}; expected one of {sorted(known)}")
        alpha = to_value(arg) if arg else None
        if alpha is not None and name not in ("efx", "eefx", "mms"):
            raise ValidationError(f"notion {name!r} takes no factor")
        out.append((name, alpha))
    if not out:
        raise ValidationError("no notions requested")
    return out


def _violations_out(vs) -> list[dict]:
    return [
        {"agent": v.agent + 1, "rival": v.rival + 1, "lhs": docs.fmt_value(v.lhs), "rhs": docs.fmt_value(v.rhs)}
        for v in vs
    ]


def _check_notion(inst, x, name, alpha, certs, budget) -> dict:
    n = inst.n
    if name in ("efx", "ef1"):
        vs = efx_violations(inst, x, alpha=alpha or 1) if name == "efx" else ef1_violations(inst, x)
        bad = {v.agent for v in vs}
        return {"holds": not vs, "agents": [i not in bad for i in range(n)], "violations": _violations_out(vs)}
    if name in ("prop1", "propm", "propx"):
        fn = {"prop1": prop1_satisfied, "propm": propm_satisfied, "propx": propx_satisfied}[name]
        flags = [fn(inst, x, i) for i in range(n)]
        return {"holds": all(flags), "agents": flags}
    if name == "mms":
        a = alpha if alpha is not None else Fraction(1)
        shares = [mms_value(inst, i)[0] for i in range(n)]
        flags = [inst.valuations[i].value(x[i]) >= a * shares[i] for i in range(n)]
        assert all(flags) == is_alpha_mms(inst, x, a)
        return {"holds": all(flags), "alpha": docs.fmt_value(a), "agents": flags,
                "mms_values": [docs.fmt_value(s) for s in shares]}
    # epistemic notions
    flags, witnesses, method = [], [], []
    for i in range(n):
        if name == "eefx" and i in certs and alpha is None:
            ok = verify_certificate(inst, x, certs[i], i)
            flags.append(ok)
            witnesses.append(docs.bundles_out(certs[i]) if ok else None)
            method.append("certificate")
            continue
        if name == "eefx":
            ok, y = is_eefx_satisfied_bruteforce(inst, x, i, budget, alpha or 1)
        else:
            ok, y = is_eef1_satisfied_bruteforce(inst, x, i, budget)
        flags.append(ok)
        witnesses.append(docs.bundles_out(y) if ok else None)
        method.append("oracle")
    return {"holds": all(flags), "agents": flags, "method": method, "witnesses": witnesses}


def cmd_check(args) -> int:
    inst = docs.parse_instance(docs.read(args.instance))
    x = docs.parse_allocation(docs.read(args.allocation), inst)
    certs = docs.parse_certificates(docs.read(args.certificates), inst) if args.certificates else {}
    budget = SearchBudget.from_env()
    results = {}
    for name, alpha in _parse_notions(args.notions):
        key = name if alpha is None else f"{name}:{docs.fmt_value(alpha)}"
        results[key] = _check_notion(inst, x, name, alpha, certs, budget)
    holds = all(r["holds"] for r in results.values())
    _emit({"allocation": docs.bundles_out(x), "holds": holds, "notions": results})
    return EXIT_OK if holds else EXIT_FAILS


# -- certify -----------------------------------------------------------------

def cmd_certify(args) -> int:
    inst = docs.parse_instance(docs.read(args.instance))
    raw = docs.read(args.allocation)
    x = docs.parse_allocation(raw, inst)
    agents = range(inst.n) if args.agent is None else [args.agent - 1]
    if args.agent is not None and not 1 <= args.agent <= inst.n:
        raise ValidationError(f"--agent must lie in 1..{inst.n}")
    out = []
    if args.method == "pipeline":
        x_prime = docs.parse_stage1(raw, inst)
        if x_prime is None:
            raise PreconditionError("pipeline method needs the stage-one allocation ('stage1' key, as written by solve)")
        ordered, _ = ordered_instance(inst)
        if efx_violations(ordered, x_prime):
            raise PreconditionError("stage1 is not EFX for the ordered instance")
        if pick_by_list(allocation_vector(x_prime), inst.valuations) != x:
            raise PreconditionError("allocation is not the picking-sequence image of stage1")
        for i in agents:
            out.append(eefx_certificate(x, x_prime, i, inst.valuations, inst.kind))
    else:
        for i in agents:
            v = inst.valuations[i]
            if inst.kind == "goods" and not is_strongly_monotone(v):
                raise PreconditionError(
                    f"agent {i + 1}'s valuation is not strongly monotone; MMS allocations need not be EEFX then"
                )
            share, _ = mms_value(inst, i)
            if inst.kind == "goods" and v.value(x[i]) < share:
                raise PreconditionError(f"agent {i + 1} gets {v.value(x[i])}, below the maximin share {share}")
            out.append(mms_to_eefx_certificate(inst, x, i))
    for cert in out:
        if not verify_certificate(inst, x, cert.witness, cert.agent):
            raise VerificationError(f"certificate for agent {cert.agent + 1} failed verification")
    _emit({"method": args.method, "allocation": docs.bundles_out(x),
           "certificates": [docs.certificate_out(c) for c in out]})
    return EXIT_OK


# -- gen ---------------------------------------------------------------------

def generate(agents: int, items: int, kind: str = "goods", max_value: int = 20, seed: int = 0,
             ordered: bool = False, alpha: Optional[Fraction] = None) -> dict:
    """Random instance document; all randomness comes from one seeded generator."""
    if agents < 1 or items < 0 or max_value < 1:
        raise ValidationError("need agents >= 1, items >= 0, max-value >= 1")
    rng = random.Random(seed)
    extra = {}
    if alpha is None:
        rows = [[Fraction(rng.randint(0, max_value)) for _ in range(items)] for _ in range(agents)]
    else:
        if not 0 < alpha <= 1:
            raise ValidationError("--alpha-correlated needs 0 < alpha <= 1")
        # multiplicative noise in [r, 1] around a shared base keeps every
        # ratio within r**2 = alpha of the base ordering
        grain = 100
        r = Fraction(math.sqrt(alpha)).limit_denominator(grain)
        lo = max(1, math.ceil(r * grain))
        base = [rng.randint(1, max_value) for _ in range(items)]
        rows = [[b * Fraction(rng.randint(lo, grain), grain) for b in base] for _ in range(agents)]
    if kind == "chores":
        rows = [[-x for x in row] for row in rows]
    if ordered:
        rows = [sorted(row, reverse=True) for row in rows]
    inst = Instance([AdditiveValuation(row) for row in rows], kind)
    if alpha is not None:
        target = inst.valuations if kind == "goods" else inst.disutilities
        achieved = correlation(target)[0]
        extra["alpha"] = docs.fmt_value(achieved)
        extra["comment"] = (
            f"requested alpha {docs.fmt_value(alpha)}; achieved max correlation "
            f"{docs.fmt_value(achieved)} of the {'values' if kind == 'goods' else 'disutilities'}"
        )
    return docs.dump_instance(inst, **extra)


def cmd_gen(args) -> int:
    alpha = to_value(args.alpha_correlated) if args.alpha_correlated is not None else None
    _emit(generate(args.agents, args.items, args.kind, args.max_value, args.seed, args.ordered, alpha))
    return EXIT_OK


# -- oracle ------------------------------------------------------------------

def cmd_oracle(args) -> int:
    inst = docs.parse_instance(docs.read(args.instance))
    budget = SearchBudget.from_env()
    if args.question == "efx-exists":
        x = find_efx_allocation(inst, budget)
        _emit({"question": "efx-exists", "verdict": x is not None,
               "witness": None if x is None else docs.bundles_out(x)})
        return EXIT_OK if x is not None else EXIT_FAILS
    if args.allocation is None:
        raise ValidationError(f"--question {args.question} needs an allocation file")
    x = docs.parse_allocation(docs.read(args.allocation), inst)
    search = is_eefx_satisfied_bruteforce if args.question == "eefx" else is_eef1_satisfied_bruteforce
    per_agent = []
    for i in range(inst.n):
        ok, y = search(inst, x, i, budget)
        per_agent.append({"agent": i + 1, "satisfied": ok, "witness": None if y is None else docs.bundles_out(y)})
    verdict = all(a["satisfied"] for a in per_agent)
    _emit({"question": args.question, "verdict": verdict, "agents": per_agent})
    return EXIT_OK if verdict else EXIT_FAILS


# -- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fairdiv", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="compute an EEFX allocation")
    s.add_argument("instance", nargs="+")
    s.add_argument("--certificates", action="store_true", help="attach a verified certificate per agent")
    s.add_argument("--report", action="store_true", help="attach the fairness report")
    s.add_argument("--jobs", type=int, default=1, help="solve several files in parallel")
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("check", help="check fairness notions of an allocation")
    c.add_argument("instance")
    c.add_argument("allocation")
    c.add_argument("--notions", default="efx,ef1",
                   help="comma list of efx[:a], ef1, eefx[:a], eef1, prop1, propm, propx, mms[:a]")
    c.add_argument("--certificates", help="file with certificates used for eefx instead of the oracle")
    c.set_defaults(func=cmd_check)

    r = sub.add_parser("certify", help="build EEFX certificates for an allocation")
    r.add_argument("instance")
    r.add_argument("allocation")
    r.add_argument("--agent", type=int, help="1-indexed agent (default: all)")
    r.add_argument("--method", choices=("pipeline", "mms"), default="pipeline")
    r.set_defaults(func=cmd_certify)

    g = sub.add_parser("gen", help="generate a random instance")
    g.add_argument("--agents", type=int, required=True)
    g.add_argument("--items", type=int, required=True)
    g.add_argument("--kind", choices=("goods", "chores"), default="goods")
    g.add_argument("--max-value", type=int, default=20)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--ordered", action="store_true")
    g.add_argument("--alpha-correlated", metavar="ALPHA")
    g.set_defaults(func=cmd_gen)

    o = sub.add_parser("oracle", help="exhaustive ground-truth queries")
    o.add_argument("instance")
    o.add_argument("allocation", nargs="?")
    o.add_argument("--question", choices=("eefx", "eef1", "efx-exists"), required=True)
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"fairdiv: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BudgetExceeded as exc:
        print(f"fairdiv: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except PreconditionError as exc:
        print(f"fairdiv: precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except VerificationError as exc:
        print(f"fairdiv: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except ValueError as exc:
        print(f"fairdiv: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
