"""Command-line front end.

Subcommands: scan (admissible levels below a bound), check (one level
candidate in full), deform (run the criterion pipeline on a model file),
selfcheck (convention suites).

Exit codes: 0 success, 1 condition/suite failure, 2 invalid input,
3 pipeline precondition failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import arith
from .deform import DeformationContext, PipelineError, main_criterion
from .model import GroupModel, ModelFormatError, ModelValidationError


def _fmt_weighted(d):
    if d is None:
        return "-"
    return f"{d['value']} (weight {d['weight']})"


def cmd_scan(args) -> int:
    try:
        cands = arith.scan_levels(args.p, args.l0, args.max_l1)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    rows = [c.to_dict() for c in cands]
    if args.json:
        print(json.dumps({"log_convention": "least primitive root -> 1",
                          "candidates": rows}))
        return 0
    merel = rows[0]["merel_value"] if rows else arith.merel_number(args.p, args.l0)
    print(f"# p={args.p} ell0={args.l0} max_ell1={args.max_l1}")
    print(f"# merel number = {merel} (least-primitive-root log convention)")
    print("ell1  cond2  merel_nonzero  tame_at_p  admissible")
    for r in rows:
        print(f"{r['ell1']:>5}  {str(r['cond2']):5}  {str(r['merel_nonzero']):13}"
              f"  {str(r['tame_at_p']):9}  {str(r['cond1'] and r['cond2'] and r['merel_nonzero'])}")
    return 0


def cmd_check(args) -> int:
    try:
        cand = arith.check_level(args.p, args.l0, args.l1)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.json:
        print(json.dumps(cand.to_dict()))
    else:
        d = cand.to_dict()
        print(f"p={d['p']} ell0={d['ell0']} ell1={d['ell1']}")
        print(f"cond1 (ell0 = 1 mod p):        {d['cond1']}")
        print(f"cond2 (residue + p-th power):  {d['cond2']}")
        print(f"merel number:                  {d['merel_value']} "
              f"(nonzero: {d['merel_nonzero']})")
        print(f"tame at p:                     {d['tame_at_p']}")
        print(f"admissible:                    {cand.admissible()}")
    return 0 if cand.admissible() else 1


def cmd_deform(args) -> int:
    try:
        model = GroupModel.load(args.model)
    except (ModelFormatError, ModelValidationError, OSError) as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return 2
    try:
        ctx = DeformationContext.from_model(model)
        report = main_criterion(ctx)
    except PipelineError as exc:
        print(f"pipeline error: {exc}", file=sys.stderr)
        return 3
    d = report.to_dict()
    if args.json:
        print(json.dumps(d))
    else:
        print(f"a1 at ell1 Frobenius:  {d['a1_at_ell1']} (weight 0)")
        print(f"alpha:                 {_fmt_weighted(d['alpha'])}")
        print(f"beta:                  {_fmt_weighted(d['beta'])}")
        print(f"alpha^2 + beta:        {_fmt_weighted(d['alpha_sq_plus_beta'])}")
        print(f"dimension exceeds 3:   {d['dim_exceeds_three']}")
        print(f"stages:                {d['stage_log']}")
    return 0


def cmd_selfcheck(args) -> int:
    from .selfcheck import run_selfcheck

    results = run_selfcheck()
    for res in results:
        status = "ok" if res.passed else "FAIL"
        detail = f"  [{res.detail}]" if res.detail else ""
        print(f"{res.name:24} {status}{detail}")
    failed = [r for r in results if not r.passed]
    if failed:
        print(f"selfcheck failed: {failed[0].name}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="pseudodeform",
        description="Level criteria and the second-order deformation pipeline "
                    "on finite group models",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p_scan = sub.add_parser("scan", help="scan candidate levels")
    p_scan.add_argument("--p", type=int, required=True)
    p_scan.add_argument("--l0", type=int, required=True)
    p_scan.add_argument("--max-l1", type=int, required=True, dest="max_l1")
    p_scan.add_argument("--json", action="store_true")
    p_scan.set_defaults(fn=cmd_scan)

    p_check = sub.add_parser("check", help="check one level candidate")
    p_check.add_argument("--p", type=int, required=True)
    p_check.add_argument("--l0", type=int, required=True)
    p_check.add_argument("--l1", type=int, required=True)
    p_check.add_argument("--json", action="store_true")
    p_check.set_defaults(fn=cmd_check)

    p_def = sub.add_parser("deform", help="run the pipeline on a model file")
    p_def.add_argument("--model", required=True)
    p_def.add_argument("--json", action="store_true")
    p_def.set_defaults(fn=cmd_deform)

    p_self = sub.add_parser("selfcheck", help="run convention self-tests")
    p_self.set_defaults(fn=cmd_selfcheck)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
