"""``taucalc`` command line: file in, file out.

Exit codes: 0 success, 1 a check failed, 2 bad input.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import io as tio
from .algebra import GroupMismatch, PhiDensity, involution_tau, lconv, lift_phi, norm, rconv, standard_conv_G, tconv, tilde
from .groups import StructureError

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

BINARY = {"rconv": rconv, "lconv": lconv, "tconv": tconv, "standard": standard_conv_G}
UNARY = ("involution", "tilde")
OPS = (*BINARY, *UNARY, "lift", "module-action")


class _Fail(Exception):
    """Input problem; carries the exit code 2 path."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


def _group(path):
    try:
        return tio.load_group(path)
    except tio.InputError as e:
        raise _Fail(str(e), e.witness) from None


def _function(path, G, backend):
    try:
        return tio.load_function(path, G, backend)
    except tio.InputError as e:
        raise _Fail(str(e), e.witness) from None


def _fmt_norm(x):
    return str(x)


# ------------------------------------------------------------------ commands
def cmd_group_build(a):
    spec = {"format": tio.FORMAT, "H": _spec_arg(a.H), "K": _spec_arg(a.K), "tau": {"kind": a.tau}}
    if a.tau == "conjugation":
        if a.by is None:
            raise _Fail("--tau conjugation needs --by")
        spec["tau"]["by"] = a.by
    if a.tau == "table":
        if a.perm is None:
            raise _Fail("--tau table needs --perm")
        spec["tau"]["perm"] = _json_arg(a.perm, "--perm")
    if a.label:
        spec["label"] = a.label
    try:
        G = tio.group_from_spec(spec)
    except tio.InputError as e:
        raise _Fail(str(e), e.witness) from None
    tio.write_json_atomic(a.out, spec)
    print(f"group {G.label or ''} |H|={G.H.order} |K|={G.K.order} order={G.order} -> {a.out}")
    return EXIT_OK


def _spec_arg(s):
    s = s.strip()
    return _json_arg(s, "group") if s.startswith("{") else s


def _json_arg(s, what):
    try:
        return json.loads(s)
    except json.JSONDecodeError as e:
        raise _Fail(f"{what}: invalid JSON ({e})") from None


def cmd_group_validate(a):
    G, _ = _group(a.group)
    print(json.dumps({"ok": True, "label": G.label, "H": G.H.order, "K": G.K.order, "order": G.order,
                      "abelian_K": G.K.is_abelian, "h_trivial": G.h_trivial}, sort_keys=True))
    return EXIT_OK


def cmd_convolve(a):
    G, _ = _group(a.group)
    backend = a.backend
    binary = a.op in BINARY or a.op in ("lift", "module-action")
    if binary and a.g is None:
        raise _Fail(f"--op {a.op} takes two operands; pass --g")
    if not binary and a.g is not None:
        raise _Fail(f"--op {a.op} takes one operand; drop --g")
    if a.p is not None and a.op != "module-action":
        raise _Fail("--p only applies to --op module-action")
    f = _function(a.f, G, backend)
    g = _function(a.g, G, backend) if a.g is not None else None
    kinds = {"lift": ("G", "K")}.get(a.op, ("G", "G"))
    for x, want, name in ((f, kinds[0], "f"), (g, kinds[1], "g")):
        if x is not None and _kind(x) != want:
            raise _Fail(f"--op {a.op} needs a {want}-function for --{name}")
    p = 1 if a.p is None else a.p
    extra = {}
    try:
        if a.op in BINARY:
            out = BINARY[a.op](f, g)
        elif a.op == "involution":
            out = involution_tau(f)
        elif a.op == "tilde":
            out = tilde(f)
        elif a.op == "lift":
            out = lift_phi(PhiDensity(f), g)
        else:
            from .lp_module import LpElement, module_action

            p = _parse_p(p)
            out = module_action(f, LpElement(g, p)).u
            extra["p"] = "inf" if p == float("inf") else p
    except (ValueError, GroupMismatch) as e:
        raise _Fail(str(e)) from None
    q = extra.get("p", 1)
    q = float("inf") if q == "inf" else q
    print(f"||f||_1 = {_fmt_norm(norm(f, 1))}")
    if g is not None:
        print(f"||g||_{q} = {_fmt_norm(norm(g, q if a.op == 'module-action' else 1))}")
    print(f"||out||_{q} = {_fmt_norm(norm(out, q))}")
    tio.write_json_atomic(a.out, tio.function_to_dict(out, str(a.group), op=a.op, **extra))
    return EXIT_OK


def _parse_p(p):
    p = float(p)
    if p != float("inf") and p < 1:
        raise _Fail("--p must be >= 1 or inf")
    return int(p) if p.is_integer() else p


def _kind(x):
    from .algebra import GFunction

    return "G" if isinstance(x, GFunction) else "K"


def cmd_verify(a):
    from .algebra import inject_sign_fault
    from .verify import run_suite

    G, _ = _group(a.group)
    if a.trials < 1:
        raise _Fail("--trials must be positive")
    if a.backend == "exact" and not G.haar.is_unit:
        raise _Fail("the exact backend needs unit Haar weights")
    if a.inject_fault:
        with inject_sign_fault():
            report = run_suite(G, seed=a.seed, trials=a.trials, backend=a.backend)
    else:
        report = run_suite(G, seed=a.seed, trials=a.trials, backend=a.backend)
    if a.report:
        _write_witnesses(report, Path(a.report))
        tio.write_json_atomic(a.report, report.to_dict(timing=a.timing))
    for c in report.checks:
        print(f"{c.check_id:32s} {c.verdict}")
    print(f"exit {report.exit_status}")
    return report.exit_status


def _write_witnesses(report, path):
    """One function file per witness, beside the report; paths are stored relative to it."""
    from .algebra import GFunction, KFunction

    wdir = path.parent / f"{path.stem}.witnesses"
    for c in report.checks:
        if not c.witness:
            continue
        funcs = {k: v for k, v in c.witness.items() if isinstance(v, (GFunction, KFunction))}
        if not funcs:
            continue
        doc = {"format": tio.FORMAT, "check_id": c.check_id,
               "functions": {k: tio.function_to_dict(v) for k, v in funcs.items()},
               "info": {k: v for k, v in c.witness.items() if k not in funcs}}
        target = wdir / f"{c.check_id}.json"
        tio.write_json_atomic(target, doc)
        c.witness_path = str(target.relative_to(path.parent))


def _sizes(s):
    out = []
    for tok in s.replace(" ", "").split(","):
        h, sep, k = tok.lower().partition("x")
        if not sep or not h.isdigit() or not k.isdigit() or int(h) < 1 or int(k) < 1:
            raise _Fail(f"bad size {tok!r}; expected HxK, e.g. 2x4096")
        out.append((int(h), int(k)))
    return out


def cmd_bench(a):
    from .spectral import bench, bench_csv

    sizes = _sizes(a.sizes)
    if a.reps < 11:
        raise _Fail("--reps must be at least 11")
    rows = bench(sizes, reps=a.reps, seed=a.seed)
    text = bench_csv(rows)
    tio.write_text_atomic(a.out, text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_continuum(a):
    from .continuum import GridSpec, refinement_study

    if a.grid:
        d = tio.load_json(a.grid) if Path(a.grid).exists() else None
        if d is None:
            raise _Fail(f"cannot read {a.grid}")
        try:
            grid = GridSpec.from_dict(d)
        except (KeyError, TypeError, ValueError) as e:
            raise _Fail(f"bad grid spec: {e}") from None
    else:
        grid = GridSpec.window()
    try:
        study = refinement_study(grid, levels=a.levels, tol=a.tol)
    except ValueError as e:
        raise _Fail(str(e)) from None
    doc = {"format": tio.FORMAT, "grid": grid.to_dict(), **study}
    if a.report:
        tio.write_json_atomic(a.report, doc)
    for k, v in study["checks"].items():
        print(f"{k:24s} {'pass' if v else 'fail'}")
    print(study["verdict"])
    return EXIT_OK if study["verdict"] == "consistent" else EXIT_FAIL


# --------------------------------------------------------------------- parser
def build_parser():
    ap = argparse.ArgumentParser(prog="taucalc", description="tau-convolution calculus on semidirect products")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("group-build", help="write a validated group spec")
    p.add_argument("--H", default="trivial", help='e.g. "cyclic:2" or a JSON spec')
    p.add_argument("--K", required=True, help='e.g. "symmetric:3" or a JSON spec')
    p.add_argument("--tau", default="trivial", choices=("trivial", "inversion", "conjugation", "table"))
    p.add_argument("--by", type=int, help="K element for --tau conjugation")
    p.add_argument("--perm", help="JSON list of permutations for --tau table")
    p.add_argument("--label")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_group_build)

    p = sub.add_parser("group-validate", help="validate a group spec file")
    p.add_argument("--group", required=True)
    p.set_defaults(func=cmd_group_validate)

    p = sub.add_parser("convolve", help="apply one operation to function files")
    p.add_argument("--group", required=True)
    p.add_argument("--f", required=True)
    p.add_argument("--g")
    p.add_argument("--op", required=True, choices=OPS)
    p.add_argument("--p", help="exponent for module-action (>= 1 or inf)")
    p.add_argument("--backend", choices=("exact", "float"))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_convolve)

    p = sub.add_parser("verify", help="run the 16-check suite")
    p.add_argument("--group", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--backend", default="exact", choices=("exact", "float"))
    p.add_argument("--report")
    p.add_argument("--timing", action="store_true", help="include per-check seconds (breaks byte-for-byte reruns)")
    p.add_argument("--inject-fault", action="store_true", help="flip one sign inside the K-convolution")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="time naive, DFT and standard convolutions")
    p.add_argument("--sizes", required=True, help='comma list like "2x4096,4x256"')
    p.add_argument("--reps", type=int, default=11)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("continuum", help="grid refinement study on the affine model")
    p.add_argument("--grid")
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--report")
    p.set_defaults(func=cmd_continuum)
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK
    try:
        return a.func(a)
    except (_Fail, tio.InputError) as e:
        print(f"error: {e}", file=sys.stderr)
        if getattr(e, "witness", None) is not None:
            print(json.dumps({"witness": e.witness}, sort_keys=True), file=sys.stderr)
        return EXIT_INPUT
    except StructureError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
