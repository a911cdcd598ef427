"""Command-line driver: derive, canonicalize, check, gallery.

Exit codes: 0 pass, 1 non-equivalence, 2 not a good variational principle,
3 usage or parse error.
"""
from __future__ import annotations

import argparse
import sys
from fractions import Fraction

from .biform import format_biform
from .canonical import canonical_split, decompose_theory, momenta
from .dsl import DSLError, parse_theory
from .harness import gallery, gallery_spec, TheorySpec, run_check
from .symbolic import JetOrderError
from .variational import NotGoodVariationalPrinciple, boundary_split, bulk_split

EXIT_OK, EXIT_NOT_EQUAL, EXIT_NOT_GOOD_VP, EXIT_USAGE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="varphase", description="Covariant and canonical symplectic structures of field theories.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, text in (("derive", "print E_I, b_I, Theta and thetabar"),
                       ("canonicalize", "print L, l, the A/B coefficients and the momenta kernels")):
        s = sub.add_parser(name, help=text)
        s.add_argument("source", help="theory file or gallery:NAME")
    s = sub.add_parser("check", help="run the equivalence and invariance campaign")
    s.add_argument("source")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--backend", choices=("exact", "grid", "quadrature"), default="exact")
    s.add_argument("--t0", default="0", help="slice time, a rational such as 1/3")
    s.add_argument("--out", help="write the JSON report here instead of stdout")
    s.add_argument("--timings", action="store_true", help="record wall-clock timings in the report")
    s.add_argument("--workers", type=int, default=None)
    sub.add_parser("gallery", help="list built-in theories")
    return p


def load_spec(source: str) -> TheorySpec:
    if source.startswith("gallery:"):
        try:
            return gallery_spec(source.split(":", 1)[1])
        except KeyError as exc:
            raise UsageError(exc.args[0]) from None
    try:
        with open(source, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {source}: {exc.strerror}") from None
    doc = parse_theory(raw)
    return TheorySpec(doc.theory, doc.source)


def _derive(spec: TheorySpec, out) -> int:
    theory = spec.theory
    namer = theory.namer()
    bulk = bulk_split(theory)
    bnd = boundary_split(theory, bulk)
    print(f"theory {theory.name}  K={theory.K}", file=out)
    for i, e in enumerate(bulk.euler):
        print(f"E[{theory.fields[i]}] = {format_biform(e, namer)}", file=out)
    print(f"Theta = {format_biform(bulk.potential, namer)}", file=out)
    for face in theory.chart.faces:
        for i, b in enumerate(bnd.bval[face.name]):
            print(f"b[{face.name}][{theory.fields[i]}] = {format_biform(b, namer)}", file=out)
        print(f"thetabar[{face.name}] = {format_biform(bnd.potential[face.name], namer)}", file=out)
    return EXIT_OK


def _canonicalize(spec: TheorySpec, out) -> int:
    theory = spec.theory
    ct = decompose_theory(theory)
    namer = ct.namer()
    boundary_split(theory, bulk_split(theory))
    cs = canonical_split(ct)
    print(f"theory {theory.name}  K={cs.K}", file=out)
    print(f"L = {format_biform(ct.bulk, namer)}", file=out)
    for face in theory.chart.faces:
        print(f"l[{face.name}] = {format_biform(ct.boundary[face.name], namer)}", file=out)
    for i, row in enumerate(cs.A):
        for mu, a in enumerate(row):
            print(f"A[{theory.fields[i]}][{mu}] = {format_biform(a, namer)}", file=out)
    for face, rows in cs.B.items():
        for i, row in enumerate(rows):
            for mu, b in enumerate(row):
                print(f"B[{face}][{theory.fields[i]}][{mu}] = {format_biform(b, namer)}", file=out)
    for mu in range(1, cs.K + 1):
        p = momenta(cs, mu)
        for i, kernel in enumerate(p.bulk):
            print(f"p({mu})[{theory.fields[i]}] = {format_biform(kernel, namer)}", file=out)
        for face, kernels in p.boundary.items():
            for i, kernel in enumerate(kernels):
                print(f"p({mu})[{face}][{theory.fields[i]}] = {format_biform(kernel, namer)}", file=out)
    return EXIT_OK


def _check(spec: TheorySpec, args, out) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be a positive integer")
    try:
        t0 = Fraction(args.t0)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"--t0 expects a rational, got {args.t0!r}") from None
    try:
        report = run_check(spec, args.seed, args.trials, args.backend, t0, args.timings, args.workers)
    except ValueError as exc:
        if isinstance(exc, DSLError):
            raise
        raise UsageError(str(exc)) from None
    text = report.to_json()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        out.write(text)
    return EXIT_OK if report.passed else EXIT_NOT_EQUAL


def _gallery(out) -> int:
    for name, spec in gallery().items():
        extra = f"  solutions={spec.solution_family}" if spec.solution_family else ""
        print(f"{name}  K={spec.expected_K}  fields={','.join(spec.theory.fields)}{extra}", file=out)
    return EXIT_OK


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = _build_parser().parse_args(argv)
        if args.command == "gallery":
            return _gallery(out)
        spec = load_spec(args.source)
        if args.command == "derive":
            return _derive(spec, out)
        if args.command == "canonicalize":
            return _canonicalize(spec, out)
        return _check(spec, args, out)
    except NotGoodVariationalPrinciple as exc:
        print(f"not a good variational principle: {exc}", file=err)
        return EXIT_NOT_GOOD_VP
    except (UsageError, DSLError, JetOrderError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
