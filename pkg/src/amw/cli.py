"""Command-line entry point: ``amw check|test|testgen|refactor|generate|fmt``.

Exit codes: 0 success, 1 diagnostics or failing tests, 2 usage errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import codegen, refactor, testgen
from . import model as m
from .check import check_wellformed
from .diagnostics import AmwError, ParseError
from .lexer import tokenize
from .parser import parse_literal as literal_of
from .project import atomic_write, generated_file, load_project, planned_texts, write_model
from .testkit import run_suite


class UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _ArgumentParser(prog="amw", description="Agile model workbench")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    c = sub.add_parser("check", help="parse and check a project")
    c.add_argument("dir")

    t = sub.add_parser("test", help="run the test suite")
    t.add_argument("dir")
    t.add_argument("--category", action="append", choices=["unit", "integration", "acceptance"])
    t.add_argument("--filter", dest="pattern")
    t.add_argument("--report")

    g = sub.add_parser("testgen", help="derive tests from a statechart")
    g.add_argument("dir")
    g.add_argument("--chart", required=True)
    g.add_argument("--coverage", required=True, choices=["state", "transition", "path"])
    g.add_argument("--k", type=int, default=testgen.DEFAULT_K)
    g.add_argument("--int-bound", type=int, default=testgen.DEFAULT_BOUND)
    g.add_argument("--seed", help="object configuration to start from")

    r = sub.add_parser("refactor", help="apply a catalog transformation")
    r.add_argument("dir")
    r.add_argument("--rule", required=True)
    r.add_argument("--args", required=True, help="comma-separated rule parameters")
    r.add_argument("--default", help="literal value for added attributes")
    r.add_argument("--clone", help="comma-separated literal values for cloned tests")
    r.add_argument("--allow-published", action="store_true")
    r.add_argument("--dry-run", action="store_true")
    r.add_argument("--verify", action="store_true")

    gen = sub.add_parser("generate", help="render a template")
    gen.add_argument("dir")
    gen.add_argument("--template", required=True)
    gen.add_argument("--out")

    f = sub.add_parser("fmt", help="reprint all model files canonically")
    f.add_argument("dir")
    return p


def parse_literal(text: str):
    """A command-line literal: Int, true/false, or a string (quoted or bare)."""
    tokens, diags = tokenize(text)
    if not diags:
        lit = literal_of(text)
        if lit is not None:
            return lit
    if text == "{}":
        return m.SetValue([])
    return m.Lit(text)


def _split_values(text: str) -> list:
    return [parse_literal(v.strip()) for v in text.split(",")] if text else []


def _print_diags(diags, out):
    for d in diags:
        print(d.render(), file=out)


def cmd_check(args, out, err) -> int:
    project = load_project(args.dir)
    diags = check_wellformed(project.model)
    _print_diags(diags, out)
    return 1 if any(d.severity == "error" for d in diags) else 0


def _checked(args, out):
    project = load_project(args.dir)
    diags = check_wellformed(project.model)
    if diags:
        _print_diags(diags, out)
        return project, False
    return project, True


def cmd_test(args, out, err) -> int:
    project, ok = _checked(args, out)
    if not ok:
        return 1
    report = run_suite(project.model, args.category, args.pattern)
    out.write(report.render_text(project.model))
    if args.report:
        atomic_write(Path(args.report), report.render_lines())
    return 0 if report.all_passed else 1


def cmd_testgen(args, out, err) -> int:
    project, ok = _checked(args, out)
    if not ok:
        return 1
    model = project.model
    chart = model.chart_of(args.chart)
    if chart is None:
        raise UsageError(f"no statechart for class '{args.chart}'")
    seed = None
    if args.seed:
        seed = model.config(args.seed)
        if seed is None:
            raise UsageError(f"no object configuration '{args.seed}'")
    # earlier output for this chart is about to be replaced, so it must not feed the derivation
    filename = generated_file(chart.owner)
    base = project.model
    base.tests = [t for t in base.tests if t.source != filename]
    base.sequences = [x for x in base.sequences if x.source != filename]
    base.configs = [c for c in base.configs if c.source != filename or c is seed]
    goal = testgen.CoverageGoal(args.coverage, args.k)
    derivation = testgen.derive(base, chart, goal, seed=seed, int_bound=args.int_bound)
    target = project.root / filename
    existing = target.read_text(encoding="utf-8") if target.exists() else None
    atomic_write(target, testgen.splice_generated(existing, derivation.text, chart.owner))
    covered = sum(1 for t in derivation.tests if t.coverable)
    print(f"GENERATED {covered} test(s) for {chart.owner} ({args.coverage} coverage) in {filename}",
          file=out)
    for t in derivation.tests:
        if not t.coverable:
            print(f"UNCOVERABLE {t.name} {t.reason}", file=out)
    if derivation.graph.exploded:
        print(f"WARNING E_EXPLOSION exploration stopped at {testgen.NODE_CAP} nodes", file=out)
    return 0


def cmd_refactor(args, out, err) -> int:
    project, ok = _checked(args, out)
    if not ok:
        return 1
    params = [a.strip() for a in args.args.split(",")] if args.args else []
    request = refactor.RefactoringRequest.from_args(
        args.rule, params,
        default=parse_literal(args.default) if args.default is not None else None,
        clone_values=_split_values(args.clone),
        allow_published=args.allow_published,
    )
    report = refactor.apply(project.model, request, verify=args.verify)
    out.write(report.render())
    if not report.applied:
        return 1
    if args.dry_run:
        for path in sorted(planned_texts(project, report.model_after)):
            print(f"WOULD-WRITE {path}", file=out)
    else:
        for path in write_model(project, report.model_after):
            print(f"WROTE {path}", file=out)
    if args.verify and not report.preservation.preserved:
        return 1
    return 0


def cmd_generate(args, out, err) -> int:
    project, ok = _checked(args, out)
    if not ok:
        return 1
    template = codegen.find_template(project.root, args.template)
    output = codegen.render(project.model, template)
    dest = Path(args.out) if args.out else project.root / "gen" / template.name
    for rel, text in output.files:
        atomic_write(dest / rel, text)
        print(f"WROTE {(dest / rel).as_posix()}", file=out)
    return 0


def cmd_fmt(args, out, err) -> int:
    project = load_project(args.dir)
    for path in write_model(project, project.model):
        print(f"FORMATTED {path}", file=out)
    return 0


COMMANDS = {
    "check": cmd_check,
    "test": cmd_test,
    "testgen": cmd_testgen,
    "refactor": cmd_refactor,
    "generate": cmd_generate,
    "fmt": cmd_fmt,
}


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if not Path(args.dir).exists():
            raise UsageError(f"no such project: {args.dir}")
        return COMMANDS[args.command](args, out, err)
    except UsageError as exc:
        print(f"amw: error: {exc}", file=err)
        return 2
    except ParseError as exc:
        _print_diags(exc.diagnostics, out)
        return 1
    except (refactor.RefactorError, codegen.TemplateError) as exc:
        print(f"amw: error: {exc}", file=err)
        return 2 if exc.code in ("E_UNKNOWN_RULE", "E_BAD_ARGS") else 1
    except AmwError as exc:
        print(f"amw: error: {exc}", file=err)
        return 1


if __name__ == "__main__":
    sys.exit(main())
