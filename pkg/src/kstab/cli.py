"""Command line entry point.

Exit status: 0 when no scenario mismatches, 1 on any mismatch, 2 on usage or
schema errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .git import TorusAction, annotation, classify
from .scenario import Report, ScenarioError, load_file, run_all, verify_all


def _emit(report: Report, fmt: str, out=None) -> None:
    text = report.to_json() if fmt == "json" else report.render_table()
    (out or sys.stdout).write(text)


def _parse_weights(text: str) -> tuple[tuple[int, ...], ...]:
    try:
        return tuple(tuple(int(x) for x in part.split(",")) for part in text.split(";") if part.strip())
    except ValueError:
        raise ScenarioError(f"cannot read weights {text!r}; use e.g. '0,0;1,1;1,-1'") from None


def _parse_support(text: str, names: tuple[str, ...]) -> list:
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        out.append(int(item) if item.lstrip("-").isdigit() else item)
    if not out:
        raise ScenarioError("empty support")
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kstab", description="Exact K-stability computation checks.")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run every scenario of one file")
    run.add_argument("file")
    run.add_argument("--format", choices=("table", "json"), default="table")

    va = sub.add_parser("verify-all", help="run every scenario file in a directory")
    va.add_argument("directory")
    va.add_argument("--jobs", type=int, default=1)
    va.add_argument("--out", help="write the machine-readable results here")
    va.add_argument("--format", choices=("table", "json"), default="table")

    git = sub.add_parser("git", help="torus GIT utilities")
    gsub = git.add_subparsers(dest="git_command", required=True)
    gc = gsub.add_parser("classify", help="classify one support")
    gc.add_argument("--weights", required=True, help="weight vectors separated by ';'")
    gc.add_argument("--support", required=True, help="comma separated indices or names")
    gc.add_argument("--names", help="comma separated coordinate names")

    rep = sub.add_parser("report", help="render a saved results file")
    rep.add_argument("results")
    rep.add_argument("--format", choices=("table", "json"), default="table")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            report = run_all(load_file(args.file))
            _emit(report, args.format)
            return 0 if report.ok else 1
        if args.command == "verify-all":
            if args.jobs < 1:
                raise ScenarioError("--jobs must be at least 1")
            report = verify_all(args.directory, args.jobs)
            if args.out:
                Path(args.out).write_text(report.to_json())
            _emit(report, args.format)
            return 0 if report.ok else 1
        if args.command == "git":
            weights = _parse_weights(args.weights)
            names = tuple(args.names.split(",")) if args.names else tuple(f"x{i}" for i in range(len(weights)))
            action = TorusAction(names, weights)
            support = _parse_support(args.support, names)
            verdict = classify(action, support)
            note = annotation(action, support)
            print(verdict.value + (f" ({note})" if note else ""))
            return 0
        if args.command == "report":
            try:
                data = json.loads(Path(args.results).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ScenarioError(f"{args.results}: {exc}") from None
            report = Report.from_dict(data)
            _emit(report, args.format)
            return 0 if report.ok else 1
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
