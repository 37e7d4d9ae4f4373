"""Command line entry point ``nlmotion``.

Verbs::

    nlmotion list                      models, families, bundled scenarios
    nlmotion run <config> [--out DIR]  one scenario; exit 0 iff its checks pass
    nlmotion check [--jobs N]          every bundled scenario
    nlmotion verify <summary.json>     re-decide a stored summary

Exit status: 0 success, 1 failed check or unexpected blow-up, 2 bad config.
The output directory is ``--out``, else ``$NLMOTION_OUTPUT_DIR``, else
``./nlmotion-out``.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .errors import ConfigError
from .families import FAMILY_IDS
from .models import PRESETS
from .scenario import ANALYSES, bundled_scenarios, decide, load_scenario, output_dir, run, summary_passed, write_outputs

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _report(summary: dict, stream) -> None:
    verdict = "PASS" if summary["passed"] else "FAIL"
    print(f"[{verdict}] {summary['scenario']}: status={summary['status']} "
          f"samples={summary['n_samples']}", file=stream)
    for c in summary["checks"]:
        mark = "ok" if c["passed"] else ("FAIL" if c.get("asserted", True) else "warn")
        tol = "" if c["op"] == "true" else f" {'<=' if c['op'] == 'le' else '>='} {c['tolerance']:g}"
        val = c["value"] if isinstance(c["value"], (bool, str)) or c["value"] is None else f"{c['value']:.3e}"
        print(f"    {mark:4s} {c['name']}: {val}{tol}", file=stream)
    for w in summary.get("warnings", []):
        print(f"    warning: {w}", file=stream)


def _run_one(path: str, out: str) -> tuple:
    """Run one config; returns ``(exit_code, summary or None, message)``."""
    try:
        sc = load_scenario(path)
        res = run(sc)
    except ConfigError as exc:
        return EXIT_CONFIG, None, f"{path}: {exc}"
    write_outputs(res, out)
    return res.exit_code, res.summary, ""


def cmd_run(args) -> int:
    code, summary, msg = _run_one(args.config, str(output_dir(args.out)))
    if summary is None:
        print(f"error: {msg}", file=sys.stderr)
        return code
    if not args.quiet:
        _report(summary, sys.stdout)
    failed = [c for c in summary["checks"] if c.get("asserted", True) and not c["passed"]]
    if failed:
        c = failed[0]
        print(f"first failure: {c['name']} = {c['value']!r} {c['note']}".rstrip(), file=sys.stderr)
    return code


def cmd_check(args) -> int:
    paths = [str(p) for p in bundled_scenarios()]
    out = str(output_dir(args.out))
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, paths, [out] * len(paths)))
    else:
        results = [_run_one(p, out) for p in paths]
    worst = EXIT_OK
    for path, (code, summary, msg) in zip(paths, results):
        if summary is None:
            print(f"error: {msg}", file=sys.stderr)
        elif not args.quiet:
            _report(summary, sys.stdout)
        worst = max(worst, code)
    n_pass = sum(1 for code, _, _ in results if code == EXIT_OK)
    print(f"{n_pass}/{len(results)} scenarios passed")
    return worst


def cmd_verify(args) -> int:
    try:
        summary = json.loads(Path(args.summary).read_text())
        stored = [c["passed"] for c in summary["checks"]]
        again = [decide(c) for c in summary["checks"]]
        overall = summary_passed(summary)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: cannot read summary: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if stored != again or overall != summary["passed"]:
        print("summary decisions do not reproduce", file=sys.stderr)
        return EXIT_FAIL
    print(f"{summary['scenario']}: {'PASS' if overall else 'FAIL'} (reproduced)")
    return EXIT_OK if overall else EXIT_FAIL


def cmd_list(args) -> int:
    print("models:")
    for p in PRESETS.values():
        print(f"  {p.id:12s} {p.description} [{p.reference}]")
    print("families:")
    for fid, desc in FAMILY_IDS.items():
        print(f"  {fid:12s} {desc}")
    print("analyses:")
    for name in ANALYSES:
        print(f"  {name}")
    print("scenarios:")
    for path in bundled_scenarios():
        try:
            sc = load_scenario(path)
        except ConfigError as exc:
            print(f"  {path.stem:24s} (invalid: {exc})")
            continue
        print(f"  {sc.id:24s} {sc.description}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nlmotion", description="Nonlocal constants of motion: scenario runner.")
    ap.add_argument("--seed", type=int, default=None,
                    help="reserved; every bundled computation is deterministic")
    sub = ap.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("run", help="run one scenario config")
    p.add_argument("config")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("-q", "--quiet", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("check", help="run every bundled scenario")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("-q", "--quiet", action="store_true")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("verify", help="re-decide the checks stored in a summary JSON")
    p.add_argument("summary")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("list", help="list models, families, analyses and scenarios")
    p.set_defaults(func=cmd_list)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
