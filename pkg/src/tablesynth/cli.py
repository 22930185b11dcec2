"""Command line front end.

``tablesynth solve problem.json`` searches for a program and prints it;
``tablesynth bench`` runs a problem set across pruning modes and emits
a CSV of the counters.  Exit codes: 0 solved, 2 search exhausted,
3 timed out, 1 bad input.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Optional

from .dsl import program_to_dsl, program_to_r
from .problems import Problem, ProblemError, load_problem
from .specs import SpecParseError, SpecSet, load_builtin_specs, load_spec_file
from .synthesizer import (
    SearchConfig,
    SynthesisResult,
    synthesize,
    synthesize_parallel,
)
from .tables import SpecLevel

_SPEC_CHOICES = {
    "none": SpecLevel.NONE,
    "1": SpecLevel.SPEC1,
    "2": SpecLevel.SPEC2,
}

# mode name -> (spec level, partial evaluation)
BENCH_MODES = {
    "none_pe": (SpecLevel.NONE, True),
    "none_nope": (SpecLevel.NONE, False),
    "spec1_pe": (SpecLevel.SPEC1, True),
    "spec1_nope": (SpecLevel.SPEC1, False),
    "spec2_pe": (SpecLevel.SPEC2, True),
    "spec2_nope": (SpecLevel.SPEC2, False),
}

EXIT_SOLVED = 0
EXIT_USAGE = 1
EXIT_EXHAUSTED = 2
EXIT_TIMEOUT = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tablesynth",
        description="Synthesize table transformation programs from one example.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="solve a single problem file")
    solve.add_argument("problem", help="path to a problem JSON file")
    solve.add_argument(
        "--spec",
        choices=sorted(_SPEC_CHOICES),
        default="2",
        help="spec strength used for pruning (default 2)",
    )
    solve.add_argument("--max-depth", type=int, default=None, metavar="N")
    solve.add_argument("--timeout", type=float, default=None, metavar="SECONDS")
    solve.add_argument("--threads", type=int, default=1, metavar="N")
    solve.add_argument("--term-depth", type=int, default=2, metavar="N")
    solve.add_argument("--ordered-rows", action="store_true",
                       help="require row order to match, not just row content")
    solve.add_argument("--no-partial-eval", action="store_true",
                       help="do not run subtrees ahead of time during deduction")
    solve.add_argument("--emit", choices=["dsl", "r"], default="dsl")
    solve.add_argument("--stats", action="store_true",
                       help="print search counters as a JSON line")
    solve.add_argument("--explain", action="store_true",
                       help="dump an SMT-LIB core to stderr for every pruned hypothesis")
    solve.add_argument("--spec-file", default=None, metavar="TOML",
                       help="merge component specs from a TOML file over the builtins")
    solve.add_argument("--bigram", default=None, metavar="JSON",
                       help="bigram weights biasing the search order")

    bench = sub.add_parser("bench", help="run problems across pruning modes")
    bench.add_argument("problems", nargs="+", help="problem JSON files")
    bench.add_argument(
        "--modes",
        default=",".join(BENCH_MODES),
        help="comma-separated subset of: " + ", ".join(BENCH_MODES),
    )
    bench.add_argument("--max-depth", type=int, default=None, metavar="N")
    bench.add_argument("--timeout", type=float, default=None, metavar="SECONDS")
    bench.add_argument("--out", default=None, metavar="CSV",
                       help="write the result table here instead of stdout")
    return parser


def _load_bigram(path: str) -> dict:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise ProblemError("bigram file must be a JSON object")
    weights = {}
    for key, value in data.items():
        parts = key.split()
        if len(parts) != 2:
            raise ProblemError(
                f"bigram key {key!r} must be two component names separated by a space"
            )
        weights[(parts[0], parts[1])] = float(value)
    return weights


def _specs_for(level: SpecLevel, spec_file: Optional[str]) -> SpecSet:
    if spec_file is None:
        return load_builtin_specs(level)
    return load_spec_file(Path(spec_file).read_bytes(), level)


def _config_for(problem: Problem, args, level: SpecLevel) -> SearchConfig:
    max_depth = args.max_depth
    if max_depth is None:
        max_depth = problem.max_depth if problem.max_depth is not None else 4
    timeout = args.timeout
    if timeout is None:
        timeout = problem.timeout if problem.timeout is not None else 300.0
    return SearchConfig(
        spec_level=level,
        max_depth=max_depth,
        timeout=timeout,
        ordered_rows=problem.ordered_rows or getattr(args, "ordered_rows", False),
        extra_constants=problem.constants,
    )


def _cmd_solve(args) -> int:
    try:
        problem = load_problem(args.problem)
        level = _SPEC_CHOICES[args.spec]
        specs = _specs_for(level, args.spec_file)
        config = _config_for(problem, args, level)
        config.threads = args.threads
        config.term_depth = args.term_depth
        config.partial_eval = not args.no_partial_eval
        if args.bigram:
            config.bigram_weights = _load_bigram(args.bigram)
        if args.explain:
            config.explain = lambda text: print(text, file=sys.stderr)
    except (ProblemError, SpecParseError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    registry = problem.registry()
    if config.threads > 1:
        result = synthesize_parallel(problem.example, registry, specs, config)
    else:
        result = synthesize(problem.example, registry, specs, config)

    code = _report(result, args.emit, args.stats)
    return code


def _report(result: SynthesisResult, emit: str, stats: bool) -> int:
    if result.solved:
        render = program_to_r if emit == "r" else program_to_dsl
        print(render(result.program))
        code = EXIT_SOLVED
    elif result.status == "timeout":
        print("search timed out", file=sys.stderr)
        code = EXIT_TIMEOUT
    else:
        print("no program found", file=sys.stderr)
        code = EXIT_EXHAUSTED
    if stats:
        print(json.dumps(result.stats.as_dict()))
    return code


def _cmd_bench(args) -> int:
    mode_names = [m.strip() for m in args.modes.split(",") if m.strip()]
    for m in mode_names:
        if m not in BENCH_MODES:
            print(f"error: unknown mode {m!r}", file=sys.stderr)
            return EXIT_USAGE

    rows = []
    for path in args.problems:
        try:
            problem = load_problem(path)
        except ProblemError as exc:
            print(f"warning: skipping {path}: {exc}", file=sys.stderr)
            continue
        registry = problem.registry()
        for mode in mode_names:
            level, partial = BENCH_MODES[mode]
            config = _config_for(problem, args, level)
            config.partial_eval = partial
            specs = load_builtin_specs(level)
            try:
                result = synthesize(problem.example, registry, specs, config)
            except Exception as exc:  # noqa: BLE001 - one bad run must not kill the sweep
                print(f"warning: {problem.name}/{mode}: {exc}", file=sys.stderr)
                rows.append([problem.name, mode, 0, "", "", "", ""])
                continue
            stats = result.stats
            rows.append(
                [
                    problem.name,
                    mode,
                    1 if result.solved else 0,
                    f"{stats.elapsed:.3f}",
                    stats.hypotheses_explored,
                    stats.programs_checked,
                    f"{stats.prune_fraction:.4f}",
                ]
            )

    header = [
        "problem",
        "mode",
        "solved",
        "time",
        "hypothesesExplored",
        "programsChecked",
        "pruneFraction",
    ]
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
    else:
        writer = csv.writer(sys.stdout)
        writer.writerow(header)
        writer.writerows(rows)
    return EXIT_SOLVED


def main(argv: Optional[list] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command == "solve":
        return _cmd_solve(args)
    return _cmd_bench(args)


if __name__ == "__main__":
    sys.exit(main())
