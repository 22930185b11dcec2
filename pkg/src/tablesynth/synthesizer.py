"""Best-first worklist search over refinement trees.

The loop pops the cheapest hypothesis, asks deduction whether its shape
can still reach the expected output, and only then binds inputs to its
table leaves (sketches) and enumerates value terms (completion).
Shapes judged infeasible are still refined: deduction speaks about the
popped tree's leaves being inputs, not about trees grown from it, so
pruning applies to sketch generation and completion, never to the
refinement frontier.

Priority is (component count, negated bigram score, component sequence,
insertion order).  Without a bigram table the search is plain smallest-
first with a stable lexicographic tiebreak, which keeps runs bit-for-bit
reproducible.  A bigram table biases the order toward component pairs
that co-occur in real pipelines; scores only reorder hypotheses of
equal size, so completeness is unaffected.
"""

from __future__ import annotations

import heapq
import itertools
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from .completion import CompletionLimits, Interrupted, fill_sketch
from .components import ComponentRegistry, builtin_registry
from .deduction import DeduceContext, Feasibility, _annotate, deduce
from .hypotheses import (
    Node,
    component_sequence,
    open_table_holes,
    refine,
    root_hole,
    sketches,
    transformer_count,
)
from .specs import SpecSet, load_builtin_specs
from .tables import CellValue, Example, SpecLevel, Str, Table, tables_equal

BigramWeights = dict[tuple[str, str], float]


@dataclass
class SearchConfig:
    spec_level: SpecLevel = SpecLevel.SPEC2
    max_depth: int = 4
    timeout: Optional[float] = 300.0
    threads: int = 1
    ordered_rows: bool = False
    partial_eval: bool = True
    term_depth: int = 2
    case_cap: int = 4096
    extra_constants: tuple[CellValue, ...] = ()
    bigram_weights: Optional[BigramWeights] = None
    # Receives an SMT-LIB dump for every deduction judged unsatisfiable.
    explain: Optional[Callable[[str], None]] = None


@dataclass
class SearchStats:
    hypotheses_explored: int = 0
    sketches_generated: int = 0
    deduce_calls: int = 0
    deduce_rejects_pre_sketch: int = 0
    deduce_rejects_during_completion: int = 0
    programs_checked: int = 0
    solver_calls: int = 0
    elapsed: float = 0.0

    @property
    def prune_fraction(self) -> float:
        rejected = (
            self.deduce_rejects_pre_sketch + self.deduce_rejects_during_completion
        )
        if self.deduce_calls == 0:
            return 0.0
        return rejected / self.deduce_calls

    def as_dict(self) -> dict:
        return {
            "hypothesesExplored": self.hypotheses_explored,
            "sketchesGenerated": self.sketches_generated,
            "deduceCalls": self.deduce_calls,
            "deduceRejectsPreSketch": self.deduce_rejects_pre_sketch,
            "deduceRejectsDuringCompletion": self.deduce_rejects_during_completion,
            "programsChecked": self.programs_checked,
            "solverCalls": self.solver_calls,
            "pruneFraction": self.prune_fraction,
            "elapsed": self.elapsed,
        }

    def merge(self, other: "SearchStats") -> None:
        self.hypotheses_explored += other.hypotheses_explored
        self.sketches_generated += other.sketches_generated
        self.deduce_calls += other.deduce_calls
        self.deduce_rejects_pre_sketch += other.deduce_rejects_pre_sketch
        self.deduce_rejects_during_completion += (
            other.deduce_rejects_during_completion
        )
        self.programs_checked += other.programs_checked
        self.solver_calls += other.solver_calls
        self.elapsed = max(self.elapsed, other.elapsed)


@dataclass
class SynthesisResult:
    program: Optional[Node]
    status: str  # solved | exhausted | timeout | cancelled
    stats: SearchStats = field(default_factory=SearchStats)

    @property
    def solved(self) -> bool:
        return self.program is not None


class _Found(Exception):
    pass


def _bigram_score(seq: tuple[str, ...], weights: Optional[BigramWeights]) -> float:
    if not weights or len(seq) < 2:
        return 0.0
    return sum(weights.get(pair, 0.0) for pair in zip(seq, seq[1:]))


def synthesize(
    example: Example,
    registry: Optional[ComponentRegistry] = None,
    specs: Optional[SpecSet] = None,
    config: Optional[SearchConfig] = None,
    *,
    cancel: Optional[threading.Event] = None,
    _complete_sizes: Optional[set] = None,
) -> SynthesisResult:
    """Search for the smallest program mapping the example inputs to its
    output.  Returns the first verified program found, or the reason the
    search stopped.

    ``_complete_sizes`` restricts which hypothesis sizes get sketched
    and completed (shape exploration always covers everything); the
    parallel driver uses it to partition work.
    """
    registry = registry or builtin_registry()
    config = config or SearchConfig()
    if specs is None:
        specs = load_builtin_specs(config.spec_level)
    level = specs.level

    start = time.monotonic()
    deadline = start + config.timeout if config.timeout else None
    ctx = DeduceContext(
        collapse_concrete=config.partial_eval,
        case_cap=config.case_cap,
        explain=config.explain,
    )
    stats = SearchStats()
    extras = tuple(Str(n) for n in example.output.column_names) + tuple(
        config.extra_constants
    )

    def hook(kind: str, node_id: int, term, verdict: str) -> None:
        if kind == "assemble" and node_id == 0:
            # The root assembly is the final execute-and-compare, not a
            # spec-based prune.
            if verdict != "eval_error":
                stats.programs_checked += 1
            return
        if verdict == "eval_error":
            return
        stats.deduce_calls += 1
        if verdict == "infeasible":
            stats.deduce_rejects_during_completion += 1

    def out_of_time() -> bool:
        if cancel is not None and cancel.is_set():
            return True
        return deadline is not None and time.monotonic() > deadline

    counter = itertools.count()
    heap: list = [(0, 0.0, (), next(counter), root_hole())]
    solution: Optional[Node] = None
    status = "exhausted"

    try:
        while heap:
            if out_of_time():
                status = "cancelled" if cancel and cancel.is_set() else "timeout"
                break
            _, _, _, _, h = heapq.heappop(heap)
            stats.hypotheses_explored += 1
            size = transformer_count(h)

            shape_ok = True
            if level is not SpecLevel.NONE:
                stats.deduce_calls += 1
                verdict = deduce(
                    h, example, specs, ordered_rows=config.ordered_rows, ctx=ctx
                )
                if verdict is Feasibility.INFEASIBLE:
                    stats.deduce_rejects_pre_sketch += 1
                    shape_ok = False

            if shape_ok and (_complete_sizes is None or size in _complete_sizes):
                for sk in sketches(h, example.inputs):
                    if out_of_time():
                        raise Interrupted(
                            "cancelled" if cancel and cancel.is_set() else "timeout"
                        )
                    stats.sketches_generated += 1
                    if level is not SpecLevel.NONE:
                        stats.deduce_calls += 1
                        verdict = deduce(
                            sk,
                            example,
                            specs,
                            ordered_rows=config.ordered_rows,
                            ctx=ctx,
                        )
                        if verdict is Feasibility.INFEASIBLE:
                            stats.deduce_rejects_pre_sketch += 1
                            continue
                    limits = CompletionLimits(
                        term_depth=config.term_depth,
                        extra_constants=extras,
                        value_ops=frozenset(v.name for v in registry.value),
                        deadline=deadline,
                        cancel=cancel,
                    )
                    for prog in fill_sketch(
                        sk,
                        example,
                        specs,
                        limits,
                        ctx,
                        trace=hook,
                        ordered_rows=config.ordered_rows,
                        partial_eval=config.partial_eval,
                    ):
                        if level is SpecLevel.NONE:
                            stats.programs_checked += 1
                            out = _annotate(prog, None).get(0)
                            if not isinstance(out, Table) or not tables_equal(
                                out, example.output, config.ordered_rows
                            ):
                                continue
                        solution = prog
                        raise _Found

            if size + 1 <= config.max_depth:
                for leaf in open_table_holes(h):
                    for comp in registry.table:
                        child = refine(h, leaf.id, comp.name, registry)
                        seq = component_sequence(child)
                        heapq.heappush(
                            heap,
                            (
                                transformer_count(child),
                                -_bigram_score(seq, config.bigram_weights),
                                seq,
                                next(counter),
                                child,
                            ),
                        )
    except _Found:
        status = "solved"
    except Interrupted as exc:
        status = "cancelled" if exc.reason == "cancelled" else "timeout"

    stats.solver_calls = ctx.solver_calls
    stats.elapsed = time.monotonic() - start
    return SynthesisResult(program=solution, status=status, stats=stats)


def synthesize_parallel(
    example: Example,
    registry: Optional[ComponentRegistry] = None,
    specs: Optional[SpecSet] = None,
    config: Optional[SearchConfig] = None,
) -> SynthesisResult:
    """Partition completion work across threads by hypothesis size.

    Every worker explores the same (cheap) shape frontier but sketches
    and completes only its own size classes, so the expensive term
    enumeration never overlaps.  The first worker to verify a program
    cancels the rest; cancellation is polled inside the completion
    engine, so the stragglers stop within a few solver calls.
    """
    registry = registry or builtin_registry()
    config = config or SearchConfig()
    n = min(config.threads, config.max_depth + 1)
    if n <= 1:
        return synthesize(example, registry, specs, config)

    cancel = threading.Event()
    results: list[Optional[SynthesisResult]] = [None] * n
    errors: list[Optional[BaseException]] = [None] * n

    def work(i: int) -> None:
        sizes = {d for d in range(config.max_depth + 1) if d % n == i}
        try:
            results[i] = synthesize(
                example,
                registry,
                specs,
                config,
                cancel=cancel,
                _complete_sizes=sizes,
            )
            if results[i].solved:
                cancel.set()
        except BaseException as exc:  # noqa: BLE001 - reraised below
            errors[i] = exc
            cancel.set()

    threads = [
        threading.Thread(target=work, args=(i,), daemon=True) for i in range(n)
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    for exc in errors:
        if exc is not None:
            raise exc

    merged = SearchStats()
    best: Optional[SynthesisResult] = None
    statuses = []
    for r in results:
        assert r is not None
        merged.merge(r.stats)
        statuses.append(r.status)
        if r.solved:
            key = (
                transformer_count(r.program),
                component_sequence(r.program),
            )
            if best is None or key < (
                transformer_count(best.program),
                component_sequence(best.program),
            ):
                best = r
    if best is not None:
        return SynthesisResult(best.program, "solved", merged)
    if "timeout" in statuses:
        return SynthesisResult(None, "timeout", merged)
    return SynthesisResult(None, "exhausted", merged)
