"""Example-driven synthesis of table transformation programs.

Give one input/output example; get back a pipeline of tidying and
reshaping operators that reproduces it.  The search enumerates program
shapes smallest-first and lets a constraint solver discard shapes,
sketches, and partial completions whose dimension arithmetic cannot
possibly reach the output table.
"""

from .completion import CompletionLimits, CrossTable, fill_sketch, inhabit
from .components import (
    ComponentRegistry,
    InterpreterError,
    builtin_registry,
    eval_table_component,
)
from .deduction import DeduceContext, Feasibility, deduce, phi
from .dsl import ProgramParseError, parse_program, program_to_dsl, program_to_r
from .hypotheses import (
    ComponentNode,
    Hole,
    InputBinding,
    QualifiedHole,
    TermBinding,
    bind_hole,
    is_complete,
    is_sketch,
    partial_eval,
    refine,
    root_hole,
    sketches,
)
from .problems import Problem, ProblemError, load_problem, save_problem
from .solver import SatCache, is_satisfiable
from .specs import SpecParseError, SpecSet, load_builtin_specs, load_spec_file
from .synthesizer import (
    SearchConfig,
    SearchStats,
    SynthesisResult,
    synthesize,
    synthesize_parallel,
)
from .tables import (
    Example,
    MalformedInput,
    Num,
    SpecLevel,
    Str,
    Table,
    dump_csv,
    load_csv,
    make_table,
    tables_equal,
)

__version__ = "0.1.0"

__all__ = [
    "CompletionLimits",
    "ComponentNode",
    "ComponentRegistry",
    "CrossTable",
    "DeduceContext",
    "Example",
    "Feasibility",
    "Hole",
    "InputBinding",
    "InterpreterError",
    "MalformedInput",
    "Num",
    "Problem",
    "ProblemError",
    "ProgramParseError",
    "QualifiedHole",
    "SatCache",
    "SearchConfig",
    "SearchStats",
    "SpecLevel",
    "SpecParseError",
    "SpecSet",
    "Str",
    "SynthesisResult",
    "Table",
    "TermBinding",
    "bind_hole",
    "builtin_registry",
    "deduce",
    "dump_csv",
    "eval_table_component",
    "fill_sketch",
    "inhabit",
    "is_complete",
    "is_satisfiable",
    "is_sketch",
    "load_builtin_specs",
    "load_csv",
    "load_problem",
    "load_spec_file",
    "make_table",
    "parse_program",
    "partial_eval",
    "phi",
    "program_to_dsl",
    "program_to_r",
    "refine",
    "root_hole",
    "save_problem",
    "sketches",
    "synthesize",
    "synthesize_parallel",
    "tables_equal",
]
