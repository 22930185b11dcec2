"""Problem files: one input/output example plus search hints, as JSON.

A problem bundles the example tables (inline CSV or a path next to the
file), an optional component restriction, extra constants for term
enumeration, and per-problem depth/timeout hints.  Serialization always
inlines the CSV so a saved problem is self-contained; parse, serialize,
parse is the identity on the parsed form.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Union

from .components import ComponentRegistry, builtin_registry
from .tables import CellValue, Example, MalformedInput, Num, Str, dump_csv, load_csv


class ProblemError(Exception):
    """The problem file does not describe a usable problem."""


@dataclass(frozen=True)
class Problem:
    name: str
    example: Example
    table_components: Optional[tuple[str, ...]] = None
    value_components: Optional[tuple[str, ...]] = None
    constants: tuple[CellValue, ...] = ()
    ordered_rows: bool = False
    max_depth: Optional[int] = None
    timeout: Optional[float] = None

    def registry(
        self, base: Optional[ComponentRegistry] = None
    ) -> ComponentRegistry:
        base = base or builtin_registry()
        if self.table_components is None and self.value_components is None:
            return base
        return base.restrict(self.table_components, self.value_components)


def _load_table(entry: dict, base_dir: Optional[Path], label: str):
    if not isinstance(entry, dict):
        raise ProblemError(f"{label} must be an object")
    has_csv = "csv" in entry
    has_path = "csvPath" in entry
    if has_csv == has_path:
        raise ProblemError(f"{label} needs exactly one of 'csv' or 'csvPath'")
    if has_csv:
        data = entry["csv"]
        if not isinstance(data, str):
            raise ProblemError(f"{label}.csv must be a string")
        raw = data.encode("utf-8")
    else:
        rel = entry["csvPath"]
        if not isinstance(rel, str):
            raise ProblemError(f"{label}.csvPath must be a string")
        path = (base_dir or Path.cwd()) / rel
        try:
            raw = path.read_bytes()
        except OSError as exc:
            raise ProblemError(f"{label}: cannot read {path}: {exc}") from exc
    try:
        return load_csv(raw, name_hint=label)
    except MalformedInput as exc:
        raise ProblemError(f"{label}: {exc}") from exc


def _parse_constant(raw) -> CellValue:
    if isinstance(raw, bool):
        raise ProblemError("constants must be numbers or strings")
    if isinstance(raw, int):
        return Num(raw)
    if isinstance(raw, float):
        return Num(str(raw))
    if isinstance(raw, str):
        return Str(raw)
    raise ProblemError(f"constants must be numbers or strings, got {raw!r}")


def _constant_to_json(c: CellValue):
    if isinstance(c, Str):
        return c.value
    frac = c.value
    if frac.denominator == 1:
        return frac.numerator
    return float(frac)


def parse_problem(data: dict, base_dir: Optional[Path] = None) -> Problem:
    if not isinstance(data, dict):
        raise ProblemError("problem file must contain a JSON object")
    raw_inputs = data.get("inputs")
    if not isinstance(raw_inputs, list) or not raw_inputs:
        raise ProblemError("'inputs' must be a non-empty list")
    inputs = []
    seen = set()
    for i, entry in enumerate(raw_inputs):
        if not isinstance(entry, dict):
            raise ProblemError(f"inputs[{i}] must be an object")
        name = entry.get("name", f"x{i + 1}")
        if not isinstance(name, str) or not name:
            raise ProblemError(f"inputs[{i}].name must be a non-empty string")
        if name in seen:
            raise ProblemError(f"duplicate input name {name!r}")
        seen.add(name)
        inputs.append((name, _load_table(entry, base_dir, f"inputs[{i}]")))
    if "output" not in data:
        raise ProblemError("'output' is required")
    output = _load_table(data["output"], base_dir, "output")
    example = Example(tuple(inputs), output)

    table_comps = None
    value_comps = None
    comps = data.get("components")
    if comps is not None:
        if not isinstance(comps, dict):
            raise ProblemError("'components' must be an object")
        reg = builtin_registry()
        if "table" in comps:
            table_comps = tuple(comps["table"])
            for n in table_comps:
                if not reg.has_table_component(n):
                    raise ProblemError(f"unknown table component {n!r}")
        if "value" in comps:
            value_comps = tuple(comps["value"])
            known = {v.name for v in reg.value}
            for n in value_comps:
                if n not in known:
                    raise ProblemError(f"unknown value component {n!r}")

    constants = tuple(_parse_constant(c) for c in data.get("constants", []))

    ordered = data.get("orderedRows", False)
    if not isinstance(ordered, bool):
        raise ProblemError("'orderedRows' must be a boolean")

    max_depth = data.get("maxDepth")
    if max_depth is not None and (not isinstance(max_depth, int) or max_depth < 0):
        raise ProblemError("'maxDepth' must be a non-negative integer")
    timeout = data.get("timeout")
    if timeout is not None:
        if isinstance(timeout, bool) or not isinstance(timeout, (int, float)):
            raise ProblemError("'timeout' must be a number")
        if timeout <= 0:
            raise ProblemError("'timeout' must be positive")
        timeout = float(timeout)

    name = data.get("name", "problem")
    if not isinstance(name, str) or not name:
        raise ProblemError("'name' must be a non-empty string")

    return Problem(
        name=name,
        example=example,
        table_components=table_comps,
        value_components=value_comps,
        constants=constants,
        ordered_rows=ordered,
        max_depth=max_depth,
        timeout=timeout,
    )


def problem_to_dict(p: Problem) -> dict:
    out: dict = {
        "name": p.name,
        "inputs": [
            {"name": n, "csv": dump_csv(t)} for n, t in p.example.inputs
        ],
        "output": {"csv": dump_csv(p.example.output)},
    }
    comps: dict = {}
    if p.table_components is not None:
        comps["table"] = list(p.table_components)
    if p.value_components is not None:
        comps["value"] = list(p.value_components)
    if comps:
        out["components"] = comps
    if p.constants:
        out["constants"] = [_constant_to_json(c) for c in p.constants]
    if p.ordered_rows:
        out["orderedRows"] = True
    if p.max_depth is not None:
        out["maxDepth"] = p.max_depth
    if p.timeout is not None:
        out["timeout"] = p.timeout
    return out


def load_problem(path: Union[str, Path]) -> Problem:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ProblemError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ProblemError(f"{path}: invalid JSON: {exc}") from exc
    problem = parse_problem(data, base_dir=path.parent)
    if "name" not in data:
        problem = replace(problem, name=path.stem)
    return problem


def save_problem(p: Problem, path: Union[str, Path]) -> None:
    Path(path).write_text(
        json.dumps(problem_to_dict(p), indent=2) + "\n", encoding="utf-8"
    )
