"""Convenience wrappers chaining parse, desugar, elaborate and schedule."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from bluec import scheduler
from bluec.core import CoreDesign
from bluec.elaborator import elaborate
from bluec.frontend import ast as A
from bluec.frontend.desugar import desugar_sugar
from bluec.frontend.parser import parse_source


@dataclass(frozen=True)
class Compiled:
    unit: A.CompilationUnit
    design: CoreDesign
    schedule: scheduler.Schedule

    @property
    def warnings(self) -> tuple:
        return self.schedule.warnings


def parse_texts(sources: list[tuple[str, str]]) -> A.CompilationUnit:
    """Parse ``(text, file-name)`` pairs into one compilation unit."""
    items = []
    for text, name in sources:
        items.extend(parse_source(text, name).items)
    return desugar_sugar(A.CompilationUnit(tuple(items)))


def compile_texts(sources, top: str, relaxed: bool = False, guard_semantics: str = "strict") -> Compiled:
    unit = parse_texts(sources)
    design = elaborate(unit, top, guard_semantics)
    return Compiled(unit, design, scheduler.schedule(design, relaxed=relaxed))


def compile_source(text: str, top: str, file: str = "<input>", **kw) -> Compiled:
    return compile_texts([(text, file)], top, **kw)


def compile_files(paths, top: str, **kw) -> Compiled:
    sources = [(Path(p).read_text(encoding="utf-8"), Path(p).name) for p in paths]
    return compile_texts(sources, top, **kw)
