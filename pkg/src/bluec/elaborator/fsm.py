"""State-graph construction for the FSM sub-language.

An FSM statement is compiled into a graph of states numbered densely in
program order.  Action states perform one action block and move to their
successor; test states choose a successor from a condition; a par state
runs its arms as independent machines and advances when all of them are
done.  Rule generation from the graph happens in the elaborator, which owns
expression elaboration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from bluec.diagnostics import ElaborationError
from bluec.frontend import ast as A


class Link:
    """Forward reference to a state that may not exist yet."""

    __slots__ = ("target",)

    def __init__(self, target=None):
        self.target = target


@dataclass(eq=False)
class State:
    kind: str  # action | test | par | done
    loc: object = None
    stmts: tuple = ()
    cond: object = None
    succ: object = None  # State | Link
    then: object = None
    else_: object = None
    arms: list = field(default_factory=list)
    index: int = -1


@dataclass(eq=False)
class Machine:
    states: list
    entry: State
    done: State

    @property
    def width(self) -> int:
        return max(1, (len(self.states) - 1).bit_length())


def resolve(x) -> State:
    seen = 0
    while isinstance(x, Link):
        x = x.target
        seen += 1
        if x is None or seen > 100000:
            raise ElaborationError("internal: unresolved FSM successor")
    return x


@dataclass
class _Loop:
    brk: object
    cont: object


class _Builder:
    def __init__(self, static_count):
        self.states: list[State] = []
        self.static_count = static_count

    def new(self, kind: str, loc, **kw) -> State:
        s = State(kind, loc, **kw)
        self.states.append(s)
        return s

    def comp(self, f, exit_, loop: _Loop | None):
        """Compile `f` so that it continues at `exit_`; return its entry."""
        if isinstance(f, A.EascFsm):
            return self.new("action", f.loc, stmts=f.stmts, succ=exit_)
        if isinstance(f, A.SeqFsm):
            if not f.stmts:
                return exit_
            links = [Link() for _ in f.stmts[:-1]] + [exit_]
            entries = [self.comp(s, links[i], loop) for i, s in enumerate(f.stmts)]
            for i in range(len(f.stmts) - 1):
                links[i].target = entries[i + 1]
            return entries[0]
        if isinstance(f, A.IfFsm):
            t = self.new("test", f.loc, cond=f.cond)
            t.then = self.comp(f.then, exit_, loop)
            t.else_ = self.comp(f.else_, exit_, loop) if f.else_ is not None else exit_
            return t
        if isinstance(f, A.WhileFsm):
            t = self.new("test", f.loc, cond=f.cond)
            t.then = self.comp(f.body, Link(t), _Loop(brk=exit_, cont=t))
            t.else_ = exit_
            return t
        if isinstance(f, A.RepeatFsm):
            n = self.static_count(f.count)
            if n < 0:
                raise ElaborationError("repeat count must be non-negative", f.loc)
            if n == 0:
                return exit_
            links = [Link() for _ in range(n - 1)] + [exit_]
            entries = [self.comp(f.body, links[i], _Loop(brk=exit_, cont=links[i])) for i in range(n)]
            for i in range(n - 1):
                links[i].target = entries[i + 1]
            return entries[0]
        if isinstance(f, A.BreakFsm):
            if loop is None:
                raise ElaborationError("'break' outside a loop", f.loc)
            return loop.brk
        if isinstance(f, A.ContinueFsm):
            if loop is None:
                raise ElaborationError("'continue' outside a loop", f.loc)
            return loop.cont
        if isinstance(f, A.ParFsm):
            p = self.new("par", f.loc, succ=exit_)
            p.arms = [build_machine(arm, self.static_count) for arm in f.stmts]
            return p
        raise ElaborationError(f"unexpected FSM statement {type(f).__name__}", getattr(f, "loc", None))


def build_machine(f, static_count) -> Machine:
    """Compile one sequential machine; arms of `par` become nested machines."""
    b = _Builder(static_count)
    exit_ = Link()
    entry = b.comp(f, exit_, None)
    done = b.new("done", getattr(f, "loc", None))
    exit_.target = done
    entry = resolve(entry)
    for i, s in enumerate(b.states):
        s.index = i
    for s in b.states:
        for attr in ("succ", "then", "else_"):
            v = getattr(s, attr)
            if v is not None:
                setattr(s, attr, resolve(v))
    return Machine(b.states, entry, done)
