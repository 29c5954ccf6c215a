"""Flat post-elaboration design representation.

Expressions are immutable trees over primitive method results.  Booleans are
one-bit integers.  Arithmetic wraps modulo ``2**width`` when a width is known;
comparisons are unsigned.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from bluec.diagnostics import NOWHERE, Location


@dataclass(frozen=True)
class Const:
    value: int
    width: Optional[int] = None


@dataclass(frozen=True)
class Call:
    """Result of a value or action-value primitive method."""
    inst: str
    method: str
    args: tuple = ()
    width: Optional[int] = None


@dataclass(frozen=True)
class Ready:
    """Ready handshake of a primitive method."""
    inst: str
    method: str
    width: int = field(default=1, init=False)


@dataclass(frozen=True)
class Firing:
    """WILL_FIRE of a rule, visible to other rules."""
    rule: str
    width: int = field(default=1, init=False)


@dataclass(frozen=True)
class CanFire:
    rule: str
    width: int = field(default=1, init=False)


@dataclass(frozen=True)
class Net:
    """Reference to a netlist net; only appears after lowering."""
    name: str
    width: Optional[int] = None


@dataclass(frozen=True)
class Op:
    op: str
    args: tuple
    width: Optional[int] = None


Expr = Union[Const, Call, Ready, Firing, CanFire, Net, Op]

TRUE = Const(1, 1)
FALSE = Const(0, 1)

ARITH = {"+", "-", "*", "/", "%", "&", "|", "^"}
SHIFTS = {"<<", ">>"}
COMPARE = {"<", "<=", ">", ">=", "==", "!="}
LOGIC = {"and", "or", "not"}
BOOLEAN_OPS = COMPARE | LOGIC | {"bool", "bit"}


def mask(width: Optional[int]) -> int:
    return -1 if width is None else (1 << width) - 1


def _wrap(value: int, width: Optional[int]) -> int:
    return value if width is None else value & ((1 << width) - 1)


def is_boolean(e: Expr) -> bool:
    if isinstance(e, (Ready, Firing, CanFire)):
        return True
    if isinstance(e, Op):
        if e.op in BOOLEAN_OPS:
            return True
        if e.op == "mux":
            return is_boolean(e.args[1]) and is_boolean(e.args[2])
        return False
    if isinstance(e, Const):
        return e.width == 1 or (e.width is None and e.value in (0, 1))
    return e.width == 1


def apply_op(op: str, vals, width: Optional[int]) -> int:
    if op == "+":
        r = vals[0] + vals[1]
    elif op == "-":
        r = vals[0] - vals[1]
    elif op == "*":
        r = vals[0] * vals[1]
    elif op == "/":
        r = vals[0] // vals[1] if vals[1] else 0
    elif op == "%":
        r = vals[0] % vals[1] if vals[1] else 0
    elif op == "&":
        r = vals[0] & vals[1]
    elif op == "|":
        r = vals[0] | vals[1]
    elif op == "^":
        r = vals[0] ^ vals[1]
    elif op == "<<":
        r = vals[0] << vals[1] if vals[1] < 4096 else 0
    elif op == ">>":
        r = vals[0] >> vals[1]
    elif op == "<":
        return int(vals[0] < vals[1])
    elif op == "<=":
        return int(vals[0] <= vals[1])
    elif op == ">":
        return int(vals[0] > vals[1])
    elif op == ">=":
        return int(vals[0] >= vals[1])
    elif op == "==":
        return int(vals[0] == vals[1])
    elif op == "!=":
        return int(vals[0] != vals[1])
    elif op == "and":
        return int(all(vals))
    elif op == "or":
        return int(any(vals))
    elif op == "not":
        return int(not vals[0])
    elif op == "bool":
        return int(vals[0] != 0)
    elif op == "bit":
        return (vals[0] >> vals[1]) & 1
    elif op == "mux":
        return vals[1] if vals[0] else vals[2]
    else:
        raise ValueError(f"unknown operator {op!r}")
    return _wrap(r, width)


def _width_of(e) -> Optional[int]:
    return getattr(e, "width", None)


def _sized(c: Const, width: Optional[int]) -> Const:
    if width is None or c.width is not None:
        return c
    return Const(c.value & ((1 << width) - 1), width)


def mk(op: str, *args: Expr) -> Expr:
    """Build an operator node with width inference and constant folding."""
    if op in ARITH:
        widths = [w for w in map(_width_of, args) if w is not None]
        width = max(widths) if widths else None
        args = tuple(_sized(a, width) if isinstance(a, Const) else a for a in args)
    elif op in SHIFTS:
        width = _width_of(args[0])
        if isinstance(args[0], Const):
            args = (_sized(args[0], width),) + args[1:]
    elif op == "mux":
        widths = [w for w in map(_width_of, args[1:]) if w is not None]
        width = max(widths) if widths else None
    else:
        width = 1

    if op == "and":
        flat = []
        for a in args:
            if isinstance(a, Const):
                if a.value == 0:
                    return FALSE
                continue
            if isinstance(a, Op) and a.op == "and":
                flat.extend(a.args)
            elif a not in flat:
                flat.append(a)
        if not flat:
            return TRUE
        return flat[0] if len(flat) == 1 else Op("and", tuple(flat), 1)
    if op == "or":
        flat = []
        for a in args:
            if isinstance(a, Const):
                if a.value != 0:
                    return TRUE
                continue
            if isinstance(a, Op) and a.op == "or":
                flat.extend(a.args)
            elif a not in flat:
                flat.append(a)
        if not flat:
            return FALSE
        return flat[0] if len(flat) == 1 else Op("or", tuple(flat), 1)
    if op == "not":
        a = args[0]
        if isinstance(a, Op) and a.op == "not":
            return a.args[0]
    if op == "bool" and is_boolean(args[0]):
        return args[0]
    if op == "mux":
        c = args[0]
        if isinstance(c, Const):
            return args[1] if c.value else args[2]
        if args[1] == args[2]:
            return args[1]

    if all(isinstance(a, Const) for a in args):
        return Const(apply_op(op, [a.value for a in args], width), width if op not in BOOLEAN_OPS else 1)
    return Op(op, tuple(args), width)


def conj(*args: Expr) -> Expr:
    return mk("and", *args)


def disj(*args: Expr) -> Expr:
    return mk("or", *args)


def neg(e: Expr) -> Expr:
    return mk("not", e)


class Lookup:
    """Value source used by `evaluate`; subclassed by simulator and netlist interpreter."""

    def call(self, inst: str, method: str, args: tuple) -> int:
        raise NotImplementedError

    def ready(self, inst: str, method: str) -> bool:
        raise NotImplementedError

    def firing(self, rule: str) -> bool:
        raise NotImplementedError

    def can_fire(self, rule: str) -> bool:
        raise NotImplementedError

    def net(self, name: str) -> int:
        raise NotImplementedError


def evaluate(e: Expr, env: Lookup) -> int:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Op):
        if e.op == "mux":
            return evaluate(e.args[1] if evaluate(e.args[0], env) else e.args[2], env)
        if e.op == "and":
            return int(all(evaluate(a, env) for a in e.args))
        if e.op == "or":
            return int(any(evaluate(a, env) for a in e.args))
        return apply_op(e.op, [evaluate(a, env) for a in e.args], e.width)
    if isinstance(e, Call):
        return env.call(e.inst, e.method, tuple(evaluate(a, env) for a in e.args))
    if isinstance(e, Ready):
        return int(env.ready(e.inst, e.method))
    if isinstance(e, Firing):
        return int(env.firing(e.rule))
    if isinstance(e, CanFire):
        return int(env.can_fire(e.rule))
    if isinstance(e, Net):
        return env.net(e.name)
    raise TypeError(f"cannot evaluate {e!r}")


def walk(e: Expr):
    """Pre-order traversal of an expression tree."""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, Op):
            stack.extend(reversed(node.args))
        elif isinstance(node, Call):
            stack.extend(reversed(node.args))


def substitute(e: Expr, fn: Callable[[Expr], Optional[Expr]]) -> Expr:
    """Rebuild `e` bottom-up, replacing nodes for which `fn` returns a value."""
    r = fn(e)
    if r is not None:
        return r
    if isinstance(e, Op):
        args = tuple(substitute(a, fn) for a in e.args)
        return e if args == e.args else mk(e.op, *args)
    if isinstance(e, Call) and e.args:
        return Call(e.inst, e.method, tuple(substitute(a, fn) for a in e.args), e.width)
    return e


def expr_str(e: Expr) -> str:
    """Readable infix rendering used in reports and diagnostics."""
    if isinstance(e, Const):
        return str(e.value)
    if isinstance(e, Call):
        args = ", ".join(expr_str(a) for a in e.args)
        return f"{e.inst}.{e.method}({args})"
    if isinstance(e, Ready):
        return f"RDY({e.inst}.{e.method})"
    if isinstance(e, Firing):
        return f"WILL_FIRE({e.rule})"
    if isinstance(e, CanFire):
        return f"CAN_FIRE({e.rule})"
    if isinstance(e, Net):
        return e.name
    if isinstance(e, Op):
        if e.op == "not":
            return f"!{expr_str(e.args[0])}"
        if e.op == "and":
            return "(" + " && ".join(expr_str(a) for a in e.args) + ")"
        if e.op == "or":
            return "(" + " || ".join(expr_str(a) for a in e.args) + ")"
        if e.op == "mux":
            return f"({expr_str(e.args[0])} ? {expr_str(e.args[1])} : {expr_str(e.args[2])})"
        if e.op == "bool":
            return f"({expr_str(e.args[0])} != 0)"
        if e.op == "bit":
            return f"{expr_str(e.args[0])}[{expr_str(e.args[1])}]"
        return f"({expr_str(e.args[0])} {e.op} {expr_str(e.args[1])})"
    raise TypeError(e)


def expr_json(e: Expr):
    if isinstance(e, Const):
        return {"const": e.value, "width": e.width}
    if isinstance(e, Call):
        return {"call": f"{e.inst}.{e.method}", "args": [expr_json(a) for a in e.args], "width": e.width}
    if isinstance(e, Ready):
        return {"ready": f"{e.inst}.{e.method}"}
    if isinstance(e, Firing):
        return {"will_fire": e.rule}
    if isinstance(e, CanFire):
        return {"can_fire": e.rule}
    if isinstance(e, Net):
        return {"net": e.name, "width": e.width}
    return {"op": e.op, "args": [expr_json(a) for a in e.args], "width": e.width}


# ---------------------------------------------------------------- rules and design

@dataclass(frozen=True)
class ActionCall:
    inst: str
    method: str
    args: tuple
    pred: Expr = TRUE


@dataclass(frozen=True)
class Display:
    task: str  # $display | $write
    fmt: Optional[str]
    args: tuple
    pred: Expr = TRUE


@dataclass(frozen=True)
class Finish:
    code: Expr
    pred: Expr = TRUE


Action = Union[ActionCall, Display, Finish]


@dataclass(frozen=True)
class CallSite:
    """One syntactic primitive method use; `pred` is the condition under which it is evaluated."""
    inst: str
    method: str
    pred: Expr = TRUE


@dataclass(frozen=True)
class MethodGuard:
    """Guard of an inlined user method, owed by the calling rule."""
    method: str
    cond: Expr
    pred: Expr = TRUE


@dataclass(frozen=True)
class CoreRule:
    name: str
    loc: Location
    guard: Expr
    actions: tuple
    calls: tuple = ()
    method_guards: tuple = ()

    @property
    def sort_key(self) -> tuple:
        return (self.loc.file, self.loc.line, self.name)

    def expressions(self):
        """Every expression evaluated by the rule: guard, predicates, arguments."""
        yield self.guard
        for a in self.actions:
            yield a.pred
            if isinstance(a, ActionCall):
                yield from a.args
            elif isinstance(a, Display):
                yield from a.args
            else:
                yield a.code
        for g in self.method_guards:
            yield g.cond
            yield g.pred

    def action_calls(self):
        return [a for a in self.actions if isinstance(a, ActionCall)]

    def used_methods(self) -> set[tuple[str, str]]:
        return {(c.inst, c.method) for c in self.calls}


@dataclass(frozen=True)
class Annotations:
    descending_urgency: tuple = ()  # tuples of rule names, most urgent first
    execution_order: tuple = ()  # tuples of rule names, earliest first
    fire_when_enabled: frozenset = frozenset()

    def rule_names(self) -> set[str]:
        names = set(self.fire_when_enabled)
        for group in self.descending_urgency + self.execution_order:
            names.update(group)
        return names


@dataclass(frozen=True)
class FsmInfo:
    name: str
    state_reg: str
    rules: tuple
    arms: tuple = ()  # FsmInfo per par arm


@dataclass(frozen=True)
class CoreDesign:
    top: str
    instances: dict  # path -> PrimitiveInstance, in creation order
    rules: tuple
    annotations: Annotations = Annotations()
    guard_semantics: str = "strict"
    fsms: tuple = ()

    def rule(self, name: str) -> CoreRule:
        for r in self.rules:
            if r.name == name:
                return r
        raise KeyError(name)

    @property
    def rule_names(self) -> tuple[str, ...]:
        return tuple(r.name for r in self.rules)

    def registers(self) -> list[str]:
        return [p for p, inst in self.instances.items() if inst.kind == "register"]

    def with_semantics(self, mode: str) -> "CoreDesign":
        from dataclasses import replace
        return replace(self, guard_semantics=mode)


def _action_json(a: Action):
    if isinstance(a, ActionCall):
        return {"call": f"{a.inst}.{a.method}", "args": [expr_json(x) for x in a.args], "pred": expr_json(a.pred)}
    if isinstance(a, Display):
        return {"pli": a.task, "format": a.fmt, "args": [expr_json(x) for x in a.args], "pred": expr_json(a.pred)}
    return {"pli": "$finish", "code": expr_json(a.code), "pred": expr_json(a.pred)}


def design_json(design: CoreDesign) -> dict:
    """Deterministic JSON-able view of a design (the ``--dump-core`` document)."""
    return {
        "top": design.top,
        "guard_semantics": design.guard_semantics,
        "instances": [inst.to_json() for inst in design.instances.values()],
        "rules": [
            {
                "name": r.name,
                "file": r.loc.file,
                "line": r.loc.line,
                "guard": expr_json(r.guard),
                "actions": [_action_json(a) for a in r.actions],
                "calls": [{"call": f"{c.inst}.{c.method}", "pred": expr_json(c.pred)} for c in r.calls],
                "method_guards": [
                    {"method": g.method, "cond": expr_json(g.cond), "pred": expr_json(g.pred)} for g in r.method_guards
                ],
            }
            for r in design.rules
        ],
        "annotations": {
            "descending_urgency": [list(g) for g in design.annotations.descending_urgency],
            "execution_order": [list(g) for g in design.annotations.execution_order],
            "fire_when_enabled": sorted(design.annotations.fire_when_enabled),
        },
    }


DEFAULT_LOC = NOWHERE
