"""Surface syntax tree.

Node classes follow the core abstract syntax of the language one-to-one:
statements (``VarDeclAssign``, ``Rule`` ...), integer expressions
(``Num``, ``Apply`` ...), boolean expressions (``BTrue``, ``BBdiop`` ...) and
the FSM sub-language (``SeqFsm`` ...).  ``RegWrite`` is the only node that
exists purely as parser sugar; `desugar_sugar` removes it.

Every node carries a source location that is excluded from equality so that
structurally identical trees compare equal regardless of layout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from bluec.diagnostics import NOWHERE, Location


def _loc():
    return field(default=NOWHERE, compare=False, repr=False, kw_only=True)


# ---------------------------------------------------------------- types

@dataclass(frozen=True)
class Typen:
    """A named type, possibly with parameters: ``Reg#(int)``, ``Empty``."""
    name: str
    params: tuple = ()


@dataclass(frozen=True)
class TypenUintNs:
    """Unsized native integer (``Integer``); elaboration-time only."""


@dataclass(frozen=True)
class TypenUint1:
    """Native unsigned integer of a fixed width."""
    width: int


@dataclass(frozen=True)
class TypenAction:
    pass


TypeName = Union[Typen, TypenUintNs, TypenUint1, TypenAction]


@dataclass(frozen=True)
class ProvisoAlwaysReady:
    pass


@dataclass(frozen=True)
class ProvisoAlwaysEnabled:
    pass


@dataclass(frozen=True)
class ProtoValue:
    type: TypeName


@dataclass(frozen=True)
class ProtoActionValue:
    type: TypeName


@dataclass(frozen=True)
class ProtoAction:
    pass


@dataclass(frozen=True)
class MethodProto:
    name: str
    provisos: tuple
    protocol: Union[ProtoValue, ProtoActionValue, ProtoAction]
    formals: tuple  # ((TypeName, name), ...)
    loc: Location = _loc()


@dataclass(frozen=True)
class InterfaceDecl:
    name: str
    params: tuple  # ((TypeName, name), ...)
    methods: tuple
    loc: Location = _loc()


@dataclass(frozen=True)
class Attribute:
    name: str
    value: Optional[str] = None
    loc: Location = _loc()

    def rule_names(self) -> tuple[str, ...]:
        if not self.value:
            return ()
        return tuple(part.strip() for part in self.value.split(",") if part.strip())


ATTRIBUTE_NAMES = frozenset(
    {"descending_urgency", "execution_order", "fire_when_enabled", "always_ready", "always_enabled"}
)


# ---------------------------------------------------------------- boolean expressions

@dataclass(frozen=True)
class BTrue:
    loc: Location = _loc()


@dataclass(frozen=True)
class BFalse:
    loc: Location = _loc()


@dataclass(frozen=True)
class BFiring:
    rule: str
    loc: Location = _loc()


@dataclass(frozen=True)
class BNot:
    arg: "BExp"
    loc: Location = _loc()


@dataclass(frozen=True)
class BAnd:
    args: tuple
    loc: Location = _loc()


@dataclass(frozen=True)
class BOr:
    args: tuple
    loc: Location = _loc()


@dataclass(frozen=True)
class BBdiop:
    """Comparison: op is one of ``== != < <= > >=``."""
    op: str
    args: tuple
    loc: Location = _loc()


@dataclass(frozen=True)
class BOrred:
    """Integer used as a condition (true when non-zero)."""
    arg: "Exp"
    loc: Location = _loc()


BExp = Union[BTrue, BFalse, BFiring, BNot, BAnd, BOr, BBdiop, BOrred]


# ---------------------------------------------------------------- integer expressions

@dataclass(frozen=True)
class Num:
    value: int
    loc: Location = _loc()


@dataclass(frozen=True)
class BLift:
    """Condition used as a one-bit integer."""
    arg: BExp
    loc: Location = _loc()


@dataclass(frozen=True)
class Query:
    cond: BExp
    then: "Exp"
    else_: "Exp"
    loc: Location = _loc()


@dataclass(frozen=True)
class Var:
    name: str
    loc: Location = _loc()


@dataclass(frozen=True)
class Str:
    value: str
    loc: Location = _loc()


@dataclass(frozen=True)
class FsmStmtExpr:
    fsm: "FsmStmt"
    loc: Location = _loc()


@dataclass(frozen=True)
class IfcRef:
    name: str
    loc: Location = _loc()


@dataclass(frozen=True)
class Diadic:
    op: str  # + - * / % & | ^ << >>
    left: "Exp"
    right: "Exp"
    loc: Location = _loc()


@dataclass(frozen=True)
class Apply:
    """Method invocation ``a.b(args)`` or built-in call ``sizeof(T)``."""
    path: tuple
    args: tuple
    loc: Location = _loc()


@dataclass(frozen=True)
class TypeArg:
    """A type used in argument position, e.g. the operand of ``sizeof``."""
    type: TypeName
    loc: Location = _loc()


Exp = Union[Num, BLift, Query, Var, Str, FsmStmtExpr, IfcRef, Diadic, Apply, TypeArg]

BOOL_NODES = (BTrue, BFalse, BFiring, BNot, BAnd, BOr, BBdiop, BOrred)


# ---------------------------------------------------------------- FSM sub-language

@dataclass(frozen=True)
class SeqFsm:
    stmts: tuple
    loc: Location = _loc()


@dataclass(frozen=True)
class ParFsm:
    stmts: tuple
    loc: Location = _loc()


@dataclass(frozen=True)
class IfFsm:
    cond: BExp
    then: "FsmStmt"
    else_: Optional["FsmStmt"] = None
    loc: Location = _loc()


@dataclass(frozen=True)
class WhileFsm:
    cond: BExp
    body: "FsmStmt"
    loc: Location = _loc()


@dataclass(frozen=True)
class RepeatFsm:
    count: "Exp"
    body: "FsmStmt"
    loc: Location = _loc()


@dataclass(frozen=True)
class EascFsm:
    """One FSM step: an action block executed in a single cycle."""
    stmts: tuple
    loc: Location = _loc()


@dataclass(frozen=True)
class BreakFsm:
    loc: Location = _loc()


@dataclass(frozen=True)
class ContinueFsm:
    loc: Location = _loc()


FsmStmt = Union[SeqFsm, ParFsm, IfFsm, WhileFsm, RepeatFsm, EascFsm, BreakFsm, ContinueFsm]


# ---------------------------------------------------------------- statements

@dataclass(frozen=True)
class VarDeclAssign:
    """``T name <- ctor(args);`` -- instantiates a primitive or user module."""
    name: str
    args: tuple
    ctor: str
    type: TypeName
    loc: Location = _loc()


@dataclass(frozen=True)
class Rule:
    name: str
    guard: BExp
    body: tuple
    attrs: tuple = ()
    loc: Location = _loc()


@dataclass(frozen=True)
class AssignStmt:
    """``let x = e;``, ``T x = e;`` (decl set) or plain ``x = e;`` (decl None)."""
    name: str
    expr: Exp
    decl: object = None
    loc: Location = _loc()


@dataclass(frozen=True)
class EascActionStmt:
    expr: Exp
    loc: Location = _loc()


@dataclass(frozen=True)
class PliStmt:
    name: str
    args: tuple
    loc: Location = _loc()


@dataclass(frozen=True)
class BeginEndStmt:
    stmts: tuple
    loc: Location = _loc()


@dataclass(frozen=True)
class IfThenStmt:
    cond: BExp
    then: "Stmt"
    else_: Optional["Stmt"] = None
    loc: Location = _loc()


@dataclass(frozen=True)
class WhileStmt:
    cond: BExp
    body: "Stmt"
    else_: Optional["Stmt"] = None
    loc: Location = _loc()


@dataclass(frozen=True)
class ReturnStmt:
    expr: Exp
    loc: Location = _loc()


@dataclass(frozen=True)
class CaseStmt:
    expr: Exp
    arms: tuple  # ((Exp, Stmt), ...)
    default: Optional["Stmt"] = None
    loc: Location = _loc()


@dataclass(frozen=True)
class MethodDef:
    name: str
    formals: tuple  # ((TypeName, name), ...)
    guard: BExp
    body: tuple
    rtype: TypeName = TypenAction()
    loc: Location = _loc()


@dataclass(frozen=True)
class PrimBuffer:
    source: Exp
    aux: Exp
    loc: Location = _loc()


@dataclass(frozen=True)
class RegWrite:
    """``x <= e`` before desugaring."""
    name: str
    expr: Exp
    loc: Location = _loc()


Stmt = Union[
    VarDeclAssign, Rule, AssignStmt, EascActionStmt, PliStmt, BeginEndStmt, IfThenStmt,
    WhileStmt, ReturnStmt, CaseStmt, MethodDef, PrimBuffer, RegWrite,
]


# ---------------------------------------------------------------- modules

@dataclass(frozen=True)
class ModuleParams:
    params: tuple  # #(...) parameters: ((TypeName, name), ...)
    ifc_args: tuple  # extra interface arguments after the implemented interface
    implemented: TypeName


@dataclass(frozen=True)
class ModuleDef:
    name: str
    params: ModuleParams
    body: tuple
    attrs: tuple = ()
    loc: Location = _loc()


@dataclass(frozen=True)
class CompilationUnit:
    items: tuple  # InterfaceDecl | ModuleDef, in source order

    @property
    def modules(self) -> dict[str, ModuleDef]:
        return {m.name: m for m in self.items if isinstance(m, ModuleDef)}

    @property
    def interfaces(self) -> dict[str, InterfaceDecl]:
        return {i.name: i for i in self.items if isinstance(i, InterfaceDecl)}


def to_bexp(e) -> BExp:
    if isinstance(e, BOOL_NODES):
        return e
    if isinstance(e, BLift):
        return e.arg
    return BOrred(e, loc=getattr(e, "loc", NOWHERE))


def to_exp(e) -> Exp:
    if isinstance(e, BOOL_NODES):
        return BLift(e, loc=e.loc)
    return e
