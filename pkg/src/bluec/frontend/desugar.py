"""Purely syntactic rewrites applied after parsing.

Register sugar is expanded: a bare register name in expression position
becomes ``r._read()`` and ``r <= e`` becomes ``r._write(e)``.  Bare names of
other instances become interface references.  Which names denote registers
is decided from declarations alone; no elaboration is needed.
"""

from __future__ import annotations

import dataclasses

from bluec.frontend import ast as A

REGISTER_CTORS = frozenset({"mkReg", "mk_register", "mkRegU"})


def _is_register_type(t) -> bool:
    return isinstance(t, A.Typen) and t.name == "Reg"


def _declared_names(stmts, regs: set, instances: set) -> None:
    for s in stmts:
        if isinstance(s, A.VarDeclAssign):
            if s.ctor in REGISTER_CTORS or _is_register_type(s.type):
                regs.add(s.name)
            else:
                instances.add(s.name)
        elif isinstance(s, A.BeginEndStmt):
            _declared_names(s.stmts, regs, instances)
        elif isinstance(s, (A.IfThenStmt, A.WhileStmt)):
            branches = [s.then if isinstance(s, A.IfThenStmt) else s.body, s.else_]
            _declared_names([b for b in branches if b is not None], regs, instances)
        elif isinstance(s, A.CaseStmt):
            _declared_names([arm for _, arm in s.arms] + ([s.default] if s.default else []), regs, instances)


class _Rewriter:
    def __init__(self, regs: frozenset, instances: frozenset):
        self.regs = regs
        self.instances = instances

    def scoped(self, shadowed) -> "_Rewriter":
        shadowed = set(shadowed)
        if not shadowed & (self.regs | self.instances):
            return self
        return _Rewriter(self.regs - shadowed, self.instances - shadowed)

    # expressions have no binders, so a generic walk suffices
    def expr(self, e):
        if isinstance(e, A.Var):
            if e.name in self.regs:
                return A.Apply((e.name, "_read"), (), loc=e.loc)
            if e.name in self.instances:
                return A.IfcRef(e.name, loc=e.loc)
            return e
        if isinstance(e, A.FsmStmtExpr):
            return dataclasses.replace(e, fsm=self.fsm(e.fsm))
        if isinstance(e, (A.Num, A.Str, A.IfcRef, A.TypeArg, A.BTrue, A.BFalse, A.BFiring)):
            return e
        changes = {}
        for f in dataclasses.fields(e):
            if f.name == "loc":
                continue
            v = getattr(e, f.name)
            if isinstance(v, tuple):
                nv = tuple(self.expr(x) if dataclasses.is_dataclass(x) else x for x in v)
            elif dataclasses.is_dataclass(v):
                nv = self.expr(v)
            else:
                continue
            if nv != v or nv is not v:
                changes[f.name] = nv
        return dataclasses.replace(e, **changes) if changes else e

    def fsm(self, f):
        if isinstance(f, (A.SeqFsm, A.ParFsm)):
            return dataclasses.replace(f, stmts=tuple(self.fsm(s) for s in f.stmts))
        if isinstance(f, A.IfFsm):
            return dataclasses.replace(
                f, cond=self.expr(f.cond), then=self.fsm(f.then),
                else_=self.fsm(f.else_) if f.else_ is not None else None,
            )
        if isinstance(f, A.WhileFsm):
            return dataclasses.replace(f, cond=self.expr(f.cond), body=self.fsm(f.body))
        if isinstance(f, A.RepeatFsm):
            return dataclasses.replace(f, count=self.expr(f.count), body=self.fsm(f.body))
        if isinstance(f, A.EascFsm):
            return dataclasses.replace(f, stmts=self.block(f.stmts))
        return f

    def block(self, stmts) -> tuple:
        out = []
        rw = self
        for s in stmts:
            out.append(rw.stmt(s))
            if isinstance(s, A.AssignStmt) and s.decl is not None:
                rw = rw.scoped([s.name])
        return tuple(out)

    def stmt(self, s):
        if isinstance(s, A.RegWrite):
            return A.EascActionStmt(A.Apply((s.name, "_write"), (self.expr(s.expr),), loc=s.loc), loc=s.loc)
        if isinstance(s, A.VarDeclAssign):
            return dataclasses.replace(s, args=tuple(self.expr(a) for a in s.args))
        if isinstance(s, A.Rule):
            return dataclasses.replace(s, guard=self.expr(s.guard), body=self.block(s.body))
        if isinstance(s, A.AssignStmt):
            return dataclasses.replace(s, expr=self.expr(s.expr))
        if isinstance(s, A.EascActionStmt):
            return dataclasses.replace(s, expr=self.expr(s.expr))
        if isinstance(s, A.PliStmt):
            return dataclasses.replace(s, args=tuple(self.expr(a) for a in s.args))
        if isinstance(s, A.BeginEndStmt):
            return dataclasses.replace(s, stmts=self.block(s.stmts))
        if isinstance(s, A.IfThenStmt):
            return dataclasses.replace(
                s, cond=self.expr(s.cond), then=self.stmt(s.then),
                else_=self.stmt(s.else_) if s.else_ is not None else None,
            )
        if isinstance(s, A.WhileStmt):
            return dataclasses.replace(
                s, cond=self.expr(s.cond), body=self.stmt(s.body),
                else_=self.stmt(s.else_) if s.else_ is not None else None,
            )
        if isinstance(s, A.ReturnStmt):
            return dataclasses.replace(s, expr=self.expr(s.expr))
        if isinstance(s, A.CaseStmt):
            return dataclasses.replace(
                s, expr=self.expr(s.expr),
                arms=tuple((self.expr(k), self.stmt(v)) for k, v in s.arms),
                default=self.stmt(s.default) if s.default is not None else None,
            )
        if isinstance(s, A.MethodDef):
            inner = self.scoped(name for _, name in s.formals)
            return dataclasses.replace(s, guard=inner.expr(s.guard), body=inner.block(s.body))
        if isinstance(s, A.PrimBuffer):
            return dataclasses.replace(s, source=self.expr(s.source), aux=self.expr(s.aux))
        raise TypeError(f"unknown statement {type(s).__name__}")


def desugar_module(m: A.ModuleDef) -> A.ModuleDef:
    regs: set = set()
    instances: set = set()
    for t, name in m.params.params + m.params.ifc_args:
        if _is_register_type(t):
            regs.add(name)
        elif isinstance(t, A.Typen):
            instances.add(name)
    _declared_names(m.body, regs, instances)
    rw = _Rewriter(frozenset(regs), frozenset(instances - regs))
    return dataclasses.replace(m, body=rw.block(m.body))


def desugar_sugar(unit: A.CompilationUnit) -> A.CompilationUnit:
    items = tuple(desugar_module(i) if isinstance(i, A.ModuleDef) else i for i in unit.items)
    return A.CompilationUnit(items)
