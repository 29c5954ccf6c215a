"""Render a surface tree back to source text.

Expressions are printed fully parenthesised so that re-parsing the output
gives back an equal tree.
"""

from __future__ import annotations

import json

from bluec.frontend import ast as A


def type_text(t) -> str:
    if isinstance(t, A.TypenUint1):
        return f"UInt#({t.width})"
    if isinstance(t, A.TypenUintNs):
        return "Integer"
    if isinstance(t, A.TypenAction):
        return "Action"
    if isinstance(t, A.Typen):
        if not t.params:
            return t.name
        inner = ", ".join(str(p) if isinstance(p, int) else type_text(p) for p in t.params)
        return f"{t.name}#({inner})"
    raise TypeError(t)


def _formals(formals) -> str:
    return ", ".join(f"{type_text(t)} {n}" for t, n in formals)


def _string(s: str) -> str:
    return json.dumps(s)


def expr_text(e) -> str:
    if isinstance(e, A.Num):
        return str(e.value)
    if isinstance(e, A.Str):
        return _string(e.value)
    if isinstance(e, (A.Var, A.IfcRef)):
        return e.name
    if isinstance(e, A.BLift):
        return expr_text(e.arg)
    if isinstance(e, A.Query):
        return f"({expr_text(e.cond)} ? {expr_text(e.then)} : {expr_text(e.else_)})"
    if isinstance(e, A.Diadic):
        if e.op == "-" and isinstance(e.left, A.Num) and e.left.value == 0:
            return f"(0 - {expr_text(e.right)})"
        return f"({expr_text(e.left)} {e.op} {expr_text(e.right)})"
    if isinstance(e, A.Apply):
        return f"{'.'.join(e.path)}({', '.join(expr_text(a) for a in e.args)})"
    if isinstance(e, A.TypeArg):
        return type_text(e.type)
    if isinstance(e, A.FsmStmtExpr):
        return fsm_text(e.fsm, 0).strip()
    if isinstance(e, A.BTrue):
        return "True"
    if isinstance(e, A.BFalse):
        return "False"
    if isinstance(e, A.BFiring):
        return f"$firing({e.rule})"
    if isinstance(e, A.BNot):
        return f"(!{expr_text(e.arg)})"
    if isinstance(e, A.BAnd):
        return "(" + " && ".join(expr_text(a) for a in e.args) + ")"
    if isinstance(e, A.BOr):
        return "(" + " || ".join(expr_text(a) for a in e.args) + ")"
    if isinstance(e, A.BBdiop):
        return f"({expr_text(e.args[0])} {e.op} {expr_text(e.args[1])})"
    if isinstance(e, A.BOrred):
        return expr_text(e.arg)
    raise TypeError(f"cannot print {type(e).__name__}")


def _pad(depth: int) -> str:
    return "   " * depth


def fsm_text(f, depth: int) -> str:
    p = _pad(depth)
    if isinstance(f, (A.SeqFsm, A.ParFsm)):
        kw = "seq" if isinstance(f, A.SeqFsm) else "par"
        inner = "".join(fsm_text(s, depth + 1) for s in f.stmts)
        return f"{p}{kw}\n{inner}{p}end{kw}\n"
    if isinstance(f, A.IfFsm):
        out = f"{p}if ({expr_text(f.cond)})\n{fsm_text(f.then, depth + 1)}"
        if f.else_ is not None:
            out += f"{p}else\n{fsm_text(f.else_, depth + 1)}"
        return out
    if isinstance(f, A.WhileFsm):
        return f"{p}while ({expr_text(f.cond)})\n{fsm_text(f.body, depth + 1)}"
    if isinstance(f, A.RepeatFsm):
        return f"{p}repeat ({expr_text(f.count)})\n{fsm_text(f.body, depth + 1)}"
    if isinstance(f, A.BreakFsm):
        return f"{p}break;\n"
    if isinstance(f, A.ContinueFsm):
        return f"{p}continue;\n"
    if isinstance(f, A.EascFsm):
        inner = "".join(stmt_text(s, depth + 1) for s in f.stmts)
        return f"{p}action\n{inner}{p}endaction\n"
    raise TypeError(f"cannot print {type(f).__name__}")


def _attrs_text(attrs, depth: int) -> str:
    if not attrs:
        return ""
    parts = [a.name if a.value is None else f"{a.name} = {_string(a.value)}" for a in attrs]
    return f"{_pad(depth)}(* {', '.join(parts)} *)\n"


def stmt_text(s, depth: int = 0) -> str:
    p = _pad(depth)
    if isinstance(s, A.VarDeclAssign):
        args = f"({', '.join(expr_text(a) for a in s.args)})" if s.args else ""
        return f"{p}{type_text(s.type)} {s.name} <- {s.ctor}{args};\n"
    if isinstance(s, A.Rule):
        body = "".join(stmt_text(b, depth + 1) for b in s.body)
        return f"{_attrs_text(s.attrs, depth)}{p}rule {s.name} ({expr_text(s.guard)});\n{body}{p}endrule\n"
    if isinstance(s, A.AssignStmt):
        if s.decl is None:
            lhs = s.name
        elif s.decl == "let":
            lhs = f"let {s.name}"
        else:
            lhs = f"{type_text(s.decl)} {s.name}"
        return f"{p}{lhs} = {expr_text(s.expr)};\n"
    if isinstance(s, A.EascActionStmt):
        if isinstance(s.expr, A.FsmStmtExpr):
            return f"{p}{expr_text(s.expr)};\n"
        return f"{p}{expr_text(s.expr)};\n"
    if isinstance(s, A.PliStmt):
        return f"{p}{s.name}({', '.join(expr_text(a) for a in s.args)});\n"
    if isinstance(s, A.BeginEndStmt):
        inner = "".join(stmt_text(b, depth + 1) for b in s.stmts)
        return f"{p}begin\n{inner}{p}end\n"
    if isinstance(s, A.IfThenStmt):
        out = f"{p}if ({expr_text(s.cond)})\n{stmt_text(s.then, depth + 1)}"
        if s.else_ is not None:
            out += f"{p}else\n{stmt_text(s.else_, depth + 1)}"
        return out
    if isinstance(s, A.WhileStmt):
        if s.else_ is not None:
            raise ValueError("while statements with an else arm have no surface syntax")
        return f"{p}while ({expr_text(s.cond)})\n{stmt_text(s.body, depth + 1)}"
    if isinstance(s, A.ReturnStmt):
        return f"{p}return {expr_text(s.expr)};\n"
    if isinstance(s, A.CaseStmt):
        out = f"{p}case ({expr_text(s.expr)})\n"
        for k, v in s.arms:
            out += f"{_pad(depth + 1)}{expr_text(k)}:\n{stmt_text(v, depth + 2)}"
        if s.default is not None:
            out += f"{_pad(depth + 1)}default:\n{stmt_text(s.default, depth + 2)}"
        return out + f"{p}endcase\n"
    if isinstance(s, A.MethodDef):
        body = "".join(stmt_text(b, depth + 1) for b in s.body)
        return (
            f"{p}method {type_text(s.rtype)} {s.name}({_formals(s.formals)}) if ({expr_text(s.guard)});\n"
            f"{body}{p}endmethod\n"
        )
    if isinstance(s, A.PrimBuffer):
        return f"{p}primBuffer({expr_text(s.source)}, {expr_text(s.aux)});\n"
    if isinstance(s, A.RegWrite):
        return f"{p}{s.name} <= {expr_text(s.expr)};\n"
    raise TypeError(f"cannot print {type(s).__name__}")


def _proto_text(m: A.MethodProto) -> str:
    attrs = []
    for pv in m.provisos:
        attrs.append("always_ready" if isinstance(pv, A.ProvisoAlwaysReady) else "always_enabled")
    prefix = f"   (* {', '.join(attrs)} *)\n" if attrs else ""
    if isinstance(m.protocol, A.ProtoAction):
        rtype = "Action"
    elif isinstance(m.protocol, A.ProtoActionValue):
        rtype = f"ActionValue#({type_text(m.protocol.type)})"
    else:
        rtype = type_text(m.protocol.type)
    return f"{prefix}   method {rtype} {m.name}({_formals(m.formals)});\n"


def unit_text(unit: A.CompilationUnit) -> str:
    out = []
    for item in unit.items:
        if isinstance(item, A.InterfaceDecl):
            params = ""
            if item.params:
                params = "#(" + ", ".join(
                    f"type {n}" if t == A.Typen("type") else f"{type_text(t)} {n}" for t, n in item.params
                ) + ")"
            methods = "".join(_proto_text(m) for m in item.methods)
            out.append(f"interface {item.name}{params};\n{methods}endinterface\n")
        else:
            mp = item.params
            params = f" #({_formals(mp.params)})" if mp.params else ""
            ifcs = type_text(mp.implemented)
            if mp.ifc_args:
                ifcs += ", " + _formals(mp.ifc_args)
            body = "".join(stmt_text(s, 1) for s in item.body)
            out.append(f"{_attrs_text(item.attrs, 0)}module {item.name}{params} ({ifcs});\n{body}endmodule\n")
    return "\n".join(out)
