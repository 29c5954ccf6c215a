"""Structural elaboration of a desugared compilation unit into a CoreDesign.

The top module is instantiated recursively.  Module-level control flow is
executed at compile time, user methods are inlined at each call site, FSM
statements become ordinary rules over a state register, and every rule ends
up referring only to primitive methods.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from bluec import core as C
from bluec import primitives as P
from bluec.diagnostics import NOWHERE, ElaborationError, Location, NotStaticError
from bluec.elaborator.fsm import Machine, build_machine
from bluec.frontend import ast as A

MAX_STATIC_ITERATIONS = 65536
FSM_CTORS = {"mkAutoFSM": True, "mkFSM": False, "mkOnceFSM": False}
PLI_TASKS = {"$display", "$write", "$finish"}


# ---------------------------------------------------------------- bindings

@dataclass(frozen=True)
class PrimRef:
    path: str


@dataclass(eq=False)
class ModInst:
    path: str  # prefix including trailing dot, "" for the top
    module: A.ModuleDef
    env: dict
    methods: dict


@dataclass(frozen=True)
class FsmVal:
    fsm: object


def _is_data(v) -> bool:
    return not isinstance(v, (PrimRef, ModInst, FsmVal))


def _is_static(v) -> bool:
    return isinstance(v, C.Const)


# ---------------------------------------------------------------- rule context

@dataclass
class RuleCtx:
    name: str
    prefix: str
    actions: list = field(default_factory=list)
    calls: list = field(default_factory=list)
    mguards: list = field(default_factory=list)
    inline_stack: list = field(default_factory=list)
    value_only: bool = False
    static: bool = False  # module-level evaluation: no run-time reads allowed


STATIC_CTX = RuleCtx("<static>", "", static=True)


# scope key for the module whose method body is being inlined; not a legal identifier
SELF = "%self"


def _sibling(e: A.Apply, scope: dict) -> bool:
    """A bare call inside a method body naming another method of the same module."""
    return len(e.path) == 1 and SELF in scope and e.path[0] in scope[SELF].methods


def type_width(t, loc: Location = NOWHERE, default: int | None = None) -> int:
    if isinstance(t, A.TypenUint1):
        return t.width
    if isinstance(t, A.TypenUintNs):
        raise ElaborationError("'Integer' has no hardware width", loc)
    if isinstance(t, A.Typen) and t.params:
        p = t.params[0]
        return p if isinstance(p, int) else type_width(p, loc, default)
    if default is not None:
        return default
    raise ElaborationError(f"cannot determine bit width of type '{getattr(t, 'name', t)}'", loc)


def _first_dynamic_name(e, scope) -> str:
    """Best-effort name of the run-time value that makes `e` non-static."""
    if isinstance(e, A.Var):
        return e.name
    if isinstance(e, A.Apply):
        return ".".join(e.path[:-1]) or e.path[0]
    if isinstance(e, A.BFiring):
        return f"$firing({e.rule})"
    for v in vars(e).values():
        items = v if isinstance(v, tuple) else (v,)
        for x in items:
            if hasattr(x, "__dataclass_fields__"):
                found = _first_dynamic_name(x, scope)
                if found:
                    return found
    return ""


class Elaborator:
    def __init__(self, unit: A.CompilationUnit, guard_semantics: str = "strict"):
        self.unit = unit
        self.modules = unit.modules
        self.interfaces = unit.interfaces
        self.mode = guard_semantics
        self.instances: dict[str, P.PrimitiveInstance] = {}
        self.rules: list[C.CoreRule] = []
        self.urgency: list[tuple] = []
        self.exec_order: list[tuple] = []
        self.fire_when_enabled: set[str] = set()
        self.fsms: list[C.FsmInfo] = []
        self.fsm_counter = itertools.count()
        self.instantiating: list[str] = []

    # ------------------------------------------------------------ entry

    def elaborate(self, top: str) -> C.CoreDesign:
        if top not in self.modules:
            raise ElaborationError(f"unknown top module '{top}'")
        mod = self.modules[top]
        if mod.params.implemented != A.Typen("Empty"):
            raise ElaborationError(f"top module '{top}' must implement the Empty interface", mod.loc)
        if mod.params.params or mod.params.ifc_args:
            raise ElaborationError(f"top module '{top}' must not take parameters", mod.loc)
        self.instantiate_module(mod, "", {})
        names = [r.name for r in self.rules]
        dup = {n for n in names if names.count(n) > 1}
        if dup:
            raise ElaborationError(f"duplicate rule name '{sorted(dup)[0]}'")
        ann = C.Annotations(tuple(self.urgency), tuple(self.exec_order), frozenset(self.fire_when_enabled))
        known = set(names)
        for n in sorted(ann.rule_names()):
            if n not in known:
                raise ElaborationError(f"annotation names unknown rule '{n}'")
        for r in self.rules:
            for e in r.expressions():
                for node in C.walk(e):
                    if isinstance(node, C.Firing) and node.rule not in known:
                        raise ElaborationError(f"$firing refers to unknown rule '{node.rule}'", r.loc)
        return C.CoreDesign(top, dict(self.instances), tuple(self.rules), ann, self.mode, tuple(self.fsms))

    # ------------------------------------------------------------ modules

    def instantiate_module(self, mod: A.ModuleDef, prefix: str, bindings: dict) -> ModInst:
        if mod.name in self.instantiating:
            raise ElaborationError(f"module '{mod.name}' instantiates itself", mod.loc)
        self.instantiating.append(mod.name)
        env = dict(bindings)
        inst = ModInst(prefix, mod, env, {})
        for a in mod.attrs:
            self.annotation(a, prefix, None, a.loc)
        self.module_block(mod.body, env, inst)
        self.instantiating.pop()
        ifc = mod.params.implemented
        if isinstance(ifc, A.Typen) and ifc.name in self.interfaces:
            for proto in self.interfaces[ifc.name].methods:
                if proto.name not in inst.methods:
                    raise ElaborationError(
                        f"module '{mod.name}' does not define method '{proto.name}' of interface '{ifc.name}'",
                        mod.loc,
                    )
        return inst

    def annotation(self, a: A.Attribute, prefix: str, rule: str | None, loc) -> None:
        names = tuple(prefix + n for n in a.rule_names())
        if a.name == "descending_urgency":
            if len(names) < 2:
                raise ElaborationError("descending_urgency needs at least two rule names", loc)
            self.urgency.append(names)
        elif a.name == "execution_order":
            if len(names) < 2:
                raise ElaborationError("execution_order needs at least two rule names", loc)
            self.exec_order.append(names)
        elif a.name == "fire_when_enabled":
            if names:
                self.fire_when_enabled.update(names)
            elif rule is not None:
                self.fire_when_enabled.add(rule)
            else:
                raise ElaborationError("fire_when_enabled must name a rule", loc)
        else:
            raise ElaborationError(f"attribute '{a.name}' is not allowed here", loc)

    def module_block(self, stmts, env: dict, inst: ModInst) -> None:
        for s in stmts:
            self.module_stmt(s, env, inst)

    def module_stmt(self, s, env: dict, inst: ModInst) -> None:
        prefix = inst.path
        if isinstance(s, A.VarDeclAssign):
            self.instantiate(s, env, inst)
        elif isinstance(s, A.Rule):
            name = prefix + s.name
            for a in s.attrs:
                self.annotation(a, prefix, name, a.loc)
            self.rules.append(self.elab_rule(name, s.loc, s.guard, s.body, env, prefix))
        elif isinstance(s, A.MethodDef):
            if s.name in inst.methods:
                raise ElaborationError(f"method '{s.name}' defined twice", s.loc)
            inst.methods[s.name] = s
        elif isinstance(s, A.AssignStmt):
            if isinstance(s.expr, A.FsmStmtExpr):
                env[s.name] = FsmVal(s.expr.fsm)
            elif isinstance(s.expr, A.IfcRef):
                env[s.name] = self.lookup(s.expr.name, env, s.expr.loc)
            else:
                if s.decl is None and s.name not in env:
                    raise ElaborationError(f"assignment to undeclared identifier '{s.name}'", s.loc)
                env[s.name] = C.Const(self.static_eval(s.expr, env))
        elif isinstance(s, A.BeginEndStmt):
            self.module_block(s.stmts, env, inst)
        elif isinstance(s, A.IfThenStmt):
            if self.static_eval(s.cond, env):
                self.module_stmt(s.then, env, inst)
            elif s.else_ is not None:
                self.module_stmt(s.else_, env, inst)
        elif isinstance(s, A.WhileStmt):
            n = 0
            while self.static_eval(s.cond, env):
                self.module_stmt(s.body, env, inst)
                n += 1
                if n > MAX_STATIC_ITERATIONS:
                    raise ElaborationError("elaboration-time loop does not terminate", s.loc)
            if s.else_ is not None and n == 0:
                self.module_stmt(s.else_, env, inst)
        elif isinstance(s, A.CaseStmt):
            v = self.static_eval(s.expr, env)
            for label, body in s.arms:
                if self.static_eval(label, env) == v:
                    self.module_stmt(body, env, inst)
                    break
            else:
                if s.default is not None:
                    self.module_stmt(s.default, env, inst)
        elif isinstance(s, A.EascActionStmt):
            e = s.expr
            if isinstance(e, A.FsmStmtExpr):
                self.fsm(f"fsm{next(self.fsm_counter)}", e.fsm, env, prefix, True, s.loc)
            elif isinstance(e, A.Apply) and len(e.path) == 1 and e.path[0] in FSM_CTORS:
                fsm = self.fsm_arg(e.args, env, e.loc)
                self.fsm(f"fsm{next(self.fsm_counter)}", fsm, env, prefix, FSM_CTORS[e.path[0]], s.loc)
            else:
                raise ElaborationError("actions are only allowed inside rules and methods", s.loc)
        elif isinstance(s, (A.PliStmt, A.ReturnStmt, A.PrimBuffer)):
            raise ElaborationError("statement is only allowed inside rules and methods", s.loc)
        else:
            raise ElaborationError(f"unexpected statement {type(s).__name__} at module level", s.loc)

    def fsm_arg(self, args, env, loc):
        if len(args) != 1:
            raise ElaborationError("FSM constructors take exactly one statement", loc)
        a = args[0]
        if isinstance(a, A.FsmStmtExpr):
            return a.fsm
        if isinstance(a, (A.Var, A.IfcRef)):
            v = self.lookup(a.name, env, a.loc)
            if isinstance(v, FsmVal):
                return v.fsm
        raise ElaborationError("FSM constructor argument must be an FSM statement", loc)

    def instantiate(self, s: A.VarDeclAssign, env: dict, inst: ModInst) -> None:
        path = inst.path + s.name
        if s.ctor in P.CONSTRUCTORS:
            kind, depth = P.CONSTRUCTORS[s.ctor]
            args = [self.static_eval(a, env) for a in s.args]
            kw = {}
            if kind == "register":
                if s.ctor == "mkRegU":
                    if args:
                        raise ElaborationError("mkRegU takes no arguments", s.loc)
                    kw["reset"] = 0
                else:
                    if len(args) != 1:
                        raise ElaborationError(f"{s.ctor} takes one reset value", s.loc)
                    kw["reset"] = args[0]
                kw["width"] = type_width(s.type, s.loc)
            elif kind in ("fifo", "pipe"):
                if s.ctor == "mkSizedFIFO":
                    if len(args) != 1:
                        raise ElaborationError("mkSizedFIFO takes one depth argument", s.loc)
                    depth = args[0]
                elif args:
                    raise ElaborationError(f"{s.ctor} takes no arguments", s.loc)
                kw["depth"] = depth
                kw["width"] = type_width(s.type, s.loc, default=32)
            else:
                if len(args) > 1:
                    raise ElaborationError("mkSyncRAM takes at most one address-width argument", s.loc)
                kw["addr_width"] = args[0] if args else P.DEFAULT_ADDR_WIDTH
                kw["width"] = type_width(s.type, s.loc, default=32)
            if path in self.instances:
                raise ElaborationError(f"duplicate instance '{path}'", s.loc)
            self.instances[path] = P.instantiate_primitive(kind, path, loc=s.loc, **kw)
            env[s.name] = PrimRef(path)
        elif s.ctor in FSM_CTORS:
            fsm = self.fsm_arg(s.args, env, s.loc)
            self.fsm(s.name, fsm, env, inst.path, FSM_CTORS[s.ctor], s.loc)
            env[s.name] = FsmVal(fsm)
        elif s.ctor in self.modules:
            child = self.modules[s.ctor]
            declared = s.type
            implemented = child.params.implemented
            if isinstance(declared, A.Typen) and isinstance(implemented, A.Typen) and declared.name != implemented.name:
                raise ElaborationError(
                    f"module '{s.ctor}' implements '{implemented.name}', not '{declared.name}'", s.loc
                )
            formals = child.params.params + child.params.ifc_args
            if len(s.args) != len(formals):
                raise ElaborationError(
                    f"module '{s.ctor}' expects {len(formals)} arguments, got {len(s.args)}", s.loc
                )
            bindings = {}
            for (ftype, fname), arg in zip(formals, s.args):
                bindings[fname] = self.module_arg(ftype, arg, env)
            if any(p.startswith(path + ".") for p in self.instances):
                raise ElaborationError(f"duplicate instance '{path}'", s.loc)
            env[s.name] = self.instantiate_module(child, path + ".", bindings)
        else:
            raise ElaborationError(f"unknown module or primitive constructor '{s.ctor}'", s.loc)

    def module_arg(self, ftype, arg, env):
        if isinstance(arg, A.IfcRef):
            return self.lookup(arg.name, env, arg.loc)
        if isinstance(arg, A.Apply) and len(arg.path) == 2 and arg.path[1] == "_read" and not arg.args:
            v = env.get(arg.path[0])
            if isinstance(v, PrimRef) and isinstance(ftype, A.Typen) and ftype.name == "Reg":
                return v
        if isinstance(arg, A.Var) and isinstance(env.get(arg.name), (PrimRef, ModInst, FsmVal)):
            return env[arg.name]
        return C.Const(self.static_eval(arg, env))

    def lookup(self, name: str, env: dict, loc):
        if name not in env:
            raise ElaborationError(f"unresolved identifier '{name}'", loc)
        return env[name]

    # ------------------------------------------------------------ static evaluation

    def static_eval(self, e, env: dict) -> int:
        """Evaluate an elaboration-time expression to an integer constant."""
        v = self.expr(e, dict(env), C.TRUE, STATIC_CTX)
        if not isinstance(v, C.Const):
            raise NotStaticError(_first_dynamic_name(e, env) or "expression", getattr(e, "loc", None))
        return v.value

    # ------------------------------------------------------------ rules

    def elab_rule(self, name, loc, guard, body, env, prefix, core_guard=C.TRUE, extra=()) -> C.CoreRule:
        ctx = RuleCtx(name, prefix)
        scope = dict(env)
        g = C.conj(core_guard, self.bexpr(guard, scope, C.TRUE, ctx)) if guard is not None else core_guard
        self.block(body, scope, C.TRUE, ctx)
        ctx.actions.extend(extra)
        self.check_duplicate_actions(ctx, loc)
        return C.CoreRule(name, loc, g, tuple(ctx.actions), tuple(ctx.calls), tuple(ctx.mguards))

    def check_duplicate_actions(self, ctx: RuleCtx, loc) -> None:
        from bluec.guards import preds_disjoint

        seen: dict = {}
        for a in ctx.actions:
            if isinstance(a, C.ActionCall):
                key = (a.inst, a.method)
                for other in seen.get(key, []):
                    if not preds_disjoint(other.pred, a.pred):
                        raise ElaborationError(
                            f"rule '{ctx.name}' calls {a.inst}.{a.method} more than once under overlapping conditions",
                            loc,
                        )
                seen.setdefault(key, []).append(a)
            elif isinstance(a, C.Finish):
                pass

    def block(self, stmts, scope: dict, pred, ctx: RuleCtx):
        """Elaborate a statement list; returns the value of a tail `return`, if any."""
        for i, s in enumerate(stmts):
            ret = self.stmt(s, scope, pred, ctx)
            if ret is not None:
                if i != len(stmts) - 1:
                    raise ElaborationError("statements after 'return' are unreachable", stmts[i + 1].loc)
                return ret
        return None

    def child_block(self, s, scope: dict, pred, ctx):
        inner = dict(scope)
        ret = self.stmt(s, inner, pred, ctx)
        return inner, ret

    def stmt(self, s, scope: dict, pred, ctx: RuleCtx):
        if isinstance(s, A.EascActionStmt):
            self.action_expr(s.expr, scope, pred, ctx, s.loc)
        elif isinstance(s, A.PliStmt):
            self.pli(s, scope, pred, ctx)
        elif isinstance(s, A.AssignStmt):
            if isinstance(s.expr, A.IfcRef):
                v = self.lookup(s.expr.name, scope, s.expr.loc)
            else:
                v = self.expr(s.expr, scope, pred, ctx)
            if s.decl is None:
                if s.name not in scope:
                    raise ElaborationError(f"assignment to undeclared identifier '{s.name}'", s.loc)
                if not _is_data(scope[s.name]):
                    raise ElaborationError(f"cannot assign to interface '{s.name}'", s.loc)
            scope[s.name] = v
        elif isinstance(s, A.BeginEndStmt):
            inner = dict(scope)
            ret = self.block(s.stmts, inner, pred, ctx)
            self.merge_back(scope, inner)
            return ret
        elif isinstance(s, A.IfThenStmt):
            return self.if_stmt(s.cond, s.then, s.else_, scope, pred, ctx, s.loc)
        elif isinstance(s, A.CaseStmt):
            return self.case_stmt(s, scope, pred, ctx)
        elif isinstance(s, A.WhileStmt):
            n = 0
            while True:
                c = self.bexpr(s.cond, scope, pred, ctx)
                if not isinstance(c, C.Const):
                    raise NotStaticError(_first_dynamic_name(s.cond, scope) or "loop condition", s.loc)
                if not c.value:
                    break
                inner, ret = self.child_block(s.body, scope, pred, ctx)
                self.merge_back(scope, inner)
                if ret is not None:
                    raise ElaborationError("'return' inside a loop is not supported", s.loc)
                n += 1
                if n > MAX_STATIC_ITERATIONS:
                    raise ElaborationError("elaboration-time loop does not terminate", s.loc)
            if n == 0 and s.else_ is not None:
                inner, _ = self.child_block(s.else_, scope, pred, ctx)
                self.merge_back(scope, inner)
        elif isinstance(s, A.ReturnStmt):
            return self.expr(s.expr, scope, pred, ctx)
        elif isinstance(s, A.PrimBuffer):
            # identity buffer: the first operand is evaluated, the second is unused
            self.expr(s.source, scope, pred, ctx)
        elif isinstance(s, (A.Rule, A.MethodDef, A.VarDeclAssign)):
            raise ElaborationError(f"{type(s).__name__} is not allowed inside a rule or method body", s.loc)
        else:
            raise ElaborationError(f"unexpected statement {type(s).__name__}", getattr(s, "loc", None))
        return None

    @staticmethod
    def merge_back(scope: dict, inner: dict) -> None:
        for k in scope:
            if inner[k] is not scope[k]:
                scope[k] = inner[k]

    def if_stmt(self, cond, then, else_, scope, pred, ctx, loc):
        c = self.bexpr(cond, scope, pred, ctx)
        if isinstance(c, C.Const):
            if c.value:
                inner, ret = self.child_block(then, scope, pred, ctx)
            elif else_ is not None:
                inner, ret = self.child_block(else_, scope, pred, ctx)
            else:
                return None
            self.merge_back(scope, inner)
            return ret
        if ctx.static:
            raise NotStaticError(_first_dynamic_name(cond, scope) or "condition", loc)
        t_scope, t_ret = self.child_block(then, scope, C.conj(pred, c), ctx)
        if else_ is not None:
            e_scope, e_ret = self.child_block(else_, scope, C.conj(pred, C.neg(c)), ctx)
        else:
            e_scope, e_ret = dict(scope), None
        if (t_ret is None) != (e_ret is None):
            raise ElaborationError("'return' must appear in both branches of a run-time 'if'", loc)
        for k, v in scope.items():
            tv, ev = t_scope[k], e_scope[k]
            if tv is v and ev is v:
                continue
            if not (_is_data(tv) and _is_data(ev)):
                raise ElaborationError(f"interface binding '{k}' differs between branches", loc)
            scope[k] = C.mk("mux", c, tv, ev)
        if t_ret is not None:
            return C.mk("mux", c, t_ret, e_ret)
        return None

    def case_stmt(self, s: A.CaseStmt, scope, pred, ctx):
        subject = A.to_exp(s.expr)
        chain = s.default
        for label, body in reversed(s.arms):
            chain = A.IfThenStmt(A.BBdiop("==", (subject, A.to_exp(label)), loc=s.loc), body, chain, loc=s.loc)
        if chain is None:
            return None
        return self.stmt(chain, scope, pred, ctx)

    def pli(self, s: A.PliStmt, scope, pred, ctx: RuleCtx) -> None:
        if s.name not in PLI_TASKS:
            raise ElaborationError(f"system task '{s.name}' is not in the supported subset", s.loc)
        if ctx.value_only or ctx.static:
            raise ElaborationError(f"'{s.name}' is not allowed here", s.loc)
        if s.name == "$finish":
            if len(s.args) > 1:
                raise ElaborationError("$finish takes at most one argument", s.loc)
            code = self.expr(s.args[0], scope, pred, ctx) if s.args else C.Const(0)
            ctx.actions.append(C.Finish(code, pred))
            return
        fmt = None
        args = list(s.args)
        if args and isinstance(args[0], A.Str):
            fmt = args.pop(0).value
        vals = []
        for a in args:
            if isinstance(a, A.Str):
                raise ElaborationError("only the first argument of a display task may be a string", a.loc)
            vals.append(self.expr(a, scope, pred, ctx))
        ctx.actions.append(C.Display(s.name, fmt, tuple(vals), pred))

    # ------------------------------------------------------------ method calls

    def action_expr(self, e, scope, pred, ctx: RuleCtx, loc) -> None:
        if isinstance(e, A.Apply) and _sibling(e, scope):
            self.call(scope[SELF], e.path[0], e.args, scope, pred, ctx, e.loc, as_action=True)
            return
        if isinstance(e, A.Apply) and len(e.path) == 2:
            target = self.lookup(e.path[0], scope, e.loc)
            if isinstance(target, (PrimRef, ModInst)):
                self.call(target, e.path[1], e.args, scope, pred, ctx, e.loc, as_action=True)
                return
        if isinstance(e, A.FsmStmtExpr):
            raise ElaborationError("FSM statements must be instantiated at module level", loc)
        raise ElaborationError("expression statement is not an action", loc)

    def call(self, target, method, args, scope, pred, ctx: RuleCtx, loc, as_action: bool):
        if ctx.static:
            raise NotStaticError(
                (target.path if isinstance(target, PrimRef) else target.path.rstrip(".")) + "." + method, loc
            )
        if isinstance(target, PrimRef):
            return self.prim_call(target.path, method, args, scope, pred, ctx, loc, as_action)
        mdef = target.methods.get(method)
        if mdef is None:
            raise ElaborationError(f"'{target.path.rstrip('.')}' has no method '{method}'", loc)
        return self.inline_ephemeral(target, mdef, args, scope, pred, ctx, loc, as_action)

    def prim_call(self, path, method, args, scope, pred, ctx: RuleCtx, loc, as_action: bool):
        inst = self.instances[path]
        if not inst.has_method(method):
            raise ElaborationError(f"primitive '{path}' has no method '{method}'", loc)
        info = inst.method(method)
        if len(args) != len(info.arg_widths):
            raise ElaborationError(
                f"{path}.{method} expects {len(info.arg_widths)} arguments, got {len(args)}", loc
            )
        vals = tuple(self.expr(a, scope, pred, ctx) for a in args)
        ctx.calls.append(C.CallSite(path, method, pred))
        if info.protocol == "value":
            if as_action:
                raise ElaborationError(f"value method {path}.{method} used as an action", loc)
            return C.Call(path, method, vals, info.result_width)
        if ctx.value_only:
            raise ElaborationError(f"action method {path}.{method} called from a value context", loc)
        ctx.actions.append(C.ActionCall(path, method, vals, pred))
        if info.protocol == "actionvalue":
            return C.Call(path, method, vals, info.result_width)
        if not as_action:
            raise ElaborationError(f"action method {path}.{method} used as a value", loc)
        return None

    def inline_ephemeral(self, target: ModInst, mdef: A.MethodDef, args, scope, pred, ctx: RuleCtx, loc, as_action):
        """Substitute a user method body at a call site, binding formals to actuals."""
        key = (target.path, mdef.name)
        if key in ctx.inline_stack:
            raise ElaborationError(f"recursive call of method '{target.path}{mdef.name}'", loc)
        if len(args) != len(mdef.formals):
            raise ElaborationError(
                f"method '{mdef.name}' expects {len(mdef.formals)} arguments, got {len(args)}", loc
            )
        is_action = isinstance(mdef.rtype, A.TypenAction)
        is_av = isinstance(mdef.rtype, A.Typen) and mdef.rtype.name == "ActionValue"
        if (is_action or is_av) and ctx.value_only:
            raise ElaborationError(f"action method '{mdef.name}' called from a value context", loc)
        if is_action and not as_action:
            raise ElaborationError(f"action method '{mdef.name}' used as a value", loc)
        if not (is_action or is_av) and as_action:
            raise ElaborationError(f"value method '{mdef.name}' used as an action", loc)
        actuals = [self.expr(a, scope, pred, ctx) for a in args]
        menv = dict(target.env)
        menv[SELF] = target
        for (_, fname), v in zip(mdef.formals, actuals):
            menv[fname] = v
        ctx.inline_stack.append(key)
        saved_prefix, saved_value_only = ctx.prefix, ctx.value_only
        ctx.prefix = target.path
        ctx.value_only = not (is_action or is_av)
        try:
            g = self.bexpr(mdef.guard, menv, pred, ctx)
            if not (isinstance(g, C.Const) and g.value):
                ctx.mguards.append(C.MethodGuard(target.path + mdef.name, g, pred))
            ret = self.block(mdef.body, menv, pred, ctx)
        finally:
            ctx.inline_stack.pop()
            ctx.prefix, ctx.value_only = saved_prefix, saved_value_only
        if not is_action and ret is None:
            raise ElaborationError(f"method '{mdef.name}' does not return a value", mdef.loc)
        if ret is not None and not _is_data(ret):
            raise ElaborationError(f"method '{mdef.name}' returns an interface", mdef.loc)
        return ret

    # ------------------------------------------------------------ expressions

    def bexpr(self, e, scope, pred, ctx):
        v = self.expr(e, scope, pred, ctx)
        return C.mk("bool", v)

    def expr(self, e, scope, pred, ctx: RuleCtx):
        if isinstance(e, A.Num):
            return C.Const(e.value)
        if isinstance(e, A.BTrue):
            return C.TRUE
        if isinstance(e, A.BFalse):
            return C.FALSE
        if isinstance(e, (A.Var, A.IfcRef)):
            v = self.lookup(e.name, scope, e.loc)
            if not _is_data(v):
                raise ElaborationError(f"interface '{e.name}' used as a value", e.loc)
            if ctx.static and not _is_static(v):
                raise NotStaticError(e.name, e.loc)
            return v
        if isinstance(e, A.BLift):
            return self.expr(e.arg, scope, pred, ctx)
        if isinstance(e, A.BOrred):
            return C.mk("bool", self.expr(e.arg, scope, pred, ctx))
        if isinstance(e, A.Query):
            c = self.bexpr(e.cond, scope, pred, ctx)
            if isinstance(c, C.Const):
                return self.expr(e.then if c.value else e.else_, scope, pred, ctx)
            t = self.expr(e.then, scope, C.conj(pred, c), ctx)
            f = self.expr(e.else_, scope, C.conj(pred, C.neg(c)), ctx)
            return C.mk("mux", c, t, f)
        if isinstance(e, A.Diadic):
            return C.mk(e.op, self.expr(e.left, scope, pred, ctx), self.expr(e.right, scope, pred, ctx))
        if isinstance(e, A.BBdiop):
            return C.mk(e.op, self.expr(e.args[0], scope, pred, ctx), self.expr(e.args[1], scope, pred, ctx))
        if isinstance(e, A.BNot):
            return C.neg(self.bexpr(e.arg, scope, pred, ctx))
        if isinstance(e, (A.BAnd, A.BOr)):
            is_and = isinstance(e, A.BAnd)
            parts = []
            p = pred
            for arg in e.args:
                v = self.bexpr(arg, scope, p, ctx)
                if isinstance(v, C.Const) and bool(v.value) != is_and:
                    return C.FALSE if is_and else C.TRUE
                parts.append(v)
                p = C.conj(p, v if is_and else C.neg(v))
            return C.conj(*parts) if is_and else C.disj(*parts)
        if isinstance(e, A.BFiring):
            if ctx.static:
                raise NotStaticError(f"$firing({e.rule})", e.loc)
            return C.Firing(ctx.prefix + e.rule)
        if isinstance(e, A.Apply):
            if e.path == ("sizeof",):
                if len(e.args) != 1 or not isinstance(e.args[0], A.TypeArg):
                    raise ElaborationError("sizeof takes one type argument", e.loc)
                return C.Const(type_width(e.args[0].type, e.loc))
            if _sibling(e, scope):
                return self.call(scope[SELF], e.path[0], e.args, scope, pred, ctx, e.loc, as_action=False)
            if len(e.path) != 2:
                if len(e.path) == 1:
                    raise ElaborationError(f"unresolved function '{e.path[0]}'", e.loc)
                raise ElaborationError(
                    f"'{'.'.join(e.path)}': only methods of directly instantiated components can be called", e.loc
                )
            target = self.lookup(e.path[0], scope, e.loc)
            if not isinstance(target, (PrimRef, ModInst)):
                raise ElaborationError(f"'{e.path[0]}' is not an interface", e.loc)
            return self.call(target, e.path[1], e.args, scope, pred, ctx, e.loc, as_action=False)
        if isinstance(e, A.Str):
            raise ElaborationError("string literal used as a value", e.loc)
        if isinstance(e, A.TypeArg):
            raise ElaborationError("type used as a value", e.loc)
        if isinstance(e, A.FsmStmtExpr):
            raise ElaborationError("FSM statement used as a value", e.loc)
        raise ElaborationError(f"unexpected expression {type(e).__name__}", getattr(e, "loc", None))

    # ------------------------------------------------------------ FSM lowering

    def fsm(self, name: str, f, env: dict, prefix: str, auto_finish: bool, loc) -> None:
        machine = build_machine(f, lambda e: self.static_eval(e, env))
        info = self.lower_machine(machine, prefix + name, env, prefix, C.TRUE, (), auto_finish, loc)
        self.fsms.append(info)

    def _state_reg(self, reg_path: str, machine: Machine, loc) -> None:
        if reg_path in self.instances:
            raise ElaborationError(f"duplicate instance '{reg_path}'", loc)
        self.instances[reg_path] = P.instantiate_primitive(
            "register", reg_path, width=machine.width, reset=machine.entry.index, loc=loc
        )

    @staticmethod
    def state_is(reg: str, width: int, k: int):
        """`reg == k` written as a conjunction of bit literals."""
        read = C.Call(reg, "_read", (), width)
        bits = []
        for i in range(width):
            b = C.mk("bit", read, C.Const(i))
            bits.append(b if (k >> i) & 1 else C.neg(b))
        return C.conj(*bits)

    def lower_machine(self, m: Machine, name, env, prefix, active, active_calls, auto_finish, loc) -> C.FsmInfo:
        reg = f"{name}_state"
        self._state_reg(reg, m, loc)
        w = m.width
        reads = tuple(active_calls) + (C.CallSite(reg, "_read"),)

        def goto(k):
            return C.ActionCall(reg, "_write", (C.Const(k, w),))

        def rule(suffix, state, body, extra):
            rname = f"{name}_{suffix}"
            guard = C.conj(active, self.state_is(reg, w, state.index))
            r = self.elab_rule(rname, state.loc or loc, None, body, env, prefix, core_guard=guard, extra=extra)
            r = C.CoreRule(
                r.name, r.loc, r.guard, r.actions,
                reads + tuple(c for c in r.calls) + ((C.CallSite(reg, "_write"),) if extra else ()),
                r.method_guards,
            )
            self.rules.append(r)
            return rname

        rules, arms = [], []
        for s in m.states:
            if s.kind == "action":
                rules.append(rule(f"s{s.index}", s, s.stmts, (goto(s.succ.index),)))
            elif s.kind == "test":
                rules.append(self._test_rule(f"{name}_s{s.index}", s, reg, w, active, reads, env, prefix, loc))
            elif s.kind == "par":
                here = C.conj(active, self.state_is(reg, w, s.index))
                sub = []
                for j, arm in enumerate(s.arms):
                    sub.append(
                        self.lower_machine(
                            arm, f"{name}_s{s.index}_arm{j}", env, prefix, here, reads, False, s.loc or loc
                        )
                    )
                arms.extend(sub)
                join_guard = C.conj(
                    here, *[self.state_is(a.state_reg, self.instances[a.state_reg].width, a_m.done.index)
                            for a, a_m in zip(sub, s.arms)]
                )
                join_actions = [goto(s.succ.index)] + [
                    C.ActionCall(a.state_reg, "_write", (C.Const(a_m.entry.index, self.instances[a.state_reg].width),))
                    for a, a_m in zip(sub, s.arms)
                ]
                calls = reads + tuple(C.CallSite(a.state_reg, "_read") for a in sub)
                calls += (C.CallSite(reg, "_write"),) + tuple(C.CallSite(a.state_reg, "_write") for a in sub)
                jname = f"{name}_s{s.index}"
                self.rules.append(C.CoreRule(jname, s.loc or loc, join_guard, tuple(join_actions), calls))
                rules.append(jname)
            elif s.kind == "done" and auto_finish:
                dname = f"{name}_done"
                guard = C.conj(active, self.state_is(reg, w, s.index))
                self.rules.append(C.CoreRule(dname, s.loc or loc, guard, (C.Finish(C.Const(0)),), reads))
                rules.append(dname)
        return C.FsmInfo(name, reg, tuple(rules), tuple(arms))

    def _test_rule(self, rname, s, reg, w, active, reads, env, prefix, loc) -> str:
        ctx = RuleCtx(rname, prefix)
        scope = dict(env)
        c = self.bexpr(s.cond, scope, C.TRUE, ctx)
        nxt = C.mk("mux", c, C.Const(s.then.index, w), C.Const(s.else_.index, w))
        guard = C.conj(active, self.state_is(reg, w, s.index))
        actions = (C.ActionCall(reg, "_write", (nxt,)),)
        calls = reads + tuple(ctx.calls) + (C.CallSite(reg, "_write"),)
        self.rules.append(C.CoreRule(rname, s.loc or loc, guard, actions, calls, tuple(ctx.mguards)))
        return rname


def elaborate(unit: A.CompilationUnit, top: str, guard_semantics: str = "strict") -> C.CoreDesign:
    if guard_semantics not in ("strict", "non-strict"):
        raise ValueError(f"unknown guard semantics {guard_semantics!r}")
    return Elaborator(unit, guard_semantics).elaborate(top)


def static_eval(e, env: dict | None = None) -> int:
    """Evaluate a surface expression under compile-time bindings (name -> int)."""
    el = Elaborator(A.CompilationUnit(()))
    return el.static_eval(e, {k: C.Const(v) for k, v in (env or {}).items()})
