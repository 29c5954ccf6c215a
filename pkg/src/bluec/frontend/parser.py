"""Recursive-descent parser producing a `CompilationUnit`.

Grammar (informal)::

    unit      ::= { attrs? (interface | module) }
    interface ::= "interface" NAME ["#" "(" tformals ")"] ";" { attrs? proto } "endinterface" [":" NAME]
    module    ::= "module" NAME ["#" "(" formals ")"] "(" [type {"," type NAME}] ")" ";"
                  { stmt } "endmodule" [":" NAME]
    stmt      ::= attrs? rule | method | "let" NAME "=" exp ";" | type NAME ("<-" | "=") ...
                | NAME "<=" exp ";" | NAME "=" exp ";" | exp ";" | "$task" "(" args ")" ";"
                | if | while | for | case | begin/action block | "return" exp ";"
    fsm       ::= seq | par | if | while | repeat | break | continue | action-block | stmt

Operator precedence, loosest first: ``?:``, ``||``, ``&&``, ``|``, ``^``,
``&``, equality, relational, shifts, additive, multiplicative, unary.
"""

from __future__ import annotations

from bluec.diagnostics import Location, ParseError
from bluec.frontend import ast as A
from bluec.frontend.lexer import Token, tokenize

_NOT_IN_SUBSET = "construct not in subset"
_UNSUPPORTED_TOP = {"import", "export", "package", "typedef", "function", "typeclass", "instance"}
_UNSUPPORTED_TYPES = {"Vector", "List", "Maybe", "Tuple2", "Tuple3"}

_INT_TYPES = {"UInt", "Int", "Bit"}

_BINARY_LEVELS = (
    ("||",),
    ("&&",),
    ("|",),
    ("^",),
    ("&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("<<", ">>"),
    ("+", "-"),
    ("*", "/", "%"),
)


class Parser:
    def __init__(self, tokens: list[Token], file: str = "<input>"):
        last = tokens[-1].loc if tokens else Location(file, 1, 1)
        self.tokens = list(tokens) + [Token("eof", "", last)]
        self.pos = 0

    # ------------------------------------------------------------ token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def at(self, text: str, kind: str | None = None) -> bool:
        t = self.tok
        return t.text == text and (kind is None or t.kind == kind) and t.kind not in ("string", "eof")

    def accept(self, text: str) -> Token | None:
        if self.at(text):
            return self.advance()
        return None

    def expect(self, text: str) -> Token:
        if self.at(text):
            return self.advance()
        raise self.error(f"unexpected {self._describe(self.tok)}", (repr(text),))

    def expect_ident(self) -> Token:
        if self.tok.kind == "ident":
            return self.advance()
        raise self.error(f"unexpected {self._describe(self.tok)}", ("identifier",))

    def error(self, message: str, expected: tuple[str, ...] = ()) -> ParseError:
        return ParseError(message, self.tok.loc, expected)

    @staticmethod
    def _describe(t: Token) -> str:
        return "end of file" if t.kind == "eof" else f"{t.kind} {t.text!r}"

    # ------------------------------------------------------------ top level

    def parse_unit(self) -> A.CompilationUnit:
        items = []
        while self.tok.kind != "eof":
            attrs = self.parse_attributes()
            if self.at("interface"):
                if attrs:
                    raise ParseError("attributes cannot be attached to an interface", attrs[0].loc)
                items.append(self.parse_interface())
            elif self.at("module"):
                items.append(self.parse_module(attrs))
            else:
                if self.tok.kind == "ident" and self.tok.text in _UNSUPPORTED_TOP:
                    raise self.error(f"'{self.tok.text}': {_NOT_IN_SUBSET}")
                raise self.error(f"unexpected {self._describe(self.tok)}", ("'module'", "'interface'"))
        return A.CompilationUnit(tuple(items))

    def parse_attributes(self) -> tuple:
        attrs = []
        while self.tok.kind == "attr_open":
            self.advance()
            while True:
                name_tok = self.expect_ident()
                if name_tok.text not in A.ATTRIBUTE_NAMES:
                    raise ParseError(f"attribute '{name_tok.text}': {_NOT_IN_SUBSET}", name_tok.loc)
                value = None
                if self.accept("="):
                    if self.tok.kind == "string":
                        value = self.advance().value
                    elif self.tok.kind == "ident":
                        value = self.advance().text
                    else:
                        raise self.error("bad attribute value", ("string",))
                attrs.append(A.Attribute(name_tok.text, value, loc=name_tok.loc))
                if not self.accept(","):
                    break
            if self.tok.kind != "attr_close":
                raise self.error(f"unexpected {self._describe(self.tok)}", ("'*)'",))
            self.advance()
        return tuple(attrs)

    def _end_label(self, name: str) -> None:
        if self.accept(":"):
            label = self.expect_ident()
            if label.text != name:
                raise ParseError(f"end label '{label.text}' does not match '{name}'", label.loc)

    def parse_interface(self) -> A.InterfaceDecl:
        start = self.expect("interface")
        name = self.expect_ident().text
        params = ()
        if self.accept("#"):
            self.expect("(")
            plist = []
            while not self.at(")"):
                if self.accept("type"):
                    plist.append((A.Typen("type"), self.expect_ident().text))
                else:
                    t = self.parse_type()
                    plist.append((t, self.expect_ident().text))
                if not self.accept(","):
                    break
            self.expect(")")
            params = tuple(plist)
        self.expect(";")
        methods = []
        while not self.at("endinterface"):
            attrs = self.parse_attributes()
            methods.append(self.parse_method_proto(attrs))
        self.expect("endinterface")
        self._end_label(name)
        return A.InterfaceDecl(name, params, tuple(methods), loc=start.loc)

    def parse_method_proto(self, attrs: tuple) -> A.MethodProto:
        start = self.expect("method")
        rtype = self.parse_type()
        name = self.expect_ident().text
        formals = self.parse_formals() if self.at("(") else ()
        self.expect(";")
        return A.MethodProto(name, _provisos(attrs), _protocol(rtype), formals, loc=start.loc)

    def parse_formals(self) -> tuple:
        self.expect("(")
        formals = []
        seen = set()
        while not self.at(")"):
            t = self.parse_type()
            name_tok = self.expect_ident()
            if name_tok.text in seen:
                raise ParseError(f"duplicate formal '{name_tok.text}'", name_tok.loc)
            seen.add(name_tok.text)
            formals.append((t, name_tok.text))
            if not self.accept(","):
                break
        self.expect(")")
        return tuple(formals)

    def parse_module(self, attrs: tuple) -> A.ModuleDef:
        start = self.expect("module")
        name = self.expect_ident().text
        params = ()
        if self.accept("#"):
            params = self.parse_formals()
        self.expect("(")
        implemented = A.Typen("Empty")
        ifc_args = []
        if not self.at(")"):
            implemented = self.parse_type()
            while self.accept(","):
                t = self.parse_type()
                ifc_args.append((t, self.expect_ident().text))
        self.expect(")")
        self.expect(";")
        body = []
        while not self.at("endmodule"):
            if self.tok.kind == "eof":
                raise self.error("unexpected end of file", ("'endmodule'",))
            body.append(self.parse_stmt())
        self.expect("endmodule")
        self._end_label(name)
        return A.ModuleDef(
            name, A.ModuleParams(params, tuple(ifc_args), implemented), tuple(body), attrs, loc=start.loc
        )

    # ------------------------------------------------------------ types

    def parse_type(self):
        if self.accept("#"):
            # `#UInt(15)` as written in some listings
            return self.parse_type()
        t = self.expect_ident()
        name = t.text
        if name in _UNSUPPORTED_TYPES:
            raise ParseError(f"type '{name}': {_NOT_IN_SUBSET}", t.loc)
        if name in _INT_TYPES and self.at("(") and self.peek().kind == "int":
            self.advance()
            width = self.advance().value
            self.expect(")")
            return A.TypenUint1(width)
        params = []
        if self.accept("#"):
            self.expect("(")
            while not self.at(")"):
                if self.tok.kind == "int":
                    params.append(self.advance().value)
                else:
                    params.append(self.parse_type())
                if not self.accept(","):
                    break
            self.expect(")")
        if name in _INT_TYPES:
            if len(params) != 1 or not isinstance(params[0], int):
                raise ParseError(f"{name} needs a single width parameter", t.loc)
            return A.TypenUint1(params[0])
        if params:
            return A.Typen(name, tuple(params))
        return {
            "int": A.TypenUint1(32),
            "Bool": A.TypenUint1(1),
            "Integer": A.TypenUintNs(),
            "Action": A.TypenAction(),
        }.get(name, A.Typen(name))

    def _starts_declaration(self) -> bool:
        t, nxt = self.tok, self.peek()
        if t.kind != "ident" or t.text.startswith("$"):
            return False
        if nxt.text == "#" and nxt.kind == "punct":
            return True
        return nxt.kind == "ident"

    # ------------------------------------------------------------ statements

    def parse_block_until(self, *terminators: str) -> tuple:
        stmts = []
        while not any(self.at(term) for term in terminators):
            if self.tok.kind == "eof":
                raise self.error("unexpected end of file", tuple(repr(t) for t in terminators))
            stmts.append(self.parse_stmt())
        return tuple(stmts)

    def parse_stmt(self):
        t = self.tok
        if t.kind == "attr_open":
            attrs = self.parse_attributes()
            if self.at("rule"):
                return self.parse_rule(attrs)
            if self.at("method"):
                raise self.error("attributes on method definitions belong on the interface prototype")
            raise self.error("attributes must precede a rule", ("'rule'",))
        if t.kind == "keyword":
            kw = t.text
            if kw == "rule":
                return self.parse_rule(())
            if kw == "method":
                return self.parse_method_def()
            if kw == "let":
                self.advance()
                name = self.expect_ident().text
                self.expect("=")
                e = A.to_exp(self.parse_expr())
                self.expect(";")
                return A.AssignStmt(name, e, "let", loc=t.loc)
            if kw == "if":
                return self.parse_if()
            if kw == "while":
                self.advance()
                cond = self.parse_paren_cond()
                body = self.parse_stmt()
                return A.WhileStmt(cond, body, loc=t.loc)
            if kw == "for":
                return self.parse_for()
            if kw == "case":
                return self.parse_case()
            if kw in ("begin", "action"):
                self.advance()
                end = "end" if kw == "begin" else "endaction"
                stmts = self.parse_block_until(end)
                self.expect(end)
                return A.BeginEndStmt(stmts, loc=t.loc)
            if kw == "return":
                self.advance()
                e = A.to_exp(self.parse_expr())
                self.expect(";")
                return A.ReturnStmt(e, loc=t.loc)
            if kw in ("break", "continue"):
                raise self.error(f"'{kw}' is only allowed inside an FSM statement")
            if kw in ("seq", "par"):
                e = self.parse_expr()
                self.expect(";")
                return A.EascActionStmt(e, loc=t.loc)
            raise self.error(f"unexpected {self._describe(t)}")
        if t.kind == "ident" and t.text.startswith("$"):
            self.advance()
            args = self.parse_args() if self.at("(") else ()
            self.expect(";")
            return A.PliStmt(t.text, args, loc=t.loc)
        if t.kind == "ident" and t.text == "primBuffer" and self.peek().text == "(":
            self.advance()
            args = self.parse_args()
            if len(args) != 2:
                raise ParseError("primBuffer takes two operands", t.loc)
            self.expect(";")
            return A.PrimBuffer(args[0], args[1], loc=t.loc)
        if self._starts_declaration():
            dtype = self.parse_type()
            name = self.expect_ident().text
            if self.accept("<-"):
                ctor = self.expect_ident().text
                args = self.parse_args() if self.at("(") else ()
                self.expect(";")
                return A.VarDeclAssign(name, args, ctor, dtype, loc=t.loc)
            self.expect("=")
            e = A.to_exp(self.parse_expr())
            self.expect(";")
            return A.AssignStmt(name, e, dtype, loc=t.loc)
        if t.kind == "ident" and self.peek().text == "<=" and self.peek().kind == "op":
            self.advance()
            self.advance()
            e = A.to_exp(self.parse_expr())
            self.expect(";")
            return A.RegWrite(t.text, e, loc=t.loc)
        if t.kind == "ident" and self.peek().text == "=" and self.peek().kind == "op":
            self.advance()
            self.advance()
            e = A.to_exp(self.parse_expr())
            self.expect(";")
            return A.AssignStmt(t.text, e, None, loc=t.loc)
        e = self.parse_expr()
        self.expect(";")
        return A.EascActionStmt(A.to_exp(e), loc=t.loc)

    def parse_rule(self, attrs: tuple) -> A.Rule:
        start = self.expect("rule")
        name = self.expect_ident().text
        guard = A.BTrue(loc=start.loc)
        if self.at("("):
            guard = self.parse_paren_cond()
        self.expect(";")
        body = self.parse_block_until("endrule")
        self.expect("endrule")
        self._end_label(name)
        return A.Rule(name, guard, body, attrs, loc=start.loc)

    def parse_method_def(self) -> A.MethodDef:
        start = self.expect("method")
        rtype = self.parse_type()
        name = self.expect_ident().text
        formals = self.parse_formals() if self.at("(") else ()
        guard = A.BTrue(loc=start.loc)
        if self.accept("if"):
            guard = self.parse_paren_cond()
        if self.accept("="):
            e = A.to_exp(self.parse_expr())
            self.expect(";")
            return A.MethodDef(name, formals, guard, (A.ReturnStmt(e, loc=e.loc),), rtype, loc=start.loc)
        self.expect(";")
        body = self.parse_block_until("endmethod")
        self.expect("endmethod")
        self._end_label(name)
        return A.MethodDef(name, formals, guard, body, rtype, loc=start.loc)

    def parse_paren_cond(self):
        self.expect("(")
        cond = A.to_bexp(self.parse_expr())
        self.expect(")")
        return cond

    def parse_if(self) -> A.IfThenStmt:
        start = self.expect("if")
        cond = self.parse_paren_cond()
        then = self.parse_stmt()
        else_ = self.parse_stmt() if self.accept("else") else None
        return A.IfThenStmt(cond, then, else_, loc=start.loc)

    def parse_for(self):
        start = self.expect("for")
        self.expect("(")
        init = self._parse_simple_assign()
        self.expect(";")
        cond = A.to_bexp(self.parse_expr())
        self.expect(";")
        step = self._parse_simple_assign()
        self.expect(")")
        body = self.parse_stmt()
        loop = A.WhileStmt(cond, A.BeginEndStmt((body, step), loc=start.loc), loc=start.loc)
        return A.BeginEndStmt((init, loop), loc=start.loc)

    def _parse_simple_assign(self) -> A.AssignStmt:
        t = self.tok
        decl = None
        if self._starts_declaration():
            decl = self.parse_type()
        name = self.expect_ident().text
        self.expect("=")
        return A.AssignStmt(name, A.to_exp(self.parse_expr()), decl, loc=t.loc)

    def parse_case(self) -> A.CaseStmt:
        start = self.expect("case")
        self.expect("(")
        subject = A.to_exp(self.parse_expr())
        self.expect(")")
        arms = []
        default = None
        while not self.at("endcase"):
            if self.accept("default"):
                self.accept(":")
                default = self.parse_stmt()
                continue
            label = A.to_exp(self.parse_binary(0))
            self.expect(":")
            arms.append((label, self.parse_stmt()))
        self.expect("endcase")
        return A.CaseStmt(subject, tuple(arms), default, loc=start.loc)

    # ------------------------------------------------------------ FSM statements

    def parse_fsm_block(self, end: str) -> tuple:
        stmts = []
        while not self.at(end):
            if self.tok.kind == "eof":
                raise self.error("unexpected end of file", (repr(end),))
            stmts.append(self.parse_fsm_stmt())
        self.expect(end)
        return tuple(stmts)

    def parse_fsm_stmt(self):
        t = self.tok
        if self.accept("seq"):
            node = A.SeqFsm(self.parse_fsm_block("endseq"), loc=t.loc)
            self.accept(";")
            return node
        if self.accept("par"):
            node = A.ParFsm(self.parse_fsm_block("endpar"), loc=t.loc)
            self.accept(";")
            return node
        if self.accept("if"):
            cond = self.parse_paren_cond()
            then = self.parse_fsm_stmt()
            else_ = self.parse_fsm_stmt() if self.accept("else") else None
            return A.IfFsm(cond, then, else_, loc=t.loc)
        if self.accept("while"):
            cond = self.parse_paren_cond()
            return A.WhileFsm(cond, self.parse_fsm_stmt(), loc=t.loc)
        if self.accept("repeat"):
            self.expect("(")
            count = A.to_exp(self.parse_expr())
            self.expect(")")
            return A.RepeatFsm(count, self.parse_fsm_stmt(), loc=t.loc)
        if self.accept("break"):
            self.expect(";")
            return A.BreakFsm(loc=t.loc)
        if self.accept("continue"):
            self.expect(";")
            return A.ContinueFsm(loc=t.loc)
        if self.accept("action"):
            stmts = self.parse_block_until("endaction")
            self.expect("endaction")
            self.accept(";")
            return A.EascFsm(stmts, loc=t.loc)
        return A.EascFsm((self.parse_stmt(),), loc=t.loc)

    # ------------------------------------------------------------ expressions

    def parse_expr(self):
        cond = self.parse_binary(0)
        if self.at("?", "op"):
            q = self.advance()
            then = self.parse_expr()
            self.expect(":")
            else_ = self.parse_expr()
            return A.Query(A.to_bexp(cond), A.to_exp(then), A.to_exp(else_), loc=q.loc)
        return cond

    def parse_binary(self, level: int):
        if level == len(_BINARY_LEVELS):
            return self.parse_unary()
        ops = _BINARY_LEVELS[level]
        left = self.parse_binary(level + 1)
        while self.tok.kind == "op" and self.tok.text in ops:
            op_tok = self.advance()
            right = self.parse_binary(level + 1)
            left = _combine(op_tok, left, right)
        return left

    def parse_unary(self):
        t = self.tok
        if self.at("!", "op"):
            self.advance()
            return A.BNot(A.to_bexp(self.parse_unary()), loc=t.loc)
        if self.at("-", "op"):
            self.advance()
            return A.Diadic("-", A.Num(0, loc=t.loc), A.to_exp(self.parse_unary()), loc=t.loc)
        return self.parse_postfix()

    def parse_args(self) -> tuple:
        self.expect("(")
        args = []
        while not self.at(")"):
            args.append(A.to_exp(self.parse_expr()))
            if not self.accept(","):
                break
        self.expect(")")
        return tuple(args)

    def parse_postfix(self):
        t = self.tok
        if t.kind == "ident" and t.text.startswith("$"):
            if t.text != "$firing":
                raise self.error(f"system task '{t.text}' cannot be used as a value")
            self.advance()
            self.expect("(")
            rule = self.expect_ident().text
            self.expect(")")
            return A.BFiring(rule, loc=t.loc)
        if t.kind == "ident":
            self.advance()
            path = [t.text]
            while self.at(".", "op"):
                self.advance()
                path.append(self.expect_ident().text)
            if path == ["sizeof"]:
                self.expect("(")
                ty = self.parse_type()
                self.expect(")")
                return A.Apply(("sizeof",), (A.TypeArg(ty, loc=t.loc),), loc=t.loc)
            if self.at("("):
                return A.Apply(tuple(path), self.parse_args(), loc=t.loc)
            if len(path) == 1:
                return A.Var(t.text, loc=t.loc)
            return A.Apply(tuple(path), (), loc=t.loc)
        return self.parse_primary()

    def parse_primary(self):
        t = self.tok
        if t.kind == "int":
            self.advance()
            return A.Num(t.value, loc=t.loc)
        if t.kind == "string":
            self.advance()
            return A.Str(t.value, loc=t.loc)
        if self.accept("True"):
            return A.BTrue(loc=t.loc)
        if self.accept("False"):
            return A.BFalse(loc=t.loc)
        if self.accept("("):
            e = self.parse_expr()
            self.expect(")")
            return e
        if self.accept("seq"):
            return A.FsmStmtExpr(A.SeqFsm(self.parse_fsm_block("endseq"), loc=t.loc), loc=t.loc)
        if self.accept("par"):
            return A.FsmStmtExpr(A.ParFsm(self.parse_fsm_block("endpar"), loc=t.loc), loc=t.loc)
        raise self.error(
            f"unexpected {self._describe(t)}", ("identifier", "integer", "string", "'('", "'True'", "'False'")
        )


_COMPARISONS = {"==", "!=", "<", "<=", ">", ">="}


def _combine(op_tok: Token, left, right):
    op = op_tok.text
    if op == "&&":
        return A.BAnd((A.to_bexp(left), A.to_bexp(right)), loc=op_tok.loc)
    if op == "||":
        return A.BOr((A.to_bexp(left), A.to_bexp(right)), loc=op_tok.loc)
    if op in _COMPARISONS:
        return A.BBdiop(op, (A.to_exp(left), A.to_exp(right)), loc=op_tok.loc)
    return A.Diadic(op, A.to_exp(left), A.to_exp(right), loc=op_tok.loc)


def _provisos(attrs: tuple) -> tuple:
    out = []
    for a in attrs:
        if a.name == "always_ready":
            out.append(A.ProvisoAlwaysReady())
        elif a.name == "always_enabled":
            out.append(A.ProvisoAlwaysEnabled())
        else:
            raise ParseError(f"attribute '{a.name}' cannot be attached to a method", a.loc)
    return tuple(out)


def _protocol(rtype):
    if isinstance(rtype, A.TypenAction):
        return A.ProtoAction()
    if isinstance(rtype, A.Typen) and rtype.name == "ActionValue":
        if len(rtype.params) != 1:
            raise ParseError("ActionValue needs one type parameter")
        return A.ProtoActionValue(rtype.params[0])
    return A.ProtoValue(rtype)


def parse(tokens: list[Token], file: str = "<input>") -> A.CompilationUnit:
    return Parser(tokens, file).parse_unit()


def parse_source(source: str, file: str = "<input>") -> A.CompilationUnit:
    return parse(tokenize(source, file), file)
