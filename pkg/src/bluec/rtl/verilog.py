"""Synthesizable Verilog text for a netlist, plus a small structural lint."""

from __future__ import annotations

import re

from bluec import core as C
from bluec.diagnostics import NetlistError
from bluec.rtl.netlist import Netlist

_VOPS = {"and": "&&", "or": "||"}


def _const(c: C.Const) -> str:
    if c.width is None:
        return str(c.value)
    if c.width == 1:
        return f"1'b{c.value & 1}"
    return f"{c.width}'d{c.value}"


def vexpr(e: C.Expr, top: bool = True) -> str:
    if isinstance(e, C.Const):
        return _const(e)
    if isinstance(e, C.Net):
        return e.name
    if not isinstance(e, C.Op):
        raise NetlistError(f"cannot emit {C.expr_str(e)} as Verilog")
    a = e.args
    if e.op == "not":
        s = f"!{vexpr(a[0], False)}"
        return s
    if e.op == "bool":
        s = f"{vexpr(a[0], False)} != 0"
    elif e.op == "bit":
        if isinstance(a[0], C.Net) and isinstance(a[1], C.Const):
            return f"{a[0].name}[{a[1].value}]"
        s = f"({vexpr(a[0], False)} >> {vexpr(a[1], False)}) & 1'b1"
    elif e.op == "mux":
        s = f"{vexpr(a[0], False)} ? {vexpr(a[1], False)} : {vexpr(a[2], False)}"
    else:
        s = f" {_VOPS.get(e.op, e.op)} ".join(vexpr(x, False) for x in a)
    return s if top else f"({s})"


def _decl(width: int) -> str:
    return "" if width == 1 else f"[{width - 1}:0] "


def emit_verilog(nl: Netlist) -> str:
    lines = [f"module {nl.top}(input clk, input rst);"]
    for r in nl.registers:
        lines.append(f"  reg {_decl(r.width)}{r.name};")
    for n in nl.nets:
        lines.append(f"  wire {_decl(n.width)}{n.name};")
    if nl.assigns:
        lines.append("")
        for a in nl.assigns:
            lines.append(f"  assign {a.target} = {vexpr(a.expr)};")
    if nl.registers:
        lines.append("")
        lines.append("  always @(posedge clk) begin")
        lines.append("    if (rst) begin")
        for r in nl.registers:
            lines.append(f"      {r.name} <= {_const(C.Const(r.reset, r.width))};")
        lines.append("    end else begin")
        for r in nl.registers:
            for i, (sel, val) in enumerate(r.branches):
                kw = "if" if i == 0 else "else if"
                lines.append(f"      {kw} ({vexpr(sel)}) {r.name} <= {vexpr(val)};")
        lines.append("    end")
        lines.append("  end")
    lines.append("endmodule")
    text = "\n".join(lines) + "\n"
    lint_verilog(text)
    return text


_KEYWORDS = {"module", "input", "output", "reg", "wire", "assign", "always", "posedge", "begin",
             "end", "if", "else", "endmodule", "clk", "rst"}
_IDENT = re.compile(r"(?<!')\b[A-Za-z_][A-Za-z0-9_$]*\b")


def lint_verilog(text: str) -> None:
    """Every identifier is declared once, every wire is assigned exactly once and
    registers are only assigned inside the clocked block."""
    declared: dict[str, str] = {"clk": "input", "rst": "input"}
    assigned: dict[str, int] = {}
    in_always = False
    for n, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"(reg|wire)\s+(\[\d+:0\]\s+)?(\w+);$", s)
        if m:
            if m.group(3) in declared:
                raise NetlistError(f"line {n}: '{m.group(3)}' declared twice")
            declared[m.group(3)] = m.group(1)
            continue
        if s.startswith("always"):
            in_always = True
        m = re.match(r"assign\s+(\w+)\s*=", s)
        if m:
            t = m.group(1)
            if declared.get(t) != "wire":
                raise NetlistError(f"line {n}: continuous assignment to non-wire '{t}'")
            assigned[t] = assigned.get(t, 0) + 1
        m = re.search(r"(\w+)\s*<=\s", s)
        if m and not s.startswith("assign"):
            if not in_always or declared.get(m.group(1)) != "reg":
                raise NetlistError(f"line {n}: non-blocking assignment to '{m.group(1)}' outside a register")
        body = re.sub(r"\d+'[bdh][0-9a-fA-F]+", "", s)
        if s.startswith("module"):
            continue
        for ident in _IDENT.findall(body):
            if ident in _KEYWORDS:
                continue
            if ident not in declared:
                raise NetlistError(f"line {n}: undeclared identifier '{ident}'")
    for name, kind in declared.items():
        if kind == "wire" and assigned.get(name, 0) != 1:
            raise NetlistError(f"wire '{name}' has {assigned.get(name, 0)} drivers")
