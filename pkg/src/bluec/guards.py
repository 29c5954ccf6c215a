"""Composite rule guards and the CNF machinery used by the scheduler.

A literal is ``(atom, polarity)`` where the atom is a canonical boolean core
expression.  A clause is a frozenset of literals and a CNF is a frozenset of
clauses; the empty CNF is true and a CNF holding the empty clause is false.
Exclusivity and implication are decided syntactically, so a negative answer
only means "not proven".
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from bluec import core as C

DEFAULT_BUDGET = 256

TRUE_CNF: frozenset = frozenset()
FALSE_CNF: frozenset = frozenset({frozenset()})

# comparison -> (atom operator, polarity)
_CANON = {"<": ("<", True), ">=": ("<", False), "<=": ("<=", True), ">": ("<=", False),
          "==": ("==", True), "!=": ("==", False)}


def literal(e: C.Expr, positive: bool = True) -> tuple:
    """Canonical literal for a boolean leaf expression."""
    if isinstance(e, C.Op):
        if e.op in _CANON:
            op, pol = _CANON[e.op]
            return (C.Op(op, e.args, 1), pol == positive)
        if e.op == "bool":
            return (C.Op("==", (e.args[0], C.Const(0)), 1), not positive)
    return (e, positive)


def complement(lit: tuple) -> tuple:
    return (lit[0], not lit[1])


def _simplify(clauses) -> frozenset:
    kept = set()
    for cl in clauses:
        if any(complement(l) in cl for l in cl):
            continue
        kept.add(frozenset(cl))
    if frozenset() in kept:
        return FALSE_CNF
    # absorption: a clause that contains another clause is redundant
    ordered = sorted(kept, key=len)
    out = []
    for cl in ordered:
        if not any(o <= cl for o in out):
            out.append(cl)
    return frozenset(out)


class _Budget(Exception):
    pass


def _or(a: frozenset, b: frozenset, budget: int) -> frozenset:
    if len(a) * len(b) > budget:
        raise _Budget
    return _simplify(x | y for x in a for y in b)


def _cnf(e: C.Expr, positive: bool, budget: int) -> frozenset:
    if isinstance(e, C.Const):
        return TRUE_CNF if bool(e.value) == positive else FALSE_CNF
    if isinstance(e, C.Op):
        if e.op == "not":
            return _cnf(e.args[0], not positive, budget)
        if e.op in ("and", "or"):
            conjunctive = (e.op == "and") == positive
            parts = [_cnf(a, positive, budget) for a in e.args]
            if conjunctive:
                return _simplify(itertools.chain.from_iterable(parts))
            acc = FALSE_CNF
            for p in parts:
                acc = p if acc == FALSE_CNF else _or(acc, p, budget)
            return acc
        if e.op == "mux" and C.is_boolean(e.args[1]) and C.is_boolean(e.args[2]):
            c, t, f = e.args
            left = _or(_cnf(c, False, budget), _cnf(t, positive, budget), budget)
            right = _or(_cnf(c, True, budget), _cnf(f, positive, budget), budget)
            return _simplify(left | right)
    return frozenset({frozenset({literal(e, positive)})})


def to_cnf(e: C.Expr, budget: int = DEFAULT_BUDGET) -> frozenset:
    """Equivalent CNF of a boolean expression; over-budget parts become one opaque atom."""
    try:
        return _cnf(e, True, budget)
    except _Budget:
        return frozenset({frozenset({(e, True)})})


def atoms(cnf: frozenset) -> list:
    found = {}
    for cl in cnf:
        for atom, _ in cl:
            found.setdefault(atom, None)
    return sorted(found, key=C.expr_str)


def cnf_eval(cnf: frozenset, assignment: dict) -> bool:
    return all(any(assignment[a] == p for a, p in cl) for cl in cnf)


def unit_literals(cnf: frozenset) -> set:
    return {next(iter(cl)) for cl in cnf if len(cl) == 1}


def mutually_exclusive(g1, g2) -> bool:
    c1, c2 = _clauses(g1), _clauses(g2)
    u2 = unit_literals(c2)
    return any(complement(l) in u2 for l in unit_literals(c1))


def implies(g1, g2) -> bool:
    c1, c2 = _clauses(g1), _clauses(g2)
    return all(any(a <= b for a in c1) for b in c2)


def manifestly_false(g) -> bool:
    c = _clauses(g)
    if frozenset() in c:
        return True
    units = unit_literals(c)
    return any(complement(l) in units for l in units)


def _clauses(g) -> frozenset:
    return g.clauses if isinstance(g, CompositeGuard) else g


def preds_disjoint(p1: C.Expr, p2: C.Expr, max_atoms: int = 12) -> bool:
    """True when no valuation of the atoms makes both predicates hold."""
    c1, c2 = to_cnf(p1), to_cnf(p2)
    if mutually_exclusive(c1, c2) or manifestly_false(c1) or manifestly_false(c2):
        return True
    names = atoms(c1 | c2)
    if len(names) > max_atoms:
        return False
    for bits in itertools.product((False, True), repeat=len(names)):
        a = dict(zip(names, bits))
        if cnf_eval(c1, a) and cnf_eval(c2, a):
            return False
    return True


def literal_str(lit: tuple) -> str:
    atom, pol = lit
    s = C.expr_str(atom)
    return s if pol else f"!{s}"


def clause_str(cl: frozenset) -> str:
    if not cl:
        return "False"
    return " || ".join(sorted(literal_str(l) for l in cl))


def cnf_str(cnf: frozenset) -> str:
    if not cnf:
        return "True"
    return " && ".join(f"({clause_str(cl)})" for cl in sorted(cnf, key=clause_str))


# ---------------------------------------------------------------- rule guards

@dataclass(frozen=True)
class ImplicitTerm:
    source: str  # implicit-ready(inst.method) | method-guard(name)
    expr: C.Expr


@dataclass(frozen=True)
class CompositeGuard:
    rule: str
    clauses: frozenset
    provenance: tuple  # ((clause, source), ...) sorted for determinism
    explicit: C.Expr
    implicit: tuple  # ImplicitTerm, ...

    @property
    def expr(self) -> C.Expr:
        return C.conj(self.explicit, *[t.expr for t in self.implicit])


def _actionvalue_calls(design) -> set:
    out = set()
    for path, inst in design.instances.items():
        for m in inst.methods:
            if m.protocol == "actionvalue":
                out.add((path, m.name))
    return out


def early_stable(e: C.Expr, design) -> bool:
    """Constants and value-method results are available early in the cycle."""
    av = _actionvalue_calls(design)
    for node in C.walk(e):
        if isinstance(node, (C.Firing, C.CanFire)):
            return False
        if isinstance(node, C.Call) and (node.inst, node.method) in av:
            return False
    return True


def implicit_terms(rule: C.CoreRule, design, mode: str | None = None) -> tuple:
    mode = mode or design.guard_semantics
    terms: dict = {}

    def add(source, cond, pred):
        if mode == "non-strict" and early_stable(pred, design):
            e = C.disj(C.neg(pred), cond)
        else:
            e = cond
        if isinstance(e, C.Const) and e.value:
            return
        key = (source, e)
        terms.setdefault(key, ImplicitTerm(source, e))

    for site in rule.calls:
        info = design.instances[site.inst].method(site.method)
        if info.always_ready:
            continue
        add(f"implicit-ready({site.inst}.{site.method})", C.Ready(site.inst, site.method), site.pred)
    for g in rule.method_guards:
        add(f"method-guard({g.method})", g.cond, g.pred)
    # conditional sites of one method collapse to a single disjunction of their predicates
    merged: dict = {}
    for (source, _), t in terms.items():
        merged.setdefault(source, []).append(t.expr)
    out = []
    for source, exprs in merged.items():
        e = exprs[0] if len(exprs) == 1 else C.conj(*exprs)
        out.append(ImplicitTerm(source, e))
    return tuple(out)


def implicit_guard(rule: C.CoreRule, design, mode: str | None = None) -> C.Expr:
    return C.conj(*[t.expr for t in implicit_terms(rule, design, mode)])


def composite_guard(rule: C.CoreRule, design, mode: str | None = None, budget: int = DEFAULT_BUDGET) -> CompositeGuard:
    terms = implicit_terms(rule, design, mode)
    prov: dict = {}
    all_clauses = []
    for source, e in [("explicit", rule.guard)] + [(t.source, t.expr) for t in terms]:
        cnf = to_cnf(e, budget)
        for cl in cnf:
            prov.setdefault(cl, source)
            all_clauses.append(cl)
    clauses = _simplify(all_clauses)
    provenance = tuple(sorted(((cl, prov.get(cl, "derived")) for cl in clauses), key=lambda p: clause_str(p[0])))
    return CompositeGuard(rule.name, clauses, provenance, rule.guard, terms)


def all_guards(design, mode: str | None = None) -> dict:
    return {r.name: composite_guard(r, design, mode) for r in design.rules}


def dump_guards(design, mode: str | None = None) -> str:
    """Deterministic text listing of explicit guard, implicit terms and CNF per rule."""
    lines = [f"guard-semantics: {mode or design.guard_semantics}"]
    for r in design.rules:
        g = composite_guard(r, design, mode)
        lines.append(f"rule {r.name}")
        lines.append(f"  explicit: {C.expr_str(r.guard)}")
        if g.implicit:
            lines.append("  implicit:")
            for t in g.implicit:
                lines.append(f"    [{t.source}] {C.expr_str(t.expr)}")
        else:
            lines.append("  implicit: True")
        lines.append(f"  cnf: {cnf_str(g.clauses)}")
        for cl, source in g.provenance:
            lines.append(f"    ({clause_str(cl)})  <- {source}")
    return "\n".join(lines) + "\n"
