"""Static rule scheduling.

Rules that contend for a resource are grouped into conflict classes.  Each
class gets a total priority order, and every rule receives a grant:

    WILL_FIRE(r) = CAN_FIRE(r) and not any(CAN_FIRE(s) for s in suppressors(r))

where the suppressors of ``r`` are higher-priority rules that conflict with
it and are not provably exclusive with it.

Besides the priority order, a global *composition order* is computed.  It is
the order in which fired rules are deemed to execute within a cycle: readers
of a primitive's state precede rules that change that state, and in relaxed
multiple-writes mode it is the order in which register writes chain.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

from bluec import core as C
from bluec import guards as G
from bluec import primitives as P
from bluec.diagnostics import CompileWarning, SchedulingError


@dataclass(frozen=True)
class ConflictClass:
    members: tuple  # rule names, sorted
    resources: tuple  # ((inst, method), ...) contended inside the class


@dataclass(frozen=True)
class ClassSchedule:
    cls: ConflictClass
    priority: tuple  # highest first
    exclusive: tuple  # ((a, b), ...) pairs proven mutually exclusive


@dataclass(frozen=True)
class Schedule:
    classes: tuple  # ClassSchedule, ...
    guards: dict  # rule -> CompositeGuard
    conflicts: frozenset  # frozenset({a, b}) pairs that may not fire together (suppressing)
    suppressors: dict  # rule -> tuple of suppressing rule names, highest first
    order: tuple  # global composition order
    eval_order: tuple  # order in which WILL_FIRE can be computed (respects $firing uses)
    warnings: tuple
    relaxed: bool = False
    guard_semantics: str = "strict"
    dead: frozenset = field(default_factory=frozenset)

    def can_fire(self, rule: str) -> C.Expr:
        return self.guards[rule].expr

    def will_fire(self, rule: str) -> C.Expr:
        sup = self.suppressors[rule]
        return C.conj(C.CanFire(rule), C.neg(C.disj(*[C.CanFire(s) for s in sup])))

    def class_of(self, rule: str) -> ClassSchedule:
        for cs in self.classes:
            if rule in cs.cls.members:
                return cs
        raise KeyError(rule)


# ---------------------------------------------------------------- conflicts

def _pair(a: str, b: str) -> frozenset:
    return frozenset((a, b))


def contended_methods(rule_a: C.CoreRule, rule_b: C.CoreRule, design, relaxed: bool = False) -> set:
    shared = rule_a.used_methods() & rule_b.used_methods()
    out = set()
    for inst, method in shared:
        pi = design.instances[inst]
        if pi.method(method).exempt:
            continue
        if relaxed and pi.kind == "register":
            continue
        out.add((inst, method))
    return out


def resource_conflict(rule_a: C.CoreRule, rule_b: C.CoreRule, design, relaxed: bool = False) -> bool:
    """Rules conflict when they share a contended primitive method (or are the same rule)."""
    if rule_a.name == rule_b.name:
        return True
    return bool(contended_methods(rule_a, rule_b, design, relaxed))


def _union_find(names, pairs) -> list[tuple]:
    parent = {n: n for n in names}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for p in pairs:
        a, b = tuple(p)
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups: dict = {}
    for n in names:
        groups.setdefault(find(n), []).append(n)
    return sorted((tuple(sorted(g)) for g in groups.values()), key=lambda g: g[0])


def conflict_classes(design, relaxed: bool = False, extra_pairs=()) -> list[ConflictClass]:
    """Transitive closure of the pairwise conflict relation, ordered by least member name."""
    rules = design.rules
    pairs = set(extra_pairs)
    for a, b in itertools.combinations(rules, 2):
        if resource_conflict(a, b, design, relaxed=relaxed):
            pairs.add(_pair(a.name, b.name))
    out = []
    byname = {r.name: r for r in rules}
    for members in _union_find([r.name for r in rules], pairs):
        res = set()
        for a, b in itertools.combinations(members, 2):
            res |= contended_methods(byname[a], byname[b], design)
        out.append(ConflictClass(members, tuple(sorted(res))))
    return out


# ---------------------------------------------------------------- small DAG helper

class _Dag:
    def __init__(self, nodes):
        self.succ = {n: set() for n in nodes}

    def reaches(self, a, b) -> bool:
        if a == b:
            return True
        stack, seen = [a], {a}
        while stack:
            x = stack.pop()
            for y in self.succ[x]:
                if y == b:
                    return True
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return False

    def path(self, a, b) -> list:
        prev = {a: None}
        stack = [a]
        while stack:
            x = stack.pop()
            if x == b:
                break
            for y in sorted(self.succ[x]):
                if y not in prev:
                    prev[y] = x
                    stack.append(y)
        out, x = [], b
        while x is not None:
            out.append(x)
            x = prev.get(x)
        return list(reversed(out))

    def try_add(self, a, b) -> bool:
        """Add edge a->b unless it would close a cycle."""
        if a == b or self.reaches(b, a):
            return False
        self.succ[a].add(b)
        return True

    def toposort(self, key) -> list:
        indeg = {n: 0 for n in self.succ}
        for n in self.succ:
            for m in self.succ[n]:
                indeg[m] += 1
        ready = sorted((n for n, d in indeg.items() if d == 0), key=key)
        out = []
        while ready:
            n = ready.pop(0)
            out.append(n)
            for m in self.succ[n]:
                indeg[m] -= 1
                if indeg[m] == 0:
                    ready.append(m)
            ready.sort(key=key)
        return out


# ---------------------------------------------------------------- priority

def build_priority(cls: ConflictClass, guards: dict, annotations: C.Annotations, sort_key: Callable,
                   conflicts: set) -> tuple[tuple, tuple]:
    """Total priority order of one class (highest first) and its exclusivity facts."""
    members = list(cls.members)
    mset = set(members)
    dag = _Dag(members)
    for group in annotations.descending_urgency:
        inside = [n for n in group if n in mset]
        for hi, lo in itertools.combinations(inside, 2):
            if not dag.try_add(hi, lo):
                cycle = " > ".join(dag.path(lo, hi) + [lo])
                raise SchedulingError(f"contradictory descending_urgency annotations: {cycle}")
    fwe = sorted(n for n in annotations.fire_when_enabled if n in mset)
    for f in fwe:
        for other in members:
            if other in annotations.fire_when_enabled or _pair(f, other) not in conflicts:
                continue
            if not dag.try_add(f, other):
                raise SchedulingError(
                    f"fire_when_enabled rule '{f}' is ranked below '{other}' by descending_urgency"
                )
    for a, b in itertools.permutations(sorted(members, key=sort_key), 2):
        ga, gb = guards[a], guards[b]
        if G.implies(ga, gb) and not G.implies(gb, ga):
            dag.try_add(a, b)
    order = tuple(dag.toposort(sort_key))
    exclusive = tuple(
        (a, b) for a, b in itertools.combinations(members, 2) if G.mutually_exclusive(guards[a], guards[b])
    )
    return order, exclusive


PriorityStrategy = Callable[[ConflictClass, dict, C.Annotations, Callable, set], tuple]


# ---------------------------------------------------------------- main entry

def _firing_refs(rule: C.CoreRule) -> set:
    return {n.rule for e in rule.expressions() for n in C.walk(e) if isinstance(n, C.Firing)}


def _guard_registers(g) -> set:
    return {n.inst for n in C.walk(g.expr) if isinstance(n, C.Call) and n.method == "_read"}


def _written_registers(rule: C.CoreRule) -> set:
    return {a.inst for a in rule.action_calls() if a.method == "_write"}


def _chain_sensitive(ra: C.CoreRule, rb: C.CoreRule, guards: dict) -> bool:
    """Relaxed composition feeds one rule's register writes into the other's guard,
    so exclusivity proven on start-of-cycle values no longer holds."""
    return bool(_written_registers(ra) & _guard_registers(guards[rb.name])
                or _written_registers(rb) & _guard_registers(guards[ra.name]))


def schedule(design, relaxed: bool = False, guards: dict | None = None,
             priority_strategy: PriorityStrategy = build_priority) -> Schedule:
    mode = design.guard_semantics
    rules = {r.name: r for r in design.rules}
    names = list(rules)
    guards = guards or G.all_guards(design, mode)

    def sort_key(n):
        return rules[n].sort_key

    dead = frozenset(n for n in names if G.manifestly_false(guards[n]))
    excl = {
        _pair(a, b)
        for a, b in itertools.combinations(names, 2)
        if a in dead or b in dead
        or (G.mutually_exclusive(guards[a], guards[b])
            and not (relaxed and _chain_sensitive(rules[a], rules[b], guards)))
    }

    # hard conflicts suppress; in relaxed mode register sharing is not a hard conflict
    hard = set()
    soft = set()
    for a, b in itertools.combinations(design.rules, 2):
        if resource_conflict(a, b, design, relaxed=relaxed):
            hard.add(_pair(a.name, b.name))
        elif resource_conflict(a, b, design, relaxed=False):
            soft.add(_pair(a.name, b.name))

    comp = _Dag(names)
    if relaxed:
        for group in design.annotations.execution_order:
            for x, y in zip(group, group[1:]):
                if not comp.try_add(x, y):
                    raise SchedulingError(f"contradictory execution_order annotations involving '{x}' and '{y}'")
    # an observer of $firing(t) composes after t and sees t's register writes
    firing_pairs = set()
    for r in names:
        for t in _firing_refs(rules[r]):
            firing_pairs.add(_pair(r, t))
            if relaxed:
                comp.try_add(t, r)
    # precedence edges between rules that may fire together
    for a, b in itertools.permutations(sorted(names, key=sort_key), 2):
        p = _pair(a, b)
        if p in hard or p in excl:
            continue
        ra, rb = rules[a], rules[b]
        shared_writes = _written_registers(ra) & _written_registers(rb)
        needed = False
        for inst, m1 in ra.used_methods():
            pi = design.instances[inst]
            if relaxed and inst in shared_writes:
                continue  # co-writers chain in composition order instead
            pairs = P.precedence_pairs(pi)
            if any((m1, m2) in pairs for i2, m2 in rb.used_methods() if i2 == inst):
                needed = True
                break
        if needed and not comp.try_add(a, b) and not (relaxed and p in firing_pairs):
            hard.add(p)  # no serial order exists for this pair: treat as a conflict

    classes = conflict_classes(design, relaxed=False, extra_pairs=hard)
    all_conflicts = hard | soft
    class_scheds = []
    suppressors: dict = {}
    for cls in classes:
        prio, ex = priority_strategy(cls, guards, design.annotations, sort_key, all_conflicts)
        class_scheds.append(ClassSchedule(cls, tuple(prio), ex))
        rank = {n: i for i, n in enumerate(prio)}
        for r in prio:
            suppressors[r] = tuple(
                s for s in prio[: rank[r]]
                if _pair(s, r) in hard and _pair(s, r) not in excl and s not in dead
            )

    if relaxed:
        for r, sup in suppressors.items():
            for s in sup:
                if not comp.try_add(s, r):
                    raise SchedulingError(
                        f"rule '{s}' outranks conflicting rule '{r}' but is composed after it; "
                        "adjust execution_order"
                    )
    for cs in class_scheds:
        for hi, lo in zip(cs.priority, cs.priority[1:]):
            comp.try_add(hi, lo)
    order = tuple(comp.toposort(sort_key))
    position = {n: i for i, n in enumerate(order)}

    # WILL_FIRE dependency graph: r needs CAN_FIRE of suppressors and WILL_FIRE of $firing targets
    deps = _Dag(names)
    for r in names:
        for s in suppressors[r]:
            deps.succ[s].add(r)
        for t in _firing_refs(rules[r]):
            if relaxed and position[t] >= position[r]:
                raise SchedulingError(
                    f"rule '{r}' observes $firing({t}) but '{t}' is not composed before it", rules[r].loc
                )
            if deps.reaches(r, t):
                cycle = " -> ".join(deps.path(r, t) + [r])
                raise SchedulingError(f"combinational cycle through $firing: {cycle}", rules[r].loc)
            deps.succ[t].add(r)
    eval_order = tuple(deps.toposort(lambda n: (position[n],)))

    for f in sorted(design.annotations.fire_when_enabled):
        if suppressors.get(f):
            raise SchedulingError(
                f"fire_when_enabled rule '{f}' can be suppressed by '{suppressors[f][0]}'", rules[f].loc
            )

    warnings = detect_dead_rules(design, guards, suppressors)
    return Schedule(
        tuple(class_scheds), guards, frozenset(hard), suppressors, order, eval_order,
        tuple(warnings), relaxed, mode, dead,
    )


def detect_dead_rules(design, guards: dict, suppressors: dict) -> list[CompileWarning]:
    out = []
    for r in design.rules:
        g = guards[r.name]
        if G.manifestly_false(g):
            out.append(CompileWarning(
                f"rule '{r.name}' can never fire: its composite guard is manifestly false", r.loc, "high", r.name
            ))
            continue
        for s in suppressors.get(r.name, ()):
            if G.implies(g, guards[s]):
                out.append(CompileWarning(
                    f"rule '{r.name}' can never fire: it is always suppressed by higher-priority rule '{s}'",
                    r.loc, "high", r.name,
                ))
                break
    return out


def grant_expressions(sched: Schedule) -> dict:
    return {r: sched.will_fire(r) for r in sched.suppressors}


def relaxed_composition(sched: Schedule, cls: ClassSchedule) -> tuple:
    """Composition order restricted to one class."""
    members = set(cls.cls.members)
    return tuple(n for n in sched.order if n in members)


def schedule_report(design, sched: Schedule) -> dict:
    return {
        "top": design.top,
        "mode": "relaxed" if sched.relaxed else "standard",
        "guard_semantics": sched.guard_semantics,
        "classes": [
            {
                "members": list(cs.cls.members),
                "resources": [f"{i}.{m}" for i, m in cs.cls.resources],
                "priority": list(cs.priority),
                "exclusive": [list(p) for p in cs.exclusive],
                "composition": list(relaxed_composition(sched, cs)),
            }
            for cs in sched.classes
        ],
        "order": list(sched.order),
        "rules": {
            r.name: {
                "can_fire": G.cnf_str(sched.guards[r.name].clauses),
                "will_fire": C.expr_str(sched.will_fire(r.name)),
                "suppressed_by": list(sched.suppressors[r.name]),
            }
            for r in sorted(design.rules, key=lambda r: r.name)
        },
        "warnings": [w.format() for w in sched.warnings],
    }
