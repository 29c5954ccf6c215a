"""Cycle-accurate rule-level simulation.

Each cycle evaluates every rule's CAN_FIRE against start-of-cycle state,
applies the schedule's grants, and commits the fired rules' actions.  In
standard mode all reads see start-of-cycle values.  In relaxed
multiple-writes mode rules run in composition order and register values
chain from one rule to the next; other primitives still commit at the end
of the cycle.
"""

from __future__ import annotations

import itertools
import random
import re
from dataclasses import dataclass, field

from bluec import core as C
from bluec import guards as G
from bluec import primitives as P
from bluec.diagnostics import SimulationError

TIMEOUT_EXIT = 124
SERIAL_EXHAUSTIVE_LIMIT = 6
SERIAL_SAMPLES = 720


@dataclass(frozen=True)
class CycleRecord:
    cycle: int
    pre: dict  # instance path -> primitive state at the start of the cycle
    post: dict  # instance path -> primitive state after commit
    fired: tuple  # rule names in composition order
    output: str  # text written by $display / $write
    finish: int | None = None
    enables: frozenset = frozenset()  # (inst, method) enabled this cycle
    ready: frozenset = frozenset()  # (inst, method) ready at the start of the cycle

    def registers(self, design) -> dict:
        return {p: self.pre[p] for p in design.registers()}


@dataclass
class SimState:
    cycle: int
    prims: dict
    finished: bool = False
    exit_code: int | None = None
    log: list = field(default_factory=list)


@dataclass(frozen=True)
class RunResult:
    trace: tuple
    status: str  # finished | timeout
    exit_code: int
    final: dict

    @property
    def output(self) -> str:
        return "".join(r.output for r in self.trace)

    def register_trace(self, name: str) -> list:
        return [r.pre[name] for r in self.trace]


# ---------------------------------------------------------------- display formatting

_FMT = re.compile(r"%(0?)(\d*)([dDhHxXbBoOcCtT%])")


def _digits(width: int | None, base: int) -> int:
    if width is None:
        return 0
    return len(_to_base((1 << width) - 1, base))


def _to_base(v: int, base: int) -> str:
    if base == 10:
        return str(v)
    return {16: format(v, "x"), 2: format(v, "b"), 8: format(v, "o")}[base]


def format_display(fmt: str | None, values: list, widths: list) -> str:
    """Verilog-style formatting of ``%d %h %x %b %o`` (``%0d`` suppresses padding)."""
    if fmt is None:
        return " ".join(str(v) for v in values)
    out = []
    pos = 0
    idx = 0
    for m in _FMT.finditer(fmt):
        out.append(fmt[pos:m.start()])
        pos = m.end()
        zero, digits, conv = m.groups()
        conv = conv.lower()
        if conv == "%":
            out.append("%")
            continue
        if idx >= len(values):
            raise SimulationError(f"format '{fmt}' needs more arguments")
        v, w = values[idx], widths[idx]
        idx += 1
        if conv == "t":
            conv = "d"
        if conv == "c":
            out.append(chr(v & 0xFF))
            continue
        base = {"d": 10, "h": 16, "x": 16, "b": 2, "o": 8}[conv]
        text = _to_base(v, base)
        if digits:
            text = text.rjust(int(digits), "0" if zero else " ")
        elif not zero:
            pad = _digits(w, base)
            text = text.rjust(pad, " " if base == 10 else "0")
        out.append(text)
    out.append(fmt[pos:])
    if idx < len(values):
        out.append(" " + " ".join(str(v) for v in values[idx:]))
    return "".join(out)


# ---------------------------------------------------------------- lookups

class _StateLookup(C.Lookup):
    """Reads primitive state; `regs` optionally overrides register values (chaining)."""

    def __init__(self, design, prims: dict, firing=None, can=None, regs: dict | None = None):
        self.design = design
        self.prims = prims
        self.regs = regs
        self._firing = firing
        self._can = can

    def call(self, inst, method, args):
        pi = self.design.instances[inst]
        if self.regs is not None and pi.kind == "register":
            return self.regs[inst]
        return P.method_value(pi, self.prims[inst], method, args)

    def ready(self, inst, method):
        return P.method_ready(self.design.instances[inst], self.prims[inst], method)

    def firing(self, rule):
        return self._firing(rule)

    def can_fire(self, rule):
        return self._can(rule)


def _collect_actions(rule: C.CoreRule, env: C.Lookup):
    """Evaluate a fired rule's actions: (method calls, display text, finish code)."""
    calls, text, finish = [], [], None
    for a in rule.actions:
        if not C.evaluate(a.pred, env):
            continue
        if isinstance(a, C.ActionCall):
            calls.append((a.inst, a.method, tuple(C.evaluate(x, env) for x in a.args)))
        elif isinstance(a, C.Display):
            vals = [C.evaluate(x, env) for x in a.args]
            line = format_display(a.fmt, vals, [getattr(x, "width", None) for x in a.args])
            text.append(line + ("\n" if a.task == "$display" else ""))
        else:
            finish = C.evaluate(a.code, env)
    return calls, "".join(text), finish


def _commit(design, prims: dict, calls) -> dict:
    by_inst: dict = {}
    for inst, method, args in calls:
        by_inst.setdefault(inst, []).append((method, args))
    new = dict(prims)
    for inst, cs in by_inst.items():
        new[inst] = P.method_commit(design.instances[inst], prims[inst], cs)
    return new


class Simulator:
    def __init__(self, design, sched):
        self.design = design
        self.sched = sched
        self.rules = {r.name: r for r in design.rules}
        self.handshakes = tuple(
            (path, m.name)
            for path, pi in design.instances.items()
            for m in pi.methods
            if not m.always_ready
        )
        self.state = SimState(0, {p: P.initial_state(pi) for p, pi in design.instances.items()})

    # ------------------------------------------------------------ one cycle

    def step(self) -> CycleRecord:
        st = self.state
        if st.finished:
            raise SimulationError("simulation already finished")
        pre = st.prims
        if self.sched.relaxed:
            fired, calls, output, finish = self._step_relaxed(pre)
        else:
            fired, calls, output, finish = self._step_standard(pre)
        if len(set(fired)) != len(fired):
            raise SimulationError("a rule fired twice in one cycle")
        post = _commit(self.design, pre, [c for c in calls if self.design.instances[c[0]].kind != "register"])
        post = self._commit_registers(pre, post, calls)
        ready = frozenset(h for h in self.handshakes if P.method_ready(self.design.instances[h[0]], pre[h[0]], h[1]))
        rec = CycleRecord(
            st.cycle, pre, post, tuple(fired), output, finish,
            frozenset((i, m) for i, m, _ in calls), ready,
        )
        st.prims = post
        st.cycle += 1
        st.log.append(rec)
        if finish is not None:
            st.finished = True
            st.exit_code = finish
        return rec

    def _commit_registers(self, pre, post, calls) -> dict:
        regs = [c for c in calls if self.design.instances[c[0]].kind == "register"]
        if not self.sched.relaxed:
            return _commit(self.design, post, regs)
        # relaxed: the last write in composition order wins
        out = dict(post)
        for inst, method, args in regs:
            out[inst] = P.method_commit(self.design.instances[inst], out[inst], [(method, args)])
        return out

    def _step_standard(self, pre):
        can: dict = {}
        will: dict = {}
        env = _StateLookup(self.design, pre, firing=lambda r: will[r], can=lambda r: can[r])
        for name in self.sched.eval_order:
            can[name] = bool(C.evaluate(self.sched.guards[name].expr, env))
            will[name] = can[name] and not any(can[s] for s in self.sched.suppressors[name])
        fired = [n for n in self.sched.order if will[n]]
        calls, text, finish = [], [], None
        for n in fired:
            c, t, f = _collect_actions(self.rules[n], env)
            calls.extend(c)
            text.append(t)
            if f is not None and finish is None:
                finish = f
        return fired, calls, "".join(text), finish

    def _step_relaxed(self, pre):
        can: dict = {}
        will: dict = {}
        regs = {p: pre[p] for p in self.design.registers()}
        env = _StateLookup(self.design, pre, firing=lambda r: will[r], can=lambda r: can[r], regs=regs)
        fired, calls, text, finish = [], [], [], None
        for name in self.sched.order:
            can[name] = bool(C.evaluate(self.sched.guards[name].expr, env))
            will[name] = can[name] and not any(can[s] for s in self.sched.suppressors[name])
            if not will[name]:
                continue
            fired.append(name)
            c, t, f = _collect_actions(self.rules[name], env)
            for inst, method, args in c:
                pi = self.design.instances[inst]
                if pi.kind == "register":
                    regs[inst] = P.method_commit(pi, regs[inst], [(method, args)])
            calls.extend(c)
            text.append(t)
            if f is not None and finish is None:
                finish = f
        return fired, calls, "".join(text), finish

    # ------------------------------------------------------------ whole run

    def run(self, max_cycles: int = 10000) -> RunResult:
        if max_cycles < 0:
            raise ValueError("max_cycles must be non-negative")
        trace = []
        for _ in range(max_cycles):
            trace.append(self.step())
            if self.state.finished:
                return RunResult(tuple(trace), "finished", self.state.exit_code, dict(self.state.prims))
        return RunResult(tuple(trace), "timeout", TIMEOUT_EXIT, dict(self.state.prims))


def step(design, sched, state: SimState | None = None) -> tuple[SimState, CycleRecord]:
    sim = Simulator(design, sched)
    if state is not None:
        sim.state = state
    rec = sim.step()
    return sim.state, rec


def run(design, sched, max_cycles: int = 10000) -> RunResult:
    return Simulator(design, sched).run(max_cycles)


# ---------------------------------------------------------------- serializability

def _run_sequence(design, rules: dict, guards: dict, order, pre: dict, fired: set):
    prims = dict(pre)
    out, finish = [], None
    for name in order:
        env = _StateLookup(design, prims, firing=lambda r: r in fired, can=lambda r: r in fired)
        if not C.evaluate(guards[name], env):
            return None
        calls, text, f = _collect_actions(rules[name], env)
        try:
            prims = _commit(design, prims, calls)
        except SimulationError:
            return None
        out.append(text)
        if f is not None and finish is None:
            finish = f
    return prims, "".join(out), finish


def serializability_check(record: CycleRecord, design, seed: int = 0) -> bool:
    """True iff some one-at-a-time order of the fired rules reproduces the cycle's outcome."""
    rules = {r.name: r for r in design.rules}
    guards = {n: rules[n] for n in record.fired}
    guards = {n: G.composite_guard(r, design).expr for n, r in guards.items()}
    fired = set(record.fired)
    expected = (record.post, record.output, record.finish)

    def matches(order) -> bool:
        res = _run_sequence(design, rules, guards, order, record.pre, fired)
        return res is not None and res == expected

    if matches(record.fired):
        return True
    names = list(record.fired)
    if len(names) <= SERIAL_EXHAUSTIVE_LIMIT:
        candidates = itertools.permutations(names)
    else:
        rng = random.Random(seed)

        def sample():
            for _ in range(SERIAL_SAMPLES):
                perm = names[:]
                rng.shuffle(perm)
                yield tuple(perm)

        candidates = sample()
    return any(matches(p) for p in candidates)


# ---------------------------------------------------------------- outputs

def _vcd_ids():
    chars = [chr(c) for c in range(33, 127)]
    for n in itertools.count(1):
        for combo in itertools.product(chars, repeat=n):
            yield "".join(combo)


def _vcd_value(v: int, width: int, ident: str) -> str:
    if width == 1:
        return f"{v & 1}{ident}"
    return f"b{format(v, 'b')} {ident}"


def emit_vcd(trace, design, sched=None, top: str | None = None) -> str:
    """Value-change dump with registers, WILL_FIRE nets and method handshakes; one time unit per cycle."""
    ids = _vcd_ids()
    signals = []  # (ident, name, width, getter)
    for path in design.registers():
        w = design.instances[path].width
        signals.append((next(ids), P.net_base(path), w, lambda r, p=path: r.pre[p]))
    for rule in design.rules:
        signals.append((next(ids), f"WILL_FIRE_{P.net_base(rule.name)}", 1,
                        lambda r, n=rule.name: int(n in r.fired)))
    for path, pi in design.instances.items():
        for m in pi.methods:
            spec = P.port_spec(pi, m.name)
            if spec.ready:
                signals.append((next(ids), spec.ready, 1, lambda r, k=(path, m.name): int(k in r.ready)))
            if spec.enable:
                signals.append((next(ids), spec.enable, 1, lambda r, k=(path, m.name): int(k in r.enables)))
    lines = [
        "$version bluec $end",
        "$timescale 1ns $end",
        f"$scope module {top or design.top} $end",
    ]
    for ident, name, width, _ in signals:
        lines.append(f"$var wire {width} {ident} {name} $end")
    lines += ["$upscope $end", "$enddefinitions $end"]
    last: dict = {}
    for rec in trace:
        changes = []
        for ident, _, width, get in signals:
            v = get(rec)
            if last.get(ident) != v:
                changes.append(_vcd_value(v, width, ident))
                last[ident] = v
        if changes:
            lines.append(f"#{rec.cycle}")
            if rec.cycle == trace[0].cycle:
                lines.append("$dumpvars")
                lines.extend(changes)
                lines.append("$end")
            else:
                lines.extend(changes)
    if trace:
        lines.append(f"#{trace[-1].cycle + 1}")
    return "\n".join(lines) + "\n"


def parse_vcd(text: str) -> dict:
    """Minimal reader: signal name -> list of (time, value) changes."""
    names, changes = {}, {}
    time = 0
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("$var"):
            parts = line.split()
            names[parts[3]] = parts[4]
            changes[parts[4]] = []
        elif line.startswith("#"):
            time = int(line[1:])
        elif line.startswith("b"):
            val, ident = line[1:].split()
            changes[names[ident]].append((time, int(val, 2)))
        elif line and line[0] in "01" and line[1:] in names:
            changes[names[line[1:]]].append((time, int(line[0])))
    return changes


def trace_json(result: RunResult, design) -> dict:
    return {
        "top": design.top,
        "status": result.status,
        "exit_code": result.exit_code,
        "cycles": [
            {
                "cycle": r.cycle,
                "state": {p: P.state_repr(design.instances[p], r.pre[p]) for p in design.instances},
                "fired": list(r.fired),
                "output": r.output,
                "finish": r.finish,
            }
            for r in result.trace
        ],
        "final": {p: P.state_repr(design.instances[p], result.final[p]) for p in design.instances},
    }
