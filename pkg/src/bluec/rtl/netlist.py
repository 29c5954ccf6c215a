"""Lowering of a scheduled design to a flat netlist.

Every rule contributes ``CAN_FIRE_<rule>`` and ``WILL_FIRE_<rule>`` nets.
Primitive methods become ready/enable/argument/result nets; queue and memory
primitives are expanded into plain registers so that the netlist consists of
combinational assignments and clocked registers only.
"""

from __future__ import annotations

from dataclasses import dataclass

from bluec import core as C
from bluec import primitives as P
from bluec.diagnostics import NetlistError


@dataclass(frozen=True)
class NetDecl:
    name: str
    width: int


@dataclass(frozen=True)
class Assign:
    target: str
    expr: C.Expr


@dataclass(frozen=True)
class MuxTree:
    """Priority-ordered selection onto a bus: the first true select wins."""
    target: str
    branches: tuple  # ((select expr, value expr), ...)
    default: C.Expr = C.Const(0)

    def expr(self) -> C.Expr:
        e = self.default
        for sel, val in reversed(self.branches):
            e = C.mk("mux", sel, val, e)
        return e


@dataclass(frozen=True)
class Register:
    name: str
    width: int
    reset: int
    branches: tuple  # ((select expr, data expr), ...): first true select loads its data
    source: str = ""  # primitive instance the register implements


@dataclass(frozen=True)
class Netlist:
    top: str
    nets: tuple  # NetDecl for every combinational net, in assignment order
    assigns: tuple  # Assign, topologically ordered
    registers: tuple
    muxes: tuple
    design_registers: tuple  # (register net, instance path) for user-visible registers
    relaxed: bool = False

    def net_width(self, name: str) -> int:
        for n in self.nets:
            if n.name == name:
                return n.width
        for r in self.registers:
            if r.name == name:
                return r.width
        raise KeyError(name)


def clog2(n: int) -> int:
    return max(1, (n - 1).bit_length())


def _w(e) -> int:
    w = getattr(e, "width", None)
    return w if w is not None else 32


class _Builder:
    def __init__(self, design, sched):
        self.design = design
        self.sched = sched
        self.assigns: dict[str, C.Expr] = {}
        self.widths: dict[str, int] = {}
        self.registers: list[Register] = []
        self.muxes: list[MuxTree] = []
        self.reg_nets: dict[str, int] = {}
        self.rules = {r.name: r for r in design.rules}
        self.chain: dict[str, C.Expr] = {}  # relaxed mode: current register value per path

    def net(self, name: str, expr: C.Expr, width: int | None = None) -> C.Net:
        if name in self.assigns or name in self.reg_nets:
            raise NetlistError(f"net '{name}' has more than one driver")
        self.assigns[name] = expr
        self.widths[name] = width if width is not None else _w(expr)
        return C.Net(name, self.widths[name])

    def reg(self, name: str, width: int, reset: int, branches, source: str) -> C.Net:
        if name in self.assigns or name in self.reg_nets:
            raise NetlistError(f"net '{name}' has more than one driver")
        self.reg_nets[name] = width
        self.registers.append(Register(name, width, reset, tuple(branches), source))
        return C.Net(name, width)

    # ------------------------------------------------------------ expression lowering

    def lower(self, e: C.Expr) -> C.Expr:
        def fn(node):
            if isinstance(node, C.Call):
                pi = self.design.instances[node.inst]
                if pi.kind == "register":
                    return self.chain.get(node.inst, self.state_regs[node.inst]["q"])
                spec = P.port_spec(pi, node.method)
                return C.Net(spec.result[0], spec.result[1])
            if isinstance(node, C.Ready):
                spec = P.port_spec(self.design.instances[node.inst], node.method)
                if spec.ready is None:
                    return C.TRUE
                return C.Net(spec.ready, 1)
            if isinstance(node, C.Firing):
                return C.Net(will_net(node.rule), 1)
            if isinstance(node, C.CanFire):
                return C.Net(can_net(node.rule), 1)
            return None

        return C.substitute(e, fn)

    # ------------------------------------------------------------ primitives

    def primitive_state(self) -> None:
        """Declare the state registers backing each primitive (data inputs filled in later)."""
        self.state_regs: dict[str, dict] = {}
        for path, pi in self.design.instances.items():
            base = P.net_base(path)
            if pi.kind == "register":
                self.state_regs[path] = {"q": C.Net(base, pi.width)}
            elif pi.kind in ("fifo", "pipe"):
                cw = clog2(pi.depth + 1)
                self.state_regs[path] = {
                    "slots": [C.Net(f"{base}_slot{i}", pi.width) for i in range(pi.depth)],
                    "count": C.Net(f"{base}_count", cw),
                }
            else:
                cw = clog2(pi.depth + 1)
                self.state_regs[path] = {
                    "mem": [C.Net(f"{base}_mem{i}", pi.width) for i in range(1 << pi.addr_width)],
                    "slots": [C.Net(f"{base}_resp{i}", pi.width) for i in range(pi.depth)],
                    "count": C.Net(f"{base}_count", cw),
                }

    def method_outputs(self) -> None:
        """Result and ready nets, functions of the primitive state only."""
        for path, pi in self.design.instances.items():
            st = self.state_regs[path]
            for m in pi.methods:
                spec = P.port_spec(pi, m.name)
                if pi.kind == "register":
                    continue
                count = st["count"]
                cw = count.width
                if spec.result:
                    if m.name in ("notEmpty",):
                        val = C.mk("!=", count, C.Const(0, cw))
                    elif m.name == "notFull":
                        val = C.mk("!=", count, C.Const(pi.depth, cw))
                    else:
                        val = st["slots"][0]
                    self.net(spec.result[0], val, spec.result[1])
                if spec.ready:
                    if m.name in ("enq", "send", "put"):
                        rdy = C.mk("<", count, C.Const(pi.depth, cw))
                    else:
                        rdy = C.mk("!=", count, C.Const(0, cw))
                    self.net(spec.ready, rdy, 1)

    # ------------------------------------------------------------ rules

    def callers(self, lowered: dict) -> dict:
        """(inst, method) -> [(rule, select, args)] in class priority order."""
        rank = {n: i for cs in self.sched.classes for i, n in enumerate(cs.priority)}
        out: dict = {}
        for name in sorted(lowered, key=lambda n: (rank.get(n, 0), self.rules[n].sort_key)):
            for a, sel, args in lowered[name]:
                out.setdefault((a.inst, a.method), []).append((name, sel, args))
        return out

    def rule_nets(self, name: str) -> None:
        g = self.sched.guards[name].expr
        self.net(can_net(name), self.lower(g), 1)
        sup = self.sched.suppressors[name]
        wf = C.conj(C.Net(can_net(name), 1), C.neg(C.disj(*[C.Net(can_net(s), 1) for s in sup])))
        self.net(will_net(name), wf, 1)

    def lower_actions(self, name: str) -> list:
        """(ActionCall, select, lowered args) for each method call of a rule, all
        read against the values visible where the rule sits in the cycle."""
        fire = C.Net(will_net(name), 1)
        return [
            (a, C.conj(fire, self.lower(a.pred)), tuple(self.lower(x) for x in a.args))
            for a in self.rules[name].action_calls()
        ]

    def build(self) -> Netlist:
        self.primitive_state()
        self.method_outputs()
        relaxed = self.sched.relaxed
        lowered: dict = {}
        reg_writes: dict[str, list] = {}
        if relaxed:
            for p in self.design.registers():
                self.chain[p] = self.state_regs[p]["q"]
            for name in self.sched.order:
                self.rule_nets(name)
                lowered[name] = self.lower_actions(name)
                for a, sel, args in lowered[name]:
                    pi = self.design.instances[a.inst]
                    if pi.kind != "register":
                        continue
                    label = f"{P.net_base(a.inst)}__after_{P.net_base(name)}"
                    k = len([n for n in self.assigns if n == label or n.startswith(label + "_")])
                    nxt = self.net(label if k == 0 else f"{label}_{k}",
                                   C.mk("mux", sel, args[0], self.chain[a.inst]), pi.width)
                    self.chain[a.inst] = nxt
                    reg_writes.setdefault(a.inst, []).append(sel)
        else:
            for name in self.sched.eval_order:
                self.rule_nets(name)
            for name in self.sched.order:
                lowered[name] = self.lower_actions(name)

        callers = self.callers(lowered)
        enables: dict = {}
        for (inst, method), lst in sorted(callers.items()):
            pi = self.design.instances[inst]
            if relaxed and pi.kind == "register":
                continue
            spec = P.port_spec(pi, method)
            en = self.net(spec.enable, C.disj(*[sel for _, sel, _ in lst]), 1)
            args = []
            for i, (arg_net, width) in enumerate(spec.args):
                if len(lst) == 1:
                    args.append(self.net(arg_net, lst[0][2][i], width))
                else:
                    mux = MuxTree(arg_net, tuple((sel, a[i]) for _, sel, a in lst), C.Const(0, width))
                    self.muxes.append(mux)
                    args.append(self.net(arg_net, mux.expr(), width))
            enables[(inst, method)] = (en, args)

        design_regs = []
        for path, pi in self.design.instances.items():
            base = P.net_base(path)
            st = self.state_regs[path]
            if pi.kind == "register":
                if relaxed:
                    writes = reg_writes.get(path, [])
                    branches = [(C.disj(*writes), self.chain[path])] if writes else []
                else:
                    branches = [(sel, a[0]) for _, sel, a in callers.get((path, "_write"), [])]
                self.reg(base, pi.width, pi.reset, branches, path)
                design_regs.append((base, path))
            else:
                self.queue_registers(path, pi, st, enables)
        return self.finish(design_regs)

    def queue_registers(self, path, pi, st, enables) -> None:
        """Registers for a FIFO, pipe or RAM: slots shift on dequeue, enqueue at the tail."""
        enq_m = {"fifo": "enq", "pipe": "send", "ram": "put"}[pi.kind]
        deq_m = {"fifo": "deq", "pipe": "receive", "ram": "get"}[pi.kind]
        zero = C.FALSE
        enq = enables.get((path, enq_m), (zero, []))
        deq = enables.get((path, deq_m), (zero, []))
        enq_en, enq_args = enq[0], enq[1]
        deq_en = deq[0]
        count = st["count"]
        cw = count.width
        base = P.net_base(path)
        wmask = C.Const((1 << pi.width) - 1, pi.width)
        if pi.kind == "ram" and enq_args:
            write, addr, data = enq_args
            mem = st["mem"]
            read = mem[-1]
            for k in range(len(mem) - 2, -1, -1):
                read = C.mk("mux", C.mk("==", addr, C.Const(k, addr.width)), mem[k], read)
            resp = self.net(f"{base}_put_resp", C.mk("mux", write, data, read), pi.width)
            for k, cell in enumerate(mem):
                sel = C.conj(enq_en, write, C.mk("==", addr, C.Const(k, addr.width)))
                self.reg(cell.name, pi.width, 0, [(sel, data)], path)
            incoming = resp
        elif pi.kind == "ram":
            for cell in st["mem"]:
                self.reg(cell.name, pi.width, 0, [], path)
            incoming = C.Const(0, pi.width)
        else:
            incoming = enq_args[0] if enq_args else C.Const(0, pi.width)
        after = self.net(
            f"{base}_count_after_deq",
            C.mk("mux", deq_en, C.mk("-", count, C.Const(1, cw)), count), cw,
        )
        any_en = C.disj(enq_en, deq_en)
        slots = st["slots"]
        for i, slot in enumerate(slots):
            shifted = slots[i + 1] if i + 1 < len(slots) else slot
            kept = C.mk("mux", deq_en, shifted, slot)
            nxt = C.mk("mux", C.conj(enq_en, C.mk("==", after, C.Const(i, cw))), C.mk("&", incoming, wmask), kept)
            self.reg(slot.name, pi.width, 0, [(any_en, nxt)] if not isinstance(any_en, C.Const) else [], path)
        cnt_next = C.mk("mux", enq_en, C.mk("+", after, C.Const(1, cw)), after)
        self.reg(count.name, cw, 0, [(any_en, cnt_next)] if not isinstance(any_en, C.Const) else [], path)

    def finish(self, design_regs) -> Netlist:
        order = toposort_assigns(self.assigns, set(self.reg_nets))
        nets = tuple(NetDecl(n, self.widths[n]) for n in order)
        assigns = tuple(Assign(n, self.assigns[n]) for n in order)
        return Netlist(
            self.design.top, nets, assigns, tuple(self.registers), tuple(self.muxes),
            tuple(design_regs), self.sched.relaxed,
        )


def can_net(rule: str) -> str:
    return f"CAN_FIRE_{P.net_base(rule)}"


def will_net(rule: str) -> str:
    return f"WILL_FIRE_{P.net_base(rule)}"


def net_refs(e: C.Expr) -> list[str]:
    return [n.name for n in C.walk(e) if isinstance(n, C.Net)]


def toposort_assigns(assigns: dict, registers: set) -> list[str]:
    """Order combinational assignments so every net is computed before use."""
    deps = {}
    for name, e in assigns.items():
        refs = set()
        for r in net_refs(e):
            if r in registers:
                continue
            if r not in assigns:
                raise NetlistError(f"net '{r}' used by '{name}' has no driver")
            refs.add(r)
        deps[name] = refs
    out, state = [], {}
    for root in assigns:
        if root in state:
            continue
        stack = [(root, iter(sorted(deps[root])))]
        state[root] = "open"
        path = [root]
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                stack.pop()
                path.pop()
                state[node] = "done"
                out.append(node)
                continue
            st = state.get(nxt)
            if st == "open":
                cycle = path[path.index(nxt):] + [nxt]
                raise NetlistError("combinational cycle: " + " -> ".join(cycle))
            if st is None:
                state[nxt] = "open"
                path.append(nxt)
                stack.append((nxt, iter(sorted(deps[nxt]))))
    return out


def build_netlist(design, sched) -> Netlist:
    return _Builder(design, sched).build()


def netlist_json(nl: Netlist) -> dict:
    def branches(bs):
        return [{"select": C.expr_json(s), "value": C.expr_json(v)} for s, v in bs]

    return {
        "top": nl.top,
        "relaxed": nl.relaxed,
        "nets": [{"name": n.name, "width": n.width} for n in nl.nets],
        "assigns": [{"target": a.target, "expr": C.expr_json(a.expr)} for a in nl.assigns],
        "registers": [
            {"name": r.name, "width": r.width, "reset": r.reset, "source": r.source, "branches": branches(r.branches)}
            for r in nl.registers
        ],
        "muxes": [
            {"target": m.target, "branches": branches(m.branches), "default": C.expr_json(m.default)}
            for m in nl.muxes
        ],
    }
