"""Built-in leaf components: register, FIFO, pipe and synchronous RAM.

Primitive state is an immutable value (an int for registers, tuples for
queues and memories) so that the simulator can snapshot and replay cycles
cheaply.  Ready predicates depend only on start-of-cycle state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from bluec.diagnostics import NOWHERE, ElaborationError, Location, SimulationError

KINDS = ("register", "fifo", "pipe", "ram")

# constructor name -> (kind, default depth)
CONSTRUCTORS = {
    "mkReg": ("register", None),
    "mk_register": ("register", None),
    "mkRegU": ("register", None),
    "mkFIFO": ("fifo", 2),
    "mkFIFO1": ("fifo", 1),
    "mkSizedFIFO": ("fifo", None),
    "mkPipe": ("pipe", 2),
    "mkSyncRAM": ("ram", None),
}

RAM_QUEUE_DEPTH = 2
DEFAULT_ADDR_WIDTH = 4


@dataclass(frozen=True)
class MethodInfo:
    name: str
    protocol: str  # value | action | actionvalue
    always_ready: bool
    arg_widths: tuple = ()
    result_width: int | None = None

    @property
    def has_result(self) -> bool:
        return self.protocol in ("value", "actionvalue")

    @property
    def has_enable(self) -> bool:
        return self.protocol in ("action", "actionvalue")

    @property
    def exempt(self) -> bool:
        """Always-ready argument-less methods present no sharing conflict."""
        return self.always_ready and not self.arg_widths


@dataclass(frozen=True)
class PrimitiveInstance:
    path: str
    kind: str
    width: int
    reset: int = 0
    depth: int = 0
    addr_width: int = 0
    methods: tuple = ()
    loc: Location = field(default=NOWHERE, compare=False)

    def method(self, name: str) -> MethodInfo:
        for m in self.methods:
            if m.name == name:
                return m
        raise KeyError(f"{self.path} has no method {name}")

    def has_method(self, name: str) -> bool:
        return any(m.name == name for m in self.methods)

    def to_json(self) -> dict:
        return {
            "path": self.path,
            "kind": self.kind,
            "width": self.width,
            "reset": self.reset,
            "depth": self.depth,
            "addr_width": self.addr_width,
            "methods": [
                {
                    "name": m.name,
                    "protocol": m.protocol,
                    "always_ready": m.always_ready,
                    "arg_widths": list(m.arg_widths),
                    "result_width": m.result_width,
                }
                for m in self.methods
            ],
        }


def _method_table(kind: str, width: int, addr_width: int) -> tuple:
    if kind == "register":
        return (
            MethodInfo("_read", "value", True, (), width),
            MethodInfo("_write", "action", True, (width,), None),
        )
    if kind == "fifo":
        return (
            MethodInfo("enq", "action", False, (width,), None),
            MethodInfo("deq", "action", False, (), None),
            MethodInfo("first", "value", False, (), width),
            MethodInfo("notEmpty", "value", True, (), 1),
            MethodInfo("notFull", "value", True, (), 1),
        )
    if kind == "pipe":
        return (
            MethodInfo("send", "action", False, (width,), None),
            MethodInfo("receive", "actionvalue", False, (), width),
        )
    if kind == "ram":
        return (
            MethodInfo("put", "action", False, (1, addr_width, width), None),
            MethodInfo("get", "actionvalue", False, (), width),
        )
    raise ElaborationError(f"unknown primitive kind '{kind}'")


def instantiate_primitive(
    kind: str,
    path: str,
    width: int = 32,
    reset: int = 0,
    depth: int = 2,
    addr_width: int = DEFAULT_ADDR_WIDTH,
    loc: Location = NOWHERE,
) -> PrimitiveInstance:
    if kind not in KINDS:
        raise ElaborationError(f"unknown primitive kind '{kind}'", loc)
    if width < 1:
        raise ElaborationError(f"primitive '{path}' must be at least 1 bit wide", loc)
    if kind in ("fifo", "pipe") and depth < 1:
        raise ElaborationError(f"queue '{path}' must have depth at least 1", loc)
    if kind == "ram" and not 1 <= addr_width <= 16:
        raise ElaborationError(f"RAM '{path}' address width must be between 1 and 16", loc)
    if kind == "register":
        depth, addr_width = 0, 0
        reset &= (1 << width) - 1
    elif kind == "ram":
        depth, reset = RAM_QUEUE_DEPTH, 0
    else:
        addr_width, reset = 0, 0
    return PrimitiveInstance(path, kind, width, reset, depth, addr_width, _method_table(kind, width, addr_width), loc)


# ---------------------------------------------------------------- behaviour

def initial_state(inst: PrimitiveInstance):
    if inst.kind == "register":
        return inst.reset
    if inst.kind in ("fifo", "pipe"):
        return ()
    return ((0,) * (1 << inst.addr_width), ())


def _queue(inst: PrimitiveInstance, state) -> tuple:
    return state if inst.kind in ("fifo", "pipe") else state[1]


def method_ready(inst: PrimitiveInstance, state, method: str) -> bool:
    m = inst.method(method)
    if m.always_ready:
        return True
    q = _queue(inst, state)
    if method in ("enq", "send", "put"):
        return len(q) < inst.depth
    return len(q) > 0


def method_value(inst: PrimitiveInstance, state, method: str, args: tuple = ()) -> int:
    """Result of a value or action-value method; a blocked method reads as 0."""
    if inst.kind == "register":
        if method == "_read":
            return state
    elif method in ("first", "receive", "get"):
        q = _queue(inst, state)
        return q[0] if q else 0
    elif method == "notEmpty":
        return int(len(state) > 0)
    elif method == "notFull":
        return int(len(state) < inst.depth)
    raise SimulationError(f"method {inst.path}.{method} returns no value")


def method_commit(inst: PrimitiveInstance, state, calls) -> object:
    """Apply one cycle's enabled action methods (``[(method, args), ...]``) to `state`."""
    names = [m for m, _ in calls]
    dup = {n for n in names if names.count(n) > 1}
    if dup:
        raise SimulationError(f"method {inst.path}.{sorted(dup)[0]} enabled twice in one cycle")
    byname = dict(calls)
    wmask = (1 << inst.width) - 1
    if inst.kind == "register":
        if "_write" in byname:
            return byname["_write"][0] & wmask
        return state
    if inst.kind in ("fifo", "pipe"):
        q = state
        if "deq" in byname or "receive" in byname:
            if not q:
                raise SimulationError(f"dequeue from empty {inst.kind} {inst.path}")
            q = q[1:]
        for name in ("enq", "send"):
            if name in byname:
                if len(q) >= inst.depth:
                    raise SimulationError(f"enqueue into full {inst.kind} {inst.path}")
                q = q + (byname[name][0] & wmask,)
        return q
    mem, q = state
    if "get" in byname:
        if not q:
            raise SimulationError(f"get from empty RAM response queue {inst.path}")
        q = q[1:]
    if "put" in byname:
        write, addr, data = byname["put"]
        addr &= (1 << inst.addr_width) - 1
        if write & 1:
            mem = mem[:addr] + (data & wmask,) + mem[addr + 1:]
        if len(q) >= inst.depth:
            raise SimulationError(f"put into RAM {inst.path} with full response queue")
        q = q + (mem[addr],)
    return (mem, q)


def state_repr(inst: PrimitiveInstance, state):
    """JSON-friendly view of primitive state used in traces."""
    if inst.kind == "register":
        return state
    if inst.kind == "ram":
        return {"mem": list(state[0]), "responses": list(state[1])}
    return list(state)


# ---------------------------------------------------------------- scheduling facts

# (a, b): a rule using method a must be ordered before a different rule using
# method b when both fire in one cycle, because a observes pre-state that b
# changes.
PRECEDENCE = {
    "register": frozenset({("_read", "_write")}),
    "fifo": frozenset({
        ("notEmpty", "enq"), ("notEmpty", "deq"),
        ("notFull", "enq"), ("notFull", "deq"),
        ("first", "deq"),
    }),
    "pipe": frozenset(),
    "ram": frozenset(),
}


def precedence_pairs(inst: PrimitiveInstance) -> frozenset:
    return PRECEDENCE[inst.kind]


# ---------------------------------------------------------------- port naming

@dataclass(frozen=True)
class MethodPortSpec:
    ready: str | None
    enable: str | None
    args: tuple  # ((net, width), ...)
    result: tuple | None  # (net, width)


def net_base(path: str) -> str:
    return path.replace(".", "_")


def port_spec(inst: PrimitiveInstance, method: str) -> MethodPortSpec:
    m = inst.method(method)
    base = f"{net_base(inst.path)}_{method}"
    return MethodPortSpec(
        ready=None if m.always_ready else f"{base}_RDY",
        enable=f"{base}_EN" if m.has_enable else None,
        args=tuple((f"{base}_ARG{i}", w) for i, w in enumerate(m.arg_widths)),
        result=(base, m.result_width) if m.has_result else None,
    )
