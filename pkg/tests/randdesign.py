"""Seeded generator of small random designs for property tests.

Guards range over at most six boolean registers (the guard atoms); actions
write data registers, flip atoms and move values through one FIFO.
"""

import itertools
import random
from dataclasses import dataclass

from bluec import core as C
from bluec.pipeline import compile_source


@dataclass(frozen=True)
class RandomDesign:
    seed: int
    text: str
    n_atoms: int
    n_rules: int


def _guard(rng: random.Random, atoms: list, depth: int) -> str:
    roll = rng.random()
    if depth == 0 or roll < 0.35:
        if rng.random() < 0.04:
            return rng.choice(["True", "False"])
        a = rng.choice(atoms)
        return a if rng.random() < 0.6 else f"!{a}"
    op = "&&" if roll < 0.75 else "||"
    return f"({_guard(rng, atoms, depth - 1)} {op} {_guard(rng, atoms, depth - 1)})"


def _actions(rng: random.Random, atoms: list, data: list) -> list:
    out = []
    pool = atoms + data
    targets = rng.sample(pool, k=rng.randint(1, min(3, len(pool))))
    dequeued = False
    for t in targets:
        if t in atoms:
            src = rng.choice(atoms)
            out.append(f"{t} <= !{src};" if rng.random() < 0.5 else f"{t} <= {src};")
        else:
            src = rng.choice(data)
            roll = rng.random()
            if roll < 0.2:
                out.append(f"if ({rng.choice(atoms)}) {t} <= {rng.randint(0, 9)}; else {t} <= {src} + 1;")
            elif roll < 0.3 and not dequeued:
                out.append(f"{t} <= q0.first(); q0.deq();")
                dequeued = True
            else:
                out.append(f"{t} <= {src} + {rng.randint(1, 5)};")
    if rng.random() < 0.25 and not dequeued:
        out.append(f"q0.enq({rng.choice(data)});")
    if rng.random() < 0.1:
        out.append(f"$display(\"%0d\", {rng.choice(data)});")
    return out


def random_design(seed: int, max_rules: int = 10, max_atoms: int = 6) -> RandomDesign:
    rng = random.Random(seed)
    n_atoms = rng.randint(1, max_atoms)
    n_data = rng.randint(1, 3)
    n_rules = rng.randint(2, max_rules)
    atoms = [f"a{i}" for i in range(n_atoms)]
    data = [f"d{i}" for i in range(n_data)]
    lines = ["module mkRand (Empty);"]
    for a in atoms:
        lines.append(f"   Reg#(Bool) {a} <- mkReg({rng.choice(['True', 'False'])});")
    for d in data:
        lines.append(f"   Reg#(UInt(8)) {d} <- mkReg({rng.randint(0, 20)});")
    lines.append("   FIFO#(UInt(8)) q0 <- mkFIFO;")
    for i in range(n_rules):
        guard = _guard(rng, atoms, rng.randint(0, 3))
        lines.append(f"   rule r{i} ({guard});")
        lines.extend("      " + a for a in _actions(rng, atoms, data))
        lines.append("   endrule")
    lines.append("endmodule")
    return RandomDesign(seed, "\n".join(lines) + "\n", n_atoms, n_rules)


def compile_random(rd: RandomDesign, **kw):
    return compile_source(rd.text, "mkRand", f"rand{rd.seed}.bsv", **kw)


class Valuation(C.Lookup):
    """Register reads and ready bits drawn from an explicit assignment."""

    def __init__(self, regs: dict, ready: dict, can: dict | None = None):
        self.regs = regs
        self.readies = ready
        self.can = can or {}

    def call(self, inst, method, args):
        return self.regs.get(inst, 0)

    def ready(self, inst, method):
        return self.readies.get((inst, method), True)

    def can_fire(self, rule):
        return self.can[rule]

    def firing(self, rule):
        raise AssertionError("no $firing in random designs")


def valuations(design):
    """Every assignment of the guard atoms: boolean registers plus non-trivial ready bits."""
    bools = [p for p, pi in design.instances.items() if pi.kind == "register" and pi.width == 1]
    readies = sorted(
        (p, m.name) for p, pi in design.instances.items() for m in pi.methods if not m.always_ready
    )
    for bits in itertools.product((0, 1), repeat=len(bools) + len(readies)):
        regs = dict(zip(bools, bits[: len(bools)]))
        ready = dict(zip(readies, bits[len(bools):]))
        yield regs, ready


def writers(design):
    """register -> rules that write it"""
    out = {}
    for r in design.rules:
        for a in r.action_calls():
            if design.instances[a.inst].kind == "register":
                out.setdefault(a.inst, set()).add(r.name)
    return out


def method_users(design):
    out = {}
    for r in design.rules:
        for a in r.action_calls():
            pi = design.instances[a.inst]
            if pi.kind != "register":
                out.setdefault((a.inst, a.method), set()).add(r.name)
    return out
