"""Cycle-level interpreter for netlists, used to co-simulate the generated hardware."""

from __future__ import annotations

from dataclasses import dataclass

from bluec import core as C
from bluec.rtl.netlist import Netlist


class _NetEnv(C.Lookup):
    def __init__(self, values: dict):
        self.values = values

    def net(self, name):
        return self.values[name]


@dataclass(frozen=True)
class NetCycle:
    cycle: int
    registers: dict  # every register value before the clock edge
    nets: dict  # every combinational net


def _mask(v: int, w: int) -> int:
    return v & ((1 << w) - 1)


def settle(nl: Netlist, regs: dict) -> dict:
    values = dict(regs)
    env = _NetEnv(values)
    widths = {n.name: n.width for n in nl.nets}
    for a in nl.assigns:
        values[a.target] = _mask(C.evaluate(a.expr, env), widths[a.target])
    return values


def clock(nl: Netlist, values: dict) -> dict:
    env = _NetEnv(values)
    nxt = {}
    for r in nl.registers:
        v = values[r.name]
        for sel, data in r.branches:
            if C.evaluate(sel, env):
                v = _mask(C.evaluate(data, env), r.width)
                break
        nxt[r.name] = v
    return nxt


def run_netlist(nl: Netlist, cycles: int) -> list[NetCycle]:
    regs = {r.name: r.reset for r in nl.registers}
    out = []
    for k in range(cycles):
        values = settle(nl, regs)
        out.append(NetCycle(k, dict(regs), {a.target: values[a.target] for a in nl.assigns}))
        regs = clock(nl, values)
    return out


def register_traces(nl: Netlist, cycles: list[NetCycle]) -> dict:
    """Per user-visible register path: value sequence over the run."""
    return {path: [c.registers[net] for c in cycles] for net, path in nl.design_registers}
