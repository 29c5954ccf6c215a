"""Netlist lowering, Verilog emission and netlist co-simulation."""

from bluec.rtl.interp import register_traces, run_netlist
from bluec.rtl.netlist import MuxTree, Netlist, Register, build_netlist, netlist_json
from bluec.rtl.verilog import emit_verilog, lint_verilog

__all__ = [
    "MuxTree", "Netlist", "Register", "build_netlist", "netlist_json",
    "emit_verilog", "lint_verilog", "run_netlist", "register_traces",
]
