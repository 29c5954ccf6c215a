"""Command-line driver: parse, elaborate, schedule, then simulate and/or emit RTL."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from bluec import core, guards, scheduler, simulator
from bluec.diagnostics import BluecError
from bluec.pipeline import compile_files
from bluec.rtl import build_netlist, emit_verilog, netlist_json

EXIT_OK, EXIT_COMPILE, EXIT_USAGE = 0, 1, 2


@dataclass
class RecipeConfig:
    files: list
    top: str
    relaxed: bool = False
    guard_semantics: str = "strict"
    simulate: bool = False
    verilog: str | None = None
    netlist_json: str | None = None
    vcd: str | None = None
    trace: str | None = None
    schedule_report: str | None = None
    dump_core: bool = False
    dump_guards: bool = False
    max_cycles: int = 10000


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _Usage(f"{self.prog}: error: {message}")


class _Usage(Exception):
    pass


def _multiple_writes(value: str) -> bool:
    if value not in ("enable", "disable"):
        raise argparse.ArgumentTypeError("expected 'enable' or 'disable'")
    return value == "enable"


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bluec", description="Compile and simulate guarded-atomic-rule hardware designs.")
    p.add_argument("files", nargs="+", metavar="FILE", help="source files")
    p.add_argument("--top", required=True, help="top-level module (must have an Empty interface)")
    p.add_argument("--simulate", action="store_true", help="run the rule-level simulator")
    p.add_argument("--max-cycles", type=int, default=10000, metavar="N")
    p.add_argument("--vcd", metavar="PATH", help="write a value-change dump of the simulation")
    p.add_argument("--trace", metavar="PATH", help="write the simulation trace as JSON")
    p.add_argument("-o", dest="verilog", metavar="PATH", help="write Verilog")
    p.add_argument("--netlist-json", metavar="PATH", help="write the netlist IR as JSON")
    p.add_argument("--dump-core", action="store_true", help="print the elaborated design as JSON")
    p.add_argument("--dump-guards", action="store_true", help="print composite guards per rule")
    p.add_argument("--schedule-report", nargs="?", const="-", metavar="PATH",
                   help="write the schedule report as JSON (stdout when PATH is omitted)")
    p.add_argument("--bsv-enable-multiple-writes", dest="relaxed", type=_multiple_writes, default=False,
                   metavar="enable|disable", help="compose conflicting register writers within a cycle")
    p.add_argument("--relaxed", dest="relaxed", action="store_const", const=True,
                   help="alias for --bsv-enable-multiple-writes=enable")
    p.add_argument("--guard-semantics", choices=("strict", "non-strict"), default="strict")
    return p


def parse_config(argv) -> RecipeConfig:
    ns = build_parser().parse_args(argv)
    if ns.max_cycles < 0:
        raise _Usage("bluec: error: --max-cycles must be non-negative")
    for f in ns.files:
        if not Path(f).is_file():
            raise _Usage(f"bluec: error: no such file: {f}")
    return RecipeConfig(
        files=ns.files, top=ns.top, relaxed=ns.relaxed, guard_semantics=ns.guard_semantics,
        simulate=ns.simulate, verilog=ns.verilog, netlist_json=ns.netlist_json, vcd=ns.vcd,
        trace=ns.trace, schedule_report=ns.schedule_report, dump_core=ns.dump_core,
        dump_guards=ns.dump_guards, max_cycles=ns.max_cycles,
    )


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write(path: str, text: str, out) -> None:
    if path == "-":
        out.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def run(cfg: RecipeConfig, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        compiled = compile_files(cfg.files, cfg.top, relaxed=cfg.relaxed, guard_semantics=cfg.guard_semantics)
    except BluecError as e:
        err.write(f"{e}\n")
        return EXIT_COMPILE
    design, sched = compiled.design, compiled.schedule
    for w in compiled.warnings:
        err.write(w.format() + "\n")
    if cfg.dump_core:
        out.write(_dump(core.design_json(design)))
    if cfg.dump_guards:
        out.write(guards.dump_guards(design))
    if cfg.schedule_report:
        _write(cfg.schedule_report, _dump(scheduler.schedule_report(design, sched)), out)
    if cfg.verilog or cfg.netlist_json:
        try:
            nl = build_netlist(design, sched)
            text = emit_verilog(nl)
        except BluecError as e:
            err.write(f"{e}\n")
            return EXIT_COMPILE
        if cfg.verilog:
            _write(cfg.verilog, text, out)
        if cfg.netlist_json:
            _write(cfg.netlist_json, _dump(netlist_json(nl)), out)
    if not (cfg.simulate or cfg.vcd or cfg.trace):
        return EXIT_OK
    try:
        result = simulator.run(design, sched, cfg.max_cycles)
    except BluecError as e:
        err.write(f"{e}\n")
        return EXIT_COMPILE
    for rec in result.trace:
        if not simulator.serializability_check(rec, design):
            err.write(f"warning: cycle {rec.cycle} has no serial explanation\n")
    if cfg.simulate:
        out.write(result.output)
    if cfg.vcd:
        _write(cfg.vcd, simulator.emit_vcd(result.trace, design, sched), out)
    if cfg.trace:
        _write(cfg.trace, _dump(simulator.trace_json(result, design)), out)
    if result.status == "timeout":
        err.write(f"simulation timed out after {cfg.max_cycles} cycles\n")
    return result.exit_code


def main(argv=None) -> int:
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
    except _Usage as e:
        sys.stderr.write(f"{e}\n")
        return EXIT_USAGE
    except SystemExit as e:  # --help
        return int(e.code or 0)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
