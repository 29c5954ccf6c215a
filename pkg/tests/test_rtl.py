import itertools
import json

import pytest

from bluec import core as C
from bluec import simulator as S
from bluec.diagnostics import NetlistError
from bluec.rtl import build_netlist, emit_verilog, lint_verilog, netlist_json, register_traces, run_netlist
from bluec.rtl.interp import _NetEnv, settle
from bluec.rtl.netlist import toposort_assigns

from conftest import DESIGNS, build, build_text
from randdesign import compile_random, random_design


def lower(stem, top, **kw):
    c = build(stem, top, **kw)
    return c, build_netlist(c.design, c.schedule)


def cosim(c, nl, cycles=400):
    res = S.run(c.design, c.schedule, cycles)
    nets = run_netlist(nl, len(res.trace))
    traces = register_traces(nl, nets)
    sim = {p: res.register_trace(p) for p in c.design.registers()}
    return res, nets, traces, sim


# ---------------------------------------------------------------- structure

def test_test1_guarded_increment():
    _, nl = lower("test1", "test1")
    text = emit_verilog(nl)
    assert "      if (WILL_FIRE_test_ast1) ctr1 <= ctr1 + 15'd1;" in text.splitlines()
    assert "  assign CAN_FIRE_test_ast1 = ctr1 < 10;" in text.splitlines()
    (reg,) = nl.registers
    assert len(reg.branches) == 1
    adders = [n for a in nl.assigns for n in C.walk(a.expr) if isinstance(n, C.Op) and n.op == "+"]
    assert len(adders) == 1


def test_register_has_no_ready_net():
    _, nl = lower("test1", "test1")
    assert not [n for n in nl.nets if n.name.endswith("_RDY")]
    assert "_RDY" not in emit_verilog(nl)


def test_empty_design():
    c = build_text("module m (Empty); endmodule", "m")
    text = emit_verilog(build_netlist(c.design, c.schedule))
    assert text == "module m(input clk, input rst);\nendmodule\n"


def test_tb1_two_grant_nets():
    _, nl = lower("tb1", "mkTb1")
    wf = sorted(n.name for n in nl.nets if n.name.startswith("WILL_FIRE_"))
    assert wf == ["WILL_FIRE_countup", "WILL_FIRE_done"]
    (x,) = nl.registers
    assert [sel for sel, _ in x.branches] == [C.Net("WILL_FIRE_countup", 1)]


def test_two_writers_of_a_fifo_give_a_priority_mux():
    c, nl = lower("fifo_chain", "mkFifoChain")
    (mux,) = [m for m in nl.muxes if m.target == "q1_enq_ARG0"]
    assert [sel.name for sel, _ in mux.branches] == ["WILL_FIRE_genEven", "WILL_FIRE_genOdd"]
    cls = c.schedule.class_of("genEven")
    assert cls.priority.index("genEven") < cls.priority.index("genOdd")


def test_single_driver_and_declarations():
    for stem, top in DESIGNS:
        _, nl = lower(stem, top)
        names = [n.name for n in nl.nets] + [r.name for r in nl.registers]
        assert len(names) == len(set(names))
        assert len({a.target for a in nl.assigns}) == len(nl.assigns)
        assert {a.target for a in nl.assigns} == {n.name for n in nl.nets}


def test_assigns_topologically_ordered():
    for stem, top in DESIGNS:
        _, nl = lower(stem, top)
        regs = {r.name for r in nl.registers}
        seen = set()
        for a in nl.assigns:
            for ref in (n.name for n in C.walk(a.expr) if isinstance(n, C.Net)):
                assert ref in seen or ref in regs, (stem, a.target, ref)
            seen.add(a.target)


def test_combinational_cycle_reports_path():
    assigns = {"a": C.Net("b", 1), "b": C.mk("&&", C.Net("c", 1), C.Net("r", 1)), "c": C.Net("a", 1)}
    with pytest.raises(NetlistError, match="combinational cycle: a -> b -> c -> a"):
        toposort_assigns(assigns, {"r"})


def test_undriven_net_rejected():
    with pytest.raises(NetlistError, match="no driver"):
        toposort_assigns({"a": C.Net("ghost", 1)}, set())


@pytest.mark.parametrize("stem,top", DESIGNS)
def test_verilog_lints(stem, top):
    for relaxed in (False, True):
        _, nl = lower(stem, top, relaxed=relaxed)
        lint_verilog(emit_verilog(nl))


@pytest.mark.parametrize("text", [
    "module m(input clk, input rst);\n  wire a;\n  wire a;\nendmodule\n",
    "module m(input clk, input rst);\n  wire a;\n  assign a = b;\nendmodule\n",
    "module m(input clk, input rst);\n  reg a;\n  assign a = 1'b1;\nendmodule\n",
    "module m(input clk, input rst);\n  wire a;\nendmodule\n",
    "module m(input clk, input rst);\n  wire a;\n  assign a = 1'b1;\n  assign a = 1'b0;\nendmodule\n",
])
def test_lint_rejects(text):
    with pytest.raises(NetlistError):
        lint_verilog(text)


def test_reset_block():
    _, nl = lower("tb1", "mkTb1")
    text = emit_verilog(nl)
    assert "    if (rst) begin\n      x <= 32'd23;\n    end else begin" in text
    assert text.count("always @(posedge clk)") == 1


def test_netlist_json_stable():
    _, a = lower("fifo_chain", "mkFifoChain")
    _, b = lower("fifo_chain", "mkFifoChain")
    assert json.dumps(netlist_json(a), sort_keys=True) == json.dumps(netlist_json(b), sort_keys=True)
    assert emit_verilog(a) == emit_verilog(b)


# ---------------------------------------------------------------- behaviour

@pytest.mark.parametrize("relaxed", [False, True], ids=["standard", "relaxed"])
@pytest.mark.parametrize("stem,top", DESIGNS)
def test_cosimulation(stem, top, relaxed):
    c, nl = lower(stem, top, relaxed=relaxed)
    res, nets, traces, sim = cosim(c, nl)
    assert traces == sim
    for rec, cyc in zip(res.trace, nets):
        fired = {r for r in c.design.rule_names if cyc.nets[f"WILL_FIRE_{r.replace('.', '_')}"]}
        assert fired == set(rec.fired), rec.cycle


def test_counter_netlist_sequence():
    _, nl = lower("counter", "mkCounter")
    assert register_traces(nl, run_netlist(nl, 7))["counter"] == [0, 1, 2, 3, 1, 2, 3]


def test_constant_false_rule_never_granted():
    _, nl = lower("dead", "mkDead")
    assert all(cyc.nets["WILL_FIRE_never"] == 0 for cyc in run_netlist(nl, 20))


def _atom_states(nl):
    """Exhaustive values for 1-bit registers and queue counters; data registers stay at reset."""
    axes = []
    for r in nl.registers:
        if r.width == 1:
            axes.append((r.name, (0, 1)))
        elif r.name.endswith("_count"):
            axes.append((r.name, tuple(range(1 << r.width))))
    base = {r.name: r.reset for r in nl.registers}
    for combo in itertools.product(*[vals for _, vals in axes]):
        yield {**base, **dict(zip([n for n, _ in axes], combo))}


@pytest.mark.parametrize("seed", range(80))
def test_mux_selects_exclusive(seed):
    c = compile_random(random_design(seed, max_atoms=5))
    nl = build_netlist(c.design, c.schedule)
    for regs in _atom_states(nl):
        values = settle(nl, regs)
        env = _NetEnv(values)
        for m in nl.muxes:
            hot = [bool(C.evaluate(sel, env)) for sel, _ in m.branches]
            assert sum(hot) <= 1, (m.target, regs)


@pytest.mark.parametrize("stem,top", DESIGNS)
def test_corpus_mux_selects_exclusive(stem, top):
    _, nl = lower(stem, top)
    for cyc in run_netlist(nl, 200):
        env = _NetEnv({**cyc.registers, **cyc.nets})
        for m in nl.muxes:
            assert sum(bool(C.evaluate(sel, env)) for sel, _ in m.branches) <= 1
