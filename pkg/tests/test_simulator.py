import dataclasses
import json

import pytest

from bluec import simulator as S

from conftest import DESIGNS, build, build_text
from randdesign import writers


def run(stem, top, cycles=10000, **kw):
    c = build(stem, top, **kw)
    return c, S.run(c.design, c.schedule, cycles)


# ---------------------------------------------------------------- display

@pytest.mark.parametrize("fmt,vals,widths,out", [
    ("x = %0d", [23], [32], "x = 23"),
    ("%d", [5], [8], "  5"),
    ("%h", [255], [16], "00ff"),
    ("%b|%o", [5, 8], [4, None], "0101|10"),
    ("%4d%%", [7], [32], "   7%"),
    (None, [1, 2], [None, None], "1 2"),
])
def test_format_display(fmt, vals, widths, out):
    assert S.format_display(fmt, vals, widths) == out


# ---------------------------------------------------------------- runs

def test_tb1_trace():
    c, res = run("tb1", "mkTb1")
    assert res.register_trace("x") == list(range(23, 31))
    assert res.output.splitlines() == [f"x = {v}" for v in range(23, 31)]
    assert (res.status, res.exit_code) == ("finished", 0)
    # the reader of x is composed before its writer
    assert res.trace[-1].fired == ("done", "countup")


def test_counter_standard():
    _, res = run("counter", "mkCounter", 8)
    assert res.register_trace("counter") == [0, 1, 2, 3, 1, 2, 3, 1]


@pytest.mark.parametrize("stem,top,expected", [
    ("counter_inc_second", "mkCounterIncSecond", [0, 1, 2, 3, 2, 3, 2, 3]),
    ("counter_inc_first", "mkCounterIncFirst", [0, 1, 2, 1, 2, 1, 2]),
])
def test_counter_relaxed(stem, top, expected):
    _, res = run(stem, top, len(expected), relaxed=True)
    assert res.register_trace("counter") == expected


def test_test1_holds_at_ten():
    _, res = run("test1", "test1", 20)
    trace = res.register_trace("ctr1")
    assert trace[15] == 10
    assert trace[:11] == list(range(11))
    assert set(trace[10:]) == {10}


def test_tb2_prints_multiples_of_sixteen():
    _, res = run("tb2", "mkTb2")
    assert [int(line.split("=")[1]) for line in res.output.splitlines()] == [16 * k for k in range(1, 10)]
    assert res.exit_code == 0


def test_zero_cycles_is_timeout():
    c = build("tb1", "mkTb1")
    res = S.run(c.design, c.schedule, 0)
    assert res.trace == () and res.status == "timeout" and res.exit_code == S.TIMEOUT_EXIT


def test_negative_cycles_rejected():
    c = build("tb1", "mkTb1")
    with pytest.raises(ValueError):
        S.run(c.design, c.schedule, -1)


def test_dead_rule_never_fires():
    c, res = run("dead", "mkDead")
    assert all("never" not in rec.fired for rec in res.trace)
    assert res.output.strip().endswith("r = 5")


def test_step_after_finish_rejected():
    c = build("tb1", "mkTb1")
    sim = S.Simulator(c.design, c.schedule)
    sim.run()
    with pytest.raises(S.SimulationError):
        sim.step()


def test_width_wraps():
    c = build_text("""module m (Empty);
        Reg#(UInt(4)) x <- mkReg(14);
        rule r; x <= x + 1; endrule
    endmodule""", "m")
    res = S.run(c.design, c.schedule, 4)
    assert res.register_trace("x") == [14, 15, 0, 1]


def test_finish_completes_cycle():
    c = build_text("""module m (Empty);
        Reg#(int) x <- mkReg(0);
        rule stop; $finish(3); endrule
        rule bump; x <= x + 1; endrule
    endmodule""", "m")
    res = S.run(c.design, c.schedule, 10)
    assert len(res.trace) == 1 and res.exit_code == 3
    assert res.final["x"] == 1


# ---------------------------------------------------------------- serializability

@pytest.mark.parametrize("relaxed", [False, True])
@pytest.mark.parametrize("stem,top", DESIGNS)
def test_every_cycle_serializable(stem, top, relaxed):
    c, res = run(stem, top, 400, relaxed=relaxed)
    for rec in res.trace:
        assert len(set(rec.fired)) == len(rec.fired)
        assert S.serializability_check(rec, c.design), rec.cycle


def test_relaxed_counter_witness_order():
    c, res = run("counter_inc_second", "mkCounterIncSecond", 6, relaxed=True)
    both = [r for r in res.trace if len(r.fired) == 2]
    assert both and all(r.fired == ("resetCounter", "incrementCounter") for r in both)
    assert all(S.serializability_check(r, c.design) for r in both)


def test_corrupted_record_fails():
    c, res = run("tb1", "mkTb1")
    rec = res.trace[2]
    bad = dataclasses.replace(rec, post={**rec.post, "x": rec.post["x"] + 7})
    assert not S.serializability_check(bad, c.design)
    bad_out = dataclasses.replace(rec, output="x = 0\n")
    assert not S.serializability_check(bad_out, c.design)


def test_standard_mode_single_update():
    for stem, top in DESIGNS:
        c, res = run(stem, top, 300)
        ws = writers(c.design)
        for rec in res.trace:
            for reg, rs in ws.items():
                assert len(set(rec.fired) & rs) <= 1


def _single_writer(design):
    return all(len(rs) <= 1 for rs in writers(design).values())


@pytest.mark.parametrize("stem,top", DESIGNS)
def test_mode_refinement(stem, top):
    c = build(stem, top)
    if not _single_writer(c.design):
        pytest.skip("design has conflicting register writers")
    std = S.run(c.design, c.schedule, 300)
    rel = run(stem, top, 300, relaxed=True)[1]
    assert [r.pre for r in std.trace] == [r.pre for r in rel.trace]
    assert std.output == rel.output


# ---------------------------------------------------------------- outputs

def test_vcd_tb1():
    c, res = run("tb1", "mkTb1")
    changes = S.parse_vcd(S.emit_vcd(res.trace, c.design, c.schedule))
    assert changes["x"] == [(t, 23 + t) for t in range(8)]
    assert changes["WILL_FIRE_done"][-1] == (7, 1)


def test_vcd_empty_trace_is_header_only():
    c = build("tb1", "mkTb1")
    text = S.emit_vcd((), c.design, c.schedule)
    assert text.rstrip().endswith("$enddefinitions $end")
    assert not [line for line in text.splitlines() if line.startswith("#")]


def test_vcd_counter_reset_period():
    c, res = run("counter", "mkCounter", 13)
    changes = S.parse_vcd(S.emit_vcd(res.trace, c.design, c.schedule))
    rises = [t for t, v in changes["WILL_FIRE_resetCounter"] if v == 1]
    # the register cycles 1,2,3 after the first pass, so reset fires every third cycle
    assert rises == [3, 6, 9, 12]


def test_vcd_handshakes_present():
    c, res = run("tb2", "mkTb2")
    changes = S.parse_vcd(S.emit_vcd(res.trace, c.design, c.schedule))
    assert {"pipe_send_RDY", "pipe_send_EN", "pipe_receive_RDY", "pipe_receive_EN"} <= set(changes)


def test_trace_json_roundtrips():
    c, res = run("tb2", "mkTb2")
    doc = S.trace_json(res, c.design)
    assert json.loads(json.dumps(doc)) == doc
    assert doc["status"] == "finished"
    assert doc["cycles"][0]["state"]["x"] == 16


def test_runs_deterministic():
    a = run("fifo_chain", "mkFifoChain")[1]
    b = run("fifo_chain", "mkFifoChain")[1]
    assert a == b
