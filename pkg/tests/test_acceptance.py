"""Acceptance criteria 1-9.  Each test prints exactly one PASS/FAIL line.

Run directly (``python3 tests/test_acceptance.py``) for just the summary lines.
"""

import itertools
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from bluec import core as C  # noqa: E402
from bluec import guards as G  # noqa: E402
from bluec import simulator as S  # noqa: E402
from bluec.rtl import build_netlist, register_traces, run_netlist  # noqa: E402

from conftest import DESIGNS, build  # noqa: E402
from randdesign import Valuation, compile_random, method_users, random_design, valuations, writers  # noqa: E402

RANDOM_DESIGNS = 1000
RANDOM_CYCLES = 25


def _sim(stem, top, cycles=10000, **kw):
    c = build(stem, top, **kw)
    return c, S.run(c.design, c.schedule, cycles)


def _cosim(c, cycles=10000):
    res = S.run(c.design, c.schedule, cycles)
    nl = build_netlist(c.design, c.schedule)
    hw = register_traces(nl, run_netlist(nl, len(res.trace)))
    sw = {p: res.register_trace(p) for p in c.design.registers()}
    return hw == sw, res


# ---------------------------------------------------------------- criteria

def criterion_1():
    # hand simulation: x = 23..30, countup displays pre-increment x each cycle,
    # done fires on the first cycle with x >= 30, i.e. the eighth cycle
    t0 = time.perf_counter()
    _, res = _sim("tb1", "mkTb1")
    elapsed = time.perf_counter() - t0
    ok = (
        res.register_trace("x") == list(range(23, 31))
        and res.output == "".join(f"x = {v}\n" for v in range(23, 31))
        and res.status == "finished" and res.exit_code == 0
        and elapsed < 1.0
    )
    return ok, f"x={res.register_trace('x')} lines={len(res.output.splitlines())} exit={res.exit_code} {elapsed:.3f}s"


def criterion_2():
    want = [0, 1, 2, 3, 1, 2, 3, 1]
    got = {top: _sim(stem, top, 8)[1].register_trace("counter")
           for stem, top in (("counter", "mkCounter"), ("counter_plain", "mkCounterPlain"))}
    return all(v == want for v in got.values()), f"annotated={got['mkCounter']} plain={got['mkCounterPlain']}"


def criterion_3():
    second = _sim("counter_inc_second", "mkCounterIncSecond", 8, relaxed=True)[1].register_trace("counter")
    first = _sim("counter_inc_first", "mkCounterIncFirst", 7, relaxed=True)[1].register_trace("counter")
    ok = second == [0, 1, 2, 3, 2, 3, 2, 3] and first == [0, 1, 2, 1, 2, 1, 2]
    return ok, f"increment-second={second} increment-first={first}"


def criterion_4():
    trace = _sim("test1", "test1", 16)[1].register_trace("ctr1")
    ok = trace[15] == 10 and trace[:11] == list(range(11)) and set(trace[10:]) == {10}
    return ok, f"ctr1[15]={trace[15]} trace={trace}"


def criterion_5():
    c = build("tb2", "mkTb2")
    same, res = _cosim(c)
    ys = [int(line.split("=")[1]) for line in res.output.splitlines()]
    ok = ys == [16 * k for k in range(1, 10)] and ys[-1] > 128 >= ys[-2] and res.exit_code == 0 and same
    return ok, f"printed={ys} cycles={len(res.trace)} cosim={same}"


def criterion_6():
    counts = dict(designs=0, exclusive=0, implies=0, valuations=0, cycles=0)
    violations = []
    for seed in range(RANDOM_DESIGNS):
        rd = random_design(seed, max_rules=10, max_atoms=6)
        c = compile_random(rd)
        d, sched = c.design, c.schedule
        counts["designs"] += 1
        names = list(d.rule_names)
        gs = sched.guards
        vals = list(valuations(d))
        table = []  # per valuation: rule -> composite guard truth, rule -> grant
        for regs, ready in vals:
            env = Valuation(regs, ready)
            can = {n: bool(C.evaluate(gs[n].expr, env)) for n in names}
            will = {n: can[n] and not any(can[s] for s in sched.suppressors[n]) for n in names}
            table.append((can, will))
        counts["valuations"] += len(vals)
        for a, b in itertools.permutations(names, 2):
            if a < b and G.mutually_exclusive(gs[a], gs[b]):
                counts["exclusive"] += 1
                if any(can[a] and can[b] for can, _ in table):
                    violations.append(f"(a) seed {seed}: {a} / {b}")
            if G.implies(gs[a], gs[b]):
                counts["implies"] += 1
                if any(can[a] and not can[b] for can, _ in table):
                    violations.append(f"(b) seed {seed}: {a} => {b}")
        shared = list(writers(d).items()) + list(method_users(d).items())
        for _, will in table:
            for res_name, rs in shared:
                if sum(will[r] for r in rs) > 1:
                    violations.append(f"(c) seed {seed}: {res_name}")
        res = S.run(d, sched, RANDOM_CYCLES)
        for rec in res.trace:
            counts["cycles"] += 1
            if not S.serializability_check(rec, d, seed):
                violations.append(f"(d) seed {seed} cycle {rec.cycle}")
    detail = ", ".join(f"{k}={v}" for k, v in counts.items()) + f", violations={len(violations)}"
    if violations:
        detail += " first=" + violations[0]
    return not violations, detail


def criterion_7():
    counts, traces = {}, {}
    for mode in ("strict", "non-strict"):
        _, res = _sim("nonstrict", "mkNonStrict", guard_semantics=mode)
        counts[mode] = sum("use" in r.fired for r in res.trace)
        traces[mode] = [(r.fired, r.pre) for r in res.trace]
    differs = any(a != b for a, b in zip(traces["strict"], traces["non-strict"]))
    ok = counts["strict"] <= counts["non-strict"] and differs
    return ok, f"use fires strict={counts['strict']} non-strict={counts['non-strict']} differs={differs}"


def criterion_8():
    appearances = 0
    warnings = None
    for relaxed in (False, True):
        c, res = _sim("dead", "mkDead", relaxed=relaxed)
        high = [w for w in c.schedule.warnings if w.severity == "high"]
        if warnings is None:
            warnings = high
        appearances += sum("never" in r.fired for r in res.trace)
        nl = build_netlist(c.design, c.schedule)
        appearances += sum(cyc.nets["WILL_FIRE_never"] for cyc in run_netlist(nl, len(res.trace)))
    ok = len(warnings) == 1 and warnings[0].rule == "never" and appearances == 0
    return ok, f"high-severity warnings={len(warnings)} appearances in traces={appearances}"


def criterion_9():
    failures, runs = [], 0
    for stem, top in DESIGNS:
        for relaxed in (False, True):
            same, _ = _cosim(build(stem, top, relaxed=relaxed))
            runs += 1
            if not same:
                failures.append(f"{stem}/{'relaxed' if relaxed else 'standard'}")
    return not failures and len(DESIGNS) >= 10, f"designs={len(DESIGNS)} runs={runs} mismatches={failures or 'none'}"


CRITERIA = [
    (1, "tb1 end-to-end", criterion_1),
    (2, "counter standard mode, with and without annotation", criterion_2),
    (3, "counter relaxed mode, both composition orders", criterion_3),
    (4, "test1 stops at ten", criterion_4),
    (5, "mkTb2 pipe drain and co-simulation", criterion_5),
    (6, "scheduler soundness on random designs", criterion_6),
    (7, "strict vs non-strict divergence", criterion_7),
    (8, "dead-rule warning", criterion_8),
    (9, "corpus co-simulation equivalence", criterion_9),
]


def report(num, title, fn) -> tuple[bool, str]:
    ok, detail = fn()
    return ok, f"criterion {num}: {'PASS' if ok else 'FAIL'} {title} ({detail})"


@pytest.mark.parametrize("num,title,fn", CRITERIA, ids=[f"criterion_{n}" for n, _, _ in CRITERIA])
def test_criterion(num, title, fn, capsys):
    ok, line = report(num, title, fn)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [report(*c) for c in CRITERIA]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
