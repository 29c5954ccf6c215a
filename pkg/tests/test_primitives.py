import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bluec import primitives as P
from bluec.diagnostics import ElaborationError, SimulationError


def test_register_from_tb1():
    r = P.instantiate_primitive("register", "x", 32, 23)
    assert P.initial_state(r) == 23
    assert [m.name for m in r.methods] == ["_read", "_write"]
    assert all(m.always_ready for m in r.methods)


def test_fifteen_bit_register():
    r = P.instantiate_primitive("register", "ctr1", 15, 0)
    assert r.width == 15 and P.initial_state(r) == 0
    assert P.method_commit(r, 0, [("_write", ((1 << 15) + 3,))]) == 3


def test_empty_fifo_readiness():
    f = P.instantiate_primitive("fifo", "f", 8, depth=2)
    s = P.initial_state(f)
    assert P.method_ready(f, s, "enq")
    assert not P.method_ready(f, s, "deq")
    assert not P.method_ready(f, s, "first")


def test_full_fifo_blocks_enq():
    f = P.instantiate_primitive("fifo", "f", 8, depth=2)
    assert not P.method_ready(f, (1, 2), "enq")
    assert P.method_value(f, (1, 2), "notFull") == 0


@pytest.mark.parametrize("kind,bad", [("register", {"width": 0}), ("fifo", {"depth": 0}), ("ram", {"addr_width": 0})])
def test_invalid_parameters(kind, bad):
    with pytest.raises(ElaborationError):
        P.instantiate_primitive(kind, "p", **bad)


def test_unknown_kind():
    with pytest.raises(ElaborationError):
        P.instantiate_primitive("cam", "p")


def test_register_write_always_ready():
    r = P.instantiate_primitive("register", "x", 32, 23)
    for s in (0, 23, 2**31):
        assert P.method_ready(r, s, "_write")
    assert P.method_commit(r, 23, [("_write", (24,))]) == 24


def test_fifo_deq_then_enq():
    f = P.instantiate_primitive("fifo", "f", 8, depth=2)
    assert P.method_commit(f, (7,), [("enq", (9,)), ("deq", ())]) == (9,)


def test_full_fifo_commit_applies_deq_first():
    # readiness stays a start-of-cycle fact, but the commit itself never overflows
    f = P.instantiate_primitive("fifo", "f", 8, depth=1)
    assert not P.method_ready(f, (7,), "enq")
    assert P.method_commit(f, (7,), [("deq", ()), ("enq", (9,))]) == (9,)


def test_pipe_with_element_in_flight():
    p = P.instantiate_primitive("pipe", "p", 8)
    s = P.method_commit(p, P.initial_state(p), [("send", (5,))])
    assert P.method_ready(p, s, "receive")
    assert P.method_value(p, s, "receive") == 5
    assert p.depth == 2


def test_ram_latency_one():
    m = P.instantiate_primitive("ram", "m", 16, addr_width=3)
    s = P.initial_state(m)
    assert s[0] == (0,) * 8
    assert not P.method_ready(m, s, "get")
    s = P.method_commit(m, s, [("put", (1, 5, 42))])
    assert P.method_ready(m, s, "get")
    assert P.method_value(m, s, "get") == 42
    s = P.method_commit(m, s, [("put", (0, 5, 0)), ("get", ())])
    assert P.method_value(m, s, "get") == 42
    assert s[0][5] == 42


def test_double_enable_is_an_error():
    f = P.instantiate_primitive("fifo", "f", 8)
    with pytest.raises(SimulationError, match="enabled twice"):
        P.method_commit(f, (), [("enq", (1,)), ("enq", (2,))])


def test_port_spec_for_register_has_no_ready():
    r = P.instantiate_primitive("register", "a.x", 4)
    spec = P.port_spec(r, "_write")
    assert spec.ready is None
    assert spec.enable == "a_x__write_EN"
    assert spec.args == (("a_x__write_ARG0", 4),)


def test_port_spec_for_fifo():
    f = P.instantiate_primitive("fifo", "q", 8)
    assert P.port_spec(f, "first") == P.MethodPortSpec("q_first_RDY", None, (), ("q_first", 8))
    assert P.port_spec(f, "notEmpty").ready is None


def test_exemption():
    f = P.instantiate_primitive("fifo", "q", 8)
    r = P.instantiate_primitive("register", "x", 8)
    assert r.method("_read").exempt
    assert not r.method("_write").exempt
    assert f.method("notEmpty").exempt
    assert not f.method("first").exempt


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 4), st.lists(st.tuples(st.booleans(), st.booleans(), st.integers(0, 255)), max_size=40))
def test_fifo_occupancy_bounded(depth, ops):
    f = P.instantiate_primitive("fifo", "f", 8, depth=depth)
    s = P.initial_state(f)
    model = []
    for want_enq, want_deq, v in ops:
        calls = []
        if want_deq and P.method_ready(f, s, "deq"):
            calls.append(("deq", ()))
            model.pop(0)
        if want_enq and P.method_ready(f, s, "enq"):
            calls.append(("enq", (v,)))
            model.append(v)
        s = P.method_commit(f, s, calls)
        assert 0 <= len(s) <= depth
        assert list(s) == model
