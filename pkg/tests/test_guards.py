import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bluec import core as C
from bluec import guards as G

from conftest import DESIGNS, build, build_text

# a handful of opaque boolean atoms
ATOMS = [C.Net(n, 1) for n in "abcdef"]
a, b, c, d = ATOMS[:4]


def cnf(*clauses):
    return frozenset(frozenset(cl) for cl in clauses)


def pos(x):
    return (x, True)


def negl(x):
    return (x, False)


class NetEnv(C.Lookup):
    def __init__(self, values):
        self.values = values

    def net(self, name):
        return self.values[name]


def truth(e, assignment):
    return bool(C.evaluate(e, NetEnv(assignment)))


def assignments(n=len(ATOMS)):
    for bits in itertools.product((0, 1), repeat=n):
        yield dict(zip("abcdef", bits))


# ---------------------------------------------------------------- to_cnf

def test_conjunction_gives_singletons():
    assert G.to_cnf(C.conj(a, b, c)) == cnf({pos(a)}, {pos(b)}, {pos(c)})


def test_distribution():
    assert G.to_cnf(C.disj(a, C.conj(b, c))) == cnf({pos(a), pos(b)}, {pos(a), pos(c)})


def test_false_is_empty_clause():
    assert G.to_cnf(C.FALSE) == G.FALSE_CNF == cnf(set())


def test_true_is_empty_set():
    assert G.to_cnf(C.TRUE) == frozenset()


def test_comparison_duals_share_an_atom():
    x = C.Call("x", "_read", (), 32)
    ge = G.to_cnf(C.mk(">=", x, C.Const(30)))
    lt = G.to_cnf(C.mk("<", x, C.Const(30)))
    ((lit_ge,),) = ge
    ((lit_lt,),) = lt
    assert lit_ge == G.complement(lit_lt)


def test_budget_fallback_is_opaque():
    # (a1 && b1) || (a2 && b2) || ... blows up past a tiny budget
    pairs = [C.conj(C.Net(f"p{i}", 1), C.Net(f"q{i}", 1)) for i in range(6)]
    e = C.disj(*pairs)
    out = G.to_cnf(e, budget=4)
    assert out == cnf({pos(e)})


bool_exprs = st.recursive(
    st.sampled_from(ATOMS + [C.TRUE, C.FALSE]),
    lambda ch: st.one_of(
        st.tuples(ch, ch).map(lambda t: C.conj(*t)),
        st.tuples(ch, ch).map(lambda t: C.disj(*t)),
        ch.map(C.neg),
        st.tuples(ch, ch, ch).map(lambda t: C.mk("mux", *t)),
    ),
    max_leaves=10,
)


@settings(max_examples=300, deadline=None)
@given(bool_exprs)
def test_cnf_preserves_semantics(e):
    f = G.to_cnf(e)
    for asg in assignments():
        lits = {atom: truth(atom, asg) for atom in G.atoms(f)}
        assert G.cnf_eval(f, lits) == truth(e, asg)


@settings(max_examples=300, deadline=None)
@given(bool_exprs, bool_exprs)
def test_exclusivity_sound(e1, e2):
    if G.mutually_exclusive(G.to_cnf(e1), G.to_cnf(e2)):
        assert not any(truth(e1, asg) and truth(e2, asg) for asg in assignments())


@settings(max_examples=300, deadline=None)
@given(bool_exprs, bool_exprs)
def test_implication_sound(e1, e2):
    if G.implies(G.to_cnf(e1), G.to_cnf(e2)):
        assert all(truth(e2, asg) for asg in assignments() if truth(e1, asg))


@settings(max_examples=300, deadline=None)
@given(bool_exprs)
def test_manifestly_false_sound(e):
    if G.manifestly_false(G.to_cnf(e)):
        assert not any(truth(e, asg) for asg in assignments())


@settings(max_examples=200, deadline=None)
@given(bool_exprs, bool_exprs)
def test_preds_disjoint_matches_truth_table(e1, e2):
    overlap = any(truth(e1, asg) and truth(e2, asg) for asg in assignments())
    assert G.preds_disjoint(e1, e2) == (not overlap)


# ---------------------------------------------------------------- decisions on examples

def test_counter_guards_exclusive():
    x = C.Call("counter", "_read", (), 32)
    g1 = G.to_cnf(C.mk(">=", x, C.Const(3)))
    g2 = G.to_cnf(C.neg(C.mk(">=", x, C.Const(3))))
    assert G.mutually_exclusive(g1, g2)


def test_tb1_guards_overlap():
    x = C.Call("x", "_read", (), 32)
    assert not G.mutually_exclusive(G.to_cnf(C.mk("<", x, C.Const(35))), G.to_cnf(C.mk(">=", x, C.Const(30))))


def test_true_guard_never_exclusive():
    assert not G.mutually_exclusive(cnf({pos(a)}), G.TRUE_CNF)


def test_implication_examples():
    assert G.implies(cnf({pos(a)}, {pos(b)}, {pos(c)}), cnf({pos(a)}, {pos(b)}))
    g = cnf({pos(a), pos(b)}, {negl(c)})
    assert G.implies(g, g)
    assert not G.implies(cnf({pos(a)}), cnf({pos(a)}, {pos(b)}))


def test_manifestly_false_examples():
    assert G.manifestly_false(G.to_cnf(C.FALSE))
    assert G.manifestly_false(cnf({pos(a)}, {negl(a)}))
    x = C.Call("x", "_read", (), 32)
    assert not G.manifestly_false(G.to_cnf(C.mk("<", x, C.Const(35))))


# ---------------------------------------------------------------- composite guards

def test_register_only_rule_has_no_implicit_guard():
    c = build("tb1", "mkTb1")
    rule = c.design.rule("countup")
    assert G.implicit_terms(rule, c.design) == ()
    x = C.Call("x", "_read", (), 32)
    assert c.schedule.guards["countup"].clauses == G.to_cnf(C.mk("<", x, C.Const(35)))


def test_unguarded_register_rule_is_true():
    c = build("counter", "mkCounter")
    assert c.schedule.guards["incrementCounter"].clauses == frozenset()


def test_enq_adds_not_full_literal():
    c = build_text("""module m (Empty);
        FIFO#(int) f <- mkFIFO;
        rule r; f.enq(1); endrule
    endmodule""", "m")
    g = c.schedule.guards["r"]
    assert g.clauses == cnf({pos(C.Ready("f", "enq"))})
    assert g.provenance[0][1] == "implicit-ready(f.enq)"


NONSTRICT = """
interface BoolSrc; method Bool x(); endinterface
interface IntSrc; method int x(); endinterface
module mkA (BoolSrc);
   Reg#(Bool) t <- mkReg(False);
   method Bool x() = t;
endmodule
module mkB (IntSrc);
   FIFO#(int) f <- mkFIFO;
   method int x() = f.first();
endmodule
module m (Empty);
   BoolSrc a <- mkA;
   IntSrc b <- mkB;
   Reg#(int) acc <- mkReg(0);
   rule use; acc <= (a.x()) ? (b.x()) : 0; endrule
endmodule
"""


def test_strict_and_non_strict_on_conditional_read():
    t = C.Call("a.t", "_read", (), 1)
    rdy = C.Ready("b.f", "first")
    strict = build_text(NONSTRICT, "m").schedule.guards["use"]
    loose = build_text(NONSTRICT, "m", guard_semantics="non-strict").schedule.guards["use"]
    assert strict.clauses == cnf({pos(rdy)})
    assert loose.clauses == cnf({G.literal(t, False), pos(rdy)})


@pytest.mark.parametrize("stem,top", DESIGNS)
def test_strict_implies_non_strict(stem, top):
    strict = build(stem, top).schedule.guards
    loose = build(stem, top, guard_semantics="non-strict").schedule.guards
    for name in strict:
        assert G.implies(strict[name], loose[name]), name


@pytest.mark.parametrize("stem,top", DESIGNS)
def test_dump_guards_deterministic(stem, top):
    d1 = build(stem, top).design
    d2 = build(stem, top).design
    assert G.dump_guards(d1) == G.dump_guards(d2)


def test_dump_guards_format():
    text = G.dump_guards(build("tb2", "mkTb2").design)
    assert text.splitlines()[:2] == ["guard-semantics: strict", "rule fill"]
    assert "    [implicit-ready(pipe.send)] RDY(pipe.send)" in text.splitlines()
