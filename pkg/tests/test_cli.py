import json
import subprocess
import sys

import pytest

from bluec.cli import main, parse_config

from conftest import CORPUS, corpus_path


def bluec(*args):
    return main([str(a) for a in args])


def test_tb1_simulate(capsys):
    assert bluec(corpus_path("tb1"), "--top", "mkTb1", "--simulate") == 0
    out = capsys.readouterr().out
    assert out.splitlines() == [f"x = {v}" for v in range(23, 31)]


def test_missing_file_is_usage_error(capsys):
    assert bluec("missing.bsv", "--top", "m") == 2
    assert "no such file" in capsys.readouterr().err


def test_missing_top_is_usage_error(capsys):
    assert bluec(corpus_path("tb1")) == 2
    assert "usage:" in capsys.readouterr().err


def test_compile_error_exit_one(tmp_path, capsys):
    bad = tmp_path / "bad.bsv"
    bad.write_text("module m (Empty);\n  rule r (x < ; endrule\nendmodule\n")
    assert bluec(bad, "--top", "m") == 1
    # diagnostics name files by base name, the same key the priority tie-break uses
    assert capsys.readouterr().err.startswith("bad.bsv:2:15: error:")


def test_timeout_exit_124(capsys):
    assert bluec(corpus_path("counter"), "--top", "mkCounter", "--simulate", "--max-cycles", "5") == 124
    assert "timed out" in capsys.readouterr().err


def test_finish_code_propagates(tmp_path):
    src = tmp_path / "f.bsv"
    src.write_text("module m (Empty); rule r; $finish(7); endrule endmodule\n")
    assert bluec(src, "--top", "m", "--simulate") == 7


def test_warnings_do_not_change_exit_code(capsys):
    assert bluec(corpus_path("dead"), "--top", "mkDead", "--simulate") == 0
    err = capsys.readouterr().err
    assert err.count("can never fire") == 1


@pytest.mark.parametrize("flags", [
    ["--bsv-enable-multiple-writes=enable"],
    ["--bsv-enable-multiple-writes", "enable"],
    ["--relaxed"],
])
def test_relaxed_spellings(flags):
    cfg = parse_config([str(corpus_path("counter")), "--top", "mkCounter", *flags])
    assert cfg.relaxed


def test_relaxed_disable():
    cfg = parse_config([str(corpus_path("counter")), "--top", "mkCounter", "--bsv-enable-multiple-writes=disable"])
    assert not cfg.relaxed


def test_bad_multiple_writes_value():
    assert bluec(corpus_path("counter"), "--top", "mkCounter", "--bsv-enable-multiple-writes=maybe") == 2


def test_relaxed_counter_trace(tmp_path):
    trace = tmp_path / "t.json"
    code = bluec(corpus_path("counter_inc_second"), "--top", "mkCounterIncSecond", "--relaxed",
                 "--max-cycles", "8", "--trace", trace)
    assert code == 124
    doc = json.loads(trace.read_text())
    assert [c["state"]["counter"] for c in doc["cycles"]] == [0, 1, 2, 3, 2, 3, 2, 3]


def test_schedule_report_stdout(capsys):
    assert bluec(corpus_path("counter"), "--top", "mkCounter", "--schedule-report") == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["classes"][0]["priority"] == ["resetCounter", "incrementCounter"]


def test_dump_core_and_guards(capsys):
    assert bluec(corpus_path("tb1"), "--top", "mkTb1", "--dump-core") == 0
    core = json.loads(capsys.readouterr().out)
    assert core["top"] == "mkTb1"
    assert bluec(corpus_path("tb1"), "--top", "mkTb1", "--dump-guards", "--guard-semantics", "non-strict") == 0
    assert capsys.readouterr().out.startswith("guard-semantics: non-strict\n")


def _outputs(tmp_path, tag):
    d = tmp_path / tag
    d.mkdir()
    code = bluec(corpus_path("tb2"), "--top", "mkTb2", "-o", d / "top.v", "--netlist-json", d / "nl.json",
                 "--vcd", d / "w.vcd", "--trace", d / "t.json", "--schedule-report", d / "s.json")
    assert code == 0
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_outputs_byte_identical(tmp_path):
    a = _outputs(tmp_path, "a")
    b = _outputs(tmp_path, "b")
    assert a == b
    assert set(a) == {"top.v", "nl.json", "w.vcd", "t.json", "s.json"}
    assert a["top.v"].startswith(b"module mkTb2(input clk, input rst);")


def test_multiple_files(tmp_path, capsys):
    (tmp_path / "a.bsv").write_text("interface I; method int v(); endinterface\n"
                                    "module mkTop (Empty); I s <- mkSub; rule r; $display(\"%0d\", s.v()); $finish(0); endrule endmodule\n")
    (tmp_path / "b.bsv").write_text("interface I; method int v(); endinterface\n"
                                    "module mkSub (I); method int v() = 42; endmodule\n")
    assert bluec(tmp_path / "a.bsv", tmp_path / "b.bsv", "--top", "mkTop", "--simulate") == 0
    assert capsys.readouterr().out == "42\n"


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "bluec.cli", str(CORPUS / "tb1.bsv"), "--top", "mkTb1", "--simulate"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.endswith("x = 30\n")
