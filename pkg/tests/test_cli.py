"""Command-line interface: exit codes, output shapes, determinism."""

import json

import pytest

from pdkkit.cli import main


@pytest.fixture
def demo(tmp_path):
    src = tmp_path / "demo.pdkasm"
    src.write_text(".arch pdk13\n_start:\n nop\n stopsys\n")
    return src


def test_asm_success(demo, tmp_path, capsys):
    out = tmp_path / "demo.pdkimg"
    assert main(["asm", str(demo), "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "PDKIMG 1 pdk13 none"


def test_asm_diagnostic_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.pdkasm"
    bad.write_text(".arch pdk13\n set0 0x30.0\n")
    assert main(["asm", str(bad)]) == 1
    err = capsys.readouterr().err
    assert "lower half" in err


def test_asm_unknown_ext_usage_error(demo):
    with pytest.raises(SystemExit) as e:
        main(["asm", str(demo), "--ext", "bogus"])
    assert e.value.code == 2


def test_asm_missing_file_usage_error(tmp_path, capsys):
    assert main(["asm", str(tmp_path / "absent.pdkasm")]) == 2


def test_run_reports_halt_and_cycle(demo, tmp_path, capsys):
    out = tmp_path / "demo.pdkimg"
    main(["asm", str(demo), "-o", str(out)])
    assert main(["run", str(out)]) == 0
    text = capsys.readouterr().out
    assert "halt: stopsys" in text
    assert "cycle: 2" in text


def test_run_too_many_cores_usage_error(demo, tmp_path, capsys):
    out = tmp_path / "demo.pdkimg"
    main(["asm", str(demo), "-o", str(out)])
    assert main(["run", str(out), "--cores", "2"]) == 2


def test_run_trace(demo, tmp_path, capsys):
    out = tmp_path / "demo.pdkimg"
    main(["asm", str(demo), "-o", str(out)])
    trace = tmp_path / "t.txt"
    assert main(["run", str(out), "--trace", "text", "--trace-out", str(trace)]) == 0
    assert "nop" in trace.read_text()
    tj = tmp_path / "t.jsonl"
    assert main(["run", str(out), "--trace", "jsonl", "--trace-out", str(tj)]) == 0
    rec = json.loads(tj.read_text().splitlines()[0])
    assert rec["cycle"] == 0 and rec["mnemonic"] == "nop"


def test_run_with_irq_sweep_counts_no_violations(tmp_path, capsys):
    from pdkkit.lowering import IO_VIOL, gen_atomic_flag

    fx = gen_atomic_flag("test_and_set", 2, iterations=1)
    src = tmp_path / "fx.pdkasm"
    src.write_text(fx.text)
    img = tmp_path / "fx.pdkimg"
    assert main(["asm", str(src), "-o", str(img)]) == 0
    for at in (4, 40, 90):
        assert main(
            ["run", str(img), "--cores", "2", "--irq-at", str(at),
             "--max-cycles", "4000"]
        ) == 0
        out = capsys.readouterr().out
        assert f"io[{IO_VIOL}]" not in out  # violation latch never set


def test_dasm_round_trip(demo, tmp_path):
    img = tmp_path / "demo.pdkimg"
    asm2 = tmp_path / "again.pdkasm"
    img2 = tmp_path / "again.pdkimg"
    main(["asm", str(demo), "-o", str(img)])
    assert main(["dasm", str(img), "-o", str(asm2)]) == 0
    assert main(["asm", str(asm2), "-o", str(img2)]) == 0
    words = [l for l in img.read_text().splitlines() if ":" in l]
    words2 = [l for l in img2.read_text().splitlines() if ":" in l]
    assert words == words2


def test_gap_report_pdk13(capsys):
    assert main(["gap-report", "--arch", "pdk13"]) == 0
    out = capsys.readouterr().out
    assert "35" in out and "8 opcodes" in out and "5 opcodes" in out


def test_gap_report_pdk14_widest_two(capsys):
    assert main(["gap-report", "--arch", "pdk14", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    lengths = [g["length"] for g in doc["gaps"]]
    assert lengths[:2] == [88, 67]


def test_gap_report_pdk15_memory_op_room(capsys):
    assert main(["gap-report", "--arch", "pdk15", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["widest"] >= 256


def test_gap_report_unplaceable_diagnostic(capsys):
    assert main(["gap-report", "--arch", "pdk13", "--ext", "idxsp"]) == 1


def test_size_compare_default(capsys):
    assert main(["size-compare", "--format", "csv"]) == 0
    out = capsys.readouterr().out
    lines = out.strip().splitlines()
    assert lines[0] == "program,variant,extensions,mode,size_words,ratio"
    for line in lines[1:]:
        cols = line.split(",")
        if cols[2] == "none":
            assert float(cols[5]) == 1.0


def test_size_compare_missing_corpus_dir(tmp_path, capsys):
    assert main(["size-compare", "--corpus", str(tmp_path / "absent")]) == 2


def test_size_compare_custom_configs(tmp_path, capsys):
    cfg = tmp_path / "configs.json"
    cfg.write_text(json.dumps([
        {"variant": "pdk15", "extensions": [], "mode": "all_reentrant"},
        {"variant": "pdk15", "extensions": ["spadd", "sprel"], "mode": "all_reentrant"},
    ]))
    assert main(["size-compare", "--configs", str(cfg), "--format", "json"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert {r["extensions"] for r in rows} == {"none", "spadd+sprel"}


def test_run_irq_vector_by_symbol(tmp_path, capsys):
    src = tmp_path / "irq.pdkasm"
    src.write_text(
        ".arch pdk13\n.equ __core0_sp, 0x20\n_start:\n engint\n nop\n nop\n"
        " stopsys\nhandler:\n inc 0x08\n reti\n"
    )
    img = tmp_path / "irq.pdkimg"
    main(["asm", str(src), "-o", str(img)])
    assert main(["run", str(img), "--irq-at", "2", "--irq-vector", "handler"]) == 0
    assert main(["run", str(img), "--irq-at", "2", "--irq-vector", "nosuch"]) == 2


def test_asm_arch_flag_for_headerless_source(tmp_path):
    src = tmp_path / "bare.pdkasm"
    src.write_text("_start:\n nop\n stopsys\n")
    out = tmp_path / "bare.pdkimg"
    assert main(["asm", str(src)]) == 1  # no architecture anywhere
    assert main(["asm", str(src), "--arch", "pdk14", "-o", str(out)]) == 0
    assert out.read_text().startswith("PDKIMG 1 pdk14")


def test_deterministic_output(demo, tmp_path, capsys):
    out = tmp_path / "demo.pdkimg"
    main(["asm", str(demo), "-o", str(out)])
    first = out.read_text()
    main(["asm", str(demo), "-o", str(out)])
    assert out.read_text() == first
