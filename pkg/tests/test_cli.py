import pytest

from muntzkit.cli import SCHEMAS, build_config, header, main, parse_header, read_config_text


def test_classify_to_stdout(capsys):
    assert main(["classify", "--set", "family=arith:0,1"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("verdict = yes (harmonic-divergent; touches-zero)")
    assert "# muntzkit classify\n# family = arith:0,1\n# a = 0\n# b = 1\n" in out


def test_pipeline_writes_csv_ledger(tmp_path, capsys):
    cfg = tmp_path / "pipe.cfg"
    cfg.write_text("# default pipeline with a smaller band\ntheta2 = sqrt(2)/2\nN = 8  # Fejer degree\n"
                   "stage = 6\n")
    assert main(["cosine", "pipeline", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 0
    text = (tmp_path / "out" / "cosine_pipeline.csv").read_text()
    body = [ln for ln in text.splitlines() if not ln.startswith("#")]
    assert body[0] == "stage,description,L1,L2,sup_grid"
    stages = [ln.split(",")[0] for ln in body[1:]]
    assert stages == ["fejer", "decomposition", "muntz1", "muntz2", "bound", "combined"]
    rows = {ln.split(",")[0]: [float(x) for x in ln.split(",")[2:]] for ln in body[1:]}
    assert all(b >= c for b, c in zip(rows["bound"], rows["combined"]))
    assert "combined_L2" in capsys.readouterr().out


def test_rerun_is_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert main(["hup", "--set", "theta2=1/3", "--set", "K=16", "--out", str(tmp_path / d)]) == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == ["hup_line1.csv", "hup_line2.csv", "hup_moments.csv"]
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_header_round_trip(tmp_path):
    assert main(["modulate", "--set", "alpha=1/8", "--set", "exponent=false",
                 "--out", str(tmp_path)]) == 0
    text = (tmp_path / "modulate_residuals.csv").read_text()
    cfg = parse_header(text)
    assert cfg.command == "modulate" and cfg.raw["alpha"] == "1/8" and cfg.values["exponent"] is False
    assert header(cfg) == "".join(ln + "\n" for ln in text.splitlines() if ln.startswith("#"))


def test_every_schema_default_round_trips():
    for command, schema in SCHEMAS.items():
        entries = [] if all(k.default is not None for k in schema.values()) else \
            [("family", "arith:0,1", 1, 1, 10)]
        cfg = build_config(command, entries)
        assert parse_header(header(cfg) + "x,y\n1,2\n") == cfg


def test_out_of_scope_p_exits_2(capsys):
    assert main(["modulate", "--set", "p=1"]) == 2
    assert "(1, +inf]" in capsys.readouterr().err


def test_precondition_and_certificate_exit_codes(capsys):
    assert main(["cosine", "counterexample", "--set", "theta2=sqrt(2)/2"]) == 2
    assert main(["cosine", "decompose", "--set", "theta2=1/3"]) == 2
    assert main(["hup", "--set", "theta2=0"]) == 2
    assert main(["approx", "--set", "family=arith:0,1", "--set", "stages=22"]) == 3


def test_bad_config_reports_line_and_column(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("family = arith:0,1\nb = 1/0\n")
    assert main(["classify", "--config", str(cfg)]) == 1
    assert "line 2, column 5" in capsys.readouterr().err
    cfg.write_text("family = arith:0,1\n\n  colour = red\n")
    assert main(["classify", "--config", str(cfg)]) == 1
    err = capsys.readouterr().err
    assert "line 3, column 3" in err and "unknown key 'colour'" in err
    cfg.write_text("family arith:0,1\n")
    assert main(["classify", "--config", str(cfg)]) == 1
    assert main(["classify", "--config", str(tmp_path / "missing.cfg")]) == 1
    assert main(["classify"]) == 1
    assert main(["cosine", "--set", "theta1=0"]) == 1
    assert main(["hup", "extra"]) == 1


def test_read_config_text_positions():
    entries = read_config_text("# comment\n\nkey = value # trailing\n   x=  3\n")
    assert entries == [("key", "value", 3, 1, 7), ("x", "3", 4, 4, 8)]


def test_unknown_command_is_rejected_by_argparse():
    with pytest.raises(SystemExit) as info:
        main(["nonsense"])
    assert info.value.code == 2
