import csv

import pytest
import dfsdecoy.config as config
import dfsdecoy.ui.cli as cli


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.reader(f))


def _last_positive(rows, column):
    index = rows[0].index(column)
    return max(float(row[0]) for row in rows[1:] if float(row[index]) > 0)


def test_fig1_sweep(tmp_path):
    out = tmp_path / "fig1.csv"
    assert cli.main(["--out", str(out)]) == cli.EXIT_OK
    rows = _read_csv(out)
    assert rows[0] == cli.SWEEP_HEADER
    assert len(rows) == 62
    assert rows[1][0] == "0.00000000000e+00"
    for row in rows[1:]:
        assert float(row[5]) >= 0
        assert float(row[8]) >= 0
    assert 15 <= _last_positive(rows, "R_nodecoy") <= 21
    assert 37 <= _last_positive(rows, "R_3int") <= 43


def test_fig1_sweep_deterministic(tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["--l-start", "10", "--l-end", "20", "--l-step", "5"]
    assert cli.main(args + ["--out", str(first)]) == cli.EXIT_OK
    assert cli.main(args + ["--out", str(second), "--workers", "2"]) == cli.EXIT_OK
    assert first.read_text() == second.read_text()
    assert len(_read_csv(first)) == 4


def test_fig1_sweep_diagnostics(tmp_path):
    out = tmp_path / "fig1.csv"
    assert cli.main(["--out", str(out), "--l-start", "30", "--l-end", "30", "--diagnostics"]) == cli.EXIT_OK
    header, row = _read_csv(out)
    assert header == cli.SWEEP_HEADER + cli.DIAGNOSTICS_HEADER
    # Without a single-pair bound the raw e1 is not defined
    assert float(row[header.index("R_nodecoy.diag")]) < 0
    assert row[header.index("e1_upper_nodecoy.diag")] == "nan"
    assert float(row[header.index("e1_upper_nodecoy")]) == 0.5


def test_fig1_sweep_stdout(capsys):
    assert cli.main(["--l-start", "0", "--l-end", "0"]) == cli.EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == ",".join(cli.SWEEP_HEADER)
    assert len(lines) == 2


def test_attack_verify(capsys):
    assert cli.main(["--mode", "attack_verify"]) == cli.EXIT_OK
    report = capsys.readouterr().out
    assert report.splitlines()[-1] == "VERDICT: PASS"
    assert "printed stage probabilities: 0.25 0.75 0.4 overall 0.3" in report


def test_attack_verify_zero_tolerance(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("mode=attack_verify\nattack_tolerance=0\n")
    assert cli.main(["--config", str(cfg)]) == cli.EXIT_VERIFICATION
    assert capsys.readouterr().out.splitlines()[-1] == "VERDICT: FAIL"


def test_pns_limit(capsys):
    assert cli.main(["--mode", "pns_limit"]) == cli.EXIT_OK
    report = capsys.readouterr().out
    assert "closed form: 34.704" in report
    assert "printed:     37.4 km" in report


def test_bounds_table(tmp_path):
    out = tmp_path / "bounds.csv"
    assert cli.main(["--mode", "bounds_table", "--out", str(out), "--l-end", "40", "--l-step", "10"]) == cli.EXIT_OK
    rows = _read_csv(out)
    assert rows[0] == cli.BOUNDS_HEADER
    assert len(rows) == 6
    for row in rows[1:]:
        s1_true = float(row[1])
        assert float(row[3]) <= s1_true * (1 + 1e-9)
        assert float(row[5]) <= s1_true * (1 + 1e-9)
        assert float(row[7]) <= s1_true * (1 + 1e-9)


def test_optimize(capsys):
    assert cli.main(["--mode", "optimize", "--length-km", "20"]) == cli.EXIT_OK
    assert "lambda=" in capsys.readouterr().out
    assert cli.main(["--mode", "optimize", "--length-km", "200"]) == cli.EXIT_OK
    assert "no secure rate" in capsys.readouterr().out


def test_ledger(capsys):
    assert cli.main(["--mode", "ledger"]) == cli.EXIT_OK
    assert "[splitting-attack distance limit] printed: 37.4 km" in capsys.readouterr().out


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("k_db_per_km=0.25\n")
    run_config, log_level = cli.load_config(["--config", str(cfg), "--k-db-per-km", "0.2"])
    assert run_config.k_db_per_km == 0.2
    assert log_level == "WARNING"
    assert cli.load_config(["--config", str(cfg)])[0].k_db_per_km == 0.25


def test_config_errors(tmp_path, capsys):
    assert cli.main(["--lambda", "abc"]) == cli.EXIT_CONFIG
    assert cli.main(["--lambda", "0.001"]) == cli.EXIT_CONFIG
    assert cli.main(["--speed", "3"]) == cli.EXIT_CONFIG
    assert cli.main(["--config", str(tmp_path / "missing.cfg")]) == cli.EXIT_CONFIG
    assert "dfsdecoy:" in capsys.readouterr().err


def test_argument_parser_raises():
    with pytest.raises(config.ConfigError):
        cli.build_arg_parser().parse_args(["--mode"])


def test_fmt():
    assert cli.fmt(1234.5) == "1.23450000000e+03"


def test_fig1_sweep_as_printed_variant(tmp_path):
    out = tmp_path / "fig1.csv"
    args = ["--eq20-variant", "as_printed", "--l-start", "150", "--l-end", "150", "--out", str(out)]
    assert cli.main(args) == cli.EXIT_OK
    header, row = _read_csv(out)
    assert float(row[header.index("E_signal")]) == 1.0
    assert float(row[header.index("R_3int")]) == 0.0
    bounds_out = tmp_path / "bounds.csv"
    assert cli.main(["--mode", "bounds_table", "--eq20-variant", "as_printed", "--l-start", "150", "--l-end", "150",
                     "--out", str(bounds_out)]) == cli.EXIT_OK


def test_domain_error_exit(capsys):
    # No truncation of the pair distribution reaches the tail bound
    assert cli.main(["--lambda", "3000", "--l-end", "0"]) == cli.EXIT_CONFIG
    assert "dfsdecoy:" in capsys.readouterr().err


def test_log_level():
    assert cli.load_config(["--log-level", "debug"])[1] == "DEBUG"
    with pytest.raises(config.ConfigError):
        cli.load_config(["--log-level", "LOUD"])
    assert cli.main(["--log-level", "LOUD"]) == cli.EXIT_CONFIG
