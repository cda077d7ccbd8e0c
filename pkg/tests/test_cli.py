from fracctrl.cli import main
from fracctrl.harness import clear_solve_cache, read_table_csv
from fracctrl.problem import default_experiment_spec, to_config_text


def test_forward_command(capsys):
    rc = main(["forward", "--alpha", "0.5", "--m", "4", "--n", "16"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "L2(L2) error" in out
    err = float(out.strip().rsplit("=", 1)[1])
    assert 0.0 < err < 0.1


def test_ocp_command_with_export(tmp_path, capsys):
    out = tmp_path / "control.csv"
    rc = main(["ocp", "--alpha", "0.8", "--m", "4", "--n", "16",
               "--out", str(out)])
    assert rc == 0
    text = capsys.readouterr().out
    assert "converged in" in text and "J =" in text
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "t,x,value"
    assert len(lines) == 1 + 32 * 17
    vals = [float(ln.split(",")[2]) for ln in lines[1:]]
    assert max(abs(v) for v in vals) <= 0.1 + 1e-14


def test_ocp_with_config_file(tmp_path, capsys):
    cfg = tmp_path / "instance.cfg"
    cfg.write_text(to_config_text(default_experiment_spec(0.6, 0.25)))
    rc = main(["ocp", "--m", "3", "--n", "8", "--config", str(cfg)])
    assert rc == 0
    assert "optimality residual" in capsys.readouterr().out


def test_study_temporal_csv(tmp_path, capsys):
    clear_solve_cache()
    out = tmp_path / "table.csv"
    rc = main(["study", "temporal", "--alpha", "0.7", "--m", "3,4",
               "--m-ref", "5", "--n", "8", "--format", "csv",
               "--out", str(out)])
    assert rc == 0
    table = read_table_csv(out.read_text())
    assert [r[0] for r in table.rows] == [8, 16]
    assert table.rows[1][2] == table.rows[1][2]  # order present in second row


def test_study_spatial_text(capsys):
    clear_solve_cache()
    rc = main(["study", "spatial", "--alpha", "0.7", "--m", "3",
               "--n", "4,8", "--n-ref", "16"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "errY" in out and "alpha=0.7" in out


def test_study_uniform_flag(capsys):
    clear_solve_cache()
    rc = main(["study", "temporal", "--alpha", "0.7", "--m", "3,4",
               "--m-ref", "5", "--n", "8", "--uniform", "--format", "csv"])
    assert rc == 0
    assert "param,errY" in capsys.readouterr().out


def test_error_exit_code(capsys):
    rc = main(["ocp", "--alpha", "1.5", "--m", "3", "--n", "8"])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_uniform_spatial_study_rejected(capsys):
    rc = main(["study", "spatial", "--uniform", "--alpha", "0.5"])
    assert rc == 2
    assert "graded" in capsys.readouterr().err


def test_paper_scale_flag_exists():
    import argparse
    from fracctrl.cli import _build_parser
    parser = _build_parser()
    sub = [a for a in parser._actions if isinstance(a, argparse._SubParsersAction)][0]
    help_text = sub.choices["study"].format_help()
    assert "--paper-scale" in help_text
    assert "--theta" in help_text and "--tol" in help_text
