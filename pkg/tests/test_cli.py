import json

import pytest

from localrange.cli import cli_main


def run_cli(capsys, *argv):
    try:
        code = cli_main(list(argv))
    except SystemExit as exc:  # argparse usage errors
        code = exc.code
    out = capsys.readouterr()
    return code, out.out, out.err


def test_bounds_qsl_example(capsys):
    code, out, _ = run_cli(capsys, "bounds", "--task", "qsl", "--n", "4", "--m", "1")
    assert code == 0
    assert "bound_qsl = 0.25" in out


def test_bounds_vqe_reports_ranks(capsys):
    code, out, _ = run_cli(capsys, "bounds", "--task", "vqe", "--n", "4")
    assert code == 0
    assert "N_A = 0" in out
    assert "N_AB = 3" in out


def test_missing_task_exits_one(capsys):
    code, _, err = run_cli(capsys, "scaling", "--n", "2")
    assert code == 1
    assert "task" in err


def test_missing_subcommand_exits_one(capsys):
    code, _, err = run_cli(capsys)
    assert code == 1
    assert "usage" in err.lower()


def test_unknown_flag_exits_one(capsys):
    code, _, err = run_cli(capsys, "scaling", "--task", "vqe", "--n", "2", "--frobnicate")
    assert code == 1


def test_scaling_stdout_csv(capsys):
    code, out, _ = run_cli(capsys, "scaling", "--task", "vqe", "--n", "2",
                           "--samples", "2", "--seed", "7")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].startswith("task,n,m,")
    assert lines[1].startswith("vqe,2,1,both,2,")


def test_scaling_deterministic(capsys):
    args = ("scaling", "--task", "vqe", "--n", "2", "--n-max", "2", "--samples", "2", "--seed", "7")
    _, out1, _ = run_cli(capsys, *args)
    _, out2, _ = run_cli(capsys, *args)
    assert out1 == out2


def test_config_file_with_overrides(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"task": "vqe", "n_min": 2, "samples": 2, "seed": 1}))
    out_path = tmp_path / "rows.csv"
    code, _, _ = run_cli(capsys, "scaling", "--config", str(cfg), "--seed", "2",
                         "--out", str(out_path))
    assert code == 0
    assert out_path.read_text().splitlines()[1].endswith(",2")  # CLI seed wins


def test_config_unknown_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"task": "vqe", "n_min": 2, "shots": 100}))
    code, _, err = run_cli(capsys, "scaling", "--config", str(cfg))
    assert code == 1
    assert "shots" in err


def test_config_unreadable(capsys):
    code, _, err = run_cli(capsys, "scaling", "--config", "/nonexistent/cfg.json")
    assert code == 1


def test_invalid_config_value_exits_one(capsys):
    code, _, err = run_cli(capsys, "scaling", "--task", "vqe", "--n", "1")
    assert code == 1
    assert "n_min" in err


def test_layers_subcommand(capsys):
    code, out, _ = run_cli(capsys, "layers", "--task", "vqe", "--n", "2",
                           "--samples", "2", "--seed", "3", "--layer-list", "0,2")
    assert code == 0
    assert "# layers=0 n=2" in out
    assert "# layers=2 n=2" in out


def test_validate_haar_small(capsys):
    code, out, _ = run_cli(capsys, "validate-haar", "--samples", "300", "--seed", "1")
    assert code == 0
    assert "[pass]" in out
    assert "FAIL" not in out


@pytest.mark.slow
def test_selftest(capsys):
    code, out, _ = run_cli(capsys, "selftest", "--seed", "0")
    assert code == 0
    assert "FAIL" not in out
