import json

import pytest

from mbsvm.config import Settings, settings
from mbsvm.core.dataset import load_dataset
from mbsvm.core.errors import ConfigError
from mbsvm.harness.cli import PRESETS, build_parser, build_spec
from mbsvm.harness.trace import read_sweep, read_trace
from mbsvm.main import EXIT_ERROR, EXIT_OK, EXIT_TARGET_NOT_REACHED, main


@pytest.fixture
def data_file(tmp_path):
    path = str(tmp_path / "orth.txt")
    assert main(["synth", "--kind", "orthogonal", "--n", "16", "--out", path]) == EXIT_OK
    return path


@pytest.fixture
def dup_file(tmp_path):
    path = str(tmp_path / "dup.txt")
    assert main(["synth", "--kind", "duplicated", "--n", "8", "--out", path]) == EXIT_OK
    return path


@pytest.fixture(autouse=True)
def isolated_cache(tmp_path, monkeypatch):
    monkeypatch.setattr(settings, "REFERENCE_CACHE", str(tmp_path / "reference.json"))
    monkeypatch.setattr(settings, "MAX_WORKERS", 2)


def _values(output: str) -> dict:
    return dict(line.split(" = ", 1) for line in output.splitlines() if " = " in line)


def test_synth_writes_libsvm(data_file):
    ds = load_dataset(data_file)
    assert ds.n == 16
    with open(data_file) as f:
        assert f.readline().strip() == "+1 1:1.0"


def test_solve_prints_summary(data_file, tmp_path, capsys):
    out = str(tmp_path / "trace.csv")
    code = main(["solve", "--train", data_file, "--solver", "sdca_safe", "--lambda", "0.5", "--batch", "4",
                 "--iters", "200", "--averaging", "final", "--out", out])
    assert code == EXIT_OK
    values = _values(capsys.readouterr().out)
    assert values["solver"] == "sdca_safe"
    assert values["iterations"] == "200"
    assert float(values["gap"]) <= 1e-9
    assert values["target_reached"] == "true"
    header, records = read_trace(out)
    assert header["b"] == "4"
    assert records[0].iter == 0 and records[-1].iter == 200


def test_solve_exit_code_when_target_missed(dup_file, capsys):
    code = main(["solve", "--train", dup_file, "--solver", "sdca_naive", "--lambda", "0.5", "--batch", "8",
                 "--iters", "50", "--averaging", "final", "--stop-on-target"])
    assert code == EXIT_TARGET_NOT_REACHED
    assert _values(capsys.readouterr().out)["target_reached"] == "false"


def test_solve_stops_on_target(dup_file, capsys):
    code = main(["solve", "--train", dup_file, "--solver", "sdca_safe", "--lambda", "0.5", "--batch", "8",
                 "--iters", "50", "--averaging", "final", "--stop-on-target"])
    assert code == EXIT_OK
    assert _values(capsys.readouterr().out)["iterations"] == "1"


def test_usage_errors_exit_with_one(data_file):
    assert main(["solve", "--train", data_file]) == EXIT_ERROR
    assert main(["solve", "--train", data_file, "--solver", "sdca_safe", "--lambda", "-1"]) == EXIT_ERROR
    assert main(["solve", "--train", data_file, "--solver", "sdca_safe", "--lambda", "0.1", "--batch", "17"]) \
        == EXIT_ERROR
    assert main(["frobnicate"]) == EXIT_ERROR
    assert main(["solve", "--train", "missing.txt", "--solver", "pegasos", "--lambda", "0.1"]) == EXIT_ERROR


def test_deterministic_traces_are_byte_identical(data_file, tmp_path):
    paths = [str(tmp_path / f"run{i}.csv") for i in range(2)]
    for path in paths:
        assert main(["solve", "--train", data_file, "--solver", "sdca_aggressive", "--lambda", "0.05",
                     "--batch", "4", "--iters", "300", "--workers", "2", "--deterministic-reduction",
                     "--sigma-exact", "--seed", "9", "--out", path]) == EXIT_OK
    with open(paths[0], "rb") as a, open(paths[1], "rb") as b:
        first, second = a.read(), b.read()
    assert first == second
    assert b"created" not in first
    _, records = read_trace(paths[0])
    assert all(record.elapsed_s is None for record in records)


def test_deterministic_trace_bodies_match_across_worker_counts(tmp_path):
    data = str(tmp_path / "gauss.txt")
    assert main(["synth", "--kind", "gaussian", "--n", "200", "--d", "30", "--sigma-target", "0.1", "--seed", "2",
                 "--out", data]) == EXIT_OK
    bodies = []
    for workers in ("1", "2", "4"):
        out = str(tmp_path / f"workers{workers}.csv")
        assert main(["solve", "--train", data, "--solver", "sdca_safe", "--lambda", "0.01", "--batch", "40",
                     "--iters", "50", "--checkpoint-every", "5", "--workers", workers,
                     "--deterministic-reduction", "--sigma-exact", "--out", out]) == EXIT_OK
        with open(out) as f:
            bodies.append([line for line in f if not line.startswith("#")])
    assert bodies[0] == bodies[1] == bodies[2]


def test_auto_iterations_follow_schedule(data_file, capsys):
    code = main(["solve", "--train", data_file, "--solver", "sdca_safe", "--lambda", "0.5", "--batch", "4",
                 "--iters", "auto", "--epsilon", "0.05", "--sigma-exact"])
    assert code == EXIT_OK
    # t0 = 12, T0 = 44 and T = 54 for n = 16, b = 4, beta_b = 1
    assert _values(capsys.readouterr().out)["iterations"] == "54"


def test_sigma_command(data_file, dup_file, capsys):
    assert main(["sigma", "--train", data_file, "--sigma-exact", "--batch-list", "1,4,16"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "sigma_sq = 0.0625 (exact" in out
    assert "16,1,0.0625" in out

    assert main(["sigma", "--train", data_file]) == EXIT_OK
    values = _values(capsys.readouterr().out)
    assert float(values["sigma_sq"].split()[0]) == pytest.approx(1.02 / 16)

    assert main(["sigma", "--train", dup_file, "--sigma-exact"]) == EXIT_OK
    assert "sigma_sq = 1 (exact" in capsys.readouterr().out


def test_sweep_command(dup_file, tmp_path, capsys):
    out = str(tmp_path / "sweep.csv")
    code = main(["sweep", "--train", dup_file, "--solver", "sdca_naive,sdca_safe", "--lambda", "0.5",
                 "--batch-list", "1,8", "--iters", "400", "--averaging", "final", "--sigma-exact", "--out", out])
    assert code == EXIT_OK
    printed = capsys.readouterr().out.splitlines()
    assert printed[0] == "solver,b,beta_b_over_b,iterations,final_subopt"
    assert printed[2].startswith("sdca_naive,8,1,not reached")
    header, rows = read_sweep(out)
    assert [(row.solver.value, row.b) for row in rows] == [
        ("sdca_naive", 1), ("sdca_naive", 8), ("sdca_safe", 1), ("sdca_safe", 8)]
    assert rows[3].iterations == 1
    assert header["seed_derivation"] == "(seed, b)"
    with open(settings.REFERENCE_CACHE) as f:
        assert len(json.load(f)) == 1


def test_preset_sets_lambda(data_file):
    args = build_parser().parse_args(["solve", "--train", data_file, "--solver", "pegasos", "--preset", "rcv1"])
    assert build_spec(args).solvers[0].lambda_ == PRESETS["rcv1"]
    args = build_parser().parse_args(["solve", "--train", data_file, "--solver", "pegasos", "--preset", "rcv1",
                                      "--lambda", "0.1"])
    with pytest.raises(ConfigError):
        build_spec(args)


def test_spec_file_merged_with_flags(data_file, tmp_path):
    spec_path = tmp_path / "experiment.json"
    spec_path.write_text(json.dumps({
        "train_path": data_file,
        "solvers": [{"kind": "sdca_safe", "lambda": 0.01, "b": 4, "max_iters": 10}],
        "epsilon_target": 0.01,
        "sigma_sq_source": {"mode": "exact_small_n"},
    }))
    args = build_parser().parse_args(["solve", "--spec", str(spec_path), "--iters", "25"])
    spec = build_spec(args)
    cfg = spec.solvers[0]
    assert (cfg.lambda_, cfg.b, cfg.max_iters) == (0.01, 4, 25)
    assert spec.epsilon_target == 0.01
    assert spec.sigma_sq_source.mode == "exact_small_n"


def test_settings_read_environment(monkeypatch):
    monkeypatch.setenv("MBSVM_LOG_LEVEL", "debug")
    monkeypatch.setenv("MBSVM_MAX_WORKERS", "7")
    fresh = Settings()
    assert fresh.LOG_LEVEL == "DEBUG"
    assert fresh.MAX_WORKERS == 7


def test_save_settings_writes_dotenv(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    fresh = Settings()
    fresh.save_settings(log_level="warning", max_workers=3)
    assert fresh.LOG_LEVEL == "WARNING"
    text = (tmp_path / ".env").read_text()
    assert "MBSVM_LOG_LEVEL" in text and "MBSVM_MAX_WORKERS" in text


@pytest.mark.parametrize("name, payload", [
    ("latin1.txt", b"+1 1:0.5\n-1 2:\xff\xfe\n"),
    ("corrupt.txt.zst", b"not a zstd frame"),
])
def test_unreadable_train_file_exits_with_one(tmp_path, name, payload):
    path = tmp_path / name
    path.write_bytes(payload)
    assert main(["solve", "--train", str(path), "--solver", "pegasos", "--lambda", "0.1"]) == EXIT_ERROR


def test_sweep_with_schedule_averaging(data_file, tmp_path):
    out = str(tmp_path / "schedule.csv")
    code = main(["sweep", "--train", data_file, "--solver", "sdca_safe", "--lambda", "0.5", "--batch-list", "1,4",
                 "--iters", "300", "--averaging", "schedule", "--epsilon", "0.05", "--sigma-exact", "--out", out])
    assert code == EXIT_OK
    _, rows = read_sweep(out)
    assert all(row.reached for row in rows)
    header, _ = read_trace(str(tmp_path / "schedule_cells" / "sdca_safe_b4.csv"))
    assert header["schedule"] == "t0=12 T0=44 T=54"
    assert header["max_iters"] == "300"


def test_sweep_auto_iterations_use_each_cell_schedule(data_file, tmp_path):
    out = str(tmp_path / "auto.csv")
    code = main(["sweep", "--train", data_file, "--solver", "sdca_safe", "--lambda", "0.5", "--batch-list", "1,4",
                 "--iters", "auto", "--epsilon", "0.05", "--sigma-exact", "--out", out])
    assert code == EXIT_OK
    cells = tmp_path / "auto_cells"
    # b = 1: t0 = 45, T0 = 173, T = 213; b = 4: t0 = 12, T0 = 44, T = 54
    assert read_trace(str(cells / "sdca_safe_b1.csv"))[0]["max_iters"] == "213"
    assert read_trace(str(cells / "sdca_safe_b4.csv"))[0]["max_iters"] == "54"
