from __future__ import annotations

import json

import pytest

from signquest import cli


def _config_file(tmp_path, **overrides):
    config = {
        "name": "cli",
        "seed": 0,
        "budget": 40,
        "num_images": 4,
        "norms": ["inf"],
        "epsilon": 1.0,
        "model": {"type": "mlp", "hidden": 16, "epochs": 5,
                  "learning_rate": 0.01},
        "dataset": {"type": "blobs", "features": 8, "classes": 3,
                    "spread": 3.0, "cluster_std": 1.0,
                    "train_samples": 200, "test_samples": 120},
        "attacks": [{"name": "signhunter"}],
    }
    config.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    return str(path)


def test_attack_command_writes_outputs(tmp_path, capsys):
    config = _config_file(tmp_path)
    out = tmp_path / "results"
    code = cli.main(["attack", "--config", config, "--out", str(out),
                     "--jobs", "1"])
    assert code == 0
    assert (out / "cli" / "summary.json").exists()
    assert (out / "cli" / "signhunter_inf.csv").exists()
    printed = capsys.readouterr().out
    assert "signhunter" in printed
    assert "failure_rate" in printed


def test_attack_command_byte_identical_reruns(tmp_path):
    config = _config_file(tmp_path)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["attack", "--config", config, "--out", str(out_a),
                     "--jobs", "1"]) == 0
    assert cli.main(["attack", "--config", config, "--out", str(out_b),
                     "--jobs", "1"]) == 0
    for name in ("summary.json", "signhunter_inf.csv"):
        assert (out_a / "cli" / name).read_bytes() == \
            (out_b / "cli" / name).read_bytes()


def test_attack_command_missing_config_is_config_error(tmp_path):
    assert cli.main(["attack", "--config", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path)]) == 3


def test_attack_command_invalid_json_is_config_error(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert cli.main(["attack", "--config", str(path),
                     "--out", str(tmp_path)]) == 3


def test_attack_command_bad_schema_is_config_error(tmp_path):
    path = tmp_path / "schema.json"
    path.write_text(json.dumps({"budget": 10}))
    assert cli.main(["attack", "--config", str(path),
                     "--out", str(tmp_path)]) == 3


def test_usage_errors_exit_two():
    with pytest.raises(SystemExit) as info:
        cli.main(["bogus-command"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        cli.main(["signsearch", "--method", "signhunter"])
    assert info.value.code == 2


def test_signsearch_command_trace(tmp_path, capsys):
    trace = tmp_path / "trace.csv"
    code = cli.main(["signsearch", "--method", "signhunter", "--n", "9",
                     "--objective", "linear", "--out", str(trace),
                     "--seed", "1"])
    assert code == 0
    lines = trace.read_text().splitlines()
    assert lines[0] == "query_index,hamming_to_truth,directional_derivative_value"
    assert "final_hamming_to_truth=0" in capsys.readouterr().out


def test_signsearch_rejects_large_elim():
    assert cli.main(["signsearch", "--method", "elim", "--n", "25"]) == 3


def test_signsearch_all_methods_run(capsys):
    for method in ("signhunter", "seqflip", "goo", "elim"):
        assert cli.main(["signsearch", "--method", method, "--n", "6",
                         "--objective", "quadratic", "--seed", "0"]) == 0
    assert capsys.readouterr().out.count("queries=") == 4


def test_hamming_bench_command(tmp_path, capsys):
    out = tmp_path / "ratios.csv"
    code = cli.main(["hamming-bench", "--n-max", "4", "--trials", "5",
                     "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "strategy,n,mean_ratio,bound"
    assert len(lines) == 1 + 2 * 4


def test_noisy_fgsm_command(tmp_path, capsys):
    out = tmp_path / "curve.csv"
    code = cli.main(["noisy-fgsm", "--images", "6", "--seeds", "2",
                     "--ks", "0,100", "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "mode,k,seed,misclassification_rate"
    assert len(lines) == 1 + 2 * 2 * 2


def test_contopt_command(tmp_path, capsys):
    out = tmp_path / "traces.csv"
    code = cli.main(["contopt", "--ns", "12", "--trials", "2",
                     "--evals", "80", "--stride", "40", "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "method,n,trial,eval_index,best_loss"
    assert "mean_final_loss" in capsys.readouterr().out


def test_gradcheck_command(capsys):
    assert cli.main(["gradcheck", "--model", "linear", "--points", "5"]) == 0
    assert "linear: ok" in capsys.readouterr().out


def test_gradcheck_failure_exits_one(monkeypatch, capsys):
    from signquest import models

    monkeypatch.setattr(models, "gradient_relative_error",
                        lambda *a, **k: 1.0)
    assert cli.main(["gradcheck", "--model", "concave", "--points", "2"]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_maghist_command(tmp_path, capsys):
    out = tmp_path / "hist.csv"
    code = cli.main(["maghist", "--images", "3", "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "image_id,bin_lo,bin_hi,count,concentration"


def test_seed_env_fallback(tmp_path, monkeypatch):
    trace_a = tmp_path / "a.csv"
    trace_b = tmp_path / "b.csv"
    monkeypatch.setenv("SIGNQUEST_SEED", "7")
    assert cli.main(["signsearch", "--method", "signhunter", "--n", "8",
                     "--out", str(trace_a)]) == 0
    monkeypatch.delenv("SIGNQUEST_SEED")
    assert cli.main(["signsearch", "--method", "signhunter", "--n", "8",
                     "--seed", "7", "--out", str(trace_b)]) == 0
    assert trace_a.read_text() == trace_b.read_text()


def test_seed_env_must_be_integer(monkeypatch):
    monkeypatch.setenv("SIGNQUEST_SEED", "pi")
    assert cli.main(["gradcheck", "--model", "linear", "--points", "1"]) == 3


def test_runtime_errors_exit_one(monkeypatch):
    from signquest import cli as cli_module

    def boom(*args, **kwargs):
        raise RuntimeError("synthetic failure")

    monkeypatch.setattr(cli_module.bench, "run_hamming_estimate_bench", boom,
                        raising=False)
    monkeypatch.setattr(cli_module.signsearch, "query_ratio_bench", boom)
    assert cli_module.main(["hamming-bench", "--n-max", "2",
                            "--trials", "1"]) == 1
