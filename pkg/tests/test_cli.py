import json
import logging
import os

import pytest

from dualgraph.cli import dispatch
from dualgraph.commands import COMMANDS
from dualgraph.utils.manifest import RUN_MANIFEST_NAME

logger = logging.getLogger(__name__)

OFFSETS = "0:0,25:-25,-50:50,50:0"


def error_records(stderr: str) -> list[dict]:
    records = []
    for line in stderr.splitlines():
        line = line.strip()
        if line.startswith("{") and '"exit_code"' in line:
            records.append(json.loads(line))
    return records


def read_json(path):
    with open(path) as f:
        return json.load(f)


@pytest.fixture
def campaign(tmp_path):
    out = str(tmp_path / "campaign")
    code = dispatch(
        ["gen", "--out_dir", out, "--gen.offsets", OFFSETS, "--gen.frames", "3"]
    )
    assert code == 0
    return out


def test_usage_exit_codes(capsys):
    assert dispatch([]) == 2
    assert dispatch(["--help"]) == 0
    assert "subcommands" in capsys.readouterr().out

    assert dispatch(["fly"]) == 2
    (record,) = error_records(capsys.readouterr().err)
    assert record["error"] == "UsageError"

    assert dispatch(["gen", "--help"]) == 0
    assert dispatch(["gen", "--gen.no_such_flag", "1"]) == 2
    assert dispatch(["gen", "--gen.frames", "three"]) == 2


def test_gen_writes_campaign(campaign):
    index = read_json(os.path.join(campaign, "campaign.json"))
    assert len(index["cases"]) == 4
    assert index["mesh_scale"] == "tiny"
    assert index["cases"][1]["offsets"] == [25, -25]
    manifest = read_json(os.path.join(campaign, RUN_MANIFEST_NAME))
    assert manifest["subcommand"] == "gen"


def test_bad_offsets(tmp_path, capsys):
    code = dispatch(["gen", "--out_dir", str(tmp_path), "--gen.offsets", "0:0:0"])
    assert code == 3
    (record,) = error_records(capsys.readouterr().err)
    assert record["error"] == "InvalidInputError"

    # well formed, but off the 25 mm grid
    code = dispatch(["gen", "--out_dir", str(tmp_path), "--gen.offsets", "10:0"])
    assert code == 3
    (record,) = error_records(capsys.readouterr().err)
    assert record["error"] == "InvalidInputError"
    assert "10" in record["message"]


def test_malformed_training_config(campaign, tmp_path, capsys):
    for name, text in (("broken.json", "{\"epochs\": 1,"), ("list.json", "[1, 2]")):
        config_file = tmp_path / name
        config_file.write_text(text)
        code = dispatch(
            [
                "train",
                "--out_dir", str(tmp_path / "train"),
                "--data.campaign", campaign,
                "--train.config_file", str(config_file),
            ]
        )
        assert code == 3
        (record,) = error_records(capsys.readouterr().err)
        assert record["error"] == "InvalidInputError"
        assert record["path"] == str(config_file)


def test_unwritable_out_dir(tmp_path, capsys):
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    code = dispatch(["gen", "--out_dir", str(blocker / "out"), "--gen.offsets", "0:0"])
    assert code == 1
    (record,) = error_records(capsys.readouterr().err)
    assert record["exit_code"] == 1
    assert "blocker" in record["path"]


def test_unexpected_error_is_recorded(tmp_path, capsys, monkeypatch):
    def explode(self):
        raise RuntimeError("boom")

    monkeypatch.setattr(COMMANDS["graph-stats"], "run", explode)
    code = dispatch(["graph-stats", "--out_dir", str(tmp_path)])
    assert code == 1
    (record,) = error_records(capsys.readouterr().err)
    assert record == {"error": "RuntimeError", "message": "boom", "exit_code": 1, "path": None}


def test_train_eval_rollout(campaign, tmp_path):
    assert dispatch(["split", "--out_dir", str(tmp_path / "split"), "--data.campaign", campaign]) == 0
    split = read_json(tmp_path / "split" / "split.json")
    assert (len(split["train"]), len(split["val"]), len(split["test"])) == (2, 1, 1)

    train_dir = str(tmp_path / "train")
    code = dispatch(
        [
            "train",
            "--out_dir", train_dir,
            "--data.campaign", campaign,
            "--train.epochs", "2",
            "--train.hidden", "4",
            "--train.mlp_hidden", "4",
            "--train.batch_size", "2",
        ]
    )
    assert code == 0
    checkpoint = os.path.join(train_dir, "checkpoint")
    assert os.path.exists(os.path.join(checkpoint, "checkpoint.json"))
    with open(os.path.join(train_dir, "history.csv")) as f:
        assert len(f.read().strip().splitlines()) == 3
    train_config = read_json(os.path.join(train_dir, "train_config.json"))
    assert train_config["hidden"] == 4 and train_config["epochs"] == 2

    eval_dir = str(tmp_path / "eval")
    code = dispatch(
        ["eval", "--out_dir", eval_dir, "--data.campaign", campaign, "--eval.checkpoint", checkpoint]
    )
    assert code == 0
    metrics = read_json(os.path.join(eval_dir, "metrics.json"))
    logger.info(f"metrics: {metrics}")
    assert metrics["n_cases"] == 1
    assert set(metrics) >= {"u", "s", "peeq", "rf2"}

    case_dir = os.path.join(campaign, "cases", "case_+000_+000")
    rollout_dir = str(tmp_path / "rollout")
    code = dispatch(
        [
            "rollout",
            "--out_dir", rollout_dir,
            "--rollout.checkpoint", checkpoint,
            "--rollout.case", case_dir,
        ]
    )
    assert code == 0
    assert os.path.exists(os.path.join(rollout_dir, "prediction", "u.bin"))
    with open(os.path.join(rollout_dir, "force_deflection.csv")) as f:
        assert len(f.read().strip().splitlines()) == 4


def test_training_config_file(campaign, tmp_path):
    config_file = tmp_path / "train.json"
    config_file.write_text(json.dumps({"epochs": 1, "hidden": 4, "mlp_hidden": 4, "seed": 3}))
    out = str(tmp_path / "train")
    code = dispatch(
        [
            "train",
            "--out_dir", out,
            "--data.campaign", campaign,
            "--train.config_file", str(config_file),
            "--train.hidden", "3",
        ]
    )
    assert code == 0
    used = read_json(os.path.join(out, "train_config.json"))
    assert used["hidden"] == 3
    assert used["epochs"] == 1 and used["seed"] == 3


def test_eval_missing_checkpoint(campaign, tmp_path, capsys):
    missing = str(tmp_path / "no_checkpoint")
    code = dispatch(
        ["eval", "--out_dir", str(tmp_path / "eval"), "--data.campaign", campaign, "--eval.checkpoint", missing]
    )
    assert code == 3
    (record,) = error_records(capsys.readouterr().err)
    assert record["error"] == "MissingBlobError"
    assert missing in record["path"]


def test_project_study(campaign, tmp_path):
    out = tmp_path / "project"
    case_dir = os.path.join(campaign, "cases", "case_+025_-025")
    assert dispatch(["project-study", "--out_dir", str(out), "--project.case", case_dir]) == 0
    report = read_json(out / "attenuation.json")
    assert report["frame"] == 2
    assert report["stress"]["projected_peak"] <= report["stress"]["original_peak"]
    assert report["stress"]["reduction_pct"] > 0.0

    code = dispatch(
        ["project-study", "--out_dir", str(out), "--project.case", case_dir, "--project.frame", "7"]
    )
    assert code == 3


def test_graph_stats(tmp_path):
    out = tmp_path / "graph"
    assert dispatch(["graph-stats", "--out_dir", str(out), "--graph.mesh_scale", "tiny"]) == 0
    stats = read_json(out / "graph_stats.json")
    assert stats["n_nodes"] == 13 * 3 * 3
    assert stats["n_elems"] == 12 * 2 * 2


def test_grad_check(tmp_path):
    out = tmp_path / "grad"
    assert dispatch(["grad-check", "--out_dir", str(out), "--grad.hidden", "4"]) == 0
    report = read_json(out / "grad_check.json")
    assert max(report["primitives"].values()) < 1e-6

    # an impossible tolerance fails the audit
    code = dispatch(
        ["grad-check", "--out_dir", str(out), "--grad.hidden", "4", "--grad.primitive_tol", "0"]
    )
    assert code == 4
