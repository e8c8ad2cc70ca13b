"""Command-line interface: exit codes, artifacts, manifests, reproducibility."""

import hashlib
import json

import pytest

from dbcsem import cli
from dbcsem.checkpoint import load_tensors
from dbcsem.data import load_records


@pytest.fixture
def config_path(tmp_path):
    doc = {
        "system": {"height": 4, "width": 4, "k": 4, "l": 8, "enc_hidden": [12],
                   "dec_hidden": [12], "ma_hidden": [6], "attn_hidden": [6],
                   "df_hidden": [12]},
        "train": {"epochs_phase1": 1, "epochs_phase2": 0, "lr_phase1": 1e-3,
                  "batch_size": 8, "seed": 0},
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return str(path)


def _train(config_path, out_dir, extra=()):
    return cli.main(["train", "--config", config_path, "--out", str(out_dir),
                     "--synthetic-count", "16", "--synthetic-kind", "gradients", *extra])


class TestTrain:
    def test_writes_artifacts_and_manifest(self, config_path, tmp_path):
        out = tmp_path / "run"
        assert _train(config_path, out) == cli.EXIT_OK
        assert (out / "checkpoint.dbc").exists()
        assert (out / "train_log.csv").exists()
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "train"
        for art in manifest["artifacts"].values():
            digest = hashlib.sha256((out / art["path"].split("/")[-1]).read_bytes()).hexdigest()
            assert art["sha256"] == digest
        load_tensors(out / "checkpoint.dbc")  # parses cleanly

    def test_rerun_is_byte_identical(self, config_path, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert _train(config_path, a) == cli.EXIT_OK
        assert _train(config_path, b) == cli.EXIT_OK
        assert (a / "train_log.csv").read_bytes() == (b / "train_log.csv").read_bytes()
        assert (a / "checkpoint.dbc").read_bytes() == (b / "checkpoint.dbc").read_bytes()


class TestSweepAndBaseline:
    def test_sweep_from_checkpoint(self, config_path, tmp_path):
        run = tmp_path / "run"
        assert _train(config_path, run) == cli.EXIT_OK
        out = tmp_path / "sweep"
        rc = cli.main(["sweep", "--config", config_path,
                       "--checkpoint", str(run / "checkpoint.dbc"),
                       "--out", str(out), "--snr1-db", "-5", "--snr2-db", "0",
                       "--alpha-grid", "0,0.5,1", "--synthetic-count", "16",
                       "--synthetic-kind", "gradients"])
        assert rc == cli.EXIT_OK
        lines = (out / "region.csv").read_text().strip().splitlines()
        assert len(lines) == 1 + 3
        summary = json.loads((out / "summary.json").read_text())
        assert summary["records"] == 3
        assert summary["pareto_frontier"]

    def test_baseline_td(self, config_path, tmp_path):
        out = tmp_path / "td"
        rc = cli.main(["baseline", "--config", config_path, "--out", str(out),
                       "--scheme", "td", "--grid", "0.5", "--snr1-db", "-5",
                       "--snr2-db", "0", "--synthetic-count", "16",
                       "--synthetic-kind", "gradients"])
        assert rc == cli.EXIT_OK
        lines = (out / "region.csv").read_text().strip().splitlines()
        assert len(lines) == 2
        assert lines[1].startswith("td,0.5,")

    def test_baseline_no_ca_labels_scheme(self, config_path, tmp_path):
        out = tmp_path / "pa"
        rc = cli.main(["baseline", "--config", config_path, "--out", str(out),
                       "--scheme", "pa", "--grid", "0.75", "--no-ca",
                       "--snr1-db", "-5", "--snr2-db", "0",
                       "--synthetic-count", "16", "--synthetic-kind", "gradients"])
        assert rc == cli.EXIT_OK
        assert "pa-noca" in (out / "region.csv").read_text()


class TestExitCodes:
    def test_unknown_config_field_is_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"train": {"momentum": 0.9}}))
        rc = cli.main(["train", "--config", str(bad), "--out", str(tmp_path / "o")])
        assert rc == cli.EXIT_CONFIG
        assert "error:" in capsys.readouterr().err

    def test_missing_config_file_is_exit_2(self, tmp_path):
        rc = cli.main(["train", "--config", str(tmp_path / "nope.json"),
                       "--out", str(tmp_path / "o")])
        assert rc == cli.EXIT_CONFIG

    def test_bad_checkpoint_is_exit_2(self, config_path, tmp_path):
        ckpt = tmp_path / "junk.dbc"
        ckpt.write_bytes(b"not a checkpoint")
        rc = cli.main(["sweep", "--config", config_path, "--checkpoint", str(ckpt),
                       "--out", str(tmp_path / "o"), "--synthetic-count", "16"])
        assert rc == cli.EXIT_CONFIG

    def test_gradcheck_pass_is_exit_0(self, capsys):
        rc = cli.main(["gradcheck", "--dims", "6"])
        out = capsys.readouterr().out
        assert rc == cli.EXIT_OK
        assert out.count("PASS") == 16
        assert "fused_pipeline" in out

    def test_gradcheck_corrupt_is_exit_3(self, capsys):
        rc = cli.main(["gradcheck", "--dims", "6", "--corrupt", "sigmoid"])
        assert rc == cli.EXIT_NUMERICAL
        assert "FAIL" in capsys.readouterr().out


class TestGenData:
    def test_writes_loadable_records(self, tmp_path, capsys):
        out = tmp_path / "set.bin"
        rc = cli.main(["--seed", "3", "gen-data", "--kind", "spectral", "--count", "10",
                       "--height", "4", "--width", "4", "--out", str(out)])
        assert rc == cli.EXIT_OK
        ds = load_records([out], 4, 4)
        assert ds.count == 10
        assert "wrote 10 records" in capsys.readouterr().out
