import csv
import json

import numpy as np

from covchange.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main
from covchange.harness import CSV_HEADER, FRAME_CSV_HEADER


def write_config(tmp_path, **overrides):
    data = {
        "system": {"m": 4, "t": 4, "k": 8, "rho": 1.0, "sigma2": 1.0},
        "ring": {"aod_deg": 30.0, "spread_deg": 20.0},
        "delta_aod_deg": [3.0],
        "k_values": [8],
        "trials": 400,
        "seed": 3,
        "threshold_policy": {"kind": "equal_error"},
        "detector": {"kind": "genie"},
    }
    data.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(data))
    return path


class TestCovgen:
    def test_writes_reconstructible_covariance(self, tmp_path):
        out = tmp_path / "cov.csv"
        code = main(
            [
                "covgen",
                "--antennas",
                "4",
                "--aod-deg",
                "30",
                "--out",
                str(out),
            ]
        )
        assert code == EXIT_OK
        with open(out) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 16
        cov = np.zeros((4, 4), dtype=complex)
        for rec in rows:
            cov[int(rec["m1"]), int(rec["m2"])] = float(rec["re"]) + 1j * float(rec["im"])
        assert np.abs(cov - cov.conj().T).max() < 1e-12
        assert np.abs(np.diag(cov) - 1.0).max() < 1e-10

    def test_delta_offset_changes_matrix(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["covgen", "--antennas", "3", "--out", str(a)])
        main(["covgen", "--antennas", "3", "--delta-aod-deg", "1.0", "--out", str(b)])
        assert a.read_text() != b.read_text()


class TestGenieCommand:
    def test_end_to_end(self, tmp_path):
        cfg = write_config(tmp_path)
        out = tmp_path / "rows.csv"
        code = main(["genie", "--config", str(cfg), "--out", str(out)])
        assert code == EXIT_OK
        lines = out.read_text().splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 2
        assert (tmp_path / "rows.csv.manifest.txt").exists()

    def test_seed_and_trials_overrides(self, tmp_path):
        cfg = write_config(tmp_path)
        out1, out2 = tmp_path / "r1.csv", tmp_path / "r2.csv"
        main(["genie", "--config", str(cfg), "--out", str(out1), "--trials", "600"])
        main(
            [
                "genie",
                "--config",
                str(cfg),
                "--out",
                str(out2),
                "--trials",
                "600",
                "--seed",
                "99",
            ]
        )
        with open(out1) as fh:
            row1 = list(csv.DictReader(fh))[0]
        with open(out2) as fh:
            row2 = list(csv.DictReader(fh))[0]
        assert row1["trials"] == "600"
        assert row1["p_fa_emp"] != row2["p_fa_emp"] or row1["p_md_emp"] != row2["p_md_emp"]

    def test_unknown_config_key_exits_2(self, tmp_path, capsys):
        cfg = write_config(tmp_path, renderer="gnuplot")
        assert main(["genie", "--config", str(cfg), "--out", str(tmp_path / "o.csv")]) == EXIT_CONFIG
        assert "configuration error" in capsys.readouterr().err

    def test_missing_output_path_exits_2(self, tmp_path):
        cfg = write_config(tmp_path)
        assert main(["genie", "--config", str(cfg)]) == EXIT_CONFIG

    def test_numerical_domain_failure_exits_3(self, tmp_path):
        # Zero angle spread gives an exactly rank-one covariance; with no
        # noise the effective covariance is singular.
        cfg = write_config(
            tmp_path,
            system={"m": 4, "t": 4, "k": 8, "rho": 1.0, "sigma2": 0.0},
            ring={"aod_deg": 30.0, "spread_deg": 0.0},
        )
        code = main(["genie", "--config", str(cfg), "--out", str(tmp_path / "o.csv")])
        assert code == EXIT_NUMERICAL

    def test_unwritable_output_exits_3(self, tmp_path):
        cfg = write_config(tmp_path)
        blocker = tmp_path / "blocker"
        blocker.write_text("not a directory")
        code = main(["genie", "--config", str(cfg), "--out", str(blocker / "o.csv")])
        assert code == EXIT_NUMERICAL


class TestRocCommand:
    def test_end_to_end(self, tmp_path):
        cfg = write_config(
            tmp_path,
            detector={"kind": "ml", "kappa": 4.0},
            threshold_policy={"kind": "sweep", "lo": -30.0, "hi": 60.0, "count": 5},
            trials=300,
        )
        out = tmp_path / "roc.csv"
        assert main(["roc", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        lines = out.read_text().splitlines()
        assert len(lines) == 6
        assert lines[0] == CSV_HEADER

    def test_policy_mismatch_exits_2(self, tmp_path):
        cfg = write_config(tmp_path, detector={"kind": "ml"})
        assert main(["roc", "--config", str(cfg), "--out", str(tmp_path / "o.csv")]) == EXIT_CONFIG


class TestFramesCommand:
    def test_end_to_end(self, tmp_path):
        cfg = write_config(tmp_path)
        out = tmp_path / "frames.csv"
        code = main(
            [
                "frames",
                "--config",
                str(cfg),
                "--out",
                str(out),
                "--num-frames",
                "6",
                "--change-frame",
                "4",
            ]
        )
        assert code == EXIT_OK
        lines = out.read_text().splitlines()
        assert lines[0] == FRAME_CSV_HEADER
        assert len(lines) == 7
        hyps = [line.split(",")[1] for line in lines[1:]]
        assert hyps[3] == "H1"

    def test_bad_change_frame_exits_2(self, tmp_path):
        cfg = write_config(tmp_path)
        code = main(
            [
                "frames",
                "--config",
                str(cfg),
                "--out",
                str(tmp_path / "f.csv"),
                "--num-frames",
                "4",
                "--change-frame",
                "9",
            ]
        )
        assert code == EXIT_CONFIG
