"""End-to-end tests of the command-line front end.

The shared workspace fixture runs one small simulate/train pipeline and
individual tests layer detect/evaluate runs and failure cases on top.
"""

import filecmp
import os

import numpy as np
import pytest

from hifdetect.cli import main

# the tiny fixtures fit the subspace model on fewer rows than channels,
# which rightly warns; that behavior is covered by the detector's tests
pytestmark = pytest.mark.filterwarnings("ignore:fitting with fewer rows")
from hifdetect.dataio import DataMatrix, read_csv, write_csv
from hifdetect.errors import HifDetectError
from hifdetect.evaluation import read_report


def write_cfg(directory, name, **entries):
    path = os.path.join(str(directory), name)
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in entries.items():
            fh.write(f"{key} = {value}\n")
    return path


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Simulated train/test data plus one trained model per detector."""
    root = tmp_path_factory.mktemp("cli")
    out = root / "out"
    out.mkdir()
    sim_train = write_cfg(
        root, "sim_train.cfg", profile="paper", count_per_class=20,
        dataset="train.csv", waveforms="false", seed=3,
    )
    assert main(["simulate", "--config", sim_train, "--out", str(out)]) == 0
    sim_test = write_cfg(
        root, "sim_test.cfg", profile="paper", count_per_class=8,
        dataset="test.csv", waveforms="false", seed=4,
    )
    assert main(["simulate", "--config", sim_test, "--out", str(out)]) == 0
    train = str(out / "train.csv")
    test = str(out / "test.csv")
    for name, extra in (
        ("pca", {"classes": "0"}),
        ("fda", {}),
        ("svm", {}),
        ("msvm", {}),
    ):
        cfg = write_cfg(
            root, f"train_{name}.cfg", detector=name, dataset=train,
            model=f"{name}.model", **extra,
        )
        assert main(["train", "--config", cfg, "--out", str(out)]) == 0
    return {"root": root, "out": out, "train": train, "test": test}


def run_detect(workspace, detector, subdir, **extra):
    """Runs detect into its own directory; returns (exit, out dir)."""
    out = workspace["out"] / subdir
    out.mkdir(exist_ok=True)
    cfg = write_cfg(
        workspace["root"], f"detect_{subdir}.cfg", detector=detector,
        dataset=workspace["test"],
        model=str(workspace["out"] / f"{detector}.model"), **extra,
    )
    return main(["detect", "--config", cfg, "--out", str(out)]), out


class TestSimulate:
    def test_writes_dataset_and_waveforms(self, workspace, tmp_path, capsys):
        cfg = write_cfg(
            tmp_path, "sim.cfg", profile="paper", count_per_class=3,
            dataset="d.csv", waveforms="true", wave_seconds=0.02, seed=1,
        )
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 0
        data = read_csv(str(tmp_path / "d.csv"))
        assert data.n_rows == 12 and data.n_channels == 29
        waves = sorted(p for p in os.listdir(tmp_path) if p.startswith("waveform_"))
        assert waves == [
            "waveform_00_normal.csv",
            "waveform_01_fault_a.csv",
            "waveform_02_fault_b.csv",
            "waveform_03_fault_c.csv",
        ]
        text = capsys.readouterr().out
        assert "12 rows x 29 channels" in text
        assert "normal=3" in text and "seed: 1" in text

    def test_robustness_profile_capacitor_toggle(self, tmp_path):
        on = write_cfg(
            tmp_path, "on.cfg", profile="robustness", count_per_class=10,
            dataset="on.csv", waveforms="false", include_capacitor="true",
        )
        off = write_cfg(
            tmp_path, "off.cfg", profile="robustness", count_per_class=10,
            dataset="off.csv", waveforms="false", include_capacitor="false",
        )
        assert main(["simulate", "--config", on, "--out", str(tmp_path)]) == 0
        assert main(["simulate", "--config", off, "--out", str(tmp_path)]) == 0
        a = read_csv(str(tmp_path / "on.csv"))
        b = read_csv(str(tmp_path / "off.csv"))
        assert a.n_rows == b.n_rows == 40
        assert not np.array_equal(a.observations, b.observations)

    def test_seed_flag_overrides_config(self, tmp_path):
        cfg = write_cfg(
            tmp_path, "sim.cfg", profile="paper", count_per_class=3,
            dataset="d.csv", waveforms="false", seed=3,
        )
        for sub, seed_args in (
            ("a", []), ("b", ["--seed", "3"]), ("c", ["--seed", "99"]),
        ):
            (tmp_path / sub).mkdir()
            code = main(
                ["simulate", "--config", cfg, "--out", str(tmp_path / sub)]
                + seed_args
            )
            assert code == 0
        assert filecmp.cmp(tmp_path / "a/d.csv", tmp_path / "b/d.csv", shallow=False)
        assert not filecmp.cmp(tmp_path / "a/d.csv", tmp_path / "c/d.csv", shallow=False)


class TestExitCodes:
    def test_missing_out_dir(self, workspace, capsys):
        cfg = write_cfg(workspace["root"], "x.cfg", profile="paper")
        missing = str(workspace["root"] / "no_such_dir")
        assert main(["simulate", "--config", cfg, "--out", missing]) == 2
        assert "output directory does not exist" in capsys.readouterr().err

    def test_missing_config_file(self, workspace, capsys):
        absent = str(workspace["root"] / "absent.cfg")
        assert main(["train", "--config", absent]) == 2
        assert "not found" in capsys.readouterr().err

    def test_unknown_detector_choice(self, workspace, tmp_path):
        cfg = write_cfg(tmp_path, "x.cfg", detector="knn", dataset=workspace["train"])
        assert main(["train", "--config", cfg, "--out", str(tmp_path)]) == 2

    def test_domain_error_is_exit_1_and_cleans_up(self, workspace, tmp_path):
        # single-class training data is a domain error, not a config error
        cfg = write_cfg(
            tmp_path, "x.cfg", detector="fda", dataset=workspace["train"],
            classes="0", model="f.model",
        )
        assert main(["train", "--config", cfg, "--out", str(tmp_path)]) == 1
        assert not (tmp_path / "f.model").exists()

    def test_unknown_subcommand_raises_system_exit(self):
        with pytest.raises(SystemExit):
            main(["frobnicate", "--config", "x"])


class TestTrain:
    def test_pca_summary(self, workspace, tmp_path, capsys):
        cfg = write_cfg(
            tmp_path, "t.cfg", detector="pca", dataset=workspace["train"],
            classes="0", model="p.model",
        )
        assert main(["train", "--config", cfg, "--out", str(tmp_path)]) == 0
        text = capsys.readouterr().out
        assert "pca: retained" in text and "variance captured" in text
        assert (tmp_path / "p.model").exists()

    def test_fda_summary(self, workspace, capsys, tmp_path):
        cfg = write_cfg(
            tmp_path, "t.cfg", detector="fda", dataset=workspace["train"],
            model="f.model",
        )
        assert main(["train", "--config", cfg, "--out", str(tmp_path)]) == 0
        text = capsys.readouterr().out
        assert "fda: 4 classes, eigenvalues" in text

    def test_msvm_summary(self, workspace, capsys, tmp_path):
        cfg = write_cfg(
            tmp_path, "t.cfg", detector="msvm", dataset=workspace["train"],
            model="m.model",
        )
        assert main(["train", "--config", cfg, "--out", str(tmp_path)]) == 0
        text = capsys.readouterr().out
        assert "msvm: 6 classifier(s)" in text and "rbf kernel" in text

    def test_svm_cv_selects_and_writes_curve(self, workspace, capsys, tmp_path):
        cfg = write_cfg(
            tmp_path, "t.cfg", detector="svm", dataset=workspace["train"],
            model="s.model", cv="true", cv_grid_count=12, seed=5,
        )
        assert main(["train", "--config", cfg, "--out", str(tmp_path)]) == 0
        text = capsys.readouterr().out
        assert "cv: best C" in text and "12 grid points" in text
        assert "svm: 1 classifier(s)" in text
        curve = (tmp_path / "cv_curve.csv").read_text().splitlines()
        assert curve[0] == "c,mean_auc"
        assert len(curve) == 13
        assert (tmp_path / "cv_curve.png").read_bytes()[:4] == b"\x89PNG"


class TestDetect:
    def test_pca_outputs(self, workspace, capsys):
        code, out = run_detect(
            workspace, "pca", "d_pca", alpha=0.001, report="r.report",
        )
        assert code == 0
        text = capsys.readouterr().out
        assert "threshold:" in text and "security:" in text
        for name in (
            "r.report", "per_sample.csv", "statistic.csv",
            "statistic.png", "labels.png",
        ):
            assert (out / name).exists()
        header = (out / "per_sample.csv").read_text().splitlines()[0]
        assert header == "sample,true_label,predicted_label,statistic"
        report = read_report(str(out / "r.report"))
        assert report.config_echo["command"] == "detect"
        assert report.config_echo["alpha"] == "0.001"

    def test_pca_flags_binary_codes(self, workspace):
        code, out = run_detect(workspace, "pca", "d_pca2")
        assert code == 0
        report = read_report(str(out / "run.report"))
        assert set(p for _, p, _ in report.per_sample) <= {0, 1}

    def test_fda_outputs(self, workspace, capsys):
        code, out = run_detect(workspace, "fda", "d_fda")
        assert code == 0
        # discriminant scores are plotted but there is no fixed threshold
        assert "threshold:" not in capsys.readouterr().out
        assert (out / "statistic.png").exists()
        report = read_report(str(out / "run.report"))
        assert report.threshold is None
        assert report.location_accuracy == 1.0

    def test_svm_decision_values(self, workspace, capsys):
        code, out = run_detect(workspace, "svm", "d_svm")
        assert code == 0
        assert "threshold: 0" in capsys.readouterr().out
        report = read_report(str(out / "run.report"))
        assert report.threshold == 0.0
        assert set(p for _, p, _ in report.per_sample) <= {0, 1}
        # faults sit on the positive side of the margin
        for actual, pred, stat in report.per_sample:
            assert (stat >= 0.0) == (pred == 1)

    def test_msvm_outputs(self, workspace, capsys):
        code, out = run_detect(workspace, "msvm", "d_msvm")
        assert code == 0
        text = capsys.readouterr().out
        assert "location accuracy: 100.00%" in text
        # no scalar statistic for the vote-based model, so no series files
        assert not (out / "statistic.csv").exists()
        assert (out / "labels.png").exists()

    def test_channel_mismatch(self, workspace, tmp_path, capsys):
        rng = np.random.default_rng(0)
        small = DataMatrix(
            rng.normal(size=(6, 3)), ("a", "b", "c"),
            np.array([0, 0, 0, 1, 1, 1]),
        )
        write_csv(small, str(tmp_path / "small.csv"))
        cfg = write_cfg(
            tmp_path, "d.cfg", detector="pca",
            dataset=str(tmp_path / "small.csv"),
            model=str(workspace["out"] / "pca.model"),
        )
        assert main(["detect", "--config", cfg, "--out", str(tmp_path)]) == 1
        assert "model expects 29 channels" in capsys.readouterr().err

    def test_unlabeled_dataset(self, workspace, tmp_path):
        data = read_csv(workspace["test"])
        write_csv(
            DataMatrix(data.observations, data.channel_names, None),
            str(tmp_path / "unlabeled.csv"),
        )
        cfg = write_cfg(
            tmp_path, "d.cfg", detector="pca",
            dataset=str(tmp_path / "unlabeled.csv"),
            model=str(workspace["out"] / "pca.model"),
        )
        assert main(["detect", "--config", cfg, "--out", str(tmp_path)]) == 1

    def test_corrupt_model_names_path_and_line(self, workspace, tmp_path, capsys):
        bad = tmp_path / "bad.model"
        bad.write_text("not a model\n")
        cfg = write_cfg(
            tmp_path, "d.cfg", detector="pca", dataset=workspace["test"],
            model=str(bad),
        )
        assert main(["detect", "--config", cfg, "--out", str(tmp_path)]) == 2
        err = capsys.readouterr().err
        assert "bad.model:1:" in err

    def test_failure_removes_partial_outputs(self, workspace, tmp_path, monkeypatch):
        def boom(*args, **kwargs):
            raise HifDetectError("plot backend unavailable")

        monkeypatch.setattr("hifdetect.cli.plot_label_series", boom)
        cfg = write_cfg(
            tmp_path, "d.cfg", detector="pca", dataset=workspace["test"],
            model=str(workspace["out"] / "pca.model"), report="r.report",
        )
        assert main(["detect", "--config", cfg, "--out", str(tmp_path)]) == 1
        for name in ("r.report", "per_sample.csv", "statistic.csv", "statistic.png"):
            assert not (tmp_path / name).exists()


class TestEvaluate:
    @pytest.fixture()
    def report_path(self, workspace):
        code, out = run_detect(workspace, "msvm", "d_eval")
        assert code == 0
        return str(out / "run.report")

    def test_prints_indices_and_confusion(self, workspace, report_path, capsys):
        cfg = write_cfg(workspace["root"], "e.cfg", report=report_path)
        assert main(["evaluate", "--config", cfg]) == 0
        text = capsys.readouterr().out
        assert "samples: 32" in text
        assert "security: 100.00%" in text
        assert "dependability: 100.00%" in text
        assert "confusion" in text and "codes [0, 1, 2, 3]" in text

    def test_compare_table(self, workspace, report_path, capsys):
        cfg = write_cfg(
            workspace["root"], "ec.cfg", report=report_path, compare="true",
        )
        assert main(["evaluate", "--config", cfg]) == 0
        text = capsys.readouterr().out
        for method in (
            "Wavelet transform", "Time frequency transform",
            "Morphological gradient", "Mathematical Morphology",
            "Multiclass SVM", "this run",
        ):
            assert method in text
        assert "68.5" in text and "98.3" in text

    def test_missing_report(self, workspace, capsys):
        cfg = write_cfg(
            workspace["root"], "em.cfg",
            report=str(workspace["root"] / "absent.report"),
        )
        assert main(["evaluate", "--config", cfg]) == 2
        assert "report file not found" in capsys.readouterr().err


class TestReproducibility:
    def test_pipeline_is_byte_identical(self, tmp_path, monkeypatch):
        """Same config and seed give byte-identical artifacts."""
        # one config per stage, shared by both runs; paths stay relative
        # so the echoed config matches exactly
        sim = write_cfg(
            tmp_path, "sim.cfg", profile="paper", count_per_class=6,
            dataset="d.csv", waveforms="true", wave_seconds=0.02, seed=13,
        )
        tr = write_cfg(
            tmp_path, "tr.cfg", detector="msvm", dataset="d.csv", model="m.model",
        )
        de = write_cfg(
            tmp_path, "de.cfg", detector="msvm", dataset="d.csv", model="m.model",
        )
        names = []
        for sub in ("r1", "r2"):
            out = tmp_path / sub
            out.mkdir()
            monkeypatch.chdir(out)
            assert main(["simulate", "--config", sim, "--out", "."]) == 0
            assert main(["train", "--config", tr, "--out", "."]) == 0
            assert main(["detect", "--config", de, "--out", "."]) == 0
            names = sorted(os.listdir(out))
        assert "labels.png" in names and "m.model" in names and "run.report" in names
        for name in names:
            assert filecmp.cmp(
                tmp_path / "r1" / name, tmp_path / "r2" / name, shallow=False
            ), name
