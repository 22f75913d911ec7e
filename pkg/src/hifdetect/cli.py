"""Command-line front end wiring simulation, training, detection, and
evaluation into reproducible runs.

Every command is driven by a flat key = value config file plus an
optional --seed override; identical config and seed produce
byte-identical output files.  Exit codes: 0 success, 1 domain error
(bad values, singular matrices, non-convergence, undefined metrics),
2 I/O or configuration error.  On failure the files the command had
already produced are removed so no partial artifacts remain.

Binary detectors (pca, svm) flag faults with class code 1, so the
location-accuracy index is meaningful only for multiclass models.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
import sys

import numpy as np

from . import fda as fda_mod
from . import hifsim
from . import pca as pca_mod
from . import svm as svm_mod
from .config import (
    get_bool,
    get_choice,
    get_float,
    get_floats,
    get_int,
    get_str,
    read_config,
)
from .dataio import (
    ClassCode,
    DataMatrix,
    format_float,
    normalize_apply,
    normalize_fit,
    read_csv,
    write_csv,
)
from .errors import ConfigError, DataFormatError, HifDetectError, InvalidInputError
from .evaluation import (
    build_report,
    read_report,
    write_per_sample_csv,
    write_report,
    write_series,
)
from .numerics import derive_seed
from .plots import plot_label_series, plot_penalty_curve, plot_statistic_series

# published security/dependability indices (%) of earlier detection
# methods, bundled for side-by-side comparison in `evaluate`
_REFERENCE_INDICES = (
    ("Wavelet transform", 68.5, 72.0),
    ("Time frequency transform", 81.5, 98.3),
    ("Morphological gradient", 96.3, 98.3),
    ("Mathematical Morphology", 100.0, 100.0),
    ("Multiclass SVM", 100.0, 100.0),
)

_DETECTORS = ("pca", "fda", "svm", "msvm")


class _Outputs:
    """Tracks files a command creates so failures leave nothing behind."""

    def __init__(self):
        self.paths = []

    def track(self, path):
        self.paths.append(path)
        return path

    def discard_all(self):
        for path in self.paths:
            try:
                os.unlink(path)
            except OSError:
                pass


def _out_dir(args, cfg) -> str:
    out = args.out if args.out is not None else get_str(cfg, "out_dir", ".")
    if not os.path.isdir(out):
        raise ConfigError(f"output directory does not exist: {out}")
    return out


def _resolve_seed(args, cfg) -> int:
    seed = args.seed if args.seed is not None else get_int(cfg, "seed", 0)
    if seed < 0:
        raise ConfigError(f"seed must be non-negative, got {seed}")
    return seed


def _config_echo(cfg: dict, command: str, seed: int, out: str) -> dict:
    echo = dict(cfg)
    echo["command"] = command
    echo["seed"] = str(seed)
    echo["out_dir"] = out
    return echo


def _class_summary(data: DataMatrix) -> str:
    parts = []
    for code in data.present_classes():
        parts.append(f"{code.name.lower()}={data.class_rows(code).size}")
    return " ".join(parts)


def _filter_classes(cfg: dict, data: DataMatrix) -> DataMatrix:
    if "classes" not in cfg:
        return data
    wanted = [int(v) for v in get_floats(cfg, "classes")]
    if data.labels is None:
        raise InvalidInputError("class filter requires a labeled dataset")
    mask = np.isin(data.labels, wanted)
    if not mask.any():
        raise InvalidInputError(f"no rows with labels {wanted}")
    return data.take_rows(np.nonzero(mask)[0])


def _kernel_from_config(cfg: dict) -> svm_mod.KernelSpec:
    kind = get_choice(cfg, "kernel", ("rbf", "linear", "polynomial"), "rbf")
    if kind == "rbf":
        return svm_mod.KernelSpec.rbf(get_float(cfg, "sigma", 0.5))
    if kind == "polynomial":
        return svm_mod.KernelSpec.polynomial(
            degree=get_int(cfg, "degree", 3), coef=get_float(cfg, "coef", 1.0)
        )
    return svm_mod.KernelSpec.linear()


def cmd_simulate(cfg: dict, seed: int, out: str, outputs: _Outputs) -> None:
    profile = get_choice(cfg, "profile", ("paper", "robustness"), "paper")
    count = get_int(cfg, "count_per_class", 100)
    if profile == "paper":
        specs = hifsim.paper_profile(count_per_class=count)
    else:
        specs = hifsim.robustness_profile(
            count_per_class=count,
            loads=get_floats(cfg, "loads", (0.8, 0.9, 1.0, 1.1, 1.2)),
            include_capacitor=get_bool(cfg, "include_capacitor", True),
        )
    data = hifsim.generate_dataset(specs, seed)
    dataset_path = outputs.track(os.path.join(out, get_str(cfg, "dataset", "dataset.csv")))
    write_csv(data, dataset_path)
    wave_count = 0
    if get_bool(cfg, "waveforms", True):
        wave_seconds = get_float(cfg, "wave_seconds", 0.5)
        for idx, spec in enumerate(specs):
            scenario = dataclasses.replace(
                spec.scenario, duration=wave_seconds, seed=derive_seed(seed, "waveform", idx)
            )
            wave = hifsim.simulate_feeder(scenario)
            label = ClassCode(int(scenario.fault_location)).name.lower()
            wave_path = outputs.track(os.path.join(out, f"waveform_{idx:02d}_{label}.csv"))
            hifsim.write_waveform_csv(wave, wave_path)
            wave_count += 1
    print(f"dataset: {dataset_path} ({data.n_rows} rows x {data.n_channels} channels)")
    print(f"classes: {_class_summary(data)}")
    print(f"waveforms: {wave_count}")
    print(f"seed: {seed}")


def cmd_train(cfg: dict, seed: int, out: str, outputs: _Outputs) -> None:
    detector = get_choice(cfg, "detector", _DETECTORS)
    data = _filter_classes(cfg, read_csv(get_str(cfg, "dataset")))
    model_path = os.path.join(out, get_str(cfg, "model", f"{detector}.model"))

    if detector == "pca":
        model = pca_mod.fit_pca(data, get_float(cfg, "variance_target", 0.98))
        pca_mod.save_pca(model, outputs.track(model_path))
        print(
            f"pca: retained {model.a} of {model.loadings.shape[0]} components, "
            f"variance captured {model.variance_captured:.6f}, "
            f"trained on {model.n_train} rows"
        )
    elif detector == "fda":
        model = fda_mod.fit_fda(data)
        fda_mod.save_fda(model, outputs.track(model_path))
        eigs = " ".join(f"{v:.6g}" for v in model.eigenvalues)
        print(f"fda: {model.n_classes} classes, eigenvalues {eigs}")
    else:
        kernel = _kernel_from_config(cfg)
        tol = get_float(cfg, "tol", 0.001)
        gram_ridge = get_float(cfg, "gram_ridge", 0.0)
        c = get_float(cfg, "c", 10.0)
        if detector == "svm":
            if data.labels is None:
                raise InvalidInputError("svm training requires a labeled dataset")
            # any fault class collapses to code 1: HIF versus normal
            binary = DataMatrix(
                data.observations,
                data.channel_names,
                (data.labels != int(ClassCode.NORMAL)).astype(np.int64),
            )
            if get_bool(cfg, "cv", False):
                y = np.where(binary.labels == 0, -1.0, 1.0)
                z = normalize_apply(normalize_fit(binary), binary)
                grid = np.logspace(
                    math.log10(get_float(cfg, "cv_grid_min", 0.1)),
                    math.log10(get_float(cfg, "cv_grid_max", 100.0)),
                    get_int(cfg, "cv_grid_count", 1000),
                )
                folds = get_int(cfg, "cv_folds", 3)
                c, curve = svm_mod.cross_validate_c(
                    z, y, grid, folds, seed, kernel, tol, gram_ridge
                )
                curve_path = outputs.track(
                    os.path.join(out, get_str(cfg, "cv_curve", "cv_curve.csv"))
                )
                lines = ["c,mean_auc"]
                lines.extend(
                    f"{format_float(row[0])},{format_float(row[1])}" for row in curve
                )
                with open(curve_path, "w", encoding="utf-8", newline="\n") as fh:
                    fh.write("\n".join(lines) + "\n")
                plot_penalty_curve(
                    outputs.track(os.path.join(out, "cv_curve.png")), curve, best_c=c
                )
                print(
                    f"cv: best C {c:.6g} from {grid.size} grid points over {folds} folds"
                )
            model = svm_mod.train_multiclass(
                binary, "one_vs_one", kernel, c, tol, gram_ridge
            )
        else:
            strategy = get_choice(
                cfg, "strategy", ("one_vs_one", "one_vs_all"), "one_vs_one"
            )
            model = svm_mod.train_multiclass(data, strategy, kernel, c, tol, gram_ridge)
        svm_mod.save_svm(model, outputs.track(model_path))
        counts = " ".join(str(clf.support_vectors.shape[0]) for clf in model.classifiers)
        kparams = (
            f"sigma {kernel.sigma}" if kernel.kind == "rbf"
            else f"degree {kernel.degree} coef {kernel.coef}" if kernel.kind == "polynomial"
            else "linear"
        )
        print(
            f"{detector}: {len(model.classifiers)} classifier(s), C {c:.6g}, "
            f"{kernel.kind} kernel ({kparams}), support vectors {counts}"
        )
    print(f"model: {model_path}")
    print(f"seed: {seed}")


def cmd_detect(cfg: dict, seed: int, out: str, outputs: _Outputs) -> None:
    detector = get_choice(cfg, "detector", _DETECTORS)
    test = read_csv(get_str(cfg, "dataset"))
    if test.labels is None:
        raise InvalidInputError("test dataset must carry labels")
    model_path = get_str(cfg, "model")

    def check_channels(expected: int) -> None:
        if expected != test.n_channels:
            raise InvalidInputError(
                f"model expects {expected} channels, dataset has {test.n_channels}"
            )

    threshold = None
    stats = None
    if detector == "pca":
        model = pca_mod.load_pca(model_path)
        check_channels(model.loadings.shape[0])
        alpha = get_float(cfg, "alpha", 0.001)
        dof = get_choice(cfg, "dof", ("retained", "full"), "retained")
        threshold = pca_mod.t2_threshold(model, alpha, dof)
        stats = np.array([pca_mod.t2_statistic(model, row) for row in test.observations])
        pred = np.where(stats > threshold, int(ClassCode.FAULT_A), int(ClassCode.NORMAL))
    elif detector == "fda":
        model = fda_mod.load_fda(model_path)
        check_channels(model.n_channels)
        pred = np.array([int(fda_mod.classify(model, row)) for row in test.observations])
        stats = np.array(
            [float(np.max(fda_mod.discriminant(model, row))) for row in test.observations]
        )
    else:
        model = svm_mod.load_svm(model_path)
        check_channels(model.normalizer.means.size)
        pred = np.array(
            [int(svm_mod.predict_multiclass(model, row)) for row in test.observations]
        )
        if len(model.classifiers) == 1:
            z = normalize_apply(model.normalizer, test)
            stats = np.array(
                [svm_mod.decision_value(model.classifiers[0], row) for row in z.observations]
            )
            threshold = 0.0

    echo = _config_echo(cfg, "detect", seed, out)
    report = build_report(
        test.labels, pred, stats=stats, threshold=threshold, config_echo=echo, seed=seed
    )
    report_path = outputs.track(os.path.join(out, get_str(cfg, "report", "run.report")))
    write_report(report, report_path)
    write_per_sample_csv(
        report, outputs.track(os.path.join(out, get_str(cfg, "samples_csv", "per_sample.csv")))
    )
    if stats is not None:
        write_series(
            outputs.track(os.path.join(out, "statistic.csv")), stats, label="statistic"
        )
        plot_statistic_series(
            outputs.track(os.path.join(out, "statistic.png")), stats, threshold=threshold
        )
    plot_label_series(
        outputs.track(os.path.join(out, "labels.png")), test.labels, pred
    )
    print(f"report: {report_path} ({len(report.per_sample)} samples)")
    if threshold is not None:
        print(f"threshold: {threshold:.6g}")
    print(f"security: {100.0 * report.security:.2f}%")
    print(f"dependability: {100.0 * report.dependability:.2f}%")
    print(f"location accuracy: {100.0 * report.location_accuracy:.2f}%")
    print(f"seed: {seed}")


def cmd_evaluate(cfg: dict, seed: int, out: str, outputs: _Outputs) -> None:
    report_path = get_str(cfg, "report")
    if not os.path.isfile(report_path):
        raise ConfigError(f"report file not found: {report_path}")
    report = read_report(report_path)
    print(f"samples: {len(report.per_sample)}")
    if report.threshold is not None:
        print(f"threshold: {report.threshold:.6g}")
    print(f"security: {100.0 * report.security:.2f}%")
    print(f"dependability: {100.0 * report.dependability:.2f}%")
    print(f"location accuracy: {100.0 * report.location_accuracy:.2f}%")
    print(f"confusion (rows actual, cols predicted; codes {list(report.class_codes)}):")
    for row in report.confusion:
        print("  " + " ".join(f"{v:6d}" for v in row))
    if get_bool(cfg, "compare", False):
        print()
        print(f"{'method':<28s} {'security %':>10s} {'dependability %':>15s}")
        for name, sec, dep in _REFERENCE_INDICES:
            print(f"{name:<28s} {sec:>10.1f} {dep:>15.1f}")
        print(
            f"{'this run':<28s} {100.0 * report.security:>10.1f} "
            f"{100.0 * report.dependability:>15.1f}"
        )


_COMMANDS = {
    "simulate": cmd_simulate,
    "train": cmd_train,
    "detect": cmd_detect,
    "evaluate": cmd_evaluate,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hifdetect",
        description="Simulate high-impedance-fault data, train detectors, "
        "and score detection runs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("simulate", "generate a labeled dataset and scenario waveforms"),
        ("train", "fit a detector and persist the model"),
        ("detect", "run a model over a test dataset and write a report"),
        ("evaluate", "summarize a report, optionally against reference indices"),
    ):
        cmd = sub.add_parser(name, help=helptext)
        cmd.add_argument("--config", required=True, help="key = value config file")
        cmd.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        cmd.add_argument("--out", default=None, help="output directory (default: config out_dir or .)")
    args = parser.parse_args(argv)

    outputs = _Outputs()
    try:
        cfg = read_config(args.config)
        seed = _resolve_seed(args, cfg)
        out = _out_dir(args, cfg)
        _COMMANDS[args.command](cfg, seed, out, outputs)
        return 0
    except (ConfigError, DataFormatError, OSError) as err:
        outputs.discard_all()
        print(f"error: {err}", file=sys.stderr)
        return 2
    except HifDetectError as err:
        outputs.discard_all()
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
