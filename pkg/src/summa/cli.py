"""Command-line front end: simulate | infer | evaluate | sweep.

Every command writes its outputs plus a ``manifest.json`` echoing the
full configuration, the library version, sha256 digests of any inputs,
and the wall-clock duration, so a run can be reproduced from (inputs,
manifest) alone.  Data outputs from ``simulate`` and ``infer`` are
byte-identical across reruns with the same seed and inputs.

File formats (all stable):

* score/rank tables: header row ``sample_id,<method>,...``; one row per
  sample.  CSV by default, ``--format json`` writes a list of records.
* label tables: header ``sample_id,label`` with labels in {0, 1}.
* floats are serialized with 17 significant digits, so values
  round-trip exactly.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .ensemble import evaluate_ensemble
from .exceptions import InvalidInput, NotConverged, SummaError
from .pipeline import run_pipeline
from .ranking import (
    LabelVector,
    RankMatrix,
    ScoreMatrix,
    auroc_rectangle,
    rank_transform,
)
from .simulation import SimulationConfig, simulate_ensemble

DEFAULT_OUTPUT_DIR_ENV = "SUMMA_OUTPUT_DIR"

SWEEP_DEFAULT_VALUES = {
    "methods": [str(v) for v in range(5, 31)],
    "samples": ["30", "250", "1000", "4000"],
    "prevalence": [f"{v / 10:.1f}" for v in range(1, 10)],
}


# ---------------------------------------------------------------------------
# serialization helpers
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _jsonable(value):
    if isinstance(value, float) and np.isnan(value):
        return None
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def write_table(path: Path, columns: list[str], rows: list[list], fmt: str):
    if fmt == "csv":
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_fmt(cell) for cell in row])
    else:
        records = [
            {col: _jsonable(cell) for col, cell in zip(columns, row)} for row in rows
        ]
        with open(path, "w") as handle:
            json.dump(records, handle, indent=1)
            handle.write("\n")


def _table_name(stem: str, fmt: str) -> str:
    return f"{stem}.{fmt}"


def read_matrix_table(path: Path, delimiter: str = ","):
    """Read a sample-by-method table: header of method ids, first column
    of sample ids, numeric cells."""
    with open(path, newline="") as handle:
        reader = csv.reader(handle, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise InvalidInput(f"{path}: empty table") from None
        if len(header) < 2:
            raise InvalidInput(f"{path}: need a sample-id column plus method columns")
        method_ids = tuple(h.strip() for h in header[1:])
        sample_ids = []
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise InvalidInput(f"{path}:{lineno}: expected {len(header)} cells")
            sample_ids.append(row[0].strip())
            try:
                rows.append([float(cell) for cell in row[1:]])
            except ValueError as err:
                raise InvalidInput(f"{path}:{lineno}: {err}") from None
    if not rows:
        raise InvalidInput(f"{path}: no data rows")
    values = np.asarray(rows, dtype=float).T  # -> methods x samples
    return method_ids, tuple(sample_ids), values


def read_labels_table(path: Path, delimiter: str = ","):
    with open(path, newline="") as handle:
        reader = csv.reader(handle, delimiter=delimiter)
        header = next(reader, None)
        if header is None or len(header) < 2:
            raise InvalidInput(f"{path}: expected 'sample_id,label' table")
        sample_ids = []
        labels = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            sample_ids.append(row[0].strip())
            try:
                labels.append(int(row[1]))
            except ValueError as err:
                raise InvalidInput(f"{path}:{lineno}: {err}") from None
    return tuple(sample_ids), LabelVector(np.asarray(labels))


def _align_labels(sample_ids, label_ids, labels: LabelVector) -> LabelVector:
    if label_ids == sample_ids:
        return labels
    index = {sid: k for k, sid in enumerate(label_ids)}
    missing = [sid for sid in sample_ids if sid not in index]
    if missing or len(label_ids) != len(sample_ids):
        raise InvalidInput(
            f"sample ids of scores and labels do not match "
            f"({len(missing)} ids missing from labels)"
        )
    order = [index[sid] for sid in sample_ids]
    return LabelVector(labels.labels[order])


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


class ManifestWriter:
    def __init__(self, command: str, args: argparse.Namespace, output_dir: Path):
        self.command = command
        self.output_dir = output_dir
        self.started = time.perf_counter()
        self.started_utc = datetime.now(timezone.utc).isoformat()
        skip = {"func"}
        self.config = {
            key: (str(value) if isinstance(value, Path) else value)
            for key, value in sorted(vars(args).items())
            if key not in skip
        }
        self.inputs: dict[str, str] = {}
        self.outputs: list[str] = []

    def add_input(self, path: Path):
        self.inputs[str(path)] = _sha256(path)

    def add_output(self, name: str):
        self.outputs.append(name)

    def write(self, error: str | None = None) -> Path:
        manifest = {
            "command": self.command,
            "version": __version__,
            "seed": self.config.get("seed"),
            "config": self.config,
            "input_digests": self.inputs,
            "outputs": self.outputs,
            "started_utc": self.started_utc,
            "duration_s": time.perf_counter() - self.started,
        }
        if error is not None:
            manifest["error"] = error
        path = self.output_dir / "manifest.json"
        with open(path, "w") as handle:
            json.dump(manifest, handle, indent=1)
            handle.write("\n")
        return path


def _prepare_output_dir(args) -> Path:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    out = _prepare_output_dir(args)
    manifest = ManifestWriter("simulate", args, out)
    try:
        config = SimulationConfig(
            n_methods=args.methods,
            n_samples=args.samples,
            rho=args.rho,
            auroc_low=args.auroc_low,
            auroc_high=args.auroc_high,
            seed=args.seed,
        )
        data = simulate_ensemble(config)
    except SummaError as err:
        manifest.write(error=str(err))
        print(f"simulate: {err}", file=sys.stderr)
        return 1

    scores_name = _table_name("scores", args.format)
    write_table(
        out / scores_name,
        ["sample_id", *data.scores.method_ids],
        [
            [sid, *data.scores.values[:, k]]
            for k, sid in enumerate(data.scores.sample_ids)
        ],
        args.format,
    )
    labels_name = _table_name("labels", args.format)
    write_table(
        out / labels_name,
        ["sample_id", "label"],
        [
            [sid, int(lab)]
            for sid, lab in zip(data.scores.sample_ids, data.labels.labels)
        ],
        args.format,
    )
    aurocs_name = _table_name("true_aurocs", args.format)
    write_table(
        out / aurocs_name,
        ["method_id", "auroc"],
        [
            [mid, float(a)]
            for mid, a in zip(data.scores.method_ids, data.true_aurocs)
        ],
        args.format,
    )
    for name in (scores_name, labels_name, aurocs_name):
        manifest.add_output(name)
    manifest.write()
    print(f"simulate: wrote {scores_name}, {labels_name}, {aurocs_name} to {out}")
    return 0


# ---------------------------------------------------------------------------
# infer
# ---------------------------------------------------------------------------

def _load_rank_matrix(args, manifest: ManifestWriter) -> RankMatrix:
    path = Path(args.input)
    manifest.add_input(path)
    method_ids, sample_ids, values = read_matrix_table(path, args.delimiter)
    if args.already_ranked:
        return RankMatrix(values, args.ties, method_ids, sample_ids)
    scores = ScoreMatrix(values, method_ids, sample_ids)
    return rank_transform(scores, args.ties)


def _write_infer_outputs(out: Path, result, args, manifest: ManifestWriter):
    report = result.report
    payload = report.to_dict()
    payload["recovery"] = {
        "iterations": result.recovery.iterations,
        "converged": result.recovery.converged,
        "residual": result.recovery.residual,
    }
    if result.tensor is not None:
        payload["tensor"] = {
            "iterations": result.tensor.iterations,
            "converged": result.tensor.converged,
            "residual": result.tensor.residual,
        }
    with open(out / "report.json", "w") as handle:
        json.dump(payload, handle, indent=1)
        handle.write("\n")
    manifest.add_output("report.json")

    methods_name = _table_name("method_estimates", args.format)
    columns = ["method_id", "weight", "recoverability_flag"]
    if report.deltas is not None:
        columns += ["delta", "auroc", "auroc_raw"]
    rows = []
    for entry in payload["methods"]:
        row = [entry["method_id"], entry["weight"], int(entry["recoverability_flag"])]
        if report.deltas is not None:
            row += [entry["delta"], entry["auroc"], entry["auroc_raw"]]
        rows.append(row)
    write_table(out / methods_name, columns, rows, args.format)
    manifest.add_output(methods_name)

    sample_ids = result.summa.sample_ids
    scores_name = _table_name("ensemble_scores", args.format)
    write_table(
        out / scores_name,
        ["sample_id", "summa", "woc"],
        [
            [sid, float(result.summa.scores[k]), float(result.woc.scores[k])]
            for k, sid in enumerate(sample_ids)
        ],
        args.format,
    )
    manifest.add_output(scores_name)
    labels_name = _table_name("ensemble_labels", args.format)
    write_table(
        out / labels_name,
        ["sample_id", "summa", "woc"],
        [
            [sid, int(result.summa.labels[k]), int(result.woc.labels[k])]
            for k, sid in enumerate(sample_ids)
        ],
        args.format,
    )
    manifest.add_output(labels_name)


def cmd_infer(args) -> int:
    out = _prepare_output_dir(args)
    manifest = ManifestWriter("infer", args, out)
    try:
        ranks = _load_rank_matrix(args, manifest)
        result = run_pipeline(
            ranks,
            prevalence=args.prevalence,
            use_tensor=not args.no_tensor,
            tol=args.tol,
            max_iter=args.max_iter,
        )
    except NotConverged as err:
        diagnostics = {"error": type(err).__name__, "message": str(err)}
        partial = err.partial
        if partial is not None and hasattr(partial, "lambda_"):
            diagnostics["partial"] = {
                "lambda": partial.lambda_,
                "v": [float(x) for x in partial.v],
                "iterations": partial.iterations,
                "residual": partial.residual,
            }
        with open(out / "error.json", "w") as handle:
            json.dump(diagnostics, handle, indent=1)
        manifest.add_output("error.json")
        manifest.write(error=str(err))
        print(f"infer: {err}", file=sys.stderr)
        return 1
    except SummaError as err:
        manifest.write(error=str(err))
        print(f"infer: {err}", file=sys.stderr)
        return 1

    _write_infer_outputs(out, result, args, manifest)
    manifest.write()
    rho = result.report.rho
    rho_text = "n/a" if rho is None else f"{rho:.4f}"
    print(f"infer: {ranks.n_methods} methods, {ranks.n_samples} samples, rho={rho_text}")
    return 0


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------

def cmd_evaluate(args) -> int:
    out = _prepare_output_dir(args)
    manifest = ManifestWriter("evaluate", args, out)
    try:
        scores_path = Path(args.scores)
        labels_path = Path(args.labels)
        manifest.add_input(scores_path)
        manifest.add_input(labels_path)
        method_ids, sample_ids, values = read_matrix_table(scores_path, args.delimiter)
        label_ids, labels = read_labels_table(labels_path, args.delimiter)
        labels = _align_labels(sample_ids, label_ids, labels)
        scores = ScoreMatrix(values, method_ids, sample_ids)
        ranks = rank_transform(scores, "strict")
        rows = []
        for i, mid in enumerate(method_ids):
            auroc = float(auroc_rectangle(ranks.ranks[i], labels))
            rows.append([mid, auroc, len(labels), labels.n_positive])
    except SummaError as err:
        manifest.write(error=str(err))
        print(f"evaluate: {err}", file=sys.stderr)
        return 1

    metrics_name = _table_name("metrics", args.format)
    write_table(
        out / metrics_name, ["method_id", "auroc", "n_samples", "n_positive"], rows, args.format
    )
    manifest.add_output(metrics_name)
    manifest.write()
    print(f"evaluate: wrote {metrics_name} ({len(rows)} methods)")
    return 0


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def _replicate_seed(base_seed: int, value_index: int, replicate: int) -> int:
    seq = np.random.SeedSequence(entropy=base_seed, spawn_key=(value_index, replicate))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def _sweep_replicate(task) -> dict:
    """One (axis value, replicate) cell: simulate, infer, evaluate."""
    axis, value, value_index, replicate, base, tol, max_iter = task
    config_kwargs = {
        "n_methods": base["methods"],
        "n_samples": base["samples"],
        "rho": base["rho"],
        "auroc_low": base["auroc_low"],
        "auroc_high": base["auroc_high"],
    }
    if axis == "methods":
        config_kwargs["n_methods"] = int(value)
    elif axis == "samples":
        config_kwargs["n_samples"] = int(value)
    else:
        config_kwargs["rho"] = float(value)
    seed = _replicate_seed(base["seed"], value_index, replicate)
    config = SimulationConfig(seed=seed, **config_kwargs)
    data = simulate_ensemble(config)
    ranks = rank_transform(data.scores, "midrank")

    degraded = 0
    try:
        result = run_pipeline(ranks, use_tensor=True, tol=tol, max_iter=max_iter)
    except SummaError:
        # tensor path failed; fall back to an assumed balanced prevalence,
        # which leaves the weight vector (and so the correlation) intact
        degraded = 1
        try:
            result = run_pipeline(
                ranks, prevalence=0.5, use_tensor=False, tol=tol, max_iter=max_iter
            )
        except SummaError:
            return {
                "axis": axis, "value": value, "replicate": replicate, "seed": seed,
                "corr_inferred_true": float("nan"), "summa_auroc": float("nan"),
                "woc_auroc": float("nan"),
                "best_base_auroc": float(data.true_aurocs.max()),
                "rho_true": config.rho, "rho_inferred": float("nan"), "degraded": 2,
            }

    aurocs = result.report.aurocs
    corr = float(np.corrcoef(aurocs, data.true_aurocs)[0, 1])
    return {
        "axis": axis,
        "value": value,
        "replicate": replicate,
        "seed": seed,
        "corr_inferred_true": corr,
        "summa_auroc": evaluate_ensemble(result.summa, data.labels),
        "woc_auroc": evaluate_ensemble(result.woc, data.labels),
        "best_base_auroc": float(data.true_aurocs.max()),
        "rho_true": config.rho,
        "rho_inferred": result.report.rho if result.report.rho is not None else float("nan"),
        "degraded": degraded,
    }


def cmd_sweep(args) -> int:
    out = _prepare_output_dir(args)
    manifest = ManifestWriter("sweep", args, out)
    values = args.values.split(",") if args.values else SWEEP_DEFAULT_VALUES[args.axis]
    values = [v.strip() for v in values if v.strip()]
    base = {
        "methods": args.methods,
        "samples": args.samples,
        "rho": args.rho,
        "auroc_low": args.auroc_low,
        "auroc_high": args.auroc_high,
        "seed": args.seed,
    }
    tasks = [
        (args.axis, value, vi, rep, base, args.tol, args.max_iter)
        for vi, value in enumerate(values)
        for rep in range(args.replicates)
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_replicate, tasks, chunksize=4))
    else:
        results = [_sweep_replicate(task) for task in tasks]
    results.sort(key=lambda row: (values.index(row["value"]), row["replicate"]))

    columns = [
        "axis", "value", "replicate", "seed", "corr_inferred_true",
        "summa_auroc", "woc_auroc", "best_base_auroc",
        "rho_true", "rho_inferred", "degraded",
    ]
    sweep_name = _table_name("sweep", args.format)
    write_table(
        out / sweep_name,
        columns,
        [[row[col] for col in columns] for row in results],
        args.format,
    )
    manifest.add_output(sweep_name)

    summary_rows = []
    for value in values:
        cell = [row for row in results if row["value"] == value]
        corr = np.asarray([row["corr_inferred_true"] for row in cell])
        summa = np.asarray([row["summa_auroc"] for row in cell])
        woc = np.asarray([row["woc_auroc"] for row in cell])
        n = len(cell)
        summary_rows.append([
            args.axis, value, n,
            float(np.nanmedian(corr)), float(np.nanmean(corr)),
            float(np.nanmean(summa)),
            float(np.nanstd(summa, ddof=1) / np.sqrt(n)) if n > 1 else 0.0,
            float(np.nanmean(woc)),
            float(np.nanstd(woc, ddof=1) / np.sqrt(n)) if n > 1 else 0.0,
        ])
    summary_name = _table_name("sweep_summary", args.format)
    write_table(
        out / summary_name,
        ["axis", "value", "n", "corr_median", "corr_mean",
         "summa_mean", "summa_se", "woc_mean", "woc_se"],
        summary_rows,
        args.format,
    )
    manifest.add_output(summary_name)
    manifest.write()
    print(f"sweep: {len(results)} rows over {len(values)} values -> {sweep_name}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_common_output_args(parser):
    parser.add_argument(
        "--output-dir",
        default=os.environ.get(DEFAULT_OUTPUT_DIR_ENV, "summa_output"),
        help="directory for outputs (env %s overrides the default)"
        % DEFAULT_OUTPUT_DIR_ENV,
    )
    parser.add_argument(
        "--format", choices=("csv", "json"), default="csv",
        help="tabular output format",
    )


def _add_sim_config_args(parser):
    parser.add_argument("--methods", type=int, default=30, help="number of base methods")
    parser.add_argument("--samples", type=int, default=1000, help="number of samples")
    parser.add_argument("--rho", type=float, default=0.5, help="positive-class prevalence")
    parser.add_argument("--auroc-low", type=float, default=0.4)
    parser.add_argument("--auroc-high", type=float, default=0.8)
    parser.add_argument("--seed", type=int, required=True, help="64-bit unsigned seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="summa",
        description="Unsupervised performance estimation and weighted rank "
        "aggregation for binary-classifier ensembles.",
    )
    parser.add_argument("--version", action="version", version=f"summa {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate a synthetic ensemble")
    _add_sim_config_args(p_sim)
    _add_common_output_args(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_inf = sub.add_parser("infer", help="estimate performances from a score table")
    p_inf.add_argument("input", help="delimited sample-by-method score table")
    p_inf.add_argument("--ties", choices=("midrank", "strict"), default="midrank",
                       help="tie policy for the rank transform")
    p_inf.add_argument("--already-ranked", action="store_true",
                       help="input cells are ranks, skip the rank transform")
    p_inf.add_argument("--prevalence", type=float, default=None,
                       help="known positive-class prevalence (skips tensor estimate of rho)")
    p_inf.add_argument("--no-tensor", action="store_true",
                       help="skip the third-moment stage entirely")
    p_inf.add_argument("--tol", type=float, default=1e-6)
    p_inf.add_argument("--max-iter", type=int, default=1000)
    p_inf.add_argument("--delimiter", default=",")
    _add_common_output_args(p_inf)
    p_inf.set_defaults(func=cmd_infer)

    p_eval = sub.add_parser("evaluate", help="AUROC of score columns against labels")
    p_eval.add_argument("--scores", required=True, help="sample-by-method score table")
    p_eval.add_argument("--labels", required=True, help="sample_id,label table")
    p_eval.add_argument("--delimiter", default=",")
    _add_common_output_args(p_eval)
    p_eval.set_defaults(func=cmd_evaluate)

    p_sweep = sub.add_parser("sweep", help="replicate experiments along one axis")
    p_sweep.add_argument("--axis", choices=("methods", "samples", "prevalence"),
                         required=True)
    p_sweep.add_argument("--values", default=None,
                         help="comma-separated axis values (defaults per axis)")
    p_sweep.add_argument("--replicates", type=int, default=50)
    p_sweep.add_argument("--jobs", type=int, default=1,
                         help="parallel worker processes")
    p_sweep.add_argument("--tol", type=float, default=1e-6)
    p_sweep.add_argument("--max-iter", type=int, default=1000)
    _add_sim_config_args(p_sweep)
    _add_common_output_args(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvalidInput as err:
        print(f"{args.command}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
