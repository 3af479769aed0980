"""Command-line pipeline: synth | features | distmat | cluster | eval.

Commands compose through files only:

    kerndiv synth    --out data --seed 7
    kerndiv distmat  data/sets.csv --metric kernel_w2 --out dist.csv
    kerndiv cluster  dist.csv --k 2 --out-labels labels.csv
    kerndiv eval     labels.csv data/truth.csv --out report.json

Exit codes: 0 success, 1 input error, 2 numeric error, 64 usage error.
"""

from __future__ import annotations

import csv
import io
import json
import os
import sys
import tempfile
from pathlib import Path

import click
import numpy as np

from .clustering import (
    LINKAGES,
    Dendrogram,
    agglomerate,
    chi_square,
    contingency,
    cut,
    prediction_rates,
)
from .datasets import synth_populations
from .divergences import (
    METRICS,
    DistanceMatrix,
    DivergenceOptions,
    distance_matrix,
)
from .exceptions import InputError, NumericError
from .kernels import KERNEL_FAMILIES, KernelSpec, SampleSet
from .texture import (
    FEATURE_NAMES,
    GrayImage,
    glcm,
    haralick_features,
    load_gray_image,
    normalize_corpus,
    threshold_mask,
)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERIC = 2
EXIT_USAGE = 64

WORKERS_ENV = "KERNDIV_WORKERS"


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_id_rows(path, header: list[str], rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    _atomic_write_text(path, buf.getvalue())


def _read_id_value_rows(path):
    """Read a CSV of ``id`` plus numeric columns; returns [(id, values)]."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"{path}: not a readable file")
    with open(path, newline="") as handle:
        rows = [row for row in csv.reader(handle) if row]
    if len(rows) < 2 or not rows[0] or rows[0][0] != "id":
        raise InputError(f"{path}: expected a CSV with an 'id' header column")
    out = []
    for row in rows[1:]:
        try:
            out.append((row[0], np.array([float(v) for v in row[1:]])))
        except ValueError as exc:
            raise InputError(f"{path}: non-numeric value in row {row[0]!r}: {exc}") from exc
    return out


def _read_label_csv(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"{path}: not a readable file")
    with open(path, newline="") as handle:
        rows = [row for row in csv.reader(handle) if row]
    if not rows or rows[0][:2] != ["id", "label"]:
        raise InputError(f"{path}: expected a CSV with header id,label")
    labels = {}
    for row in rows[1:]:
        if len(row) < 2:
            raise InputError(f"{path}: malformed row {row!r}")
        labels[row[0]] = row[1]
    return labels


def _load_sample_sets(input_path, columns_as_samples: bool) -> list[SampleSet]:
    input_path = Path(input_path)
    if columns_as_samples:
        rows = _read_id_value_rows(input_path)
        sets = [SampleSet(data=values[:, None], id=rid) for rid, values in rows]
    else:
        if not input_path.is_dir():
            raise InputError(
                f"{input_path}: with --no-columns-as-samples the input must be a "
                "directory of per-set CSV files"
            )
        files = sorted(input_path.glob("*.csv"))
        if not files:
            raise InputError(f"{input_path}: no .csv sample-set files found")
        sets = []
        for file in files:
            try:
                data = np.loadtxt(file, delimiter=",", ndmin=2)
            except ValueError as exc:
                raise InputError(f"{file.name}: could not parse sample set: {exc}") from exc
            sets.append(SampleSet(data=data, id=file.stem))
    if len(sets) < 2:
        raise InputError("need at least two sample sets")
    return sets


def _resolve_workers(workers: int | None) -> int:
    if workers is not None:
        return workers
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise InputError(f"{WORKERS_ENV} must be an integer, got {env!r}") from exc
    return 1


@click.group()
def cli():
    """Texture features, divergence matrices, clustering, and evaluation."""


@cli.command("synth")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--sets", "total_sets", type=int, default=None,
              help="Total number of sample sets, split evenly over the two classes.")
@click.option("--per-class", type=int, default=None,
              help="Number of sample sets per class (default 60).")
@click.option("--samples", type=int, default=25, show_default=True,
              help="Samples per set.")
@click.option("--noise", type=float, default=0.01, show_default=True)
@click.option("--separation", type=float, default=1.0, show_default=True,
              help="0 = identical generators, 1 = full shape contrast.")
@click.option("--seed", type=int, required=True)
@click.option("--layout", type=click.Choice(["rows", "files"]), default="rows",
              show_default=True,
              help="rows: one sets.csv with one set per row; files: one CSV per set.")
def cmd_synth(out_dir, total_sets, per_class, samples, noise, separation, seed, layout):
    """Generate two synthetic populations of sample sets plus a truth CSV."""
    if total_sets is not None and per_class is not None:
        raise click.UsageError("give either --sets or --per-class, not both")
    if total_sets is not None:
        if total_sets < 2 or total_sets % 2:
            raise click.UsageError("--sets must be a positive even total")
        per_class = total_sets // 2
    if per_class is None:
        per_class = 60
    if per_class < 1 or samples < 1:
        raise click.UsageError("--per-class and --samples must be positive")

    sets, truth = synth_populations(
        per_class=per_class,
        samples_per_set=samples,
        noise=noise,
        separation=separation,
        seed=seed,
    )
    out = Path(out_dir)
    if layout == "rows":
        header = ["id"] + [f"s{idx:02d}" for idx in range(1, samples + 1)]
        rows = [[s.id] + [_fmt(v) for v in s.data[:, 0]] for s in sets]
        _write_id_rows(out / "sets.csv", header, rows)
    else:
        for s in sets:
            body = "\n".join(",".join(_fmt(v) for v in row) for row in s.data)
            _atomic_write_text(out / "sets" / f"{s.id}.csv", body + "\n")
    _write_id_rows(out / "truth.csv", ["id", "label"],
                   [[s.id, label] for s, label in zip(sets, truth)])
    click.echo(f"wrote {len(sets)} sample sets under {out}")


@cli.command("features")
@click.argument("input_path", type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--levels", type=int, default=64, show_default=True)
@click.option("--percentile", type=float, default=5.0, show_default=True)
@click.option("--normalize/--no-normalize", default=True, show_default=True)
def cmd_features(input_path, out_path, levels, percentile, normalize):
    """Extract 25 texture features per image into a CSV.

    INPUT_PATH is a directory of grayscale images (.png / .csv grids) or a
    single image file.  Images that fail (unreadable, constant after
    thresholding) are skipped with a warning; the command fails only if no
    image survives.
    """
    if levels < 2:
        raise click.UsageError("--levels must be at least 2")
    if not 0 <= percentile <= 100:
        raise click.UsageError("--percentile must lie in [0, 100]")
    input_path = Path(input_path)
    if input_path.is_dir():
        files = sorted(
            p for p in input_path.iterdir()
            if p.suffix.lower() in (".png", ".csv", ".txt")
        )
    else:
        files = [input_path]
    if not files:
        raise InputError(f"{input_path}: no image files found")

    ids, rows = [], []
    for file in files:
        try:
            image = load_gray_image(file)
            mask = threshold_mask(image, percentile)
            rows.append(haralick_features(glcm(image, mask, levels=levels)))
            ids.append(image.id)
        except (InputError, NumericError, OSError) as exc:
            click.echo(f"warning: skipping {file.name}: {exc}", err=True)
    if not rows:
        raise InputError("no image could be processed")

    order = np.argsort(ids, kind="stable")
    table = np.stack(rows)[order]
    ids = [ids[i] for i in order]
    if normalize:
        table = normalize_corpus(table)
    _write_id_rows(
        out_path,
        ["id"] + list(FEATURE_NAMES),
        [[rid] + [_fmt(v) for v in row] for rid, row in zip(ids, table)],
    )
    click.echo(f"wrote {len(ids)} feature rows to {out_path}")


@cli.command("distmat")
@click.argument("input_path", type=click.Path())
@click.option("--metric", type=click.Choice(METRICS), default="kernel_w2",
              show_default=True)
@click.option("--kernel", "kernel_family", type=click.Choice(KERNEL_FAMILIES),
              default="rbf", show_default=True)
@click.option("--gamma", type=float, default=1.0, show_default=True)
@click.option("--degree", type=int, default=2, show_default=True)
@click.option("--offset", type=float, default=1.0, show_default=True)
@click.option("--rho", type=float, default=0.1, show_default=True)
@click.option("--squared/--no-squared", default=True, show_default=True,
              help="Report squared Wasserstein values (or their square root).")
@click.option("--columns-as-samples/--no-columns-as-samples", default=True,
              show_default=True,
              help="Treat each CSV row as a set of scalar samples; otherwise "
                   "read a directory of per-set CSV files.")
@click.option("--workers", type=int, default=None,
              help=f"Concurrent pair workers (default 1; env {WORKERS_ENV} overrides).")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--json-out", type=click.Path(dir_okay=False), default=None)
@click.option("--emit-heatmap-csv", type=click.Path(dir_okay=False), default=None,
              help="Also write the matrix in long form (row,col,value) for plotting.")
def cmd_distmat(input_path, metric, kernel_family, gamma, degree, offset, rho,
                squared, columns_as_samples, workers, out_path, json_out,
                emit_heatmap_csv):
    """Compute the pairwise divergence matrix of a collection of sample sets."""
    try:
        spec = KernelSpec(family=kernel_family, gamma=gamma, degree=degree,
                          offset=offset)
        opts = DivergenceOptions(kernel=spec, rho=rho, report_squared=squared)
    except InputError as exc:
        raise click.UsageError(str(exc)) from exc
    sets = _load_sample_sets(input_path, columns_as_samples)
    result = distance_matrix(sets, metric, opts, n_workers=_resolve_workers(workers))

    _atomic_write_text(out_path, result.to_csv())
    if json_out:
        _atomic_write_text(json_out, json.dumps(result.to_dict()) + "\n")
    if emit_heatmap_csv:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["row", "col", "value"])
        for i, row_label in enumerate(result.labels):
            for j, col_label in enumerate(result.labels):
                writer.writerow([row_label, col_label, _fmt(result.values[i, j])])
        _atomic_write_text(emit_heatmap_csv, buf.getvalue())
    click.echo(f"wrote {result.n}x{result.n} {result.metric} matrix to {out_path}")


@cli.command("cluster")
@click.argument("distance_csv", type=click.Path(dir_okay=False))
@click.option("--k", type=int, default=2, show_default=True)
@click.option("--linkage", type=click.Choice(LINKAGES), default="average",
              show_default=True)
@click.option("--out-labels", required=True, type=click.Path(dir_okay=False))
@click.option("--out-dendrogram", type=click.Path(dir_okay=False), default=None)
def cmd_cluster(distance_csv, k, linkage, out_labels, out_dendrogram):
    """Cut an agglomerative clustering of a distance CSV into k clusters."""
    with open(distance_csv, newline="") as handle:
        dm = DistanceMatrix.from_csv(handle.read())
    if not 1 <= k <= dm.n:
        raise click.UsageError(f"--k must be between 1 and {dm.n}, got {k}")
    tree = agglomerate(dm, linkage=linkage)
    labels = cut(tree, k)
    _write_id_rows(out_labels, ["id", "label"],
                   [[rid, str(int(label))] for rid, label in zip(dm.labels, labels)])
    if out_dendrogram:
        _atomic_write_text(out_dendrogram, json.dumps(tree.to_dict()) + "\n")
    click.echo(f"wrote {k}-cluster labels for {dm.n} items to {out_labels}")


def _aligned_labels(labels_map: dict, truth_map: dict):
    if set(labels_map) != set(truth_map):
        only_labels = sorted(set(labels_map) - set(truth_map))[:3]
        only_truth = sorted(set(truth_map) - set(labels_map))[:3]
        raise InputError(
            "label and truth ids do not match "
            f"(labels-only: {only_labels}, truth-only: {only_truth})"
        )
    ids = sorted(labels_map)
    return ids, [labels_map[i] for i in ids], [truth_map[i] for i in ids]


@cli.command("eval")
@click.argument("labels_csv", type=click.Path(dir_okay=False))
@click.argument("truth_csv", type=click.Path(dir_okay=False))
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="Report JSON path (default: stdout).")
@click.option("--noisy-label", default="noisy", show_default=True,
              help="Truth class treated as the positive (noisy) class.")
@click.option("--scatter-native", type=click.Path(dir_okay=False),
              default=None, help="Native-space distance CSV for scatter export.")
@click.option("--scatter-kernel", type=click.Path(dir_okay=False),
              default=None, help="Kernel-space distance CSV for scatter export.")
@click.option("--emit-scatter-csv", type=click.Path(dir_okay=False), default=None,
              help="Write per-pair (native, kernel) distances tagged by cluster pair.")
def cmd_eval(labels_csv, truth_csv, out_path, noisy_label, scatter_native,
             scatter_kernel, emit_scatter_csv):
    """Contingency table, chi-square, and prediction rates of a clustering."""
    ids, labels, truth = _aligned_labels(
        _read_label_csv(labels_csv), _read_label_csv(truth_csv)
    )
    table = contingency(labels, truth)
    report = {
        "contingency": table.to_dict(),
        "chi_square": chi_square(table),
        "noisy_rate": None,
        "clean_rate": None,
        "overall": None,
    }
    if table.counts.shape == (2, 2) and noisy_label in [str(c) for c in table.col_labels]:
        noisy_col = [str(c) for c in table.col_labels].index(noisy_label)
        fractions = table.counts[:, noisy_col] / table.counts.sum(axis=1)
        noisy_row = int(np.argmax(fractions))
        rates = prediction_rates(table, noisy_row, noisy_col)
        report.update(
            noisy_rate=rates.noisy_rate,
            clean_rate=rates.clean_rate,
            overall=rates.overall,
        )

    if emit_scatter_csv:
        if not (scatter_native and scatter_kernel):
            raise click.UsageError(
                "--emit-scatter-csv requires --scatter-native and --scatter-kernel"
            )
        _write_scatter(emit_scatter_csv, scatter_native, scatter_kernel,
                       dict(zip(ids, labels)))

    text = json.dumps(report, indent=2) + "\n"
    if out_path:
        _atomic_write_text(out_path, text)
        click.echo(f"wrote evaluation report to {out_path}")
    else:
        click.echo(text, nl=False)


def _write_scatter(out_path, native_csv, kernel_csv, cluster_of: dict) -> None:
    with open(native_csv, newline="") as handle:
        native = DistanceMatrix.from_csv(handle.read())
    with open(kernel_csv, newline="") as handle:
        kern = DistanceMatrix.from_csv(handle.read())
    if native.labels != kern.labels:
        raise InputError("scatter distance matrices have different labels")
    missing = [label for label in native.labels if label not in cluster_of]
    if missing:
        raise InputError(f"scatter ids missing from labels CSV: {missing[:3]}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id_a", "id_b", "cluster_pair", "native", "kernel"])
    for i in range(native.n):
        for j in range(i + 1, native.n):
            la, lb = native.labels[i], native.labels[j]
            pair = sorted([cluster_of[la], cluster_of[lb]])
            writer.writerow([
                la, lb, f"{pair[0]}-{pair[1]}",
                _fmt(native.values[i, j]), _fmt(kern.values[i, j]),
            ])
    _atomic_write_text(out_path, buf.getvalue())


def main(argv=None) -> int:
    """Run the CLI, mapping exception categories to stable exit codes."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return EXIT_OK
    except click.exceptions.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return EXIT_USAGE
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_INPUT
    except click.ClickException as exc:
        exc.show()
        return EXIT_INPUT
    except InputError as exc:
        click.echo(f"input error: {exc}", err=True)
        return EXIT_INPUT
    except NumericError as exc:
        click.echo(f"numeric error: {exc}", err=True)
        return EXIT_NUMERIC
    except OSError as exc:
        click.echo(f"i/o error: {exc}", err=True)
        return EXIT_INPUT


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
