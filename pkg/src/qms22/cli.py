"""Command line interface.

Subcommands:
  run      score one train/test fold pair, write the ROC as CSV (+SVG)
  bench    run every dataset in a directory through 5-fold evaluation
  compare  Wilcoxon signed-rank test between two results CSVs
  summary  five-number summary and mean/std per results CSV

`bench` output rows follow `dataset,fold,auc,n,p,seconds` with an `avg`
row per dataset; `compare` and `summary` accept those files (using the
avg rows) or any CSV with `dataset` and `auc` columns.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .core import HyperParams
from .keel import (FoldPair, discover_folds, find_datasets, parse_keel,
                   strip_outliers_from_train, Preprocessor)
from .metrics import RocCurve, five_number_summary, mean_std, roc_curve, \
    wilcoxon_signed_rank
from .ssad import SsadProblem, run_qms22

_DEFAULTS = HyperParams()


def _add_hyper_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--m", type=int, default=_DEFAULTS.m,
                        help="number of member functions")
    parser.add_argument("--q", type=int, default=_DEFAULTS.q,
                        help="rows per member matrix")
    parser.add_argument("--alpha", type=float, default=_DEFAULTS.alpha,
                        help="ratio clip threshold")
    parser.add_argument("--iterations", type=int, default=_DEFAULTS.iterations,
                        help="coordinate sweeps")
    parser.add_argument("--step-a", type=float, default=_DEFAULTS.step_a,
                        help="perturbation distance for matrix entries")
    parser.add_argument("--step-b", type=float, default=_DEFAULTS.step_b,
                        help="perturbation distance for offset entries")
    parser.add_argument("--b-init", type=float, default=_DEFAULTS.b_init,
                        help="initial first offset entry")
    parser.add_argument("--guard", type=float, default=_DEFAULTS.denom_guard,
                        help="denominator guard")
    parser.add_argument("--seed", type=int, default=_DEFAULTS.seed,
                        help="shuffle seed for the member-set split")


def _hyper_from_args(args) -> HyperParams:
    return HyperParams(m=args.m, q=args.q, alpha=args.alpha,
                       iterations=args.iterations, step_a=args.step_a,
                       step_b=args.step_b, b_init=args.b_init,
                       denom_guard=args.guard, seed=args.seed)


def _score_fold(fold: FoldPair, hp: HyperParams) -> tuple[float, int, int]:
    """AUC, dataset size, and raw feature count for one fold."""
    n = fold.train.n + fold.test.n
    p = len(fold.train.input_names)
    train = strip_outliers_from_train(fold)
    prep = Preprocessor.fit(train)
    x_train, _ = prep.transform(train)
    x_test, y_test = prep.transform(fold.test)
    scores = run_qms22(SsadProblem(x_train, x_test, y_test), hp)
    curve = roc_curve(scores, y_test)
    return curve.auc, n, p


def _write_roc_csv(path, curve: RocCurve) -> None:
    with open(path, "w", newline="") as f:
        f.write("threshold,fpr,tpr\n")
        for t, x, y in zip(curve.thresholds, curve.fpr, curve.tpr):
            f.write(f"{float(t)!r},{float(x)!r},{float(y)!r}\n")


def _roc_svg(curve: RocCurve) -> str:
    size, margin = 360, 40
    span = size - 2 * margin

    def px(x):
        return margin + x * span

    def py(y):
        return size - margin - y * span

    path = " ".join(f"{px(x):.2f},{py(y):.2f}"
                    for x, y in zip(curve.fpr, curve.tpr))
    ticks = []
    for v in (0.0, 0.5, 1.0):
        ticks.append(f'<text x="{px(v):.0f}" y="{size - margin + 16}" '
                     f'text-anchor="middle" font-size="11">{v:g}</text>')
        ticks.append(f'<text x="{margin - 8}" y="{py(v) + 4:.0f}" '
                     f'text-anchor="end" font-size="11">{v:g}</text>')
    return f"""<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">
<rect width="{size}" height="{size}" fill="white"/>
<line x1="{margin}" y1="{size - margin}" x2="{size - margin}" y2="{size - margin}" stroke="black"/>
<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{size - margin}" stroke="black"/>
<line x1="{margin}" y1="{size - margin}" x2="{size - margin}" y2="{margin}" stroke="#bbbbbb" stroke-dasharray="4 3"/>
<polyline points="{path}" fill="none" stroke="#1f6fb2" stroke-width="1.6"/>
{chr(10).join(ticks)}
<text x="{size / 2:.0f}" y="{size - 6}" text-anchor="middle" font-size="12">FPR</text>
<text x="12" y="{size / 2:.0f}" text-anchor="middle" font-size="12" transform="rotate(-90 12 {size / 2:.0f})">TPR</text>
<text x="{size - margin}" y="{margin - 10}" text-anchor="end" font-size="12">AUC {curve.auc:.4f}</text>
</svg>
"""


def cmd_run(args) -> int:
    train = parse_keel(args.train)
    test = parse_keel(args.test)
    if train.declarations() != test.declarations():
        raise ValueError("train and test files declare different attributes")
    hp = _hyper_from_args(args)
    stripped = strip_outliers_from_train(train)
    prep = Preprocessor.fit(stripped)
    x_train, _ = prep.transform(stripped)
    x_test, y_test = prep.transform(test)
    scores = run_qms22(SsadProblem(x_train, x_test, y_test), hp)
    curve = roc_curve(scores, y_test)
    _write_roc_csv(args.out, curve)
    if args.svg:
        Path(args.svg).write_text(_roc_svg(curve))
    print(f"AUC {curve.auc!r}")
    return 0


def _bench_dataset(task) -> list[tuple]:
    """Rows for one dataset: five folds plus the avg row."""
    name, directory, hp = task
    rows = []
    aucs = []
    total_seconds = 0.0
    n = p = 0
    for fold in discover_folds(directory, name):
        started = time.perf_counter()
        fold_auc, n, p = _score_fold(fold, hp)
        seconds = time.perf_counter() - started
        total_seconds += seconds
        aucs.append(fold_auc)
        rows.append((name, str(fold.fold_index), fold_auc, n, p, seconds))
    rows.append((name, "avg", float(np.mean(aucs)), n, p, total_seconds))
    return rows


def cmd_bench(args) -> int:
    hp = _hyper_from_args(args)
    datasets = find_datasets(args.data_dir)
    if not datasets:
        print(f"error: no datasets found in {args.data_dir}", file=sys.stderr)
        return 1
    tasks = [(name, directory, hp) for name, directory in datasets]
    results = []
    failures = 0
    if args.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            futures = {task[0]: pool.submit(_bench_dataset, task)
                       for task in tasks}
            for name in sorted(futures):
                try:
                    results.extend(futures[name].result())
                except Exception as exc:
                    failures += 1
                    print(f"error: {name}: {exc}", file=sys.stderr)
    else:
        for task in tasks:
            try:
                results.extend(_bench_dataset(task))
            except Exception as exc:
                failures += 1
                print(f"error: {task[0]}: {exc}", file=sys.stderr)
    if not results:
        print("error: all datasets failed", file=sys.stderr)
        return 1
    with open(args.out, "w", newline="") as f:
        f.write("dataset,fold,auc,n,p,seconds\n")
        for name, fold, auc_value, n, p, seconds in results:
            f.write(f"{name},{fold},{auc_value!r},{n},{p},{seconds:.3f}\n")
    print(f"wrote {args.out} ({len(results)} rows, {failures} failures)")
    return 0


def _read_representative_aucs(path) -> dict[str, float]:
    """dataset -> representative AUC from a results CSV.

    Benchmark files contribute their `avg` rows; plain `dataset,auc`
    files contribute every row.
    """
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        fields = reader.fieldnames or []
        if "dataset" not in fields or "auc" not in fields:
            raise ValueError(f"{path}: expected 'dataset' and 'auc' columns, "
                             f"got {fields}")
        rows = list(reader)
    if "fold" in fields:
        rows = [r for r in rows if r["fold"] == "avg"]
    out = {r["dataset"]: float(r["auc"]) for r in rows}
    if not out:
        raise ValueError(f"{path}: no usable result rows")
    return out


def cmd_compare(args) -> int:
    ours = _read_representative_aucs(args.ours)
    baseline = _read_representative_aucs(args.baseline)
    common = sorted(set(ours) & set(baseline))
    if not common:
        raise ValueError("the two results files share no dataset names")
    result = wilcoxon_signed_rank([ours[d] for d in common],
                                  [baseline[d] for d in common])
    print(f"datasets {len(common)}")
    print(f"n_effective {result.n_effective}")
    print(f"r_plus {result.r_plus!r}")
    print(f"r_minus {result.r_minus!r}")
    print(f"p_value {result.p_value!r} ({result.method})")
    if result.p_value < 0.05:
        print("reject the null hypothesis at significance 0.05: "
              "the paired AUCs differ")
    else:
        print("fail to reject the null hypothesis at significance 0.05")
    return 0


def cmd_summary(args) -> int:
    lines = ["classifier,min,q1,median,q3,max,mean,std"]
    for path in args.results:
        aucs = list(_read_representative_aucs(path).values())
        s = five_number_summary(aucs)
        mean, std = mean_std(aucs)
        name = Path(path).stem
        lines.append(f"{name},{s.min!r},{s.q1!r},{s.median!r},{s.q3!r},"
                     f"{s.max!r},{mean!r},{std!r}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qms22",
        description="Quadratic multiform separation anomaly detection "
                    "and its KEEL benchmark harness.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="score one train/test fold pair")
    p_run.add_argument("--train", required=True, help="training .dat file")
    p_run.add_argument("--test", required=True, help="test .dat file")
    p_run.add_argument("--out", default="roc.csv", help="ROC CSV path")
    p_run.add_argument("--svg", default=None, help="optional ROC SVG path")
    _add_hyper_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_bench = sub.add_parser("bench", help="5-fold evaluation of every "
                                           "dataset under a directory")
    p_bench.add_argument("--data-dir", required=True,
                         help="directory containing KEEL fold files")
    p_bench.add_argument("--out", default="bench.csv", help="results CSV path")
    p_bench.add_argument("--workers", type=int, default=None,
                         help="parallel dataset workers (default: cpu count)")
    _add_hyper_flags(p_bench)
    p_bench.set_defaults(func=cmd_bench)

    p_cmp = sub.add_parser("compare", help="Wilcoxon signed-rank test "
                                           "between two results files")
    p_cmp.add_argument("ours", help="results CSV")
    p_cmp.add_argument("baseline", help="baseline results CSV")
    p_cmp.set_defaults(func=cmd_compare)

    p_sum = sub.add_parser("summary", help="five-number summary and "
                                           "mean/std per results file")
    p_sum.add_argument("results", nargs="+", help="results CSVs")
    p_sum.add_argument("--out", default=None, help="summary CSV path "
                                                   "(default: stdout)")
    p_sum.set_defaults(func=cmd_summary)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "bench" and args.workers is None:
        args.workers = os.cpu_count() or 1
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
