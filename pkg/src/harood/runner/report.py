"""Report emission: accuracy / rank / confusion / timing tables as CSV plus
a Markdown summary. Plot rendering is out of scope; files carry the data."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from ..errors import ReportError
from ..evaluation.ranks import aggregate_ranks
from ..evaluation.selection import select_by_oracle, select_by_validation
from .store import ResultsStore


def _stderr(values) -> float:
    values = np.asarray(values, dtype=np.float64)
    if len(values) < 2:
        return 0.0
    return float(values.std(ddof=1) / np.sqrt(len(values)))


def emit_report(store: ResultsStore, protocol: str = "training_domain_validation",
                out_dir=None) -> dict[str, Path]:
    """Write accuracy (mean +/- stderr), rank, confusion, and timing tables."""
    records = store.load_all()
    if not records:
        raise ReportError("results store is empty")
    out_dir = Path(out_dir) if out_dir else store.root / "report"
    out_dir.mkdir(parents=True, exist_ok=True)
    select = select_by_oracle if protocol == "oracle" else select_by_validation
    tag = "oracle" if protocol == "oracle" else "valid"

    by_algorithm: dict[str, list] = {}
    for rec in records:
        by_algorithm.setdefault(rec.algorithm, []).append(rec)
    algorithms = sorted(by_algorithm)
    tasks = sorted({rec.task for rec in records})

    outcomes = {alg: select(recs) for alg, recs in by_algorithm.items()}

    paths: dict[str, Path] = {}
    acc_path = out_dir / f"accuracy_{tag}.csv"
    with open(acc_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["algorithm"]
        for task in tasks:
            header += [f"{task}_mean", f"{task}_stderr"]
        if tag == "valid":
            header += [f"{task}_pooled" for task in tasks]
        writer.writerow(header)
        for alg in algorithms:
            row = [alg]
            for task in tasks:
                outcome = outcomes[alg].get(task)
                if outcome is None:
                    row += ["", ""]
                else:
                    row += [f"{outcome.accuracy:.6f}",
                            f"{_stderr([t['target_acc'] for t in outcome.per_trial]):.6f}"]
            if tag == "valid":
                for task in tasks:
                    outcome = outcomes[alg].get(task)
                    row.append("" if outcome is None or outcome.pooled_accuracy is None
                               else f"{outcome.pooled_accuracy:.6f}")
            writer.writerow(row)
    paths["accuracy"] = acc_path

    # rank table over the per-task selected accuracies
    matrix = np.array([
        [outcomes[alg][task].accuracy if task in outcomes[alg] else 0.0
         for task in tasks]
        for alg in algorithms
    ])
    table = aggregate_ranks(matrix, algorithms)
    rank_path = out_dir / f"ranks_{tag}.csv"
    with open(rank_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["algorithm"] + [f"rank_{t}" for t in tasks]
                        + ["rank_sum", "final_order"])
        position = {idx: pos for pos, idx in enumerate(table.order)}
        for i, alg in enumerate(algorithms):
            writer.writerow([alg] + [f"{r:g}" for r in table.ranks[i]]
                            + [f"{table.rank_sums[i]:g}", position[i]])
    paths["ranks"] = rank_path

    conf_dir = out_dir / "confusion"
    conf_dir.mkdir(exist_ok=True)
    for alg in algorithms:
        for task in tasks:
            selected = outcomes[alg].get(task)
            if selected is None:
                continue
            chosen = [
                r for r in by_algorithm[alg]
                if r.task == task and any(t["combo"] == r.combo and t["seed"] == r.seed
                                          for t in selected.per_trial)
            ]
            if not chosen or not chosen[0].confusion:
                continue
            total = np.zeros_like(np.asarray(chosen[0].confusion))
            for r in chosen:
                total = total + np.asarray(r.confusion)
            path = conf_dir / f"{alg}_{task}.csv"
            with open(path, "w", newline="") as fh:
                csv.writer(fh).writerows(total.tolist())
    paths["confusion_dir"] = conf_dir

    timing_path = out_dir / "timing.csv"
    with open(timing_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["algorithm", "mean_seconds_per_run", "runs"])
        for alg in algorithms:
            secs = [r.seconds for r in by_algorithm[alg]]
            writer.writerow([alg, f"{np.mean(secs):.4f}", len(secs)])
    paths["timing"] = timing_path

    feature_files = sorted(str(p) for p in store.root.rglob("*.features.npz"))
    if feature_files:
        feat_path = out_dir / "feature_dumps.json"
        feat_path.write_text(json.dumps(feature_files, indent=1))
        paths["features"] = feat_path

    md_path = out_dir / f"report_{tag}.md"
    lines = [f"# Benchmark report ({tag} selection)", ""]
    lines.append("| algorithm | " + " | ".join(tasks) + " | rank sum |")
    lines.append("|" + "---|" * (len(tasks) + 2))
    for i, alg in enumerate(algorithms):
        cells = []
        for task in tasks:
            outcome = outcomes[alg].get(task)
            cells.append("-" if outcome is None else f"{outcome.accuracy:.3f}")
        lines.append(f"| {alg} | " + " | ".join(cells)
                     + f" | {table.rank_sums[i]:g} |")
    lines.append("")
    lines.append("Method ordering by ascending rank sum: "
                 + ", ".join(table.ordered_names()))
    md_path.write_text("\n".join(lines) + "\n")
    paths["markdown"] = md_path
    return paths
