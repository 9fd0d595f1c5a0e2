"""Run persistence, the best-construction repository, and report emission.

Runs land under runs/<run-id>/ as config.json + log.ndjson + best.json.
The repository keeps one best record per (problem, instance-hash), replaced
only by strictly better scores, with losers archived under history/.
Reports render a CSV (and per-generation quantiles for plotdata) plus
matplotlib figures next to the delimited output.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .payloads import canonical_json, payload_from_json, payload_to_json

ARTIFACT_VERSION = "0.1.0"
REPO_ENV_VAR = "EVOCONSTRUCT_REPO"


def instance_hash(instance: dict) -> str:
    return hashlib.sha256(canonical_json(instance or {}).encode()).hexdigest()[:16]


def _atomic_write_json(path: Path, obj: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class RunWriter:
    """Streams per-evaluation log lines for one run directory."""

    def __init__(self, run_dir: str | Path):
        self.run_dir = Path(run_dir)
        self.run_dir.mkdir(parents=True, exist_ok=True)
        self._log = open(self.run_dir / "log.ndjson", "w")

    def log(self, line: dict) -> None:
        self._log.write(json.dumps(line) + "\n")
        self._log.flush()

    def finish(self, report, config) -> None:
        self._log.close()
        _atomic_write_json(self.run_dir / "config.json", config.to_json())
        _atomic_write_json(self.run_dir / "best.json", report.to_json())


def new_run_dir(root: str | Path, seed: int) -> Path:
    stamp = time.strftime("%Y%m%d-%H%M%S")
    path = Path(root) / f"{stamp}-seed{seed}"
    suffix = 0
    while path.exists():
        suffix += 1
        path = Path(root) / f"{stamp}-seed{seed}-{suffix}"
    return path


# --- best-construction repository ----------------------------------------------

@dataclass
class BestRecord:
    problem_id: str
    instance: dict
    construction: dict                 # payload JSON
    score: float                       # canonical orientation (larger is better)
    raw_score: float | None = None
    certificate: dict | None = None
    provenance: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"problem_id": self.problem_id, "instance": self.instance,
                "construction": self.construction, "score": self.score,
                "raw_score": self.raw_score, "certificate": self.certificate,
                "provenance": self.provenance}

    @classmethod
    def from_json(cls, obj: dict) -> "BestRecord":
        return cls(problem_id=obj["problem_id"], instance=obj.get("instance", {}),
                   construction=obj["construction"], score=float(obj["score"]),
                   raw_score=obj.get("raw_score"), certificate=obj.get("certificate"),
                   provenance=obj.get("provenance", {}))


class RepoError(RuntimeError):
    pass


def repo_root(override: str | None = None) -> Path:
    if override:
        return Path(override)
    return Path(os.environ.get(REPO_ENV_VAR, "repo"))


def record_path(root: Path, problem_id: str, instance: dict) -> Path:
    return root / problem_id / f"{instance_hash(instance)}.json"


def repo_add(best: BestRecord, root: str | Path | None = None) -> Path:
    """Store a record; replace an existing one only when strictly better."""
    rootp = repo_root(None if root is None else str(root))
    path = record_path(rootp, best.problem_id, best.instance)
    if path.exists():
        old = BestRecord.from_json(json.loads(path.read_text()))
        if best.score <= old.score:
            raise RepoError(
                f"refusing regression: stored score {old.score!r} vs new {best.score!r}")
        history = path.parent / "history"
        history.mkdir(parents=True, exist_ok=True)
        stamp = time.strftime("%Y%m%d-%H%M%S")
        os.replace(path, history / f"{path.stem}-{stamp}.json")
    # round-trip the construction through the codec before storing
    payload_from_json(best.construction)
    _atomic_write_json(path, best.to_json())
    return path


def repo_show(problem_id: str, instance: dict, root: str | Path | None = None) -> BestRecord:
    path = record_path(repo_root(None if root is None else str(root)), problem_id, instance)
    if not path.exists():
        raise RepoError(f"no stored record at {path}")
    return BestRecord.from_json(json.loads(path.read_text()))


# --- report emission -------------------------------------------------------------

def _read_log(run_dir: Path) -> list[dict]:
    log_path = run_dir / "log.ndjson"
    if not log_path.exists():
        raise FileNotFoundError(f"missing run log {log_path}")
    lines = []
    with open(log_path) as fh:
        for raw in fh:
            raw = raw.strip()
            if raw:
                lines.append(json.loads(raw))
    if not lines:
        raise ValueError(f"empty run log {log_path}")
    return lines


def report_emit(run_dir: str | Path, fmt: str = "csv") -> list[Path]:
    """Write report files for a run; returns the paths created.

    csv: eval_index, best_score, wall_ms, feasible_count rows plus a score
    curve figure. plotdata additionally emits per-generation score quantiles
    and their band figure.
    """
    run_dir = Path(run_dir)
    lines = _read_log(run_dir)
    out: list[Path] = []
    best = None
    feasible = 0
    rows = []
    for idx, line in enumerate(lines, start=1):
        if line.get("feasible") and line.get("score") is not None:
            feasible += 1
            if best is None or line["score"] > best:
                best = line["score"]
        rows.append((idx, best, line.get("wall_ms", 0.0), feasible))
    csv_path = run_dir / "report.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["eval_index", "best_score", "wall_ms", "feasible_count"])
        writer.writerows(rows)
    out.append(csv_path)
    out.append(_score_curve_figure(run_dir, rows))
    if fmt == "plotdata":
        qpath = run_dir / "report_plotdata.csv"
        by_gen: dict[int, list[float]] = {}
        for line in lines:
            gen = int(line.get("generation", 0))
            by_gen.setdefault(gen, [])
            if line.get("score") is not None:
                by_gen[gen].append(float(line["score"]))
        counts: dict[int, int] = {}
        for line in lines:
            gen = int(line.get("generation", 0))
            counts[gen] = counts.get(gen, 0) + 1
        with open(qpath, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["generation", "count", "q0", "q25", "q50", "q75", "q100"])
            for gen in sorted(counts):
                scores = by_gen.get(gen, [])
                if scores:
                    qs = np.percentile(scores, [0, 25, 50, 75, 100])
                    writer.writerow([gen, counts[gen], *[f"{q:.12g}" for q in qs]])
                else:
                    writer.writerow([gen, counts[gen], "", "", "", "", ""])
        out.append(qpath)
        out.append(_quantile_figure(run_dir, by_gen))
    elif fmt != "csv":
        raise ValueError(f"unknown report format {fmt!r}")
    return out


def _score_curve_figure(run_dir: Path, rows) -> Path:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    xs = [r[0] for r in rows if r[1] is not None]
    ys = [r[1] for r in rows if r[1] is not None]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    if xs:
        ax.step(xs, ys, where="post")
    ax.set_xlabel("evaluation")
    ax.set_ylabel("best score")
    ax.set_title("best-so-far score")
    fig.tight_layout()
    path = run_dir / "score_curve.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _quantile_figure(run_dir: Path, by_gen: dict[int, list[float]]) -> Path:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    gens = sorted(g for g, scores in by_gen.items() if scores)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    if gens:
        med = [float(np.median(by_gen[g])) for g in gens]
        lo = [float(np.percentile(by_gen[g], 25)) for g in gens]
        hi = [float(np.percentile(by_gen[g], 75)) for g in gens]
        ax.plot(gens, med, label="median")
        ax.fill_between(gens, lo, hi, alpha=0.3, label="interquartile")
        ax.legend()
    ax.set_xlabel("generation")
    ax.set_ylabel("score")
    ax.set_title("per-generation score quantiles")
    fig.tight_layout()
    path = run_dir / "quantiles.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
