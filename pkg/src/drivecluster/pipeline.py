"""End-to-end orchestration and file exports.

Results directory layout::

    summary.json
    crossval.json, crossval.csv, crossval_long.csv
    histograms/hist_<SIG>_f<k>.csv
    clusters/clusters_<SIG>_f<k>.csv
    pca/pca_<SIG>_f<k>.csv, pca/pca_<SIG>_f<k>.json
    curves/curve_<SIG>_f<k>.csv
    FAILED                     (only when the run aborted)
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .config import RunConfig
from .errors import DriveClusterError, InsufficientDataError, NoDataError
from .experiments import CrossValResult, SubsampleCurve, baseline_clustering, cross_validate, robustness_curve
from .features import FeatureKind, extract_feature
from .histogram import HistogramSet, histogram_set
from .ingest import SignalKind, UserRecord, filter_min_duration, load_log_dir
from .learn import Clustering, PcaProjection, pca_project
from .synth import generate_synthetic_fleet, load_fleet_spec

logger = logging.getLogger(__name__)

FAILED_MARKER = "FAILED"


class NoSessionsError(NoDataError):
    pass


class MissingResultsError(DriveClusterError):
    def __init__(self, missing: Sequence[str]):
        super().__init__("missing results: " + ", ".join(missing))
        self.missing = list(missing)


def cell_name(signal: SignalKind, feature: FeatureKind) -> str:
    return f"{SignalKind(signal).name}_f{int(feature)}"


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        for row in rows:
            out.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def _write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=False) + "\n", encoding="utf-8")


# -- exports -------------------------------------------------------------------


def write_histograms(path: Path, hs: HistogramSet) -> None:
    header = ["user_id"] + [f"b{i + 1}" for i in range(hs.bars.shape[1])]
    _write_csv(path, header, ([uid, *map(float, row)] for uid, row in zip(hs.user_ids, hs.bars)))


def write_clustering(path: Path, clustering: Clustering) -> None:
    _write_csv(path, ["user_id", "label"], zip(clustering.user_ids, clustering.labels.tolist()))


def write_pca(csv_path: Path, json_path: Path, proj: PcaProjection) -> None:
    _write_csv(csv_path, ["user_id", "pc1", "pc2"], ([u, float(a), float(b)] for u, (a, b) in zip(proj.user_ids, proj.coords[:, :2])))
    _write_json(
        json_path,
        {
            "explained_variance_ratio": [float(x) for x in proj.explained_variance_ratio],
            "explained_variance_total": float(proj.explained_variance_ratio.sum()),
            "ratio_spectrum": [float(x) for x in proj.ratio_spectrum],
        },
    )


def write_curves(path: Path, curves: Sequence[SubsampleCurve]) -> None:
    rows = []
    for c in curves:
        for pct, m, s in zip(c.percentages, c.means, c.stds):
            rows.append([c.method, float(pct), float(m), float(s)])
    _write_csv(path, ["method", "percentage", "mean", "std"], rows)


def crossval_payload(results: Sequence[CrossValResult]) -> dict:
    nested: dict = {}
    for r in results:
        cell = nested.setdefault(r.signal, {}).setdefault(str(r.feature), {})
        for K, m, s in zip(r.ks, r.means, r.stds):
            cell[str(K)] = {"mean": float(m), "std": float(s), "optimal": K == r.optimal_k}
    trials = results[0].trials if results else None
    return {"trials": trials, "results": nested}


def write_crossval(out: Path, results: Sequence[CrossValResult]) -> None:
    _write_json(out / "crossval.json", crossval_payload(results))
    _write_csv(
        out / "crossval_long.csv",
        ["signal", "feature", "K", "mean", "std", "optimal"],
        (
            [r.signal, r.feature, K, float(m), float(s), int(K == r.optimal_k)]
            for r in results
            for K, m, s in zip(r.ks, r.means, r.stds)
        ),
    )
    # table layout: one row per signal, one column per feature, "K (mean, std)"
    features = sorted({r.feature for r in results})
    signals = [s.name for s in SignalKind if any(r.signal == s.name for r in results)]
    lookup = {(r.signal, r.feature): r for r in results}
    rows = []
    for sig in signals:
        row = [sig]
        for f in features:
            r = lookup.get((sig, f))
            if r is None:
                row.append("")
            else:
                K = r.optimal_k
                row.append(f"{K} ({r.mean_at(K):.2f}, {r.std_at(K):.2f})")
        rows.append(row)
    _write_csv(out / "crossval.csv", ["signal"] + [f"f{f}" for f in features], rows)


# -- analysis ------------------------------------------------------------------


@dataclass(frozen=True)
class CellResult:
    signal: SignalKind
    feature: FeatureKind
    histograms: HistogramSet
    crossval: CrossValResult
    clustering: Clustering
    pca: PcaProjection
    curves: tuple[SubsampleCurve, ...]


def cell_seed(master: int, signal: SignalKind, feature: FeatureKind) -> int:
    sig_index = list(SignalKind).index(SignalKind(signal))
    ss = np.random.SeedSequence([int(master), sig_index, int(feature)])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> 1)


def analyze_cell(users: Sequence[UserRecord], signal: SignalKind, feature: FeatureKind, cfg: RunConfig) -> CellResult:
    options = cfg.cluster_options
    seed = cell_seed(cfg.seed, signal, feature)
    raw = {u.user_id: extract_feature(u, signal, feature).values for u in users}
    full = histogram_set(raw, count=cfg.bins, trim=(cfg.trim_low, cfg.trim_high), drop_empty=True)
    if full.dropped:
        logger.warning("%s: dropped users %s (empty after trimming)", cell_name(signal, feature), list(full.dropped))
    vectors = {uid: raw[uid] for uid in full.user_ids}
    if len(vectors) < cfg.k_max:
        raise InsufficientDataError(
            f"{cell_name(signal, feature)}: {len(vectors)} usable users, need at least k_max={cfg.k_max}"
        )
    cv = cross_validate(vectors, cfg.ks, cfg.trials, seed, options, signal=signal.name, feature=int(feature))
    clustering, _ = baseline_clustering(vectors, cv.optimal_k, seed, options)
    proj = pca_project(full.bars, 2, user_ids=full.user_ids)
    curves = tuple(
        robustness_curve(
            vectors,
            cv.optimal_k,
            method,
            cfg.percentages,
            cfg.trials,
            seed,
            options,
            on_error="truncate",
            signal=signal.name,
            feature=int(feature),
        )
        for method in cfg.subsample_methods
    )
    return CellResult(signal, feature, full, cv, clustering, proj, curves)


_WORKER_USERS: Sequence[UserRecord] = ()


def _init_worker(users):
    global _WORKER_USERS
    _WORKER_USERS = users


def _analyze_in_worker(args):
    signal, feature, cfg = args
    return analyze_cell(_WORKER_USERS, signal, feature, cfg)


def load_users(cfg: RunConfig) -> list[UserRecord]:
    if cfg.fleet_spec is not None:
        return generate_synthetic_fleet(load_fleet_spec(cfg.fleet_spec))
    if not cfg.data_dir.is_dir():
        raise NoSessionsError(f"data directory {cfg.data_dir} does not exist")
    users = load_log_dir(cfg.data_dir)
    if not users:
        raise NoSessionsError(f"no sessions found in {cfg.data_dir}")
    return users


def run_pipeline(cfg: RunConfig) -> dict:
    """Run every configured (signal, feature) cell and write all exports.

    On failure a ``FAILED`` marker holding the error is left next to whatever
    outputs were already written, and the exception propagates.
    """
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    marker = out / FAILED_MARKER
    if marker.exists():
        marker.unlink()
    try:
        return _run(cfg, out)
    except BaseException as exc:
        marker.write_text(f"{type(exc).__name__}: {exc}\n", encoding="utf-8")
        raise


def _run(cfg: RunConfig, out: Path) -> dict:
    users = load_users(cfg)
    kept = filter_min_duration(users, cfg.min_hours)
    logger.info("%d users loaded, %d drove at least %g h", len(users), len(kept), cfg.min_hours)
    if not kept:
        raise NoDataError(f"no user reaches min_hours={cfg.min_hours}")

    cells = [(s, f) for s in cfg.signals for f in cfg.features]
    results: list[CellResult] = []

    def record(res: CellResult) -> None:
        name = cell_name(res.signal, res.feature)
        write_histograms(out / "histograms" / f"hist_{name}.csv", res.histograms)
        write_clustering(out / "clusters" / f"clusters_{name}.csv", res.clustering)
        write_pca(out / "pca" / f"pca_{name}.csv", out / "pca" / f"pca_{name}.json", res.pca)
        write_curves(out / "curves" / f"curve_{name}.csv", res.curves)
        results.append(res)
        logger.info(
            "[%d/%d] %s: K=%d (M=%.3f, S=%.3f)",
            len(results),
            len(cells),
            name,
            res.crossval.optimal_k,
            res.crossval.mean_at(res.crossval.optimal_k),
            res.crossval.std_at(res.crossval.optimal_k),
        )

    if cfg.jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs, initializer=_init_worker, initargs=(kept,)) as pool:
            # map() yields in submission order, so exports are written in cell order
            for res in pool.map(_analyze_in_worker, [(s, f, cfg) for s, f in cells]):
                record(res)
    else:
        for s, f in cells:
            record(analyze_cell(kept, s, f, cfg))

    write_crossval(out, [r.crossval for r in results])
    summary = build_summary(cfg, users, kept, results)
    _write_json(out / "summary.json", summary)
    return summary


def build_summary(cfg: RunConfig, users, kept, results: Sequence[CellResult]) -> dict:
    table: dict = {}
    cells = []
    for r in results:
        name = cell_name(r.signal, r.feature)
        K = r.crossval.optimal_k
        table.setdefault(r.signal.name, {})[str(int(r.feature))] = K
        cells.append(
            {
                "signal": r.signal.name,
                "feature": int(r.feature),
                "users": len(r.histograms),
                "dropped_users": list(r.histograms.dropped),
                "optimal_k": K,
                "mean": r.crossval.mean_at(K),
                "std": r.crossval.std_at(K),
                "pca_explained_variance": float(r.pca.explained_variance_ratio.sum()),
                "curve_failed_percentage": {
                    c.method: c.failed_percentage for c in r.curves if c.failed_percentage is not None
                },
                "files": {
                    "histograms": f"histograms/hist_{name}.csv",
                    "clusters": f"clusters/clusters_{name}.csv",
                    "pca": f"pca/pca_{name}.csv",
                    "pca_ratios": f"pca/pca_{name}.json",
                    "curves": f"curves/curve_{name}.csv",
                },
            }
        )
    return {
        "seed": cfg.seed,
        "users_total": len(users),
        "users_filtered": len(kept),
        "min_hours": cfg.min_hours,
        "filtered_user_ids": [u.user_id for u in kept],
        "k_range": [cfg.k_min, cfg.k_max],
        "trials": cfg.trials,
        "percentages": list(cfg.percentages),
        "optimal_k": table,
        "crossval": "crossval.json",
        "cells": cells,
    }


# -- report --------------------------------------------------------------------


def _read_csv(path: Path) -> list[dict[str, str]]:
    with path.open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def build_report(results_dir: str | Path) -> list[Path]:
    """Tidy plot-data CSVs: V-measure vs K, labelled PCA scatter, subsampling curves."""
    root = Path(results_dir)
    summary_path = root / "summary.json"
    if not summary_path.is_file():
        raise MissingResultsError([str(summary_path)])
    summary = json.loads(summary_path.read_text(encoding="utf-8"))
    needed = [root / summary["crossval"]]
    for cell in summary["cells"]:
        needed += [root / cell["files"][k] for k in ("clusters", "pca", "curves")]
    missing = [str(p) for p in needed if not p.is_file()]
    if missing:
        raise MissingResultsError(missing)

    crossval = json.loads((root / summary["crossval"]).read_text(encoding="utf-8"))["results"]
    report = root / "report"
    written = []
    for cell in summary["cells"]:
        sig, feat = cell["signal"], cell["feature"]
        name = f"{sig}_f{feat}"
        per_k = crossval[sig][str(feat)]
        path = report / "vmeasure_k" / f"vmeasure_k_{name}.csv"
        _write_csv(
            path,
            ["signal", "feature", "K", "mean", "std", "optimal"],
            ([sig, feat, int(K), float(v["mean"]), float(v["std"]), int(v["optimal"])] for K, v in per_k.items()),
        )
        written.append(path)

        labels = {r["user_id"]: r["label"] for r in _read_csv(root / cell["files"]["clusters"])}
        path = report / "pca_scatter" / f"pca_scatter_{name}.csv"
        _write_csv(
            path,
            ["signal", "feature", "user_id", "pc1", "pc2", "label"],
            ([sig, feat, r["user_id"], r["pc1"], r["pc2"], labels[r["user_id"]]] for r in _read_csv(root / cell["files"]["pca"])),
        )
        written.append(path)

        path = report / "subsampling" / f"subsampling_{name}.csv"
        _write_csv(
            path,
            ["signal", "feature", "method", "percentage", "mean", "std"],
            ([sig, feat, r["method"], r["percentage"], r["mean"], r["std"]] for r in _read_csv(root / cell["files"]["curves"])),
        )
        written.append(path)
    return written
