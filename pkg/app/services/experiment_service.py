"""
Experiment service: random-graph parameter sweeps and their reports.

Pipeline pieces:
- run_sweep: one record per (axis point, seed index, algorithm)
- aggregate: mean / sd per (axis point, algorithm) with theory overlays
- emit_records_csv / emit_csv / emit_plot: CSV tables and a two-panel SVG

Every instance draws from its own seeded substream, so records do not depend
on the worker count.
"""
import logging
import multiprocessing
import time
from pathlib import Path
from typing import List, Optional, Tuple, Union

import matplotlib as mpl
import numpy as np
import pandas as pd
from matplotlib.figure import Figure

from app.api.schemas import AggregateRow, ExperimentRecord, RandomGraphParams, SweepConfig
from app.core.exceptions import ExperimentError, SpilloverForgeError
from app.models.mechanism import PRA
from app.services.equilibrium_service import verify_pne
from app.services.instance_service import random_graph_instance
from app.services.optimizer_service import equal_solve, gcs
from app.utils.rng import derive_seed

logger = logging.getLogger(__name__)

AGGREGATE_COLUMNS = [
    "axis",
    "algorithm",
    "mean_sw",
    "sd_sw",
    "mean_active",
    "sd_active",
    "theory_sw",
    "theory_active",
]
RECORD_COLUMNS = [
    "axis_value",
    "seed_index",
    "algorithm",
    "sw",
    "active_count",
    "elapsed",
    "status",
    "verified",
]
SVG_HASH_SALT = "spillover-forge"


# ============================================================================
# Sweep
# ============================================================================

def _should_verify(seed_index: int, fraction: float) -> bool:
    if fraction <= 0.0:
        return False
    stride = max(1, int(round(1.0 / fraction)))
    return seed_index % stride == 0


def _run_point(args: Tuple[SweepConfig, int, float, int]) -> List[ExperimentRecord]:
    """Records for one (axis point, seed index); failures become error records."""
    cfg, axis_index, axis_value, seed_index = args
    params = cfg.params_at(axis_value)
    seed = derive_seed(cfg.master_seed, axis_index, seed_index)
    records = []
    try:
        inst = random_graph_instance(RandomGraphParams(seed=seed, **params))
    except (SpilloverForgeError, ValueError) as e:
        logger.warning(f"Instance generation failed at {cfg.sweep_axis}={axis_value} seed {seed_index}: {e}")
        return [
            ExperimentRecord(
                axis_value=axis_value, seed_index=seed_index, algorithm=algo, sw=0.0, active_count=0, status="error"
            )
            for algo in cfg.algorithms
        ]

    for algo in cfg.algorithms:
        started = time.perf_counter()
        try:
            if algo == "gcs":
                outcome = gcs(inst)
                verified = None
                if _should_verify(seed_index, cfg.verify_fraction):
                    x = np.zeros(inst.n)
                    x[outcome.predicted_active] = 1.0
                    verified = verify_pne(inst, PRA(p=outcome.p), x)
                    if not verified:
                        logger.warning(f"GCS profile failed PNE verification on '{inst.label}'")
            else:
                outcome = equal_solve(inst)
                verified = None
            record = ExperimentRecord(
                axis_value=axis_value,
                seed_index=seed_index,
                algorithm=algo,
                sw=max(outcome.predicted_sw, 0.0),
                active_count=len(outcome.predicted_active),
                elapsed=time.perf_counter() - started if cfg.record_timings else None,
                verified=verified,
            )
        except (SpilloverForgeError, ValueError) as e:
            logger.warning(f"{algo} failed on '{inst.label}': {e}")
            record = ExperimentRecord(
                axis_value=axis_value, seed_index=seed_index, algorithm=algo, sw=0.0, active_count=0, status="error"
            )
        records.append(record)
    return records


def run_sweep(cfg: SweepConfig, workers: int = 1) -> List[ExperimentRecord]:
    """
    Run GCS and/or equal allocation on random-graph instances along one axis.

    Args:
        cfg: Sweep configuration
        workers: Worker processes (results are identical for any count)

    Returns:
        Records sorted by (axis_value, seed_index, algorithm)
    """
    tasks = [
        (cfg, axis_index, float(value), seed_index)
        for axis_index, value in enumerate(cfg.axis_values)
        for seed_index in range(cfg.instances_per_point)
    ]
    logger.info(
        f"Sweeping {cfg.sweep_axis} over {len(cfg.axis_values)} points x "
        f"{cfg.instances_per_point} instances with {workers} worker(s)"
    )
    if workers > 1 and len(tasks) > 1:
        with multiprocessing.Pool(processes=workers) as pool:
            batches = pool.map(_run_point, tasks, chunksize=max(1, len(tasks) // (4 * workers)))
    else:
        batches = [_run_point(task) for task in tasks]

    records = [record for batch in batches for record in batch]
    records.sort(key=lambda rec: (rec.axis_value, rec.seed_index, rec.algorithm))
    failures = sum(rec.status == "error" for rec in records)
    if failures:
        logger.warning(f"{failures} of {len(records)} runs failed")
    return records


# ============================================================================
# Aggregation
# ============================================================================

def theory_overlay(n: int, r: float, qstar: float) -> Tuple[float, float]:
    """Reference welfare N (q* r)^3 / 2 and active count r q* N."""
    return n * (qstar * r) ** 3 / 2.0, r * qstar * n


def records_frame(records: List[ExperimentRecord]) -> pd.DataFrame:
    return pd.DataFrame([rec.model_dump() for rec in records], columns=RECORD_COLUMNS)


def aggregate(records: List[ExperimentRecord], cfg: SweepConfig) -> List[AggregateRow]:
    """
    Mean and sample standard deviation per (axis point, algorithm).

    Error records are excluded. Single-record groups get sd = 0.

    Raises:
        ExperimentError: If there are no successful records
    """
    frame = records_frame(records)
    frame = frame[frame["status"] == "ok"]
    if frame.empty:
        raise ExperimentError("no successful records to aggregate")

    grouped = frame.groupby(["axis_value", "algorithm"], sort=True)
    stats = grouped.agg(
        mean_sw=("sw", "mean"),
        sd_sw=("sw", "std"),
        mean_active=("active_count", "mean"),
        sd_active=("active_count", "std"),
    ).fillna(0.0)

    rows = []
    for (axis_value, algorithm), row in stats.iterrows():
        params = cfg.params_at(float(axis_value))
        theory_sw, theory_active = theory_overlay(params["n"], params["r"], params["qstar"])
        rows.append(
            AggregateRow(
                axis=float(axis_value),
                algorithm=algorithm,
                mean_sw=float(row["mean_sw"]),
                sd_sw=float(row["sd_sw"]),
                mean_active=float(row["mean_active"]),
                sd_active=float(row["sd_active"]),
                theory_sw=theory_sw,
                theory_active=theory_active,
            )
        )
    logger.info(f"Aggregated {len(frame)} records into {len(rows)} rows")
    return rows


def aggregate_frame(rows: List[AggregateRow]) -> pd.DataFrame:
    return pd.DataFrame([row.model_dump() for row in rows], columns=AGGREGATE_COLUMNS)


# ============================================================================
# Emission
# ============================================================================

def _write_frame(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False)
    except OSError as e:
        raise ExperimentError(f"cannot write {path}: {e.strerror}")
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def emit_records_csv(records: List[ExperimentRecord], path: Union[str, Path]) -> Path:
    """Per-instance records as CSV."""
    return _write_frame(records_frame(records), path)


def emit_csv(rows: List[AggregateRow], path: Union[str, Path]) -> Path:
    """Aggregate table as CSV with the fixed column order."""
    return _write_frame(aggregate_frame(rows), path)


def read_aggregate_csv(path: Union[str, Path]) -> List[AggregateRow]:
    frame = pd.read_csv(path)
    return [AggregateRow(**record) for record in frame.to_dict(orient="records")]


def emit_plot(
    rows: List[AggregateRow],
    path: Union[str, Path],
    axis_label: Optional[str] = None,
    title: Optional[str] = None,
) -> Path:
    """
    Two-panel SVG: social welfare (left) and active players (right).

    Each algorithm gets a mean line with a ±3 sd band; theory overlays are
    drawn as markers. Output bytes are stable for identical input.
    """
    frame = aggregate_frame(rows)
    if frame.empty:
        raise ExperimentError("nothing to plot")
    path = Path(path)

    mpl.rcParams["svg.hashsalt"] = SVG_HASH_SALT
    fig = Figure(figsize=(11, 4.2))
    ax_sw, ax_active = fig.subplots(1, 2)
    panels = (
        (ax_sw, "sw", "Social welfare", "theory-sw"),
        (ax_active, "active", "Active players", "theory-active"),
    )
    for algorithm, group in frame.groupby("algorithm", sort=True):
        group = group.sort_values("axis")
        for ax, key, _, _ in panels:
            mean, sd = group[f"mean_{key}"], group[f"sd_{key}"]
            suffix = "" if key == "sw" else "-active"
            ax.plot(group["axis"], mean, marker="o", label=algorithm, gid=f"series-{algorithm}{suffix}")
            ax.fill_between(group["axis"], mean - 3 * sd, mean + 3 * sd, alpha=0.2, gid=f"band-{algorithm}{suffix}")

    theory = frame.drop_duplicates("axis").sort_values("axis")
    for ax, key, ylabel, gid in panels:
        ax.plot(theory["axis"], theory[f"theory_{key}"], "k^", label="theory", gid=gid)
        ax.set_xlabel(axis_label or "axis")
        ax.set_ylabel(ylabel)
        ax.grid(alpha=0.3)
        ax.legend()
    if title:
        fig.suptitle(title)
    fig.tight_layout()

    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as e:
        raise ExperimentError(f"cannot write {path}: {e.strerror}")
    logger.info(f"Wrote plot to {path}")
    return path
