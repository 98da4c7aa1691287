"""Delimited output and run manifests.

One CSV per figure family, schemas documented in SCHEMA.md. Numbers are
written with repr-shortest formatting so identical runs produce identical
bytes.
"""

import csv
import json
from importlib import metadata
from pathlib import Path

import numpy as np

from .scenarios import QUANTILE_NAMES, BatchStats


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".12g")
    return x


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def write_price_band(stats: BatchStats, out_dir):
    rows = zip(stats.steps, stats.price_mean, stats.price_std)
    return write_csv(Path(out_dir) / "price_band.csv", ["step", "mean", "std"], rows)


def write_delta_box(stats: BatchStats, out_dir):
    rows = []
    for side, quants in (("bid", stats.delta_bid_quantiles), ("ask", stats.delta_ask_quantiles)):
        if quants is None:
            continue
        for t in stats.steps:
            rows.append([t, side] + [quants[i, t] for i in range(len(QUANTILE_NAMES))])
    return write_csv(Path(out_dir) / "delta_box.csv",
                     ["step", "side", *QUANTILE_NAMES], rows)


def write_inventory_path(stats: BatchStats, out_dir):
    rows = zip(stats.steps, stats.inventory_mean, stats.inventory_std)
    return write_csv(Path(out_dir) / "inventory_path.csv", ["step", "mean", "std"], rows)


def write_reward_curve_steps(stats: BatchStats, out_dir):
    rows = zip(stats.steps, stats.cum_reward_mean)
    return write_csv(Path(out_dir) / "reward_curve.csv", ["step", "mean"], rows)


def write_kappa_implied(stats: BatchStats, out_dir):
    rows = zip(stats.steps, stats.kappa_implied_mean)
    return write_csv(Path(out_dir) / "kappa_implied.csv", ["step", "value"], rows)


def write_batch_stats(stats: BatchStats, out_dir):
    """All figure-family CSVs that the stats object can populate."""
    written = [write_price_band(stats, out_dir)]
    if stats.delta_bid_quantiles is not None:
        written.append(write_delta_box(stats, out_dir))
    if stats.inventory_mean is not None:
        written.append(write_inventory_path(stats, out_dir))
    if stats.cum_reward_mean is not None:
        written.append(write_reward_curve_steps(stats, out_dir))
    if stats.kappa_implied_mean is not None:
        written.append(write_kappa_implied(stats, out_dir))
    return written


def write_train_log(log, out_dir):
    rows = [[e.update, e.mean_return, e.policy_loss, e.value_loss,
             e.entropy, e.clip_fraction, e.approx_kl] for e in log]
    return write_csv(Path(out_dir) / "reward_curve.csv",
                     ["update_index", "mean_return", "policy_loss", "value_loss",
                      "entropy", "clip_fraction", "approx_kl"], rows)


def write_sample_path(states, price, lam_bid, lam_ask, out_dir):
    rows = zip(range(len(states)), states, lam_bid, lam_ask, price)
    return write_csv(Path(out_dir) / "sample_path.csv",
                     ["day", "state", "lambda_bid", "lambda_ask", "price"], rows)


def package_version():
    try:
        return metadata.version("rfqmm")
    except metadata.PackageNotFoundError:
        return "unknown"


def write_manifest(out_dir, payload: dict):
    """manifest.json with config hash, seeds, batch size, code version.

    Deliberately timestamp-free so reruns are byte-identical.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    body = {"code_version": package_version(), **payload}
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(body, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON-serializable: {type(obj)}")
