"""Figure rendering for the report path.

Every figure is drawn from the same arrays that feed the CSVs, written as
PNG next to them under <out>/figures/. Metadata is pinned so repeated runs
produce identical bytes.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_PNG_META = {"metadata": {"Software": "rfqmm"}}


def _save(fig, out_dir, name):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{name}.png"
    fig.savefig(path, dpi=120, **_PNG_META)
    plt.close(fig)
    return path


def render_price_band(stats, out_dir, s0=None):
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(stats.steps, stats.price_mean, color="tab:blue", label="mean mid-price")
    ax.fill_between(stats.steps, stats.price_mean - stats.price_std,
                    stats.price_mean + stats.price_std, color="tab:blue", alpha=0.2,
                    label="+/- 1 std")
    if s0 is not None:
        ax.axhline(s0, color="grey", lw=0.8, ls="--")
    ax.set_xlabel("trading day")
    ax.set_ylabel("mid-price")
    ax.legend()
    fig.tight_layout()
    return _save(fig, out_dir, "price_band")


def render_delta_box(stats, out_dir):
    fig, axes = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    for ax, side, quants in ((axes[0], "bid", stats.delta_bid_quantiles),
                             (axes[1], "ask", stats.delta_ask_quantiles)):
        if quants is None:
            continue
        boxes = [{
            "whislo": quants[0, t], "q1": quants[1, t], "med": quants[2, t],
            "q3": quants[3, t], "whishi": quants[4, t], "fliers": [],
        } for t in stats.steps]
        ax.bxp(boxes, positions=stats.steps, widths=0.6, showfliers=False)
        ax.set_ylabel(f"delta {side}")
    axes[1].set_xlabel("trading day")
    fig.tight_layout()
    return _save(fig, out_dir, "delta_box")


def render_inventory_path(stats, out_dir):
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(stats.steps, stats.inventory_mean, color="tab:green", label="mean inventory")
    ax.fill_between(stats.steps, stats.inventory_mean - stats.inventory_std,
                    stats.inventory_mean + stats.inventory_std,
                    color="tab:green", alpha=0.2, label="+/- 1 std")
    ax.axhline(0.0, color="grey", lw=0.8, ls="--")
    ax.set_xlabel("trading day")
    ax.set_ylabel("inventory (lots)")
    ax.legend()
    fig.tight_layout()
    return _save(fig, out_dir, "inventory_path")


def render_cumulative_reward(stats, out_dir):
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(stats.steps, stats.cum_reward_mean, color="tab:orange")
    ax.set_xlabel("trading day")
    ax.set_ylabel("mean cumulative reward")
    fig.tight_layout()
    return _save(fig, out_dir, "reward_curve")


def render_kappa_implied(stats, out_dir):
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(stats.steps, stats.kappa_implied_mean, color="tab:red")
    ax.plot(stats.steps, stats.price_mean, color="tab:blue", lw=0.8, label="mean mid-price")
    ax.set_xlabel("trading day")
    ax.set_ylabel("implied price direction diagnostic")
    ax.legend()
    fig.tight_layout()
    return _save(fig, out_dir, "kappa_implied")


def render_train_curve(log, out_dir):
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot([e.update for e in log], [e.mean_return for e in log], color="tab:purple")
    ax.set_xlabel("update")
    ax.set_ylabel("mean episode return")
    fig.tight_layout()
    return _save(fig, out_dir, "training_reward")


def render_batch_stats(stats, out_dir, s0=None):
    figures = [render_price_band(stats, out_dir, s0=s0)]
    if stats.delta_bid_quantiles is not None:
        figures.append(render_delta_box(stats, out_dir))
    if stats.inventory_mean is not None:
        figures.append(render_inventory_path(stats, out_dir))
    if stats.cum_reward_mean is not None:
        figures.append(render_cumulative_reward(stats, out_dir))
    if stats.kappa_implied_mean is not None:
        figures.append(render_kappa_implied(stats, out_dir))
    return figures
