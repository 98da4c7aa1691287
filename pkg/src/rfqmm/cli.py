"""Command-line surface: simulate, train, evaluate, stationary, symmetry.

Flag precedence: CLI flags override config-file values, which override
preset defaults. Exit codes: 0 success, 2 config error, 3 numeric failure,
4 IO failure.
"""

import sys
from pathlib import Path

import click
import numpy as np

from .config import RunConfig, load_run_config
from .errors import (
    ChecksumMismatch,
    ConfigError,
    NumericError,
    RfqmmError,
)
from .intensity import stationary_distribution
from .policy import load_checkpoint, save_checkpoint
from .ppo import train as run_training
from .scenarios import (
    ExperimentPreset,
    evaluate_agent,
    price_drift_study,
    resolve_preset,
    simulate_market_paths,
    symmetry_report,
)
from . import plotting, reports

CHECKPOINT_EVERY = 25


def _merge_run_config(config_path, preset, seed, episodes, out) -> RunConfig:
    cfg = load_run_config(config_path) if config_path else RunConfig()
    if preset is not None:
        cfg.preset = preset
    if seed is not None:
        cfg.seed = seed
    if episodes is not None:
        cfg.episodes = episodes
    if out is not None:
        cfg.out = out
    cfg.env_config()  # validate the merged result
    return cfg


def common_options(f):
    for opt in reversed([
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                     default=None, help="YAML run configuration."),
        click.option("--preset", default=None,
                     help="baseline | neg_init | pos_init | neg_Q | pos_Q | custom."),
        click.option("--seed", type=int, default=None, help="Master seed."),
        click.option("--episodes", type=int, default=None, help="Episode batch size."),
        click.option("--out", type=click.Path(file_okay=False), default=None,
                     help="Output directory."),
        click.option("--deterministic", is_flag=True,
                     help="Force the single-threaded bit-reproducible path "
                          "(already the default execution mode)."),
        click.option("--figures/--no-figures", "render_figures", default=True,
                     help="Render PNG figures next to the CSVs."),
    ]):
        f = opt(f)
    return f


def _manifest_payload(cfg: RunConfig, deterministic, extra=None):
    body = {
        "preset": cfg.preset,
        "seed": cfg.seed,
        "episodes": cfg.episodes,
        "deterministic": bool(deterministic),
        "config": cfg.to_dict(),
        "config_hash": cfg.config_hash(),
    }
    body.update(extra or {})
    return body


@click.group()
def cli():
    """RFQ market-making simulator and PPO quoting agent."""


@cli.command()
@common_options
def simulate(config_path, preset, seed, episodes, out, deterministic, render_figures):
    """Simulate intensity regimes and mid-prices; write path and band CSVs."""
    cfg = _merge_run_config(config_path, preset, seed, episodes, out)
    out_dir = Path(cfg.out or "out/simulate")
    env_cfg = cfg.env_config()
    exp = ExperimentPreset(name=cfg.preset, env=env_cfg)

    stats = price_drift_study(exp, cfg.episodes, cfg.seed)
    states, price = simulate_market_paths(env_cfg, 1, cfg.seed)
    lam_b = env_cfg.levels.bid_by_state()[states[:, 0]]
    lam_a = env_cfg.levels.ask_by_state()[states[:, 0]]

    reports.write_price_band(stats, out_dir)
    reports.write_kappa_implied(stats, out_dir)
    reports.write_sample_path(states[:, 0], price[:, 0], lam_b, lam_a, out_dir)
    reports.write_manifest(out_dir, _manifest_payload(cfg, deterministic, {
        "command": "simulate",
        "final_mean_price": stats.price_mean[-1],
    }))
    if render_figures:
        plotting.render_batch_stats(stats, out_dir / "figures", s0=env_cfg.price.s0)
    click.echo(f"wrote simulation outputs to {out_dir}")


@cli.command()
@common_options
@click.option("--updates", type=int, default=None, help="Number of PPO updates.")
@click.option("--resume", "resume_path", type=click.Path(), default=None,
              help="Checkpoint to continue from (update numbering continues).")
def train(config_path, preset, seed, episodes, out, deterministic, render_figures,
          updates, resume_path):
    """Train the PPO quoting agent; write checkpoints and the reward curve."""
    cfg = _merge_run_config(config_path, preset, seed, episodes, out)
    out_dir = Path(cfg.out or "out/train")
    env_cfg = cfg.env_config()
    ppo_cfg = cfg.ppo_config()
    if updates is not None:
        cfg.ppo["total_updates"] = updates
        ppo_cfg = cfg.ppo_config()

    start_params, start_update = None, 0
    if resume_path:
        start_params, manifest = load_checkpoint(Path(resume_path))
        start_update = int(manifest.get("training_step", -1)) + 1

    log = []

    def on_update(u, params, entry):
        log.append(entry)
        if (u + 1) % CHECKPOINT_EVERY == 0:
            save_checkpoint(params, out_dir / "checkpoint",
                            meta={"seed": cfg.seed, "training_step": u, "preset": cfg.preset})

    params, full_log = run_training(env_cfg, ppo_cfg, start_params=start_params,
                                    start_update=start_update, on_update=on_update)
    save_checkpoint(params, out_dir / "checkpoint",
                    meta={"seed": cfg.seed, "training_step": start_update + ppo_cfg.total_updates - 1,
                          "preset": cfg.preset})
    reports.write_train_log(full_log, out_dir)
    last_decile = full_log[-max(1, len(full_log) // 10):]
    reports.write_manifest(out_dir, _manifest_payload(cfg, deterministic, {
        "command": "train",
        "updates": ppo_cfg.total_updates,
        "start_update": start_update,
        "final_mean_return": float(np.mean([e.mean_return for e in last_decile])),
    }))
    if render_figures:
        plotting.render_train_curve(full_log, out_dir / "figures")
    click.echo(f"wrote training outputs to {out_dir}")


@cli.command()
@common_options
@click.option("--checkpoint", "checkpoint_path", type=click.Path(), required=True,
              help="Trained checkpoint (path without extension, or .json/.bin).")
def evaluate(config_path, preset, seed, episodes, out, deterministic, render_figures,
             checkpoint_path):
    """Evaluate a trained agent with mean actions; write figure-family CSVs."""
    cfg = _merge_run_config(config_path, preset, seed, episodes, out)
    out_dir = Path(cfg.out or "out/evaluate")
    params, manifest = load_checkpoint(_strip_ckpt_suffix(checkpoint_path))
    exp = ExperimentPreset(name=cfg.preset, env=cfg.env_config())

    stats = evaluate_agent(params, exp, cfg.episodes, cfg.seed)
    reports.write_batch_stats(stats, out_dir)
    reports.write_manifest(out_dir, _manifest_payload(cfg, deterministic, {
        "command": "evaluate",
        "checkpoint": manifest.get("sha256"),
        "final_mean_cumulative_reward": stats.cum_reward_mean[-1],
        "mean_terminal_inventory": float(stats.terminal_inventory.mean()),
        "skew_correlation": stats.skew_correlation,
    }))
    if render_figures:
        plotting.render_batch_stats(stats, out_dir / "figures", s0=exp.env.price.s0)
    click.echo(f"final mean cumulative reward: {stats.cum_reward_mean[-1]:.4f}")
    click.echo(f"wrote evaluation outputs to {out_dir}")


@cli.command()
@common_options
def stationary(config_path, preset, seed, episodes, out, deterministic, render_figures):
    """Print the stationary regime distribution of the configured generator."""
    cfg = _merge_run_config(config_path, preset, seed, episodes, out)
    env_cfg = cfg.env_config()
    pi = stationary_distribution(env_cfg.generator)
    click.echo(" ".join(f"{p:.4f}" for p in pi))
    if cfg.out:
        reports.write_manifest(Path(cfg.out), _manifest_payload(cfg, deterministic, {
            "command": "stationary",
            "stationary_distribution": [round(float(p), 10) for p in pi],
        }))


@cli.command()
@common_options
@click.option("--preset-a", default="neg_Q", help="First experiment preset.")
@click.option("--preset-b", default="pos_Q", help="Mirrored experiment preset.")
@click.option("--checkpoint-a", type=click.Path(), default=None)
@click.option("--checkpoint-b", type=click.Path(), default=None)
def symmetry(config_path, preset, seed, episodes, out, deterministic, render_figures,
             preset_a, preset_b, checkpoint_a, checkpoint_b):
    """Mirror-deviation report between two presets (with or without agents)."""
    cfg = _merge_run_config(config_path, preset, seed, episodes, out)
    out_dir = Path(cfg.out or "out/symmetry")
    exp_a = resolve_preset(preset_a)
    exp_b = resolve_preset(preset_b)
    if checkpoint_a and checkpoint_b:
        params_a, _ = load_checkpoint(_strip_ckpt_suffix(checkpoint_a))
        params_b, _ = load_checkpoint(_strip_ckpt_suffix(checkpoint_b))
        stats_a = evaluate_agent(params_a, exp_a, cfg.episodes, cfg.seed)
        stats_b = evaluate_agent(params_b, exp_b, cfg.episodes, cfg.seed)
    else:
        stats_a = price_drift_study(exp_a, cfg.episodes, cfg.seed)
        stats_b = price_drift_study(exp_b, cfg.episodes, cfg.seed)
    report = symmetry_report(stats_a, stats_b, s0=exp_a.env.price.s0)

    rows = []
    for i, step in enumerate(stats_a.steps):
        rows.append([
            step,
            report.delta_mirror_bid_vs_ask[i],
            report.delta_mirror_ask_vs_bid[i],
            report.inventory_mirror[i] if report.inventory_mirror is not None else "",
            report.price_mirror[i] if report.price_mirror is not None else "",
        ])
    reports.write_csv(out_dir / "symmetry.csv",
                      ["step", "delta_bid_vs_ask", "delta_ask_vs_bid",
                       "inventory_mirror", "price_mirror"], rows)
    reports.write_manifest(out_dir, _manifest_payload(cfg, deterministic, {
        "command": "symmetry",
        "preset_a": preset_a,
        "preset_b": preset_b,
        "max_delta_deviation": report.max_delta_deviation,
        "max_inventory_deviation": report.max_inventory_deviation,
    }))
    click.echo(f"wrote symmetry report to {out_dir}")


def _strip_ckpt_suffix(path):
    p = Path(path)
    return p.with_suffix("") if p.suffix in (".json", ".bin") else p


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.ClickException as exc:
        exc.show()
        return 2
    except click.Abort:
        return 1
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        return 2
    except NumericError as exc:
        click.echo(f"numeric failure: {exc}", err=True)
        return 3
    except (OSError, ChecksumMismatch) as exc:
        click.echo(f"io failure: {exc}", err=True)
        return 4
    except RfqmmError as exc:
        click.echo(f"error: {exc}", err=True)
        return 3


if __name__ == "__main__":
    sys.exit(main())
