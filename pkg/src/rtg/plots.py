"""Matplotlib figures written next to the delimited reports."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .config import Team  # noqa: E402

TEAM_PLOT_COLORS = ("#d03030", "#30a030", "#3060d0")


def save_eval_figures(report, out_dir) -> list[str]:
    """Score, role-prediction and bonus figures for a tournament report."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    labels = [t.name.lower() for t in Team]

    fig, ax = plt.subplots(figsize=(5, 3.2))
    errs = [ci if ci is not None else 0.0 for ci in report.team_ci]
    ax.bar(labels, report.team_mean, yerr=errs, capsize=4, color=TEAM_PLOT_COLORS)
    ax.set_ylabel("mean score")
    ax.set_title(f"team scores over {report.games} games (95% CI)")
    ax.axhline(0, color="black", lw=0.6)
    fig.tight_layout()
    path = os.path.join(out_dir, "scores.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    paths.append(path)

    if report.metric_by_observer_team:
        vals = [report.metric_by_observer_team.get(t) for t in Team]
        if any(v is not None for v in vals):
            fig, ax = plt.subplots(figsize=(5, 3.2))
            ax.bar(labels, [v if v is not None else 0.0 for v in vals],
                   color=TEAM_PLOT_COLORS)
            ax.set_ylim(0, 1.05)
            ax.set_ylabel("p(true role), geometric mean")
            ax.set_title("role prediction by observer team")
            fig.tight_layout()
            path = os.path.join(out_dir, "role_prediction.png")
            fig.savefig(path, dpi=120)
            plt.close(fig)
            paths.append(path)

    if report.raw_bonus_by_team:
        vals = [report.raw_bonus_by_team.get(t) or 0.0 for t in Team]
        fig, ax = plt.subplots(figsize=(5, 3.2))
        ax.bar(labels, vals, color=TEAM_PLOT_COLORS)
        ax.set_ylabel("mean raw deception bonus")
        ax.set_title("unscaled deception bonus by team")
        ax.axhline(0, color="black", lw=0.6)
        fig.tight_layout()
        path = os.path.join(out_dir, "deception_bonus.png")
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)
    return paths


def save_episode_figures(record, out_prefix) -> list[str]:
    """Per-step curves for one episode: team raw bonuses, belief metric."""
    paths = []
    if record.team_raw_bonus:
        fig, ax = plt.subplots(figsize=(6, 3.2))
        steps = range(len(record.team_raw_bonus))
        for t in Team:
            ax.plot(steps, [row[t] for row in record.team_raw_bonus],
                    color=TEAM_PLOT_COLORS[t], label=t.name.lower(), lw=1.0)
        ax.axhline(0, color="black", lw=0.6)
        ax.set_xlabel("step")
        ax.set_ylabel("raw deception bonus")
        ax.legend()
        fig.tight_layout()
        path = f"{out_prefix}_bonus.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)
    if record.belief_metric:
        fig, ax = plt.subplots(figsize=(6, 3.2))
        ax.plot(range(len(record.belief_metric)), record.belief_metric, lw=1.2)
        ax.set_xlabel("step")
        ax.set_ylabel("p(true role), geometric mean")
        ax.set_ylim(0, 1.05)
        fig.tight_layout()
        path = f"{out_prefix}_beliefs.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)
    return paths
