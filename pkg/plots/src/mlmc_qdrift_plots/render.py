"""Render the three study figures from mlmc-qdrift CSV outputs.

This package draws what the CSVs contain and nothing else: columns are read
strictly by header name, every derived overlay (reference slopes, crossover
marker) is computed from the loaded columns, and no estimator code is
imported.  A missing or misnamed column fails loudly.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIG1_COLUMNS = ("level", "N", "p", "var_fine", "mean_fine", "var_diff", "mean_diff")
FIG2_COLUMNS = ("level", "N", "tau", "zeta", "n_samples", "mean_var_shot", "stderr_var_shot")
FIG3_COLUMNS = ("eps", "L", "std_gates", "mlmc_gates", "speedup")


class SchemaError(Exception):
    """The CSV does not match the documented column contract."""


def load_columns(path: Path, required: tuple[str, ...]) -> dict[str, list[str]]:
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"input CSV not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        names = reader.fieldnames or []
        for column in required:
            if column not in names:
                raise SchemaError(f"{path} is missing required column '{column}'")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path} contains no data rows")
    return {name: [row[name] for row in rows] for name in names}


def _floats(values: list[str]) -> np.ndarray:
    return np.array([float(v) for v in values])


def _optional_floats(values: list[str]) -> tuple[np.ndarray, np.ndarray]:
    """Parse a column with blank entries; returns (mask, values-at-mask)."""
    mask = np.array([v != "" for v in values])
    return mask, np.array([float(v) for v, keep in zip(values, mask) if keep])


def _reference_slope_line(ax, xs, anchor_y, slope, base=2.0, **kwargs):
    xs = np.asarray(xs, dtype=float)
    ys = anchor_y + slope * (xs - xs[0])
    ax.plot(xs, ys, **kwargs)


def render_fig1(csv_path: Path, out_path: Path) -> Path:
    """Two panels: per-level variance and absolute mean on a log2 scale."""
    columns = load_columns(csv_path, FIG1_COLUMNS)
    levels = _floats(columns["level"])
    var_fine = _floats(columns["var_fine"])
    mean_fine = _floats(columns["mean_fine"])
    diff_mask, var_diff = _optional_floats(columns["var_diff"])
    _, mean_diff = _optional_floats(columns["mean_diff"])
    diff_levels = levels[diff_mask]

    fig, (ax_var, ax_mean) = plt.subplots(1, 2, figsize=(10, 4), sharex=True)
    ax_var.plot(levels, np.log2(var_fine), "o-", color="tab:red", label="single level")
    ax_var.plot(diff_levels, np.log2(var_diff), "s--", color="tab:green", label="coupled correction")
    _reference_slope_line(
        ax_var, diff_levels, np.log2(var_diff[0]), -1.0,
        linestyle=":", color="gray", label="slope -1",
    )
    ax_var.set_xlabel("level")
    ax_var.set_ylabel("log2 variance")
    ax_var.legend()

    ax_mean.plot(levels, np.log2(np.maximum(mean_fine, 1e-300)), "o-", color="tab:red")
    ax_mean.plot(diff_levels, np.log2(mean_diff), "s--", color="tab:green")
    _reference_slope_line(
        ax_mean, diff_levels, np.log2(mean_diff[0]), -1.0, linestyle=":", color="gray"
    )
    ax_mean.set_xlabel("level")
    ax_mean.set_ylabel("log2 |mean|")

    fig.tight_layout()
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def render_fig2(csv_path: Path, out_path: Path) -> Path:
    """Mean conditional shot-noise variance per level with its standard error."""
    columns = load_columns(csv_path, FIG2_COLUMNS)
    levels = _floats(columns["level"])
    mean_var = _floats(columns["mean_var_shot"])
    stderr = _floats(columns["stderr_var_shot"])

    fig, ax = plt.subplots(figsize=(6, 4))
    log_mean = np.log2(mean_var)
    # symmetric log-scale error bars from the linear-scale standard error
    err = stderr / (mean_var * math.log(2.0))
    ax.errorbar(levels, log_mean, yerr=err, fmt="o-", color="tab:blue", label="mean shot variance")
    _reference_slope_line(ax, levels, log_mean[0], -1.0, linestyle=":", color="gray", label="slope -1")
    ax.set_xlabel("correction level")
    ax.set_ylabel("log2 mean shot-noise variance")
    ax.legend()

    fig.tight_layout()
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def _crossover_eps(eps: np.ndarray, speedup: np.ndarray) -> float | None:
    """Log-interpolated eps where the speedup crosses 1, from the CSV alone."""
    for i in range(len(eps) - 1):
        s0, s1 = speedup[i] - 1.0, speedup[i + 1] - 1.0
        if s0 == 0.0:
            return float(eps[i])
        if s0 * s1 < 0:
            w = abs(s0) / (abs(s0) + abs(s1))
            return float(math.exp((1 - w) * math.log(eps[i]) + w * math.log(eps[i + 1])))
    return None


def render_fig3(csv_path: Path, out_path: Path) -> Path:
    """Total gates vs target precision for both estimators, plus the speedup."""
    columns = load_columns(csv_path, FIG3_COLUMNS)
    eps = _floats(columns["eps"])
    finest = _floats(columns["L"])
    std_gates = _floats(columns["std_gates"])
    mlmc_gates = _floats(columns["mlmc_gates"])
    speedup = _floats(columns["speedup"])
    order = np.argsort(eps)
    eps, finest, std_gates, mlmc_gates, speedup = (
        a[order] for a in (eps, finest, std_gates, mlmc_gates, speedup)
    )

    fig, ax = plt.subplots(figsize=(7.5, 5))
    ax.loglog(eps, std_gates, "-", color="tab:orange", label="single level")
    ax.loglog(eps, mlmc_gates, "-", color="tab:blue", label="multilevel")

    anchor = float(np.interp(math.log(0.02), np.log(eps), np.log(mlmc_gates)))
    for slope, style, label in ((-3.0, "--", "slope -3"), (-2.0, ":", "slope -2")):
        ax.loglog(
            eps,
            np.exp(anchor + slope * (np.log(eps) - math.log(0.02))),
            style,
            color="gray",
            linewidth=1,
            label=label,
        )
    ax.set_xlabel("target RMSE")
    ax.set_ylabel("total gates")
    ax.invert_xaxis()

    ax_speed = ax.twinx()
    ax_speed.semilogx(eps, speedup, "-.", color="tab:purple", label="speedup")
    ax_speed.axhline(1.0, linestyle=":", color="tab:purple", linewidth=1)
    ax_speed.set_ylabel("gate-count speedup")

    crossover = _crossover_eps(eps, speedup)
    if crossover is not None:
        ax.axvline(crossover, linestyle=":", color="black", linewidth=1)
        ax.annotate(f"crossover {crossover:.3g}", (crossover, ax.get_ylim()[0]),
                    textcoords="offset points", xytext=(4, 10), fontsize=8)

    ax_levels = ax.secondary_xaxis("top")
    ticks = eps[:: max(1, len(eps) // 8)]
    tick_levels = finest[:: max(1, len(finest) // 8)]
    ax_levels.set_xticks(ticks)
    ax_levels.set_xticklabels([str(int(l)) for l in tick_levels])
    ax_levels.set_xlabel("levels required")

    lines, labels = ax.get_legend_handles_labels()
    lines2, labels2 = ax_speed.get_legend_handles_labels()
    ax.legend(lines + lines2, labels + labels2, loc="upper right", fontsize=8)

    fig.tight_layout()
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def render_all(in_dir: Path, out_dir: Path) -> list[Path]:
    """Render every figure from the standard output layout in_dir/{fig1,fig2,fig3}/."""
    in_dir = Path(in_dir)
    out_dir = Path(out_dir)
    written = [
        render_fig1(in_dir / "fig1" / "fig1.csv", out_dir / "fig1.png"),
        render_fig2(in_dir / "fig2" / "fig2.csv", out_dir / "fig2.png"),
        render_fig3(in_dir / "fig3" / "fig3.csv", out_dir / "fig3.png"),
    ]
    return written
