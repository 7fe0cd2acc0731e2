"""Deterministic experiment pipelines and their CSV/JSON emission.

Three studies are provided, all on the same configured spin system:

* ``fig1_variance_mean_decay`` iterates the exact averaged channel at every
  depth and converts the outcome probabilities into Bernoulli variances and
  means, exposing the 1/N bias decay without any sampling noise.
* ``fig2_shot_noise`` samples coupled random circuits and measures how the
  conditional shot-noise variance of the augmented estimator decays with the
  level.
* ``fig3_gate_complexity`` turns the fitted bias constant into total-gate
  curves for the single-level protocol and the multilevel estimator, locating
  the crossover precision and the resulting speedups.

Every pipeline is a pure function of (config, seed); CSVs are written with
shortest-roundtrip float formatting so reruns are bitwise identical.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .augmented import evolve_augmented, shot_noise_variance, zeta
from .hamiltonian import Hamiltonian, Observable, basis_state, exact_evolution, expectation
from .mlmc import (
    CrossoverResult,
    LevelHierarchy,
    choose_finest_level,
    crossover_solve,
    mlmc_cost,
)
from .qdrift import iterate_channel, observable_trace, sample_sequence, std_cost
from .rng import PURPOSE_EXPERIMENT, RngStream, indexed_map

logger = logging.getLogger(__name__)

FIG1_COLUMNS = ["level", "N", "p", "var_fine", "mean_fine", "var_diff", "mean_diff"]
FIG2_COLUMNS = ["level", "N", "tau", "zeta", "n_samples", "mean_var_shot", "stderr_var_shot"]
FIG3_COLUMNS = ["eps", "L", "std_gates", "mlmc_gates", "speedup"]


@dataclass
class FitResult:
    """Ordinary least-squares line through the stated points."""

    slope: float
    intercept: float
    points: list[tuple[float, float]]
    label: str = ""


def slope_fit(xs, ys, label: str = "") -> FitResult:
    """OLS slope/intercept of ys against xs."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 2 or xs.size != ys.size:
        raise ValueError("fit needs at least two (x, y) points")
    if np.all(xs == xs[0]):
        raise ValueError("fit needs at least two distinct x values")
    slope, intercept = np.polyfit(xs, ys, 1)
    return FitResult(slope=float(slope), intercept=float(intercept), points=list(zip(xs.tolist(), ys.tolist())), label=label)


def bernoulli_stats(p_fine: float, p_coarse: float) -> tuple[float, float, float, float]:
    """Moments of maximally coupled +-1 measurements at two outcome probabilities.

    Returns (var_fine, mean_fine, var_diff, mean_diff): the single-level
    outcome has variance 4p(1-p) and absolute mean |2p-1|; coupling both
    outcomes through one uniform draw makes them differ with probability
    delta = |p_fine - p_coarse|, giving difference variance 4*delta*(1-delta)
    and absolute mean 2*delta.
    """
    for p in (p_fine, p_coarse):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability {p} outside [0, 1]")
    delta = abs(p_fine - p_coarse)
    return (
        4.0 * p_fine * (1.0 - p_fine),
        abs(2.0 * p_fine - 1.0),
        4.0 * delta * (1.0 - delta),
        2.0 * delta,
    )


@dataclass
class ExperimentConfig:
    """Inputs shared by the three pipelines, with the reference-system defaults."""

    hamiltonian: Hamiltonian
    observable: Observable
    t: float = 1.0
    n0: int = 128
    fig1_max_level: int = 7
    fig2_level_range: tuple[int, int] = (1, 5)
    fig2_samples: list[int] | None = None
    zeta_scale: float = 1.0
    cp_fit_range: tuple[int, int] = (3, 7)
    eps_min: float = 1e-5
    eps_max: float = 1e-1
    eps_points: int = 60
    pilot_samples: int = 100
    seed: int = 0
    threads: int = 1
    initial_index: int = 0
    raw: dict = field(default_factory=dict)

    def psi0(self) -> np.ndarray:
        return basis_state(self.hamiltonian.num_qubits, self.initial_index)

    def rho0(self) -> np.ndarray:
        psi = self.psi0()
        return np.outer(psi, psi.conj())

    def fig2_schedule(self) -> list[int]:
        """Per-level sample counts, linear from 300 down to 80 by default."""
        lo, hi = self.fig2_level_range
        if self.fig2_samples is not None:
            if len(self.fig2_samples) != hi - lo + 1:
                raise ValueError("fig2 sample schedule length must match the level range")
            return list(self.fig2_samples)
        if hi == lo:
            return [300]
        return [round(300 + (80 - 300) * (level - lo) / (hi - lo)) for level in range(lo, hi + 1)]

    def hierarchy(self, max_level: int) -> LevelHierarchy:
        return LevelHierarchy.for_problem(self.hamiltonian, self.t, self.n0, max_level)


def reference_values(cfg: ExperimentConfig) -> tuple[float, float]:
    """(exact observable expectation, +1 outcome probability) at time t."""
    psi_t = exact_evolution(cfg.hamiltonian, cfg.t, cfg.psi0())
    mean = expectation(cfg.observable, psi_t)
    return mean, 0.5 * (1.0 + mean)


@dataclass
class Fig1Row:
    level: int
    n_gates: int
    p: float
    var_fine: float
    mean_fine: float
    var_diff: float | None
    mean_diff: float | None


@dataclass
class Fig1Result:
    rows: list[Fig1Row]
    p_inf: float
    exact_mean: float
    beta_fit: FitResult
    alpha_fit: FitResult
    bias_fit: FitResult
    trace_deviation: float
    hermiticity_deviation: float
    nonmonotone_levels: list[int]

    @property
    def beta_hat(self) -> float:
        return -self.beta_fit.slope

    @property
    def alpha_hat(self) -> float:
        return -self.alpha_fit.slope


def fig1_variance_mean_decay(cfg: ExperimentConfig, out_dir: Path | None = None) -> Fig1Result:
    """Exact-channel outcome probabilities across levels and their Bernoulli moments."""
    exact_mean, p_inf = reference_values(cfg)
    rho0 = cfg.rho0()
    lam = cfg.hamiltonian.one_norm
    p_levels: list[float] = []
    trace_dev = 0.0
    herm_dev = 0.0
    for level in range(cfg.fig1_max_level + 1):
        n = cfg.n0 << level
        rho = iterate_channel(cfg.hamiltonian, lam * cfg.t / n, rho0, n)
        trace_dev = max(trace_dev, abs(float(np.trace(rho).real) - 1.0) + abs(float(np.trace(rho).imag)))
        herm_dev = max(herm_dev, float(np.max(np.abs(rho - rho.conj().T))))
        p_levels.append(min(1.0, max(0.0, 0.5 * (1.0 + observable_trace(cfg.observable, rho)))))

    rows: list[Fig1Row] = []
    for level, p in enumerate(p_levels):
        var_fine, mean_fine, var_diff, mean_diff = (
            bernoulli_stats(p, p_levels[level - 1]) if level >= 1 else bernoulli_stats(p, p)
        )
        rows.append(
            Fig1Row(
                level=level,
                n_gates=cfg.n0 << level,
                p=p,
                var_fine=var_fine,
                mean_fine=mean_fine,
                var_diff=var_diff if level >= 1 else None,
                mean_diff=mean_diff if level >= 1 else None,
            )
        )

    corr_levels = [r.level for r in rows if r.level >= 1]
    beta_fit = slope_fit(corr_levels, [math.log2(r.var_diff) for r in rows if r.level >= 1], "log2 var_diff vs level")
    alpha_fit = slope_fit(corr_levels, [math.log2(r.mean_diff) for r in rows if r.level >= 1], "log2 mean_diff vs level")
    bias_fit = slope_fit(
        [r.level for r in rows],
        [math.log2(abs(r.p - p_inf)) for r in rows],
        "log2 |p - p_inf| vs level",
    )

    nonmonotone = [
        rows[i].level
        for i in range(1, len(rows))
        if abs(rows[i].p - p_inf) > abs(rows[i - 1].p - p_inf)
    ]
    for level in nonmonotone:
        if level >= 4:
            logger.warning("bias not monotone at asymptotic level %d", level)
        else:
            logger.info("bias not monotone at coarse level %d (tolerated)", level)

    result = Fig1Result(
        rows=rows,
        p_inf=p_inf,
        exact_mean=exact_mean,
        beta_fit=beta_fit,
        alpha_fit=alpha_fit,
        bias_fit=bias_fit,
        trace_deviation=trace_dev,
        hermiticity_deviation=herm_dev,
        nonmonotone_levels=nonmonotone,
    )
    if out_dir is not None:
        _write_fig1_csv(result, Path(out_dir) / "fig1.csv")
        _write_fits_json(
            Path(out_dir) / "fits.json",
            {
                "alpha_hat": result.alpha_hat,
                "beta_hat": result.beta_hat,
                "bias_slope": bias_fit.slope,
                "p_inf": p_inf,
                "exact_mean": exact_mean,
            },
        )
    return result


@dataclass
class Fig2Row:
    level: int
    n_gates: int
    tau: float
    zeta: float
    n_samples: int
    mean_var_shot: float
    stderr_var_shot: float


@dataclass
class Fig2Result:
    rows: list[Fig2Row]
    fit: FitResult

    @property
    def beta_shot_hat(self) -> float:
        return -self.fit.slope


def fig2_shot_noise(cfg: ExperimentConfig, out_dir: Path | None = None) -> Fig2Result:
    """Mean conditional shot-noise variance of the augmented estimator per level."""
    lo, hi = cfg.fig2_level_range
    if lo < 1:
        raise ValueError("shot-noise levels start at 1")
    hierarchy = cfg.hierarchy(hi)
    schedule = cfg.fig2_schedule()
    psi0 = cfg.psi0()
    base = RngStream(cfg.seed)
    rows: list[Fig2Row] = []
    for level, n_samples in zip(range(lo, hi + 1), schedule):

        def one(i: int, level=level) -> float:
            stream = base.substream(PURPOSE_EXPERIMENT, 2, level, i)
            seq = sample_sequence(stream, cfg.hamiltonian, hierarchy.n_gates(level))
            chi = evolve_augmented(cfg.hamiltonian, hierarchy, level, seq, psi0, cfg.zeta_scale)
            return shot_noise_variance(chi, cfg.observable)

        values = np.array(indexed_map(one, n_samples, cfg.threads))
        rows.append(
            Fig2Row(
                level=level,
                n_gates=hierarchy.n_gates(level),
                tau=hierarchy.tau(level),
                zeta=zeta(level, hierarchy, cfg.zeta_scale),
                n_samples=n_samples,
                mean_var_shot=float(np.mean(values)),
                stderr_var_shot=float(np.std(values, ddof=1) / math.sqrt(n_samples)),
            )
        )
    fit = slope_fit(
        [r.level for r in rows],
        [math.log2(r.mean_var_shot) for r in rows],
        "log2 mean shot variance vs level",
    )
    result = Fig2Result(rows=rows, fit=fit)
    if out_dir is not None:
        _write_fig2_csv(result, Path(out_dir) / "fig2.csv")
        _write_fits_json(Path(out_dir) / "fits.json", {"beta_shot_hat": result.beta_shot_hat})
    return result


@dataclass
class Fig3Row:
    eps: float
    finest_level: int
    std_gates: int
    mlmc_gates: float
    speedup: float


@dataclass
class Fig3Result:
    rows: list[Fig3Row]
    c_p: float
    c_p_slope_diagnostic: FitResult
    bias_constant: float
    sigma2_inf: float
    v0: float
    p_inf: float
    eps_star: float | None
    speedups: dict[float, float]
    crossover: CrossoverResult


def _fig3_cost_lists(c_p: float, v0: float, n0: int, finest_level: int) -> tuple[list[float], list[float]]:
    """Per-level variances and per-sample gate costs feeding the cost model.

    V_0 is the measured base-level Bernoulli variance; V_ell extrapolates the
    coupled-difference variance 4*delta*(1-delta) with delta = c_p / N_ell.
    The cost column counts the fine-path depth N_ell per correction sample.
    """
    variances = [v0]
    costs = [float(n0)]
    for level in range(1, finest_level + 1):
        n = n0 << level
        delta = min(1.0, c_p / n)
        variances.append(4.0 * delta * (1.0 - delta))
        costs.append(float(n))
    return variances, costs


def fig3_gate_complexity(
    cfg: ExperimentConfig,
    p_levels: list[float] | None = None,
    out_dir: Path | None = None,
) -> Fig3Result:
    """Total-gate curves, crossover precision, and speedups from the fitted constants."""
    if p_levels is None:
        p_levels = [r.p for r in fig1_variance_mean_decay(cfg).rows]
    if len(p_levels) < cfg.cp_fit_range[1] + 1:
        raise ValueError("channel data does not cover the bias-fit level range")
    _, p_inf = reference_values(cfg)

    lo, hi = cfg.cp_fit_range
    usable = [
        (cfg.n0 << level, abs(p_levels[level] - p_inf))
        for level in range(lo, hi + 1)
        if abs(p_levels[level] - p_inf) > 0.0
    ]
    if len(usable) < 2:
        raise ValueError("bias fit needs at least two levels with nonzero residual")
    # one-parameter fit of |p_level - p_inf| = c_p / N with the slope pinned at -1
    c_p = math.exp(sum(math.log(r) + math.log(n) for n, r in usable) / len(usable))
    diag = slope_fit(
        [math.log2(n) for n, _ in usable],
        [math.log2(r) for _, r in usable],
        "log2 |p - p_inf| vs log2 N",
    )

    bias_constant = 2.0 * c_p
    v0 = 4.0 * p_levels[0] * (1.0 - p_levels[0])
    sigma2_inf = 4.0 * p_inf * (1.0 - p_inf)

    def costs_at(eps: float) -> tuple[int, int, float]:
        finest = choose_finest_level(eps, bias_constant, cfg.n0)
        p_fine = min(1.0, max(0.0, p_inf - c_p / (cfg.n0 << finest)))
        sigma2 = 4.0 * p_fine * (1.0 - p_fine)
        std_total = std_cost(eps, bias_constant, sigma2)[2]
        variances, costs = _fig3_cost_lists(c_p, v0, cfg.n0, finest)
        return finest, std_total, mlmc_cost(variances, costs, eps)

    grid = np.geomspace(cfg.eps_max, cfg.eps_min, cfg.eps_points)
    rows = []
    for eps in grid:
        finest, std_total, mlmc_total = costs_at(float(eps))
        rows.append(
            Fig3Row(
                eps=float(eps),
                finest_level=finest,
                std_gates=std_total,
                mlmc_gates=mlmc_total,
                speedup=std_total / mlmc_total,
            )
        )

    eps_star = _refine_crossover(costs_at, rows)
    speedups = {}
    for eps in (1e-2, 1e-3, 1e-4):
        _, std_total, mlmc_total = costs_at(eps)
        speedups[eps] = std_total / mlmc_total

    crossover = crossover_solve(
        bias_constant=bias_constant,
        sigma2=sigma2_inf,
        variance_constant=8.0 * c_p / 3.0,
        n0=cfg.n0,
        v0=v0,
    )

    result = Fig3Result(
        rows=rows,
        c_p=c_p,
        c_p_slope_diagnostic=diag,
        bias_constant=bias_constant,
        sigma2_inf=sigma2_inf,
        v0=v0,
        p_inf=p_inf,
        eps_star=eps_star,
        speedups=speedups,
        crossover=crossover,
    )
    if out_dir is not None:
        _write_fig3_csv(result, Path(out_dir) / "fig3.csv")
        _write_fits_json(
            Path(out_dir) / "fits.json",
            {
                "c_p": c_p,
                "c_p_slope_diagnostic": diag.slope,
                "sigma2": sigma2_inf,
                "eps_star": eps_star,
                "speedups": {f"{eps:.0e}": s for eps, s in speedups.items()},
            },
        )
    return result


def _refine_crossover(costs_at, rows: list[Fig3Row]) -> float | None:
    """Bisect the speedup-crosses-1 point between bracketing grid entries."""
    bracket = None
    for a, b in zip(rows, rows[1:]):
        if (a.speedup - 1.0) * (b.speedup - 1.0) < 0:
            bracket = (a.eps, b.eps)
            break
    if bracket is None:
        for row in rows:
            if row.speedup == 1.0:
                return row.eps
        return None
    lo, hi = math.log(bracket[0]), math.log(bracket[1])

    def gap(log_eps: float) -> float:
        _, std_total, mlmc_total = costs_at(math.exp(log_eps))
        return std_total / mlmc_total - 1.0

    sign_lo = gap(lo) > 0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if (gap(mid) > 0) == sign_lo:
            lo = mid
        else:
            hi = mid
    return math.exp(0.5 * (lo + hi))


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _write_csv(path: Path, columns: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_fig1_csv(result: Fig1Result, path: Path) -> None:
    _write_csv(
        path,
        FIG1_COLUMNS,
        [[r.level, r.n_gates, r.p, r.var_fine, r.mean_fine, r.var_diff, r.mean_diff] for r in result.rows],
    )


def _write_fig2_csv(result: Fig2Result, path: Path) -> None:
    _write_csv(
        path,
        FIG2_COLUMNS,
        [
            [r.level, r.n_gates, r.tau, r.zeta, r.n_samples, r.mean_var_shot, r.stderr_var_shot]
            for r in result.rows
        ],
    )


def _write_fig3_csv(result: Fig3Result, path: Path) -> None:
    _write_csv(
        path,
        FIG3_COLUMNS,
        [[r.eps, r.finest_level, r.std_gates, r.mlmc_gates, r.speedup] for r in result.rows],
    )


def _write_fits_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_csv_columns(path: Path) -> dict[str, list[str]]:
    """Load a pipeline CSV into named string columns (loaders do their own parsing)."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        columns: dict[str, list[str]] = {name: [] for name in reader.fieldnames or []}
        for row in reader:
            for name, value in row.items():
                columns[name].append(value)
    return columns
