"""Command-line entry point.

Subcommands map one-to-one onto the experiment pipelines plus direct
estimator runs:

* ``variance-decay``  exact-channel Bernoulli statistics per level (fig1)
* ``shot-noise``      sampled augmented-estimator shot variance (fig2)
* ``gate-cost``       total-gate curves, crossover, speedups (fig3)
* ``mlmc-run``        pilot + allocation + multilevel estimate for one eps
* ``qdrift-run``      standard single-level estimate for one eps

Outputs land in ``<out>/{fig1,fig2,fig3,mlmc_run,qdrift_run}/`` with a
manifest per run and merged fitted constants in ``<out>/summary.json``.
Exit codes: 0 success, 1 runtime failure, 2 malformed config/usage.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .config import ConfigError, RunManifest, config_hash, experiment_config, load_config, update_summary
from .experiments import (
    ExperimentConfig,
    fig1_variance_mean_decay,
    fig2_shot_noise,
    fig3_gate_complexity,
    read_csv_columns,
)
from .mlmc import (
    LevelHierarchy,
    choose_finest_level,
    optimal_allocation,
    pilot_variances,
    run_mlmc,
)
from .qdrift import run_trajectory, sample_sequence, std_cost
from .hamiltonian import expectation
from .rng import PURPOSE_MAIN, RngStream, resolve_threads

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mlmc-qdrift",
        description="Randomized Hamiltonian-simulation estimators with multilevel variance reduction.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--config", type=str, default=None, help="JSON config file")
        sp.add_argument("--seed", type=int, default=None, help="seed overriding the config value")
        sp.add_argument("--out", type=str, default="out", help="output directory root")
        sp.add_argument("--threads", type=int, default=None, help="worker threads (0 = auto)")
        sp.add_argument("--n0", type=int, default=None, help="base gate count overriding the config")

    sp = sub.add_parser("variance-decay", help="exact-channel variance/mean decay per level")
    add_common(sp)
    sp.add_argument("--levels", type=str, default=None, help="finest level (default 7)")

    sp = sub.add_parser("shot-noise", help="sampled shot-noise decay of the augmented estimator")
    add_common(sp)
    sp.add_argument("--levels", type=str, default=None, help="level range LO:HI (default 1:5)")

    sp = sub.add_parser("gate-cost", help="gate-complexity curves, crossover, and speedups")
    add_common(sp)
    sp.add_argument("--eps", type=str, default=None, help="eps grid MIN:MAX:POINTS")

    sp = sub.add_parser("mlmc-run", help="multilevel estimate at one target precision")
    add_common(sp)
    sp.add_argument("--eps", type=float, required=True, help="target RMSE")
    sp.add_argument("--pilot", type=int, default=None, help="pilot samples per level")

    sp = sub.add_parser("qdrift-run", help="standard single-level estimate at one target precision")
    add_common(sp)
    sp.add_argument("--eps", type=float, default=None, help="target RMSE")
    sp.add_argument("--pilot", type=int, default=None, help="pilot samples for the variance")
    sp.add_argument("--gates", type=int, default=None, help="fix the circuit depth directly")
    sp.add_argument("--samples", type=int, default=None, help="fix the sample count directly")
    return parser


def _config_from_args(args) -> ExperimentConfig:
    raw = load_config(args.config)
    overrides: dict = {"seed": args.seed, "n0": args.n0}
    if getattr(args, "pilot", None) is not None:
        overrides["pilot"] = args.pilot
    if args.command == "variance-decay" and args.levels is not None:
        overrides["fig1_max_level"] = int(args.levels)
    if args.command == "shot-noise" and args.levels is not None:
        lo, _, hi = args.levels.partition(":")
        overrides["fig2_levels"] = [int(lo), int(hi or lo)]
    if args.command == "gate-cost" and args.eps is not None:
        try:
            lo, mid, points = args.eps.split(":")
        except ValueError as exc:
            raise ConfigError("--eps for gate-cost takes MIN:MAX:POINTS") from exc
        overrides["eps_grid"] = {"min": float(lo), "max": float(mid), "points": int(points)}
    cfg = experiment_config(raw, overrides)
    cfg.threads = resolve_threads(args.threads)
    return cfg


def _finish(args, cfg: ExperimentConfig, subdir: str, started: float) -> None:
    out_root = Path(args.out)
    hashed = {k: v for k, v in cfg.raw.items()}
    manifest = RunManifest(
        command=args.command,
        config_path=args.config,
        seed=cfg.seed,
        config_sha256=config_hash(hashed),
        out_dir=str(out_root),
        duration_seconds=time.time() - started,
    )
    manifest.write(out_root / subdir / "manifest.json")


def _cmd_variance_decay(args) -> int:
    cfg = _config_from_args(args)
    started = time.time()
    out_dir = Path(args.out) / "fig1"
    result = fig1_variance_mean_decay(cfg, out_dir)
    update_summary(
        Path(args.out),
        {
            "alpha_hat": result.alpha_hat,
            "beta_hat": result.beta_hat,
            "p_inf": result.p_inf,
            "seed": cfg.seed,
            "config": cfg.raw,
            "coupling_note": (
                "per-level probabilities come from the averaged channel; the "
                "index-sharing coarse marginal is distributed identically"
            ),
        },
    )
    _finish(args, cfg, "fig1", started)
    print(f"wrote {out_dir / 'fig1.csv'}  alpha_hat={result.alpha_hat:.4f}  beta_hat={result.beta_hat:.4f}")
    return EXIT_OK


def _cmd_shot_noise(args) -> int:
    cfg = _config_from_args(args)
    started = time.time()
    out_dir = Path(args.out) / "fig2"
    result = fig2_shot_noise(cfg, out_dir)
    update_summary(
        Path(args.out),
        {"beta_shot_hat": result.beta_shot_hat, "seed": cfg.seed, "config": cfg.raw},
    )
    _finish(args, cfg, "fig2", started)
    print(f"wrote {out_dir / 'fig2.csv'}  beta_shot_hat={result.beta_shot_hat:.4f}")
    return EXIT_OK


def _cmd_gate_cost(args) -> int:
    cfg = _config_from_args(args)
    started = time.time()
    out_dir = Path(args.out) / "fig3"
    p_levels = _load_fig1_probabilities(Path(args.out) / "fig1" / "fig1.csv", cfg)
    result = fig3_gate_complexity(cfg, p_levels=p_levels, out_dir=out_dir)
    update_summary(
        Path(args.out),
        {
            "c_p": result.c_p,
            "sigma2": result.sigma2_inf,
            "eps_star": result.eps_star,
            "speedups": {f"{eps:.0e}": s for eps, s in result.speedups.items()},
            "seed": cfg.seed,
            "config": cfg.raw,
        },
    )
    _finish(args, cfg, "fig3", started)
    eps_star = "none" if result.eps_star is None else f"{result.eps_star:.4g}"
    print(f"wrote {out_dir / 'fig3.csv'}  c_p={result.c_p:.3f}  eps_star={eps_star}")
    return EXIT_OK


def _load_fig1_probabilities(path: Path, cfg: ExperimentConfig) -> list[float] | None:
    """Reuse channel probabilities from an existing fig1.csv when compatible."""
    if not path.is_file():
        return None
    columns = read_csv_columns(path)
    if "p" not in columns or "N" not in columns:
        return None
    if len(columns["p"]) < cfg.cp_fit_range[1] + 1:
        return None
    if int(columns["N"][0]) != cfg.n0:
        return None
    return [float(x) for x in columns["p"]]


def _cmd_mlmc_run(args) -> int:
    cfg = _config_from_args(args)
    started = time.time()
    out_dir = Path(args.out) / "mlmc_run"
    eps = float(args.eps)
    bias_constant = _bias_constant(cfg, Path(args.out))
    finest = choose_finest_level(eps, bias_constant, cfg.n0)
    hierarchy = cfg.hierarchy(finest)
    rng = RngStream(cfg.seed)
    variances = pilot_variances(
        cfg.hamiltonian, cfg.observable, cfg.psi0(), hierarchy, cfg.pilot_samples, rng, cfg.threads
    )
    costs = [hierarchy.cost_per_sample(level) for level in range(finest + 1)]
    plan = optimal_allocation(variances, costs, eps)
    estimate, stats = run_mlmc(
        cfg.hamiltonian, cfg.observable, cfg.psi0(), hierarchy, plan, rng, cfg.threads
    )
    total_gates = sum(s.n_samples * s.cost_per_sample for s in stats)
    residual_var = sum(s.variance / s.n_samples for s in stats)

    print(f"estimate: {estimate:.6f}")
    print(f"eps target: {eps:g}   bias constant: {bias_constant:.4g}   finest level: {finest}")
    print("level   N_ell   n_ell        mean_Y         var_Y   cost/sample")
    for s in stats:
        print(
            f"{s.level:5d} {hierarchy.n_gates(s.level):7d} {s.n_samples:7d} "
            f"{s.mean:13.6f} {s.variance:13.6e} {s.cost_per_sample:12d}"
        )
    print(f"total gates: {total_gates}")
    print(f"posterior variance sum: {residual_var:.3e} (budget {eps**2 / 2:.3e})")

    _write_levels_csv(out_dir / "levels.csv", hierarchy, stats)
    _finish(args, cfg, "mlmc_run", started)
    return EXIT_OK


def _bias_constant(cfg: ExperimentConfig, out_root: Path) -> float:
    """Fitted observable constant 2*c_p when a summary provides it, else 2*(lambda*t)^2."""
    summary = out_root / "summary.json"
    if summary.is_file():
        try:
            data = json.loads(summary.read_text())
            if isinstance(data.get("c_p"), (int, float)):
                return 2.0 * float(data["c_p"])
        except json.JSONDecodeError:
            pass
    return 2.0 * (cfg.hamiltonian.one_norm * cfg.t) ** 2


def _write_levels_csv(path: Path, hierarchy: LevelHierarchy, stats) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    cumulative = 0
    lines = ["level,N_ell,n_ell,mean_Y,var_Y,cost_per_sample,cumulative_gates"]
    for s in stats:
        cumulative += s.n_samples * s.cost_per_sample
        lines.append(
            f"{s.level},{hierarchy.n_gates(s.level)},{s.n_samples},"
            f"{s.mean!r},{s.variance!r},{s.cost_per_sample},{cumulative}"
        )
    path.write_text("\n".join(lines) + "\n")


def _cmd_qdrift_run(args) -> int:
    cfg = _config_from_args(args)
    started = time.time()
    out_dir = Path(args.out) / "qdrift_run"
    rng = RngStream(cfg.seed)
    lam_t = cfg.hamiltonian.one_norm * cfg.t

    if args.gates is not None and args.samples is not None:
        n_depth, n_samples = args.gates, args.samples
    else:
        if args.eps is None:
            raise ConfigError("qdrift-run needs --eps, or both --gates and --samples")
        bias_constant = 2.0 * lam_t**2
        pilot_hier = LevelHierarchy.for_problem(cfg.hamiltonian, cfg.t, cfg.n0, 0)
        sigma2 = pilot_variances(
            cfg.hamiltonian, cfg.observable, cfg.psi0(), pilot_hier, cfg.pilot_samples, rng, cfg.threads
        )[0]
        n_depth, n_samples, _ = std_cost(args.eps, bias_constant, sigma2)

    tau = lam_t / n_depth
    psi0 = cfg.psi0()

    values = []
    for i in range(n_samples):
        stream = rng.substream(PURPOSE_MAIN, 0, i)
        seq = sample_sequence(stream, cfg.hamiltonian, n_depth)
        values.append(expectation(cfg.observable, run_trajectory(cfg.hamiltonian, seq, tau, psi0)))
    estimate = float(np.mean(values))

    print(f"estimate: {estimate:.6f}")
    print(f"depth: {n_depth}   samples: {n_samples}   total gates: {n_depth * n_samples}")
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "result.json").write_text(
        json.dumps(
            {
                "estimate": estimate,
                "depth": n_depth,
                "samples": n_samples,
                "total_gates": n_depth * n_samples,
                "seed": cfg.seed,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )
    _finish(args, cfg, "qdrift_run", started)
    return EXIT_OK


_COMMANDS = {
    "variance-decay": _cmd_variance_decay,
    "shot-noise": _cmd_shot_noise,
    "gate-cost": _cmd_gate_cost,
    "mlmc-run": _cmd_mlmc_run,
    "qdrift-run": _cmd_qdrift_run,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # runtime failures map to exit 1 with a diagnostic
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
