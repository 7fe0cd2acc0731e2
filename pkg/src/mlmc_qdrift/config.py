"""Config-file loading, experiment-input construction, and run manifests.

A config is one JSON document holding the Hamiltonian spec, evolution time,
base depth, level ranges, sample schedules, and the eps grid; command-line
flags override file values.  The effective (merged) config is hashed into the
run manifest so a run can be reproduced from the manifest alone.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

from .experiments import ExperimentConfig
from .hamiltonian import Hamiltonian, HamiltonianTerm, Observable, build_heisenberg_xyz
from .pauli import PauliString


class ConfigError(Exception):
    """Malformed or missing configuration input."""


DEFAULT_CONFIG: dict = {
    "hamiltonian": {"builder": "heisenberg_xyz", "n": 6, "Jx": 1.0, "Jy": 0.5, "Jz": 0.8},
    "t": 1.0,
    "n0": 128,
    "observable": None,
    "seed": 0,
    "fig1_max_level": 7,
    "fig2_levels": [1, 5],
    "fig2_samples": None,
    "cp_fit_levels": [3, 7],
    "eps_grid": {"min": 1e-5, "max": 1e-1, "points": 60},
    "pilot": 100,
    "zeta_scale": 1.0,
    "initial_index": 0,
}


def load_config(path: str | Path | None) -> dict:
    """Read a JSON config file; missing path or bad JSON raises ConfigError."""
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {p} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {p} must hold a JSON object")
    unknown = set(raw) - set(DEFAULT_CONFIG)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return raw


def hamiltonian_from_config(spec) -> Hamiltonian:
    """Build from a named-builder shortcut or an explicit (coeff, pauli) list."""
    if not isinstance(spec, dict):
        raise ConfigError("hamiltonian spec must be an object")
    if "builder" in spec:
        if spec["builder"] != "heisenberg_xyz":
            raise ConfigError(f"unknown hamiltonian builder: {spec['builder']}")
        try:
            return build_heisenberg_xyz(int(spec["n"]), float(spec["Jx"]), float(spec["Jy"]), float(spec["Jz"]))
        except KeyError as exc:
            raise ConfigError(f"heisenberg_xyz builder needs key {exc}") from exc
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if "terms" in spec:
        try:
            terms = [HamiltonianTerm(float(coeff), PauliString(word)) for coeff, word in spec["terms"]]
            return Hamiltonian(terms)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad hamiltonian term list: {exc}") from exc
    raise ConfigError("hamiltonian spec needs either 'builder' or 'terms'")


def experiment_config(raw: dict, overrides: dict | None = None) -> ExperimentConfig:
    """Merge defaults, file values, and flag overrides into experiment inputs."""
    effective = dict(DEFAULT_CONFIG)
    effective.update(raw)
    for key, value in (overrides or {}).items():
        if value is not None:
            if key not in DEFAULT_CONFIG:
                raise ConfigError(f"unknown override: {key}")
            effective[key] = value

    hamiltonian = hamiltonian_from_config(effective["hamiltonian"])
    obs_word = effective["observable"]
    if obs_word is None:
        obs_word = "Z" + "I" * (hamiltonian.num_qubits - 1)
    try:
        observable = Observable(pauli=PauliString(obs_word))
    except ValueError as exc:
        raise ConfigError(f"bad observable: {exc}") from exc
    if observable.pauli.num_qubits != hamiltonian.num_qubits:
        raise ConfigError("observable and hamiltonian qubit counts differ")

    grid = dict(DEFAULT_CONFIG["eps_grid"])
    grid.update(effective["eps_grid"] or {})
    try:
        return ExperimentConfig(
            hamiltonian=hamiltonian,
            observable=observable,
            t=float(effective["t"]),
            n0=int(effective["n0"]),
            fig1_max_level=int(effective["fig1_max_level"]),
            fig2_level_range=tuple(int(x) for x in effective["fig2_levels"]),
            fig2_samples=effective["fig2_samples"],
            zeta_scale=float(effective["zeta_scale"]),
            cp_fit_range=tuple(int(x) for x in effective["cp_fit_levels"]),
            eps_min=float(grid["min"]),
            eps_max=float(grid["max"]),
            eps_points=int(grid["points"]),
            pilot_samples=int(effective["pilot"]),
            seed=int(effective["seed"]),
            initial_index=int(effective["initial_index"]),
            raw=effective,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config value: {exc}") from exc


def config_hash(effective: dict) -> str:
    """SHA-256 of the canonical JSON form of the effective config."""
    canonical = json.dumps(effective, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


@dataclass
class RunManifest:
    """Provenance record written once per run; the CSVs it points to are
    reproducible from (command, config, seed) alone."""

    command: str
    config_path: str | None
    seed: int
    config_sha256: str
    out_dir: str
    duration_seconds: float

    def write(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")


def update_summary(out_root: Path, fields: dict) -> None:
    """Merge fitted constants and config echo into out/summary.json."""
    path = Path(out_root) / "summary.json"
    existing: dict = {}
    if path.is_file():
        try:
            existing = json.loads(path.read_text())
        except json.JSONDecodeError:
            existing = {}
    existing.update(fields)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(existing, fh, indent=2, sort_keys=True)
        fh.write("\n")
