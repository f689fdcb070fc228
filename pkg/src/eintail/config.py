"""Experiment configuration: JSON with a versioned schema.

Configs are validated against the schema before any computation.  The
`--seed` CLI flag overrides the evaluation stream only; bound statistics
always come from a pilot stream keyed by `pilot_seed` (defaulting to the
config's `master_seed`), so reruns with a fresh seed move the empirical
tails but not the bound values.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from .quadform import BlockMatrix
from .random_ensembles import EnsembleSpec
from .tensor_core import TensorShape, fold, read_fixture
from .verify import ExperimentSettings

__all__ = ["ConfigError", "load_config", "build_settings", "build_decouple_settings",
           "CONFIG_SCHEMA", "SCHEMA_VERSION"]

SCHEMA_VERSION = 1

_POSITIVE_NUMBER = {"type": "number", "exclusiveMinimum": 0}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "mode", "master_seed", "trials", "theta_grid", "ensemble", "k"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "mode": {"enum": ["hanson-wright", "chernoff", "decouple"]},
        "master_seed": {"type": "integer", "minimum": 0},
        "pilot_seed": {"type": ["integer", "null"], "minimum": 0},
        "trials": {"type": "integer", "minimum": 100},
        "pilot_trials": {"type": "integer", "minimum": 100},
        "threads": {"type": "integer", "minimum": 1},
        "k": {"type": "integer", "minimum": 1},
        "theta_grid": {
            "type": "array", "minItems": 1, "items": _POSITIVE_NUMBER,
        },
        "ensemble": {
            "type": "object",
            "required": ["row_dims", "n", "family"],
            "additionalProperties": False,
            "properties": {
                "row_dims": {"type": "array", "minItems": 1,
                             "items": {"type": "integer", "minimum": 1}},
                "n": {"type": "integer", "minimum": 1},
                "family": {"enum": ["commuting", "generic-hermitian", "scalar"]},
                "eig_low": _POSITIVE_NUMBER,
                "eig_high": _POSITIVE_NUMBER,
                "shared_unitary_seed": {"type": "integer", "minimum": 0},
                "mean_zero": {"type": "boolean"},
            },
        },
        "block_matrix": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["generator", "fixtures"]},
                "eig_low": _POSITIVE_NUMBER,
                "eig_high": _POSITIVE_NUMBER,
                "seed": {"type": "integer", "minimum": 0},
                "paths": {"type": "array",
                          "items": {"type": "array", "items": {"type": "string"}}},
            },
        },
        "polynomial": {"type": "array", "minItems": 2, "items": {"type": "number"}},
        "theta_split": {"enum": ["equal", "proportional"]},
        "chernoff": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "s": {"type": "number", "minimum": 1},
                "g_coeffs": {"type": "array", "minItems": 1,
                             "items": {"type": "number", "minimum": 0}},
                "r": {"type": ["number", "null"], "exclusiveMinimum": 0},
            },
        },
        "constants": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "c_cher": _POSITIVE_NUMBER,
                "d2": _POSITIVE_NUMBER,
                "r_d": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "r_c": {"type": ["number", "null"], "exclusiveMinimum": 0},
            },
        },
        "t_search": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "t_min": _POSITIVE_NUMBER,
                "t_max": {"type": ["number", "null"], "exclusiveMinimum": 0},
            },
        },
        "assumption_samples": {"type": "integer", "minimum": 1},
        "domination_t_grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "t_min": _POSITIVE_NUMBER,
                "t_max": _POSITIVE_NUMBER,
                "points": {"type": "integer", "minimum": 2},
            },
        },
        "m_order": {"enum": [2, 3]},
        "kernel": {"enum": ["product", "pair-block"]},
        "exact": {"type": "boolean"},
        "d_cap": _POSITIVE_NUMBER,
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "json": {"type": "string"},
                "csv": {"type": "string"},
            },
        },
    },
}


class ConfigError(ValueError):
    """Config file is missing, malformed, or fails schema validation."""


def load_config(path) -> dict:
    """Parse and schema-validate a config file."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{path}: schema violation at {where}: {exc.message}") from exc
    return raw


def build_ensemble(d: dict) -> EnsembleSpec:
    dims = tuple(d["row_dims"])
    try:
        return EnsembleSpec(
            base_shape=TensorShape(dims, dims),
            n=d["n"],
            family=d["family"],
            eig_low=d.get("eig_low", 0.2),
            eig_high=d.get("eig_high", 1.0),
            shared_unitary_seed=d.get("shared_unitary_seed", 7),
            mean_zero=d.get("mean_zero", False),
        )
    except ValueError as exc:
        raise ConfigError(f"ensemble: {exc}") from exc


def build_block_matrix(d: Optional[dict], spec: EnsembleSpec, config_dir: Path) -> BlockMatrix:
    """Fixed block grid: from fixture files or the seeded commuting generator.

    Generated blocks share the ensemble's unitary eigenbasis, which is what
    lets commuting families satisfy the commutation hypothesis.
    """
    from .random_ensembles import shared_unitary

    if d is None:
        raise ConfigError("hanson-wright mode needs a block_matrix section")
    n = spec.n
    if d["kind"] == "fixtures":
        paths = d.get("paths")
        if paths is None or len(paths) != n or any(len(row) != n for row in paths):
            raise ConfigError(f"block_matrix.paths must be an {n} x {n} grid")
        grid = []
        for row in paths:
            blocks = []
            for p in row:
                fp = (config_dir / p) if not Path(p).is_absolute() else Path(p)
                try:
                    blocks.append(read_fixture(fp))
                except (OSError, ValueError) as exc:
                    raise ConfigError(f"block fixture {p}: {exc}") from exc
            grid.append(tuple(blocks))
        try:
            return BlockMatrix(tuple(grid))
        except ValueError as exc:
            raise ConfigError(f"block_matrix fixtures: {exc}") from exc
    # generator
    lo = d.get("eig_low", 0.4)
    hi = d.get("eig_high", 1.0)
    if not lo <= hi:
        raise ConfigError("block_matrix generator needs eig_low <= eig_high")
    seed = d.get("seed", 11)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(13,)))
    u = shared_unitary(spec.size, spec.shared_unitary_seed)
    grid = []
    for _ in range(n):
        row = []
        for _ in range(n):
            lam = rng.uniform(lo, hi, size=spec.size)
            row.append(fold((u * lam) @ u.conj().T, spec.base_shape))
        grid.append(tuple(row))
    return BlockMatrix(tuple(grid))


def _domination_grid(d: Optional[dict]) -> tuple[float, ...]:
    d = d or {}
    return tuple(
        np.geomspace(d.get("t_min", 1e-3), d.get("t_max", 10.0), d.get("points", 8))
    )


def build_settings(cfg: dict, config_dir: Path,
                   seed_override: Optional[int] = None,
                   trials_override: Optional[int] = None,
                   threads: Optional[int] = None,
                   evaluate_tails: bool = True) -> ExperimentSettings:
    """Resolve a hanson-wright/chernoff config into experiment settings."""
    mode = cfg["mode"]
    if mode not in ("hanson-wright", "chernoff"):
        raise ConfigError(f"build_settings cannot handle mode {mode!r}")
    spec = build_ensemble(cfg["ensemble"])
    master = cfg["master_seed"]
    pilot_seed = cfg.get("pilot_seed")
    constants = cfg.get("constants", {})
    t_search = cfg.get("t_search", {})
    chern = cfg.get("chernoff", {})
    block = None
    a = tuple(cfg.get("polynomial", [0.0, 1.0]))
    if mode == "hanson-wright":
        block = build_block_matrix(cfg.get("block_matrix"), spec, config_dir)
        if len(a) < 2:
            raise ConfigError("polynomial must have degree >= 1")
    try:
        return ExperimentSettings(
            mode=mode,
            ensemble=spec,
            block_matrix=block,
            a=a,
            split_policy=cfg.get("theta_split", "equal"),
            g_coeffs=tuple(chern.get("g_coeffs", [0.0, 1.0])),
            s=chern.get("s", 1.0),
            r_chernoff=chern.get("r"),
            k=cfg["k"],
            theta_grid=tuple(float(t) for t in cfg["theta_grid"]),
            trials=trials_override if trials_override is not None else cfg["trials"],
            pilot_trials=cfg.get("pilot_trials", 2000),
            eval_seed=seed_override if seed_override is not None else master,
            pilot_seed=pilot_seed if pilot_seed is not None else master,
            c_cher=constants.get("c_cher", 1.0),
            d2=constants.get("d2", 8.0),
            r_d=constants.get("r_d"),
            r_c=constants.get("r_c"),
            assumption_samples=cfg.get("assumption_samples", 200),
            domination_t_grid=_domination_grid(cfg.get("domination_t_grid")),
            t_min=t_search.get("t_min", 1e-6),
            t_max=t_search.get("t_max"),
            threads=threads if threads is not None else cfg.get("threads", 1),
            evaluate_tails=evaluate_tails,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_decouple_settings(cfg: dict, config_dir: Path,
                            seed_override: Optional[int] = None,
                            trials_override: Optional[int] = None,
                            threads: Optional[int] = None) -> dict:
    """Resolve a decouple-mode config into estimate_decoupling arguments."""
    if cfg["mode"] != "decouple":
        raise ConfigError(f"expected mode 'decouple', got {cfg['mode']!r}")
    spec = build_ensemble(cfg["ensemble"])
    m_order = cfg.get("m_order", 2)
    kernel_name = cfg.get("kernel", "product")
    if kernel_name == "pair-block":
        if m_order != 2:
            raise ConfigError("pair-block kernel requires m_order = 2")
        abar = build_block_matrix(cfg.get("block_matrix"), spec, config_dir)

        def kernel(idx, tensors):
            from .tensor_core import einstein_product

            i, j = idx
            return einstein_product(
                einstein_product(tensors[0], abar.blocks[i][j]), tensors[1]
            )
    else:
        def kernel(idx, tensors):
            from .tensor_core import einstein_product

            acc = tensors[0]
            for t in tensors[1:]:
                acc = einstein_product(acc, t)
            return acc

    master = cfg["master_seed"]
    return {
        "spec": spec,
        "kernel": kernel,
        "m_order": m_order,
        "theta_grid": [float(t) for t in cfg["theta_grid"]],
        "trials": trials_override if trials_override is not None else cfg["trials"],
        "seed": seed_override if seed_override is not None else master,
        "k": cfg["k"],
        "exact": cfg.get("exact", False),
        "d_cap": cfg.get("d_cap", 64.0),
        "threads": threads if threads is not None else cfg.get("threads", 1),
    }
