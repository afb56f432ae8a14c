"""Line-based experiment configuration: ``[section]`` headers, ``key = value``.

Unknown sections, unknown keys, duplicate keys, and type errors are all
collected and reported together with their line numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "parse_config",
    "render_config",
    "EXPERIMENTS",
]

_REQUIRED = object()


class ConfigError(ValueError):
    """Invalid configuration; message lists every violation found."""


@dataclass(frozen=True)
class _Param:
    name: str
    kind: str            # int | float | bool | str | int_list | float_list | band_list
    default: Any = _REQUIRED
    choices: tuple[str, ...] | None = None


_SCHEMAS: dict[str, tuple[_Param, ...]] = {
    "projective": (
        _Param("ensemble_size", "int", 10),
        _Param("micro_steps", "int", 10),
        _Param("dt_micro", "float", 1e-3),
        _Param("dt_macro", "float", 0.1),
        _Param("alpha", "float", 0.0),
        _Param("n_steps", "int", 10000),
        _Param("drift", "str", "zero", choices=("zero", "ou")),
        _Param("ou_rate", "float", 1.0),
        _Param("noise_amplitude", "float", 1.0),
        _Param("x0", "float", 0.0),
        _Param("tolerance_fraction", "float", 0.1),
    ),
    "patch": (
        _Param("pde", "str", choices=("heat", "advection", "biharmonic")),
        _Param("coefficient", "float", 1.0),
        _Param("lifting", "str", choices=("central_d2", "upwind_d2", "central_d4")),
        _Param("wind_sign", "int", 1),
        _Param("n_points", "int", 64),
        _Param("h_fraction", "float", 0.2),
        _Param("dt_ratio", "float", 0.0),
        _Param("dt_micro_factor", "float", 1e-3),
        _Param("alpha", "float", 0.0),
        _Param("probe_steps", "int", 400),
        _Param("grids", "int_list", ()),
        _Param("final_time", "float", 0.0),
        _Param("expect_stability", "str", "", choices=("", "stable", "marginal", "unstable")),
        _Param("expect_order", "float", math.nan),
        _Param("order_tolerance", "float", 0.3),
    ),
    "order-detect": (
        _Param("target", "str",
               choices=("heat", "advection", "biharmonic_d4", "biharmonic_d2", "adversarial")),
        _Param("dt_micro", "float", 1e-3),
        _Param("h", "float", 0.1),
        _Param("d_max", "int", 0),
        _Param("n_base", "int", 8),
        _Param("n_perturb", "int", 1024),
        _Param("halfwidth", "float", 1.0),
        _Param("stop_after", "int", 0),
        _Param("budget", "int", 0),
        _Param("expected_order", "int", -1),
    ),
    "kp": (
        _Param("deltas", "float_list"),
        _Param("gamma_bands", "band_list", ()),
        _Param("n_trajectories", "int", 24),
        _Param("n_modes", "int", 256),
        _Param("spectrum", "float", 0.0),
        _Param("x0", "float", 0.0),
        _Param("v0", "float", 1.0),
        _Param("total_time", "float", 0.008),
        _Param("dt_scale", "float", 1e-3),
        _Param("n_samples", "int", 400),
        _Param("fit_lag_lo", "float", 1e-4),
        _Param("fit_lag_hi", "float", 1e-3),
        _Param("n_lags", "int", 10),
        _Param("calibrate", "bool", True),
        _Param("validate_dt", "bool", True),
    ),
}

EXPERIMENTS = tuple(_SCHEMAS)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    parameters: dict[str, Any]
    seed: int = 0
    output: str = ""

    def output_dir(self) -> str:
        return self.output or f"{self.experiment.replace('-', '_')}_out"


def _parse_value(raw: str, kind: str):
    raw = raw.strip()
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind == "bool":
        low = raw.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if kind == "str":
        return raw
    if kind == "int_list":
        return tuple(int(tok) for tok in raw.split(",") if tok.strip()) if raw else ()
    if kind == "float_list":
        return tuple(float(tok) for tok in raw.split(",") if tok.strip()) if raw else ()
    if kind == "band_list":
        bands = []
        for tok in raw.split(","):
            tok = tok.strip()
            if not tok:
                continue
            lo, _, hi = tok.partition(":")
            lo_f, hi_f = float(lo), float(hi)
            if not lo_f < hi_f:
                raise ValueError(f"band {tok!r} needs lo < hi")
            bands.append((lo_f, hi_f))
        return tuple(bands)
    raise ValueError(f"unknown kind {kind!r}")  # pragma: no cover


def _render_value(value, kind: str) -> str:
    if kind == "bool":
        return "true" if value else "false"
    if kind in ("int_list", "float_list"):
        return ", ".join(repr(v) if kind == "float_list" else str(v) for v in value)
    if kind == "band_list":
        return ", ".join(f"{repr(lo)}:{repr(hi)}" for lo, hi in value)
    if kind == "float":
        return repr(float(value))
    return str(value)


def parse_config(text: str) -> ExperimentConfig:
    """Parse a config document; collect all violations before raising."""
    errors: list[str] = []
    section = None
    seen: dict[tuple[str, str], int] = {}
    experiment_entries: dict[str, tuple[int, str]] = {}
    parameter_entries: dict[str, tuple[int, str]] = {}

    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip()
            if section not in ("experiment", "parameters"):
                errors.append(f"line {lineno}: unknown section [{section}]")
                section = None
            continue
        if "=" not in stripped:
            errors.append(f"line {lineno}: expected 'key = value', got {stripped!r}")
            continue
        if section is None:
            errors.append(f"line {lineno}: key outside of a known section")
            continue
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if (section, key) in seen:
            errors.append(
                f"line {lineno}: duplicate key {key!r} (first seen on line {seen[(section, key)]})"
            )
            continue
        seen[(section, key)] = lineno
        if section == "experiment":
            experiment_entries[key] = (lineno, raw.strip())
        else:
            parameter_entries[key] = (lineno, raw.strip())

    name = None
    seed = 0
    output = ""
    for key, (lineno, raw) in experiment_entries.items():
        if key == "name":
            name = raw
        elif key == "seed":
            try:
                seed = int(raw)
                if not 0 <= seed < 2**64:
                    raise ValueError
            except ValueError:
                errors.append(f"line {lineno}: seed must be an unsigned 64-bit integer")
        elif key == "output":
            output = raw
        else:
            errors.append(f"line {lineno}: unknown key {key!r} in [experiment]")

    if name is None:
        errors.append("missing required key 'name' in [experiment]")
        raise ConfigError("; ".join(errors))
    if name not in _SCHEMAS:
        errors.append(f"unknown experiment {name!r}; expected one of {', '.join(EXPERIMENTS)}")
        raise ConfigError("; ".join(errors))

    schema = {p.name: p for p in _SCHEMAS[name]}
    parameters: dict[str, Any] = {}
    for key, (lineno, raw) in parameter_entries.items():
        param = schema.get(key)
        if param is None:
            errors.append(f"line {lineno}: unknown key {key!r} for experiment {name!r}")
            continue
        try:
            value = _parse_value(raw, param.kind)
        except ValueError as err:
            errors.append(f"line {lineno}: bad value for {key!r}: {err}")
            continue
        if param.choices is not None and value not in param.choices:
            errors.append(
                f"line {lineno}: {key!r} must be one of {', '.join(map(repr, param.choices))}"
            )
            continue
        parameters[key] = value

    for param in _SCHEMAS[name]:
        if param.name not in parameters:
            if param.default is _REQUIRED:
                errors.append(f"missing required key {param.name!r} in [parameters]")
            else:
                parameters[param.name] = param.default

    if errors:
        raise ConfigError("; ".join(errors))
    return ExperimentConfig(experiment=name, parameters=parameters, seed=seed, output=output)


def render_config(config: ExperimentConfig) -> str:
    """Effective configuration (defaults filled in), reparseable."""
    lines = [
        "[experiment]",
        f"name = {config.experiment}",
        f"seed = {config.seed}",
        f"output = {config.output}",
        "",
        "[parameters]",
    ]
    for param in _SCHEMAS[config.experiment]:
        lines.append(f"{param.name} = {_render_value(config.parameters[param.name], param.kind)}")
    return "\n".join(lines) + "\n"
