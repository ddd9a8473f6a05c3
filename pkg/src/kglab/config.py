"""Line-oriented run configuration.

The format is deliberately tiny so runs are reproducible from a short
text file: ``key = value`` lines, ``[section]`` headers, ``#`` comments.
Top-level keys (before any section) select the experiment, seed, output
directory and strictness; sections hold module parameters.  Lists are
comma separated.  Duplicate keys are always rejected; unknown keys are
rejected in strict mode and recorded otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Any

EXPERIMENTS = (
    "cd-table",
    "g-table",
    "resonant-identity",
    "ground-state",
    "gn-sweep",
    "conservation",
    "propagator-limit",
    "nls-limit",
    "error-ledger",
    "dichotomy",
    "dispersion-gap",
    "partition-check",
)


class ConfigError(ValueError):
    """Parse or validation failure; message carries line numbers."""


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_float_list(text: str) -> tuple:
    return tuple(float(p.strip()) for p in text.split(",") if p.strip())


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _check_theta(v: float) -> None:
    if not 0 < v <= 1.0 / 16.0:
        raise ValueError("theta must lie in (0, 1/16] (limit-run precondition)")


def _check_dimension(v: int) -> None:
    if v not in (1, 2, 3):
        raise ValueError("dimension must be 1, 2 or 3")


def _check_points(v: int) -> None:
    if v < 8 or v & (v - 1):
        raise ValueError("points must be a power of two >= 8")


def _check_mu(v: int) -> None:
    if v not in (-1, 0, 1):
        raise ValueError("mu must be -1, 0 or +1")


def _check_shape(v: str) -> None:
    if v not in ("q", "gaussian"):
        raise ValueError("shape must be 'q' or 'gaussian'")


def _check_positive(v) -> None:
    if not v > 0:
        raise ValueError("value must be positive")


# section -> key -> (converter, default, validator-or-None)
SCHEMA: dict[str, dict[str, tuple]] = {
    "": {
        "experiment": (str, None, None),
        "seed": (int, 1, None),
        "strict": (_parse_bool, False, None),
        "out_dir": (str, "", None),
        "jobs": (int, 1, _check_positive),
    },
    "grid": {
        "dimension": (int, 1, _check_dimension),
        "points": (int, 512, _check_points),
        "half_width": (float, 30.0, _check_positive),
    },
    "stepper": {
        "dt_wave": (float, 0.01, _check_positive),
        "dt_nls": (float, 1e-3, _check_positive),
        "dealias": (_parse_bool, True, None),
        "blowup_threshold": (float, 10.0, _check_positive),
    },
    "limit": {
        "theta": (float, 1.0 / 16.0, _check_theta),
        "lambda_list": (_parse_float_list, (4.0, 8.0, 16.0), None),
        "t_mid": (float, 1.0, _check_positive),
        "mu": (int, 1, _check_mu),
        "datum_width": (float, 5.0, _check_positive),
        "datum_mass": (float, 0.0, None),  # 0 = leave unnormalized
        "snapshot_spacing": (float, 0.05, _check_positive),
        "duhamel_spacing": (float, 0.1, _check_positive),
    },
    "scan": {
        "amplitudes": (_parse_float_list, (0.5, 0.9, 1.0, 1.05, 1.2), None),
        "shape": (str, "q", _check_shape),
        "t_final": (float, 20.0, _check_positive),
        "dt": (float, 2e-3, _check_positive),
    },
    "table": {
        "d_max": (int, 6, _check_positive),
        "k_max": (int, 64, _check_positive),
        "dims": (_parse_float_list, (1.0, 2.0, 3.0), None),
        "samples": (int, 20, _check_positive),
    },
}


@dataclass
class RunConfig:
    """Validated configuration; ``values[section][key]`` is fully typed."""

    experiment: str
    values: dict = dc_field(default_factory=dict)
    unknown_keys: tuple = ()

    def __getitem__(self, section: str) -> dict:
        return self.values[section]

    @property
    def seed(self) -> int:
        return self.values[""]["seed"]

    @property
    def strict(self) -> bool:
        return self.values[""]["strict"]

    def render(self) -> str:
        """Canonical text form; parse(render()) reproduces the config."""
        lines = []
        top = self.values.get("", {})
        for key in SCHEMA[""]:
            if key in top:
                lines.append(f"{key} = {_fmt(top[key])}")
        for section in sorted(k for k in self.values if k):
            lines.append(f"[{section}]")
            for key in SCHEMA[section]:
                if key in self.values[section]:
                    lines.append(f"{key} = {_fmt(self.values[section][key])}")
        return "\n".join(lines) + "\n"


def default_config(experiment: str) -> RunConfig:
    values = {sec: {k: spec[1] for k, spec in keys.items() if spec[1] is not None} for sec, keys in SCHEMA.items()}
    values[""]["experiment"] = experiment
    return RunConfig(experiment, values)


def parse_config(text: str, strict: bool | None = None) -> RunConfig:
    """Parse and validate; raises ConfigError listing every problem with
    its line number."""
    errors: list[str] = []
    unknown: list[str] = []
    section = ""
    seen: dict[tuple, int] = {}
    raw: dict[str, dict[str, Any]] = {"": {}}

    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip()
            if section not in SCHEMA or section == "":
                errors.append(f"line {lineno}: unknown section [{section}]")
                section = None
            elif section not in raw:
                raw[section] = {}
            continue
        if "=" not in stripped:
            errors.append(f"line {lineno}: expected 'key = value', got {stripped!r}")
            continue
        if section is None:
            continue  # inside an unknown section; already reported
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        prev = seen.get((section, key))
        if prev is not None:
            errors.append(
                f"line {lineno}: duplicate key {key!r} in section [{section}] (first set on line {prev})"
            )
            continue
        seen[(section, key)] = lineno
        spec = SCHEMA.get(section, {}).get(key)
        if spec is None:
            unknown.append(f"line {lineno}: unknown key {key!r} in section [{section}]")
            continue
        conv, _, validator = spec
        try:
            typed = conv(value)
            if validator is not None:
                validator(typed)
        except (ValueError, TypeError) as exc:
            errors.append(f"line {lineno}: {key} = {value!r}: {exc}")
            continue
        raw.setdefault(section, {})[key] = typed

    strict_mode = raw[""].get("strict", False) if strict is None else strict
    if strict_mode and unknown:
        errors.extend(unknown)

    experiment = raw[""].get("experiment")
    if experiment is None:
        errors.append("missing top-level 'experiment' key")
    elif experiment not in EXPERIMENTS:
        errors.append(f"unknown experiment {experiment!r}; known: {', '.join(EXPERIMENTS)}")

    if errors:
        raise ConfigError("; ".join(errors))

    values = {sec: {k: spec[1] for k, spec in keys.items() if spec[1] is not None} for sec, keys in SCHEMA.items()}
    for sec, kv in raw.items():
        values.setdefault(sec, {}).update(kv)
    values[""]["experiment"] = experiment
    return RunConfig(experiment, values, tuple(unknown))
