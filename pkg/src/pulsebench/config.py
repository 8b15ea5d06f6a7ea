"""Benchmark run configuration: INI schema, defaults, validation, hashing.

The default configuration reproduces the production device and truncation
settings, so every benchmark runs end-to-end from an empty file.  Parsing
is strict: unknown sections or keys are rejected, values are type-checked,
and the canonical content hash covers every effective setting so output
metadata pins exactly what was run.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .device import DeviceParams, QubitParams, TruncationConfig

__all__ = [
    "ConfigError",
    "RunConfig",
    "SweepSettings",
    "TruncationStudySettings",
    "RxSettings",
    "CzSettings",
    "LeakageSettings",
    "RuntimeSettings",
    "OutputSettings",
    "default_config",
    "load_config",
    "parse_config",
    "config_hash",
]


class ConfigError(ValueError):
    """Invalid configuration file or option value."""


@dataclass(frozen=True)
class SweepSettings:
    flux_min: float = 0.0
    flux_max: float = 0.45
    flux_points: int = 101
    fit_order: int = 4

    def __post_init__(self) -> None:
        if not self.flux_min < self.flux_max:
            raise ConfigError("sweep: flux_min must be below flux_max")
        if self.flux_points < 2:
            raise ConfigError("sweep: flux_points must be at least 2")
        if self.fit_order < 1:
            raise ConfigError("sweep: fit_order must be at least 1")


@dataclass(frozen=True)
class TruncationStudySettings:
    """Convergence-study axes: swept values plus the resolved reference."""

    reference_n_q: int = 31
    reference_n_eq: int = 11
    reference_n_ec: int = 8
    sweep_n_q: tuple[int, ...] = (11, 15, 19, 23)
    sweep_n_eq: tuple[int, ...] = (3, 5, 7, 9)
    sweep_n_ec: tuple[int, ...] = (2, 3, 4, 6)
    sweep_n_duff: tuple[int, ...] = (2, 3, 4, 6)
    convergence_flux_points: int = 7

    def __post_init__(self) -> None:
        if self.convergence_flux_points < 2:
            raise ConfigError("truncation: convergence_flux_points must be >= 2")
        for axis, values, reference in (
            ("n_q", self.sweep_n_q, self.reference_n_q),
            ("n_eq", self.sweep_n_eq, self.reference_n_eq),
            ("n_ec", self.sweep_n_ec, self.reference_n_ec),
        ):
            if not values:
                raise ConfigError(f"truncation: sweep_{axis} must not be empty")
            if max(values) >= reference:
                raise ConfigError(
                    f"truncation: reference_{axis} must exceed every swept {axis} value"
                )
        if not self.sweep_n_duff:
            raise ConfigError("truncation: sweep_n_duff must not be empty")


@dataclass(frozen=True)
class RxSettings:
    amplitude: float = 0.02
    ramp: float = 2.0
    flat: float = 23.0
    carrier_freq: float | None = None  # None resolves to the calibrated splitting
    theta: float = 0.0
    target: int = 0
    dt: float = 0.002
    drive_frame: str = "envelope"
    phi_idle: float = 0.0

    def __post_init__(self) -> None:
        if self.amplitude < 0:
            raise ConfigError("rx: amplitude must be non-negative")
        if self.target not in (0, 1):
            raise ConfigError("rx: target must be 0 or 1")
        if self.dt <= 0:
            raise ConfigError("rx: dt must be positive")
        if self.drive_frame not in ("lab", "envelope"):
            raise ConfigError("rx: drive_frame must be 'lab' or 'envelope'")


@dataclass(frozen=True)
class CzSettings:
    phi_target: float = 0.233
    ramp: float = 2.0
    dt: float = 0.002
    phi_idle: float = 0.0

    def __post_init__(self) -> None:
        if self.ramp < 0:
            raise ConfigError("cz: ramp must be non-negative")
        if self.dt <= 0:
            raise ConfigError("cz: dt must be positive")


@dataclass(frozen=True)
class LeakageSettings:
    window: float = 30.0
    threshold: float = 0.005
    dt: float = 0.002

    def __post_init__(self) -> None:
        if self.window <= 0:
            raise ConfigError("leakage: window must be positive")
        if not 0 < self.threshold < 1:
            raise ConfigError("leakage: threshold must be in (0, 1)")
        if self.dt <= 0:
            raise ConfigError("leakage: dt must be positive")


@dataclass(frozen=True)
class RuntimeSettings:
    repetitions: int = 3
    qubit_truncations: tuple[int, ...] = (3, 4, 5)
    dt: float = 0.01

    def __post_init__(self) -> None:
        if self.repetitions < 3:
            raise ConfigError("runtime: repetitions must be at least 3")
        if not self.qubit_truncations or min(self.qubit_truncations) < 2:
            raise ConfigError("runtime: qubit_truncations must all be >= 2")
        if self.dt <= 0:
            raise ConfigError("runtime: dt must be positive")


@dataclass(frozen=True)
class OutputSettings:
    directory: str = "results"
    artifact: str = "calibration.json"
    seed: int = 1


@dataclass(frozen=True)
class RunConfig:
    device: DeviceParams
    trunc: TruncationConfig
    sweep: SweepSettings
    truncation_study: TruncationStudySettings
    rx: RxSettings
    cz: CzSettings
    leakage: LeakageSettings
    runtime: RuntimeSettings
    output: OutputSettings


def default_config() -> RunConfig:
    return RunConfig(
        device=DeviceParams(
            q1=QubitParams(ej_max=28.48, ec=0.317, g=0.183),
            q0=QubitParams(ej_max=42.34, ec=0.297, g=0.199),
            omega_c=6.902,
            kappa=0.001,
        ),
        trunc=TruncationConfig(n_q=23, n_eq=9, n_ec=6, n_duff=3),
        sweep=SweepSettings(),
        truncation_study=TruncationStudySettings(),
        rx=RxSettings(),
        cz=CzSettings(),
        leakage=LeakageSettings(),
        runtime=RuntimeSettings(),
        output=OutputSettings(),
    )


def _parse_float(section: str, key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{section}: {key} must be a number, got {raw!r}") from exc


def _parse_int(section: str, key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"{section}: {key} must be an integer, got {raw!r}") from exc


def _parse_int_list(section: str, key: str, raw: str) -> tuple[int, ...]:
    try:
        return tuple(int(tok) for tok in raw.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(
            f"{section}: {key} must be a list of integers, got {raw!r}"
        ) from exc


# Section name -> key -> (attribute, parser). Device and truncation map
# onto nested structures, the rest onto flat settings dataclasses.
_DEVICE_KEYS = {
    "ej_max_1": ("q1", "ej_max"),
    "ec_1": ("q1", "ec"),
    "g_1": ("q1", "g"),
    "ej_max_0": ("q0", "ej_max"),
    "ec_0": ("q0", "ec"),
    "g_0": ("q0", "g"),
    "omega_c": (None, "omega_c"),
    "kappa": (None, "kappa"),
}
_TRUNC_KEYS = ("n_q", "n_eq", "n_ec", "n_duff")
_STUDY_INT_KEYS = ("reference_n_q", "reference_n_eq", "reference_n_ec",
                   "convergence_flux_points")
_STUDY_LIST_KEYS = ("sweep_n_q", "sweep_n_eq", "sweep_n_ec", "sweep_n_duff")


def _section_keys(cls) -> dict[str, type]:
    return {f.name: f.type for f in fields(cls)}


def parse_config(text: str) -> RunConfig:
    """Parse INI-formatted text, applying defaults for anything omitted."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    known_sections = {
        "device", "truncation", "sweep", "rx", "cz", "leakage", "runtime", "output",
    }
    unknown = set(parser.sections()) - known_sections
    if unknown:
        raise ConfigError(f"unknown config section(s): {', '.join(sorted(unknown))}")

    cfg = default_config()

    if parser.has_section("device"):
        q1 = dict(ej_max=cfg.device.q1.ej_max, ec=cfg.device.q1.ec, g=cfg.device.q1.g)
        q0 = dict(ej_max=cfg.device.q0.ej_max, ec=cfg.device.q0.ec, g=cfg.device.q0.g)
        scalars = dict(omega_c=cfg.device.omega_c, kappa=cfg.device.kappa)
        for key, raw in parser.items("device"):
            if key not in _DEVICE_KEYS:
                raise ConfigError(f"device: unknown key {key!r}")
            qubit, name = _DEVICE_KEYS[key]
            value = _parse_float("device", key, raw)
            if qubit == "q1":
                q1[name] = value
            elif qubit == "q0":
                q0[name] = value
            else:
                scalars[name] = value
        try:
            cfg = replace(
                cfg,
                device=DeviceParams(q1=QubitParams(**q1), q0=QubitParams(**q0), **scalars),
            )
        except ValueError as exc:
            raise ConfigError(f"device: {exc}") from exc

    if parser.has_section("truncation"):
        trunc_kwargs = {}
        study_kwargs = {}
        for key, raw in parser.items("truncation"):
            if key in _TRUNC_KEYS:
                trunc_kwargs[key] = _parse_int("truncation", key, raw)
            elif key in _STUDY_INT_KEYS:
                study_kwargs[key] = _parse_int("truncation", key, raw)
            elif key in _STUDY_LIST_KEYS:
                study_kwargs[key] = _parse_int_list("truncation", key, raw)
            else:
                raise ConfigError(f"truncation: unknown key {key!r}")
        try:
            if trunc_kwargs:
                cfg = replace(cfg, trunc=replace(cfg.trunc, **trunc_kwargs))
            if study_kwargs:
                cfg = replace(
                    cfg, truncation_study=replace(cfg.truncation_study, **study_kwargs)
                )
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"truncation: {exc}") from exc

    flat_sections = {
        "sweep": ("sweep", SweepSettings),
        "rx": ("rx", RxSettings),
        "cz": ("cz", CzSettings),
        "leakage": ("leakage", LeakageSettings),
        "runtime": ("runtime", RuntimeSettings),
        "output": ("output", OutputSettings),
    }
    for section, (attr, cls) in flat_sections.items():
        if not parser.has_section(section):
            continue
        schema = _section_keys(cls)
        kwargs = {}
        for key, raw in parser.items(section):
            if key not in schema:
                raise ConfigError(f"{section}: unknown key {key!r}")
            annotation = str(schema[key])
            if key == "carrier_freq":
                kwargs[key] = None if raw.strip() == "auto" else _parse_float(
                    section, key, raw
                )
            elif "tuple" in annotation:
                kwargs[key] = _parse_int_list(section, key, raw)
            elif "int" in annotation:
                kwargs[key] = _parse_int(section, key, raw)
            elif "float" in annotation:
                kwargs[key] = _parse_float(section, key, raw)
            else:
                kwargs[key] = raw.strip()
        cfg = replace(cfg, **{attr: replace(getattr(cfg, attr), **kwargs)})

    return cfg


def load_config(path: str | Path | None) -> RunConfig:
    """Load a config file, or the defaults when no path is given."""
    if path is None:
        return default_config()
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_config(p.read_text())


def config_hash(config: RunConfig) -> str:
    """Canonical content hash covering every effective setting."""
    payload = json.dumps(asdict(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()
