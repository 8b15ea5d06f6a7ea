"""Benchmark suite: calibration orchestration and the physics benchmarks.

Each ``run_*`` operation is a pure computation returning a result object;
CSV tables and the JSON metadata sidecar are written separately through a
single atomic writer.  All benchmarks are deterministic for a fixed
configuration; only the runtime study's wall-clock columns vary between
invocations.
"""

from __future__ import annotations

import json
import math
import os
import statistics
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import (
    DuffingCurves,
    EffectiveCurves,
    StaticExtraction,
    calibrate_duffing,
    calibrate_effective,
    extract_from_model,
    fingerprint_hash,
    load_artifact,
    save_artifact,
    sweep_circuit,
)
from .config import ConfigError, RunConfig, config_hash
from .device import TruncationConfig, model_dims
from .dynamics import (
    ModelFamily,
    PropagationError,
    PulseSchedule,
    computational_frame,
    conditional_phase,
    cz_duration,
    leakage_series,
    make_drive_pulse,
    make_flux_pulse,
    population_currents,
    population_transfer_and_mismatch,
    propagate,
)

__all__ = [
    "CalibrationError",
    "CalibrationResult",
    "StaticSweepResult",
    "ConvergenceRow",
    "ConvergenceResult",
    "RxResult",
    "CzResult",
    "LeakageResult",
    "RuntimeRow",
    "RuntimeResult",
    "run_calibrate",
    "ensure_calibration",
    "run_static_sweep",
    "run_truncation_study",
    "run_rx_benchmark",
    "run_cz_benchmark",
    "run_leakage_analysis",
    "run_runtime_benchmark",
    "run_all",
    "write_csv",
    "write_sidecar",
    "sidecar_extras",
    "BENCHMARK_STEPS",
]

MODEL_KINDS = ("effective", "duffing", "circuit")
MULTILEVEL_KINDS = ("duffing", "circuit")


class CalibrationError(RuntimeError):
    """Calibration could not produce usable parameter curves."""


# ---------------------------------------------------------------------------
# calibration orchestration


@dataclass(frozen=True, eq=False)
class CalibrationResult:
    effective: EffectiveCurves
    duffing: DuffingCurves
    flux_grid: np.ndarray
    extractions: tuple[StaticExtraction, ...]
    failures: tuple[tuple[float, str], ...]
    content_hash: str
    path: Path | None


def _flux_grid(config: RunConfig) -> np.ndarray:
    s = config.sweep
    return np.linspace(s.flux_min, s.flux_max, s.flux_points)


def run_calibrate(config: RunConfig, out_dir: Path | None = None) -> CalibrationResult:
    """Circuit sweep plus both reduced-model calibrations; writes the artifact.

    Fit failures are re-raised with the flux coverage that fed the fit, so
    a too-narrow grid is diagnosable from the error alone.
    """
    grid = _flux_grid(config)
    extractions, failures = sweep_circuit(config.device, config.trunc, grid)
    coverage = (
        f"{len(extractions)} of {grid.size} flux points usable on "
        f"[{grid[0]:g}, {grid[-1]:g}]"
    )
    try:
        effective = calibrate_effective(
            extractions, config.device.omega_c, order=config.sweep.fit_order
        )
    except ValueError as exc:
        raise CalibrationError(f"effective calibration failed: {exc} ({coverage})") from exc
    try:
        duffing = calibrate_duffing(
            config.device,
            config.trunc,
            grid,
            targets=extractions,
            order=config.sweep.fit_order,
        )
    except ValueError as exc:
        raise CalibrationError(f"duffing calibration failed: {exc} ({coverage})") from exc

    path = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / config.output.artifact
        content = save_artifact(
            path, effective, duffing, config.device, config.trunc, grid,
            failures=failures,
        )
    else:
        content = ""
    return CalibrationResult(
        effective=effective,
        duffing=duffing,
        flux_grid=grid,
        extractions=tuple(extractions),
        failures=tuple(failures),
        content_hash=content,
        path=path,
    )


def ensure_calibration(config: RunConfig, out_dir: Path | None = None) -> CalibrationResult:
    """Reuse a matching on-disk artifact, or calibrate from scratch.

    A stored artifact is reused only when its device/truncation
    fingerprint and flux grid both match the current configuration.
    """
    if out_dir is not None:
        path = Path(out_dir) / config.output.artifact
        if path.is_file():
            try:
                artifact = load_artifact(path)
            except ValueError:
                artifact = None
            if (
                artifact is not None
                and artifact.device_hash == fingerprint_hash(config.device, config.trunc)
                and np.array_equal(np.asarray(artifact.flux_grid), _flux_grid(config))
            ):
                return CalibrationResult(
                    effective=artifact.effective,
                    duffing=artifact.duffing,
                    flux_grid=np.asarray(artifact.flux_grid),
                    extractions=(),
                    failures=artifact.failures,
                    content_hash=artifact.content_hash,
                    path=path,
                )
    return run_calibrate(config, out_dir)


def _families(config: RunConfig, calibration: CalibrationResult) -> dict[str, ModelFamily]:
    curves = {
        "effective": calibration.effective,
        "duffing": calibration.duffing,
        "circuit": None,
    }
    return {
        kind: ModelFamily(kind, config.device, config.trunc, curves=curves[kind])
        for kind in MODEL_KINDS
    }


# ---------------------------------------------------------------------------
# static sweep


@dataclass(frozen=True, eq=False)
class StaticSweepResult:
    """Per-flux dressed quantities of all three models, circuit as reference.

    ``energies[kind]`` has shape (n_flux, 4): assigned dressed
    computational energies relative to the dressed ground, label order
    (00, 01, 10, 11).  Rows where any model's assignment failed carry the
    failure message in ``flags`` and NaN in that model's columns.
    """

    phis: np.ndarray
    energies: dict[str, np.ndarray]
    j: dict[str, np.ndarray]
    zeta: dict[str, np.ndarray]
    rmse: dict[str, np.ndarray]
    flags: tuple[str, ...]

    def flux_averaged_rmse(self, kind: str) -> float:
        values = self.rmse[kind]
        return float(np.mean(values[np.isfinite(values)]))


def run_static_sweep(
    config: RunConfig, calibration: CalibrationResult
) -> StaticSweepResult:
    grid = _flux_grid(config)
    families = _families(config, calibration)
    energies = {k: np.full((grid.size, 4), np.nan) for k in MODEL_KINDS}
    j = {k: np.full(grid.size, np.nan) for k in MODEL_KINDS}
    zeta = {k: np.full(grid.size, np.nan) for k in MODEL_KINDS}
    rmse = {k: np.full(grid.size, np.nan) for k in MODEL_KINDS}
    flags = []
    for i, phi in enumerate(grid):
        messages = []
        row = {}
        for kind in MODEL_KINDS:
            try:
                row[kind] = extract_from_model(families[kind].model(float(phi)))
            except ValueError as exc:
                messages.append(f"{kind}: {exc}")
        for kind, ext in row.items():
            energies[kind][i] = ext.energies
            j[kind][i] = ext.j
            zeta[kind][i] = ext.zeta
        if "circuit" in row:
            ref = np.asarray(row["circuit"].energies)
            for kind, ext in row.items():
                rmse[kind][i] = math.sqrt(
                    float(np.mean((np.asarray(ext.energies) - ref) ** 2))
                )
        flags.append("; ".join(messages))
    return StaticSweepResult(
        phis=grid, energies=energies, j=j, zeta=zeta, rmse=rmse, flags=tuple(flags)
    )


# ---------------------------------------------------------------------------
# truncation study


@dataclass(frozen=True)
class ConvergenceRow:
    axis: str
    value: int
    rmse: float
    dj: float
    dzeta: float
    is_reference: bool = False


@dataclass(frozen=True, eq=False)
class ConvergenceResult:
    rows: tuple[ConvergenceRow, ...]
    phis: np.ndarray

    def axis_rows(self, axis: str) -> list[ConvergenceRow]:
        return [r for r in self.rows if r.axis == axis]


def _circuit_reference_extractions(
    config: RunConfig, phis: np.ndarray
) -> list[StaticExtraction]:
    study = config.truncation_study
    ref_trunc = TruncationConfig(
        n_q=study.reference_n_q,
        n_eq=study.reference_n_eq,
        n_ec=study.reference_n_ec,
        n_duff=config.trunc.n_duff,
    )
    extractions, failures = sweep_circuit(config.device, ref_trunc, phis)
    if failures:
        phi, msg = failures[0]
        raise CalibrationError(
            f"reference truncation failed at flux {phi:g}: {msg}"
        )
    return extractions


def _convergence_metrics(
    extractions: list[StaticExtraction], reference: list[StaticExtraction]
) -> tuple[float, float, float]:
    rmse = float(
        np.mean(
            [
                math.sqrt(float(np.mean((np.asarray(e.energies) - np.asarray(r.energies)) ** 2)))
                for e, r in zip(extractions, reference)
            ]
        )
    )
    dj = float(np.mean([abs(e.j - r.j) for e, r in zip(extractions, reference)]))
    dzeta = float(np.mean([abs(e.zeta - r.zeta) for e, r in zip(extractions, reference)]))
    return rmse, dj, dzeta


def run_truncation_study(
    config: RunConfig, calibration: CalibrationResult
) -> ConvergenceResult:
    """Flux-averaged convergence of each truncation axis toward a resolved
    reference.

    The three circuit axes (n_q, n_eq, n_ec) vary one cutoff with the
    others at production values and compare to the fully resolved circuit
    reference; the final row of each axis is the reference compared to
    itself, which pins the all-zero-error invariant.  The n_duff axis
    compares the calibrated Duffing model to the same circuit reference,
    so its errors plateau at the model error instead of zero.
    """
    study = config.truncation_study
    phis = np.linspace(
        config.sweep.flux_min, config.sweep.flux_max, study.convergence_flux_points
    )
    reference = _circuit_reference_extractions(config, phis)
    rows: list[ConvergenceRow] = []

    axes = {
        "n_q": (study.sweep_n_q, study.reference_n_q),
        "n_eq": (study.sweep_n_eq, study.reference_n_eq),
        "n_ec": (study.sweep_n_ec, study.reference_n_ec),
    }
    ref_kwargs = dict(
        n_q=study.reference_n_q, n_eq=study.reference_n_eq, n_ec=study.reference_n_ec
    )
    for axis, (values, ref_value) in axes.items():
        for value in list(values) + [ref_value]:
            kwargs = {
                "n_q": config.trunc.n_q,
                "n_eq": config.trunc.n_eq,
                "n_ec": config.trunc.n_ec,
            }
            is_reference = value == ref_value
            if is_reference:
                kwargs = dict(ref_kwargs)
            else:
                kwargs[axis] = value
            trunc = TruncationConfig(n_duff=config.trunc.n_duff, **kwargs)
            extractions, failures = sweep_circuit(config.device, trunc, phis)
            if failures:
                phi, msg = failures[0]
                raise CalibrationError(
                    f"truncation study ({axis}={value}) failed at flux {phi:g}: {msg}"
                )
            rmse, dj, dzeta = _convergence_metrics(extractions, reference)
            rows.append(ConvergenceRow(axis, int(value), rmse, dj, dzeta, is_reference))

    for value in study.sweep_n_duff:
        trunc = replace(config.trunc, n_duff=int(value))
        family = ModelFamily("duffing", config.device, trunc, curves=calibration.duffing)
        extractions = [extract_from_model(family.model(float(p))) for p in phis]
        rmse, dj, dzeta = _convergence_metrics(extractions, reference)
        rows.append(ConvergenceRow("n_duff", int(value), rmse, dj, dzeta, False))

    return ConvergenceResult(rows=tuple(rows), phis=phis)


# ---------------------------------------------------------------------------
# R_X benchmark


@dataclass(frozen=True, eq=False)
class RxResult:
    """Spectator transfer curves and leakage for each model tier.

    ``series[kind]`` maps to (transfer_spec0, transfer_spec1, mismatch,
    leakage_spec0, leakage_spec1) on the shared time grid; models whose
    propagation failed appear in ``flags`` instead.
    """

    times: np.ndarray
    carrier_freq: float
    schedule: PulseSchedule
    series: dict[str, dict[str, np.ndarray]]
    flags: dict[str, str]


def resolve_carrier(config: RunConfig, calibration: CalibrationResult) -> float:
    """Configured carrier, or the calibrated effective-model splitting.

    Resonance is defined on the calibrated effective tier: the dressed
    e01 - e00 splitting at the idle flux, which also pins the analytic
    Rabi expectations.
    """
    if config.rx.carrier_freq is not None:
        return float(config.rx.carrier_freq)
    family = ModelFamily(
        "effective", config.device, config.trunc, curves=calibration.effective
    )
    extraction = extract_from_model(family.model(config.rx.phi_idle))
    return float(extraction.energies[1] - extraction.energies[0])


def run_rx_benchmark(config: RunConfig, calibration: CalibrationResult) -> RxResult:
    rx = config.rx
    carrier = resolve_carrier(config, calibration)
    schedule = make_drive_pulse(
        rx.amplitude, rx.ramp, rx.flat, carrier, rx.theta, rx.dt,
        target=rx.target, phi_idle=rx.phi_idle,
    )
    families = _families(config, calibration)
    series: dict[str, dict[str, np.ndarray]] = {}
    flags: dict[str, str] = {}
    for kind in MODEL_KINDS:
        family = families[kind]
        frame = computational_frame(family, rx.phi_idle)
        # Spectator in |0> and |1>, driven qubit starting in |0>.
        if rx.target == 0:
            starts = ((0, 0), (1, 0))
        else:
            starts = ((0, 0), (0, 1))
        try:
            traj0 = propagate(
                family, schedule, frame.basis_state(*starts[0]),
                drive_frame=rx.drive_frame,
            )
            traj1 = propagate(
                family, schedule, frame.basis_state(*starts[1]),
                drive_frame=rx.drive_frame,
            )
        except PropagationError as exc:
            flags[kind] = str(exc)
            continue
        transfer = population_transfer_and_mismatch(traj0, traj1)
        series[kind] = {
            "transfer_spec0": transfer.transfer_spec0,
            "transfer_spec1": transfer.transfer_spec1,
            "mismatch": transfer.mismatch,
            "leakage_spec0": leakage_series(traj0),
            "leakage_spec1": leakage_series(traj1),
        }
    return RxResult(
        times=schedule.times,
        carrier_freq=carrier,
        schedule=schedule,
        series=series,
        flags=flags,
    )


# ---------------------------------------------------------------------------
# CZ benchmark


@dataclass(frozen=True, eq=False)
class CzResult:
    """Conditional-phase series per model for the shared flux pulse.

    ``flat_start``/``flat_end`` index the boundary-time rows delimiting
    the constant-flux hold, where the analytic linear-accumulation checks
    apply.
    """

    times: np.ndarray
    flux: np.ndarray
    phi_cz: dict[str, np.ndarray]
    schedule: PulseSchedule
    zeta_target: float
    hold: float
    flat_start: int
    flat_end: int
    flags: dict[str, str]


def run_cz_benchmark(config: RunConfig, calibration: CalibrationResult) -> CzResult:
    cz = config.cz
    zeta_target = float(calibration.effective.zeta(cz.phi_target))
    try:
        hold = cz_duration(zeta_target)
    except ValueError as exc:
        raise CalibrationError(
            f"{exc}: |zeta({cz.phi_target:g})| = {abs(zeta_target):.3e} GHz"
        ) from exc
    schedule = make_flux_pulse(cz.phi_idle, cz.phi_target, cz.ramp, hold, cz.dt)
    flat_start = math.ceil(cz.ramp / cz.dt)
    flat_end = math.floor((cz.ramp + hold) / cz.dt)
    families = _families(config, calibration)
    phi_cz: dict[str, np.ndarray] = {}
    flags: dict[str, str] = {}
    for kind in MODEL_KINDS:
        family = families[kind]
        frame = computational_frame(family, cz.phi_idle)
        try:
            traj = propagate(family, schedule, frame.state(np.full(4, 0.5)))
            phi_cz[kind] = conditional_phase(traj).phi_cz
        except (PropagationError, ValueError) as exc:
            flags[kind] = str(exc)
    flux = np.concatenate(([schedule.phi_idle], schedule.flux))
    return CzResult(
        times=schedule.times,
        flux=flux,
        phi_cz=phi_cz,
        schedule=schedule,
        zeta_target=zeta_target,
        hold=hold,
        flat_start=flat_start,
        flat_end=flat_end,
        flags=flags,
    )


# ---------------------------------------------------------------------------
# leakage analysis


@dataclass(frozen=True, eq=False)
class LeakageResult:
    """Bare-state populations and signed currents during the early CZ pulse."""

    schedule: PulseSchedule
    records: dict[str, object]  # kind -> PopulationCurrentRecord
    initial_label: tuple[int, int, int]


def run_leakage_analysis(
    config: RunConfig, calibration: CalibrationResult
) -> LeakageResult:
    lk = config.leakage
    cz = config.cz
    hold = lk.window - 2.0 * cz.ramp
    if hold <= 0:
        raise ConfigError(
            f"leakage window {lk.window:g} ns does not cover the {cz.ramp:g} ns ramps"
        )
    schedule = make_flux_pulse(cz.phi_idle, cz.phi_target, cz.ramp, hold, lk.dt)
    families = _families(config, calibration)
    initial = (1, 0, 1)
    records: dict[str, object] = {}
    for kind in MULTILEVEL_KINDS:
        family = families[kind]
        labels = family.labels
        psi0 = np.zeros(family.dim, dtype=complex)
        psi0[labels.index(initial)] = 1.0
        traj = propagate(family, schedule, psi0, store_states=True)
        records[kind] = population_currents(traj, threshold=lk.threshold)
    return LeakageResult(schedule=schedule, records=records, initial_label=initial)


# ---------------------------------------------------------------------------
# runtime benchmark


@dataclass(frozen=True)
class RuntimeRow:
    kind: str
    truncation: int
    build_s: float
    propagate_s: float
    dimension: int


@dataclass(frozen=True, eq=False)
class RuntimeResult:
    rows: tuple[RuntimeRow, ...]
    schedule: PulseSchedule

    def times(self, kind: str) -> list[RuntimeRow]:
        return [r for r in self.rows if r.kind == kind]


def run_runtime_benchmark(
    config: RunConfig, calibration: CalibrationResult
) -> RuntimeResult:
    """Median build/propagate wall time for the CZ schedule per model tier.

    The swept qubit truncation sets n_eq for the circuit model and the
    per-mode level count for the Duffing model; dimensions recorded are
    the actual propagation matrix sizes.  Runs single-worker so the
    medians are not skewed by contention.
    """
    cz = config.cz
    rt = config.runtime
    zeta_target = float(calibration.effective.zeta(cz.phi_target))
    try:
        hold = cz_duration(zeta_target)
    except ValueError as exc:
        raise CalibrationError(
            f"{exc}: |zeta({cz.phi_target:g})| = {abs(zeta_target):.3e} GHz"
        ) from exc
    schedule = make_flux_pulse(cz.phi_idle, cz.phi_target, cz.ramp, hold, rt.dt)
    distinct_fluxes = np.unique(schedule.flux)
    curves = {"effective": calibration.effective, "duffing": calibration.duffing,
              "circuit": None}
    rows: list[RuntimeRow] = []
    for value in rt.qubit_truncations:
        trunc = replace(config.trunc, n_eq=int(value), n_duff=int(value))
        for kind in MODEL_KINDS:
            builds: list[float] = []
            propagates: list[float] = []
            dim = int(np.prod(model_dims(kind, trunc)))
            for _ in range(rt.repetitions):
                family = ModelFamily(
                    kind, config.device, trunc, curves=curves[kind],
                    cache_size=distinct_fluxes.size + 8,
                )
                t0 = time.perf_counter()
                for phi in distinct_fluxes:
                    family.hamiltonian(float(phi))
                builds.append(time.perf_counter() - t0)
                frame = computational_frame(family, cz.phi_idle)
                psi0 = frame.state(np.full(4, 0.5))
                t0 = time.perf_counter()
                propagate(family, schedule, psi0)
                propagates.append(time.perf_counter() - t0)
            rows.append(
                RuntimeRow(
                    kind=kind,
                    truncation=int(value),
                    build_s=float(statistics.median(builds)),
                    propagate_s=float(statistics.median(propagates)),
                    dimension=dim,
                )
            )
    return RuntimeResult(rows=tuple(rows), schedule=schedule)


# ---------------------------------------------------------------------------
# output writing


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def write_csv(path: Path, header: list[str], rows) -> None:
    """Single-writer CSV output; floats keep full repr precision."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
    _atomic_write(Path(path), "\n".join(lines) + "\n")


def write_sidecar(
    out_dir: Path,
    subcommand: str,
    config: RunConfig,
    outputs: list[str],
    extras: dict | None = None,
) -> Path:
    """JSON metadata sidecar pinning config hash, code version, and outputs."""
    payload = {
        "subcommand": subcommand,
        "config_hash": config_hash(config),
        "code_version": __version__,
        "seed": config.output.seed,
        "outputs": sorted(outputs),
    }
    if extras:
        payload.update(extras)
    path = Path(out_dir) / f"{subcommand}_meta.json"
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def _nan_to_blank(value: float) -> object:
    return "" if isinstance(value, float) and math.isnan(value) else value


def write_static_sweep(out_dir: Path, result: StaticSweepResult) -> list[str]:
    header = ["phi"]
    for kind in MODEL_KINDS:
        header += [f"{kind}_e{ab}_ghz" for ab in ("00", "01", "10", "11")]
        header += [f"{kind}_j_ghz", f"{kind}_zeta_ghz", f"{kind}_rmse_ghz"]
    header.append("flag")
    rows = []
    for i, phi in enumerate(result.phis):
        row: list[object] = [float(phi)]
        for kind in MODEL_KINDS:
            row += [_nan_to_blank(float(e)) for e in result.energies[kind][i]]
            row += [
                _nan_to_blank(float(result.j[kind][i])),
                _nan_to_blank(float(result.zeta[kind][i])),
                _nan_to_blank(float(result.rmse[kind][i])),
            ]
        row.append(result.flags[i])
        rows.append(row)
    write_csv(Path(out_dir) / "static_sweep.csv", header, rows)
    return ["static_sweep.csv"]


def write_truncation(out_dir: Path, result: ConvergenceResult) -> list[str]:
    header = ["axis", "value", "rmse_ghz", "dj_ghz", "dzeta_ghz", "is_reference"]
    rows = [
        [r.axis, r.value, r.rmse, r.dj, r.dzeta, int(r.is_reference)]
        for r in result.rows
    ]
    write_csv(Path(out_dir) / "truncation.csv", header, rows)
    return ["truncation.csv"]


def write_rx(out_dir: Path, result: RxResult) -> list[str]:
    # Column names spell out the driven transition for the configured target.
    if result.schedule.target == 0:
        transitions = {"transfer_spec0": "p_00_to_01", "transfer_spec1": "p_10_to_11"}
    else:
        transitions = {"transfer_spec0": "p_00_to_10", "transfer_spec1": "p_01_to_11"}
    header = ["time_ns"]
    columns = []
    for kind in MODEL_KINDS:
        if kind not in result.series:
            continue
        for name in ("transfer_spec0", "transfer_spec1", "mismatch",
                     "leakage_spec0", "leakage_spec1"):
            header.append(f"{kind}_{transitions.get(name, name)}")
            columns.append(result.series[kind][name])
    rows = [
        [float(t)] + [float(c[i]) for c in columns] for i, t in enumerate(result.times)
    ]
    write_csv(Path(out_dir) / "rx.csv", header, rows)
    return ["rx.csv"]


def write_cz(out_dir: Path, result: CzResult) -> list[str]:
    kinds = [k for k in MODEL_KINDS if k in result.phi_cz]
    header = ["time_ns", "flux_bias"] + [f"{kind}_phi_cz_rad" for kind in kinds]
    rows = [
        [float(t), float(result.flux[i])] + [float(result.phi_cz[k][i]) for k in kinds]
        for i, t in enumerate(result.times)
    ]
    write_csv(Path(out_dir) / "cz.csv", header, rows)
    return ["cz.csv"]


def write_leakage(out_dir: Path, result: LeakageResult) -> list[str]:
    outputs = []
    for kind, record in result.records.items():
        pop_header = ["time_ns"] + [
            "pop_" + "".join(map(str, lab)) for lab in record.labels
        ]
        pop_rows = [
            [float(t)] + [float(p) for p in record.populations[i]]
            for i, t in enumerate(record.times)
        ]
        name = f"leakage_populations_{kind}.csv"
        write_csv(Path(out_dir) / name, pop_header, pop_rows)
        outputs.append(name)

        cur_header = ["time_ns"] + [
            "current_{}_to_{}_per_ns".format(
                "".join(map(str, a)), "".join(map(str, b))
            )
            for a, b in record.pairs
        ]
        cur_rows = [
            [float(t)] + [float(record.currents[p, i]) for p in range(len(record.pairs))]
            for i, t in enumerate(record.times_mid)
        ]
        name = f"leakage_currents_{kind}.csv"
        write_csv(Path(out_dir) / name, cur_header, cur_rows)
        outputs.append(name)
    return outputs


def write_runtime(out_dir: Path, result: RuntimeResult) -> list[str]:
    header = ["model", "qubit_truncation", "build_time_s", "propagate_time_s",
              "dimension"]
    rows = [
        [r.kind, r.truncation, r.build_s, r.propagate_s, r.dimension]
        for r in result.rows
    ]
    write_csv(Path(out_dir) / "runtime.csv", header, rows)
    return ["runtime.csv"]


def sidecar_extras(name: str, result, config: RunConfig) -> dict | None:
    """Extra sidecar fields per subcommand.

    The drive frame is a modeling choice, so rx reports must name it
    rather than leave it implicit in the config hash.
    """
    if name == "rx":
        return {
            "drive_frame": config.rx.drive_frame,
            "carrier_freq_ghz": result.carrier_freq,
        }
    return None


BENCHMARK_STEPS = (
    ("static-sweep", run_static_sweep, write_static_sweep),
    ("truncation", run_truncation_study, write_truncation),
    ("rx", run_rx_benchmark, write_rx),
    ("cz", run_cz_benchmark, write_cz),
    ("leakage", run_leakage_analysis, write_leakage),
    ("runtime", run_runtime_benchmark, write_runtime),
)


def run_all(config: RunConfig, out_dir: Path) -> dict[str, list[str]]:
    """Full suite in dependency order; returns output files per subcommand."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs: dict[str, list[str]] = {}
    calibration = ensure_calibration(config, out_dir)
    outputs["calibrate"] = [config.output.artifact]
    write_sidecar(out_dir, "calibrate", config, outputs["calibrate"])

    for name, runner, writer in BENCHMARK_STEPS:
        result = runner(config, calibration)
        outputs[name] = writer(out_dir, result)
        write_sidecar(
            out_dir, name, config, outputs[name],
            extras=sidecar_extras(name, result, config),
        )
    return outputs
