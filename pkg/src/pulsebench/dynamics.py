"""Pulse schedules and piecewise-constant time evolution.

Schedules sample continuous flux and drive-envelope profiles at step
midpoints t_k = (k + 1/2) dt, so refining dt is well defined.  Propagation
applies U_k = expm(-i 2*pi dt H[k]) per step; runs of steps with an
identical Hamiltonian are advanced in a single eigendecomposition, single
steps through a Krylov projection.  Time-domain observables (leakage,
conditional phase, spectator transfer, population currents) are measured
against the dressed computational frame assigned at the schedule's idle
flux and held fixed for the whole pulse.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass
from itertools import combinations
from typing import NamedTuple, Sequence

import numpy as np

from .calibration import assign_dressed_states
from .device import (
    DeviceParams,
    TruncationConfig,
    assemble_drift,
    basis_labels,
    build_hamiltonian,
    drive_operator,
    model_dims,
    number_operator,
)
from .linalg import TWO_PI, EigensolveError, check_hermitian, eigh, expm_apply

__all__ = [
    "DEFAULT_DT",
    "PropagationError",
    "PulseSchedule",
    "ModelFamily",
    "ComputationalFrame",
    "Trajectory",
    "ConditionalPhaseSeries",
    "PopulationCurrentRecord",
    "TransferResult",
    "computational_frame",
    "make_flux_pulse",
    "make_drive_pulse",
    "cz_duration",
    "propagate",
    "leakage_series",
    "conditional_phase",
    "population_transfer_and_mismatch",
    "population_currents",
]

DEFAULT_DT = 0.002
NORM_TOL = 1e-9
PHASE_FLOOR = 1e-6
MIN_CONDITIONAL_ZETA = 1e-6
TRACKED_POPULATION_THRESHOLD = 0.005

# Engine selection: segments at least this long amortize a dense
# eigendecomposition; below it (and above the small-system cutoff) a
# per-step Krylov apply is cheaper.
SEGMENT_EIGH_MIN_STEPS = 32
DENSE_DIM_LIMIT = 64
_CHUNK_ROWS = 4096


class PropagationError(RuntimeError):
    """Numerical failure during propagation, annotated with the step."""


@dataclass(frozen=True, eq=False)
class PulseSchedule:
    """Discretized control sequence shared by all model tiers.

    ``flux[k]`` and ``amp[k]`` are midpoint samples (GHz for amplitudes,
    reduced flux otherwise).  A schedule is either a flux pulse (amp all
    zero) or a drive pulse (constant flux, a target qubit, and a carrier
    at ``carrier_freq`` with phase offset ``theta``).
    """

    dt: float
    flux: np.ndarray
    amp: np.ndarray
    carrier_freq: float = 0.0
    theta: float = 0.0
    target: int | None = None
    phi_idle: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "flux", np.asarray(self.flux, dtype=float))
        object.__setattr__(self, "amp", np.asarray(self.amp, dtype=float))
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"step size must be positive, got {self.dt}")
        if self.flux.ndim != 1 or self.flux.size < 1:
            raise ValueError("schedule needs at least one step")
        if self.amp.shape != self.flux.shape:
            raise ValueError("flux and amplitude sample counts differ")
        samples = (self.flux, self.amp, (self.carrier_freq, self.theta, self.phi_idle))
        if not all(np.all(np.isfinite(s)) for s in samples):
            raise ValueError("schedule samples must be finite")
        if np.any(self.amp != 0.0):
            if self.target not in (0, 1):
                raise ValueError("drive schedule needs a target qubit (0 or 1)")
            if np.ptp(self.flux) != 0.0:
                raise ValueError("drive schedule must hold the flux constant")

    @property
    def steps(self) -> int:
        return int(self.flux.size)

    @property
    def duration(self) -> float:
        return self.steps * self.dt

    @property
    def times(self) -> np.ndarray:
        """Step-boundary grid t_0 = 0 .. t_K, where states are recorded."""
        return np.arange(self.steps + 1) * self.dt

    @property
    def times_mid(self) -> np.ndarray:
        """Midpoint grid where the Hamiltonian is sampled."""
        return (np.arange(self.steps) + 0.5) * self.dt

    def matches(self, other: "PulseSchedule") -> bool:
        return (
            self.dt == other.dt
            and self.carrier_freq == other.carrier_freq
            and self.theta == other.theta
            and self.target == other.target
            and self.phi_idle == other.phi_idle
            and np.array_equal(self.flux, other.flux)
            and np.array_equal(self.amp, other.amp)
        )


def _raised_cosine(x: np.ndarray) -> np.ndarray:
    """Smooth 0 -> 1 transition on x in [0, 1]."""
    return 0.5 * (1.0 - np.cos(np.pi * np.clip(x, 0.0, 1.0)))


def make_flux_pulse(
    phi_idle: float, phi_target: float, ramp: float, hold: float, dt: float
) -> PulseSchedule:
    """Flux excursion with raised-cosine ramps and a flat hold.

    The continuous profile runs idle -> target over ``ramp`` ns, holds for
    ``hold`` ns, and ramps back; K = ceil((2 ramp + hold)/dt) midpoint
    samples discretize it.  ramp = 0 gives a rectangular pulse.
    """
    if ramp < 0:
        raise ValueError("ramp duration must be non-negative")
    if hold <= 0:
        raise ValueError("hold duration must be positive")
    if dt <= 0:
        raise ValueError("step size must be positive")
    total = 2.0 * ramp + hold
    steps = math.ceil(total / dt)
    t = (np.arange(steps) + 0.5) * dt
    shape = np.ones(steps)
    if ramp > 0:
        rising = t < ramp
        falling = t > ramp + hold
        # The ratio is clipped inside _raised_cosine, so a subnormal ramp
        # overflowing to inf still lands on the correct endpoint.
        with np.errstate(over="ignore"):
            shape[rising] = _raised_cosine(t[rising] / ramp)
            shape[falling] = _raised_cosine((total - t[falling]) / ramp)
    shape[t >= total] = 0.0
    flux = phi_idle + (phi_target - phi_idle) * shape
    return PulseSchedule(
        dt=dt, flux=flux, amp=np.zeros(steps), phi_idle=float(phi_idle)
    )


def make_drive_pulse(
    amp_peak: float,
    ramp: float,
    flat: float,
    carrier_freq: float,
    theta: float,
    dt: float,
    target: int,
    phi_idle: float = 0.0,
) -> PulseSchedule:
    """Charge drive with a raised-cosine flat-top envelope at constant flux.

    The midpoint-sampled envelope area equals amp_peak * (ramp + flat)
    whenever ramp and flat are multiples of dt (the cosine ramp samples
    cancel pairwise), which pins pulse areas exactly.
    """
    if amp_peak < 0:
        raise ValueError("drive amplitude must be non-negative")
    if ramp < 0:
        raise ValueError("ramp duration must be non-negative")
    if flat < 0:
        raise ValueError("flat-top duration must be non-negative")
    total = 2.0 * ramp + flat
    if total <= 0:
        raise ValueError("drive pulse needs a positive duration")
    if dt <= 0:
        raise ValueError("step size must be positive")
    steps = math.ceil(total / dt)
    t = (np.arange(steps) + 0.5) * dt
    shape = np.ones(steps)
    if ramp > 0:
        rising = t < ramp
        falling = t > ramp + flat
        with np.errstate(over="ignore"):
            shape[rising] = _raised_cosine(t[rising] / ramp)
            shape[falling] = _raised_cosine((total - t[falling]) / ramp)
    shape[t >= total] = 0.0
    return PulseSchedule(
        dt=dt,
        flux=np.full(steps, float(phi_idle)),
        amp=amp_peak * shape,
        carrier_freq=float(carrier_freq),
        theta=float(theta),
        target=target,
        phi_idle=float(phi_idle),
    )


def cz_duration(zeta_at_target: float) -> float:
    """Hold time 1/(2 |zeta|) accumulating a conditional phase of pi."""
    if abs(zeta_at_target) < MIN_CONDITIONAL_ZETA:
        raise ValueError("no conditional interaction at target flux")
    return 1.0 / (2.0 * abs(zeta_at_target))


class ModelFamily:
    """One model tier bound to a device, truncation, and parameter curves.

    Bundles everything propagation needs to assemble H[k] at arbitrary
    flux: calibrated drift builders, drive operators at fixed flux, and
    the frame generator for the co-rotating drive frame.
    ``energy_shift`` adds a constant multiple of the identity to every
    drift; it is a pure gauge knob (observables must not depend on it).
    """

    def __init__(
        self,
        kind: str,
        device: DeviceParams,
        trunc: TruncationConfig,
        curves=None,
        energy_shift: float = 0.0,
        cache_size: int = 16,
    ) -> None:
        self.kind = kind
        self.device = device
        self.trunc = trunc
        self.curves = curves
        self.energy_shift = float(energy_shift)
        self.dims = model_dims(kind, trunc)
        self.dim = int(np.prod(self.dims))
        # Ramp schedules visit thousands of distinct fluxes; the default
        # cap keeps memory bounded at circuit dimensions.  Callers that
        # need a full prebuilt stack (runtime measurement) raise it.
        self.cache_size = int(cache_size)
        self._models: OrderedDict = OrderedDict()
        self._drifts: OrderedDict = OrderedDict()
        self._drives: dict = {}
        self._number_op: np.ndarray | None = None
        self._frame_gens: dict = {}

    def model(self, phi: float):
        """Drift at flux phi (dressed ground at zero), LRU-cached."""
        key = float(phi)
        if key in self._models:
            self._models.move_to_end(key)
            return self._models[key]
        model = build_hamiltonian(self.kind, key, self.device, self.trunc, self.curves)
        self._models[key] = model
        if len(self._models) > self.cache_size:
            self._models.popitem(last=False)
        return model

    def hamiltonian(self, phi: float) -> np.ndarray:
        """Propagation drift at flux phi; treat the returned array as read-only.

        Assembled without the dressed-ground shift of :meth:`model` and
        therefore without an eigensolve: identity shifts of the drift only
        change the state by a global phase, which no reported observable
        sees, and skipping the diagonalization is what keeps ramp
        schedules (thousands of distinct flux values) affordable at
        circuit dimensions.
        """
        key = float(phi)
        drift = self._drifts.get(key)
        if drift is None:
            drift = check_hermitian(
                assemble_drift(self.kind, key, self.device, self.trunc, self.curves)
            )
            drift.setflags(write=False)
            self._drifts[key] = drift
            if len(self._drifts) > self.cache_size:
                self._drifts.popitem(last=False)
        else:
            self._drifts.move_to_end(key)
        if self.energy_shift:
            return drift + self.energy_shift * np.eye(self.dim)
        return drift

    def drive_pair(self, qubit: int, phi: float) -> tuple[np.ndarray, np.ndarray]:
        key = (int(qubit), float(phi))
        if key not in self._drives:
            self._drives[key] = drive_operator(
                self.kind, qubit, self.device, self.trunc, phi
            )
        return self._drives[key]

    @property
    def number_op(self) -> np.ndarray:
        if self._number_op is None:
            self._number_op = number_operator(self.kind, self.trunc)
        return self._number_op

    def frame_generator(self, phi: float) -> np.ndarray:
        """Excitation-number operator in the dressed eigenbasis at flux phi.

        Each drift eigenvector counts as the total excitation of its
        dominant bare basis state, so the operator commutes with the drift
        exactly and generates an exact co-rotating frame.  Where the drift
        conserves total bare excitation (effective and Duffing tiers) this
        equals the bare number operator; the circuit tier's qubit-bus
        coupling mixes excitation numbers, and a frame built from the bare
        operator would freeze those couplings at the wrong phases and
        detune every transition at the MHz scale.
        """
        key = float(phi)
        if key not in self._frame_gens:
            v = self.model(key).spectrum.vectors
            bare = np.real(np.diag(self.number_op))
            assigned = bare[np.argmax(np.abs(v) ** 2, axis=0)]
            gen = (v * assigned) @ v.conj().T
            gen = 0.5 * (gen + gen.conj().T)
            gen.setflags(write=False)
            self._frame_gens[key] = gen
        return self._frame_gens[key]

    @property
    def labels(self) -> list[tuple[int, int, int]]:
        return basis_labels(self.dims)


@dataclass(frozen=True, eq=False)
class ComputationalFrame:
    """Dressed computational basis at one flux, held fixed during a pulse.

    ``vectors`` columns are the assigned dressed eigenvectors in label
    order (00, 01, 10, 11), each rephased so its own bare computational
    coordinate is real positive (the same gauge the static projection
    uses).
    """

    phi: float
    vectors: np.ndarray
    indices: tuple[int, int, int, int]
    overlaps: tuple[float, float, float, float]

    def amplitudes(self, psi: np.ndarray) -> np.ndarray:
        return self.vectors.conj().T @ psi

    def state(self, weights: Sequence[complex]) -> np.ndarray:
        """Unit state with the given computational amplitudes, zero leakage."""
        w = np.asarray(weights, dtype=complex)
        if w.shape != (4,):
            raise ValueError("need exactly four computational weights")
        norm = np.linalg.norm(w)
        if norm == 0:
            raise ValueError("computational weights are all zero")
        return self.vectors @ (w / norm)

    def basis_state(self, q1: int, q0: int) -> np.ndarray:
        return self.vectors[:, 2 * q1 + q0].copy()


def computational_frame(family: ModelFamily, phi: float) -> ComputationalFrame:
    model = family.model(phi)
    amap = assign_dressed_states(model.spectrum, model.labels, phi=phi)
    cols = model.spectrum.vectors[:, list(amap.indices)].copy()
    anchor = cols[list(amap.comp_coords), range(4)].copy()
    anchor[np.abs(anchor) == 0] = 1.0
    cols = cols * (np.abs(anchor) / anchor)
    return ComputationalFrame(
        phi=float(phi), vectors=cols, indices=amap.indices, overlaps=amap.overlaps
    )


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Propagation record on the step-boundary time grid.

    ``comp_amps[k]`` are the amplitudes on the idle-flux dressed
    computational basis; ``states`` holds the full vectors only when the
    run was asked to keep them (population currents need them).
    """

    times: np.ndarray
    comp_amps: np.ndarray
    kind: str
    schedule: PulseSchedule
    family: ModelFamily
    frame: ComputationalFrame
    drive_frame: str
    states: np.ndarray | None = None

    @property
    def populations(self) -> np.ndarray:
        """Computational populations |c_ab(t)|^2, columns (00, 01, 10, 11)."""
        return np.abs(self.comp_amps) ** 2


def _segment_bounds(flux: np.ndarray, amp: np.ndarray, thetas: np.ndarray) -> np.ndarray:
    key = np.column_stack([flux, amp, thetas])
    change = np.any(key[1:] != key[:-1], axis=1)
    return np.concatenate(([0], np.flatnonzero(change) + 1, [key.shape[0]]))


def propagate(
    family: ModelFamily,
    schedule: PulseSchedule,
    psi0: np.ndarray,
    *,
    drive_frame: str = "lab",
    store_states: bool = False,
    method: str = "auto",
) -> Trajectory:
    """Evolve psi0 through the schedule, one expm(-i 2*pi dt H[k]) per step.

    ``drive_frame`` selects how the carrier enters: "lab" modulates the
    drive phase per step, theta_k = 2*pi*f_d*t_k + theta; "envelope" works
    in the frame co-rotating at the carrier (drift minus f_d times the
    dressed excitation-number operator) where the drive phase is the
    constant theta.  The frame generator commutes with the drift, so the
    two modes are unitarily equivalent up to drive matrix elements between
    dressed states whose assigned excitations differ by something other
    than one; those elements scale with the drift's excitation mixing and
    are negligible at the device's coupling strengths.  "envelope" keeps
    resonant drives piecewise-constant and is what the analytic Rabi
    checks assume.  ``method="dense"`` forces a full eigendecomposition
    per segment regardless of size.
    """
    if drive_frame not in ("lab", "envelope"):
        raise ValueError(f"unknown drive frame {drive_frame!r}")
    if method not in ("auto", "dense"):
        raise ValueError(f"unknown propagation method {method!r}")
    dim = family.dim
    psi = np.asarray(psi0, dtype=complex).reshape(-1).copy()
    if psi.shape[0] != dim:
        raise ValueError(
            f"initial state dimension {psi.shape[0]} does not match model dimension {dim}"
        )
    if abs(np.linalg.norm(psi) - 1.0) > 1e-9:
        raise ValueError("initial state is not normalized")

    k_steps = schedule.steps
    dt = schedule.dt
    flux = schedule.flux
    amp = schedule.amp
    if drive_frame == "lab":
        thetas = TWO_PI * schedule.carrier_freq * schedule.times_mid + schedule.theta
    else:
        thetas = np.full(k_steps, schedule.theta)

    driven = bool(np.any(amp != 0.0))
    lower = raiser = None
    if driven:
        lower, raiser = family.drive_pair(schedule.target, float(flux[0]))
    shift = None
    if drive_frame == "envelope" and schedule.carrier_freq != 0.0:
        shift = schedule.carrier_freq * family.frame_generator(float(flux[0]))

    frame = computational_frame(family, schedule.phi_idle)
    fdag = frame.vectors.conj().T

    comp = np.empty((k_steps + 1, 4), dtype=complex)
    comp[0] = fdag @ psi
    states = None
    if store_states:
        states = np.empty((k_steps + 1, dim), dtype=complex)
        states[0] = psi

    bounds = _segment_bounds(flux, amp, thetas)
    for s0, s1 in zip(bounds[:-1], bounds[1:]):
        n = s1 - s0
        try:
            h = family.hamiltonian(float(flux[s0]))
            if shift is not None:
                h = h - shift
            if driven and amp[s0] != 0.0:
                phase = np.exp(-1j * thetas[s0])
                h = h + (-0.5 * amp[s0]) * (phase * raiser + np.conj(phase) * lower)
        except (EigensolveError, np.linalg.LinAlgError) as exc:
            raise PropagationError(
                f"Hamiltonian assembly failed at step {s0} (flux {flux[s0]:g})"
            ) from exc

        use_eigh = method == "dense" or dim <= DENSE_DIM_LIMIT or n >= SEGMENT_EIGH_MIN_STEPS
        try:
            if use_eigh:
                spectrum = eigh(h, check=False)
                v = spectrum.vectors
                w = v.conj().T @ psi
                m = fdag @ v
                # Chunk rows are geometric in the step index; a cumulative
                # product of the single-step phase avoids the dense exp()
                # evaluations that otherwise dominate long flat segments.
                # Each chunk restarts from an exact anchor, so rounding does
                # not compound across chunks, and psi below stays exact.
                step_phase = np.exp(-1j * TWO_PI * dt * spectrum.energies)
                for c0 in range(0, n, _CHUNK_ROWS):
                    c1 = min(c0 + _CHUNK_ROWS, n)
                    anchor = np.exp(-1j * TWO_PI * dt * c0 * spectrum.energies)
                    phases = anchor * np.cumprod(
                        np.broadcast_to(step_phase, (c1 - c0, dim)), axis=0
                    )
                    wz = phases * w
                    comp[s0 + c0 + 1 : s0 + c1 + 1] = wz @ m.T
                    if store_states:
                        states[s0 + c0 + 1 : s0 + c1 + 1] = wz @ v.T
                psi = v @ (w * np.exp(-1j * TWO_PI * dt * n * spectrum.energies))
            else:
                for k in range(n):
                    psi = expm_apply(h, psi, dt)
                    comp[s0 + k + 1] = fdag @ psi
                    if store_states:
                        states[s0 + k + 1] = psi
        except (EigensolveError, np.linalg.LinAlgError) as exc:
            raise PropagationError(
                f"eigensolver failed at step {s0} (flux {flux[s0]:g})"
            ) from exc

        norm = np.linalg.norm(psi)
        if abs(norm - 1.0) > NORM_TOL:
            raise PropagationError(
                f"state norm drifted to {norm!r} by step {s1} (flux {flux[s0]:g})"
            )

    if np.max(np.abs(comp)) > 1.0 + NORM_TOL:
        raise PropagationError("computational amplitude exceeded unit magnitude")
    return Trajectory(
        times=schedule.times,
        comp_amps=comp,
        kind=family.kind,
        schedule=schedule,
        family=family,
        frame=frame,
        drive_frame=drive_frame,
        states=states,
    )


def leakage_series(traj: Trajectory) -> np.ndarray:
    """Population outside the computational subspace, per recorded step.

    The effective model's state space is the computational subspace, so
    its series is exactly zero by construction, not merely small.
    """
    if traj.kind == "effective":
        return np.zeros(traj.times.size)
    return np.clip(1.0 - np.sum(np.abs(traj.comp_amps) ** 2, axis=1), 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class ConditionalPhaseSeries:
    """Unwrapped computational phases and their CZ combination.

    ``phases`` columns follow label order (00, 01, 10, 11), each shifted
    to start at zero; phi_cz = phi_11 + phi_00 - phi_01 - phi_10 holds at
    every step and starts at zero.
    """

    times: np.ndarray
    phases: np.ndarray
    phi_cz: np.ndarray


def conditional_phase(traj: Trajectory) -> ConditionalPhaseSeries:
    """Conditional-phase accumulation for a |++> dressed initial state.

    Phases are reconstructed by unwrapping the sampled amplitude angles,
    which requires the step size to resolve the fastest computational
    phase: 2*pi*E_max*dt < pi.  Production step sizes satisfy this with
    two orders of magnitude to spare; a coarser grid aliases the series.
    """
    mags = np.abs(traj.comp_amps)
    if np.max(np.abs(mags[0] - 0.5)) > 1e-3:
        raise ValueError(
            "conditional phase requires the |++> dressed initial state "
            "(all four computational amplitudes of magnitude 1/2)"
        )
    if np.min(mags) < PHASE_FLOOR:
        step, state = np.unravel_index(int(np.argmin(mags)), mags.shape)
        label = ("00", "01", "10", "11")[state]
        raise ValueError(
            f"phase undefined: |{label}> amplitude vanished at step {step}"
        )
    phases = np.unwrap(np.angle(traj.comp_amps), axis=0)
    phases = phases - phases[0]
    phi_cz = phases[:, 3] + phases[:, 0] - phases[:, 1] - phases[:, 2]
    return ConditionalPhaseSeries(times=traj.times, phases=phases, phi_cz=phi_cz)


class TransferResult(NamedTuple):
    times: np.ndarray
    transfer_spec0: np.ndarray
    transfer_spec1: np.ndarray
    mismatch: np.ndarray


def population_transfer_and_mismatch(
    traj_spec0: Trajectory, traj_spec1: Trajectory
) -> TransferResult:
    """Driven-qubit transfer with the spectator in |0> versus |1>.

    The driven qubit is the shared schedule's target (0 for undriven
    schedules).  ``traj_spec0`` starts from dressed |00>, ``traj_spec1``
    from the spectator-excited computational state; the transfer curves
    are the driven qubit's excitation probabilities (P_00->01 and
    P_10->11 for a q0 drive), and the mismatch their pointwise absolute
    difference, zero exactly when the spectator decouples.
    """
    if not traj_spec0.schedule.matches(traj_spec1.schedule):
        raise ValueError("trajectories were run on different schedules")
    target = traj_spec0.schedule.target
    if target == 1:
        spec1_col, up0_col, up1_col = 1, 2, 3
    else:
        spec1_col, up0_col, up1_col = 2, 1, 3
    pops0 = traj_spec0.populations
    pops1 = traj_spec1.populations
    if abs(pops0[0, 0] - 1.0) > 1e-6 or abs(pops1[0, spec1_col] - 1.0) > 1e-6:
        raise ValueError(
            "spectator comparison needs initial states |00> and the "
            "spectator-excited computational state"
        )
    t0 = pops0[:, up0_col]
    t1 = pops1[:, up1_col]
    return TransferResult(
        times=traj_spec0.times,
        transfer_spec0=t0,
        transfer_spec1=t1,
        mismatch=np.abs(t0 - t1),
    )


@dataclass(frozen=True, eq=False)
class PopulationCurrentRecord:
    """Bare-basis populations and signed inter-state currents.

    Currents live on the midpoint grid where the Hamiltonian is defined;
    ``currents[p, k]`` is I_{m->n} at times_mid[k] for pairs[p] = (m, n),
    in 1/ns.  ``continuity_max_error`` is the worst deviation between the
    centered finite difference of each tracked population and its summed
    inflow, and ``continuity_tolerance`` the 5*(2*pi*E_max*dt)^2 bound it
    is checked against (E_max from a Gershgorin estimate of the largest
    Hamiltonian eigenvalue magnitude over the run).
    """

    times: np.ndarray
    times_mid: np.ndarray
    labels: tuple[tuple[int, int, int], ...]
    populations: np.ndarray
    pairs: tuple[tuple[tuple[int, int, int], tuple[int, int, int]], ...]
    currents: np.ndarray
    continuity_max_error: float
    continuity_tolerance: float
    e_max: float


def _tracked_coordinates(
    states: np.ndarray, labels: list[tuple[int, int, int]], threshold: float
) -> list[int]:
    peak = np.zeros(states.shape[1])
    for c0 in range(0, states.shape[0], _CHUNK_ROWS):
        block = states[c0 : c0 + _CHUNK_ROWS]
        peak = np.maximum(peak, np.max(np.abs(block) ** 2, axis=0))
    coords = [i for i in range(states.shape[1]) if peak[i] > threshold]
    coords.sort(key=lambda i: (sum(labels[i]), labels[i]))
    return coords


def population_currents(
    traj: Trajectory,
    tracked: Sequence[tuple[int, int, int]] | None = None,
    threshold: float = TRACKED_POPULATION_THRESHOLD,
) -> PopulationCurrentRecord:
    """Signed currents I_{m->n} = 2 * 2*pi * Im(psi_n^* H_nm psi_m).

    Tracked states default to every bare basis state whose population
    exceeds ``threshold`` at any recorded time, ordered by total
    excitation number and then lexicographically.  Midpoint states are
    approximated by the mean of adjacent boundary states (second-order
    accurate, matching the finite difference used in the continuity
    check).
    """
    if traj.states is None:
        raise ValueError(
            "population currents need stored states; propagate with store_states=True"
        )
    family = traj.family
    schedule = traj.schedule
    labels = family.labels
    if tracked is None:
        coords = _tracked_coordinates(traj.states, labels, threshold)
    else:
        index = {lab: i for i, lab in enumerate(labels)}
        coords = []
        for lab in tracked:
            if tuple(lab) not in index:
                raise ValueError(f"unknown basis label {tuple(lab)}")
            coords.append(index[tuple(lab)])
        coords.sort(key=lambda i: (sum(labels[i]), labels[i]))
    if not coords:
        raise ValueError("no tracked states above the population threshold")

    tracked_labels = tuple(labels[i] for i in coords)
    n_tracked = len(coords)
    k_steps = schedule.steps
    dt = schedule.dt
    populations = np.abs(traj.states[:, coords]) ** 2
    mid = 0.5 * (traj.states[:-1] + traj.states[1:])

    if traj.drive_frame == "lab":
        thetas = TWO_PI * schedule.carrier_freq * schedule.times_mid + schedule.theta
    else:
        thetas = np.full(k_steps, schedule.theta)
    driven = bool(np.any(schedule.amp != 0.0))
    lower = raiser = None
    if driven:
        lower, raiser = family.drive_pair(schedule.target, float(schedule.flux[0]))
    shift = None
    if traj.drive_frame == "envelope" and schedule.carrier_freq != 0.0:
        shift = schedule.carrier_freq * family.frame_generator(float(schedule.flux[0]))

    pair_list = list(combinations(range(n_tracked), 2))
    currents = np.empty((len(pair_list), k_steps))
    inflow = np.empty((k_steps, n_tracked))
    e_max = 0.0

    bounds = _segment_bounds(schedule.flux, schedule.amp, thetas)
    for s0, s1 in zip(bounds[:-1], bounds[1:]):
        h = family.hamiltonian(float(schedule.flux[s0]))
        if shift is not None:
            h = h - shift
        if driven and schedule.amp[s0] != 0.0:
            phase = np.exp(-1j * thetas[s0])
            h = h + (-0.5 * schedule.amp[s0]) * (phase * raiser + np.conj(phase) * lower)
        e_max = max(e_max, float(np.max(np.sum(np.abs(h), axis=1))))
        rows = h[coords, :]
        sub = rows[:, coords]
        block = mid[s0:s1]
        block_t = block[:, coords]
        # (steps, tracked) inflow Im(psi_n^* (H psi)_n)
        hpsi = block @ rows.T
        inflow[s0:s1] = 2.0 * TWO_PI * np.imag(np.conj(block_t) * hpsi)
        for p, (a, b) in enumerate(pair_list):
            currents[p, s0:s1] = (
                2.0 * TWO_PI * np.imag(np.conj(block_t[:, b]) * sub[b, a] * block_t[:, a])
            )

    fd = np.diff(populations, axis=0) / dt
    continuity_max_error = float(np.max(np.abs(fd - inflow)))
    tolerance = 5.0 * (TWO_PI * e_max * dt) ** 2
    return PopulationCurrentRecord(
        times=traj.times,
        times_mid=schedule.times_mid,
        labels=tracked_labels,
        populations=populations,
        pairs=tuple((tracked_labels[a], tracked_labels[b]) for a, b in pair_list),
        currents=currents,
        continuity_max_error=continuity_max_error,
        continuity_tolerance=float(tolerance),
        e_max=e_max,
    )
