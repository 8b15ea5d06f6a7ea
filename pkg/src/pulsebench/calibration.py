"""Static calibration of the reduced models against the circuit reference.

The pipeline per flux point: assign dressed eigenstates to the four
computational labels by overlap, Löwdin-project onto the computational
coordinates, and read off the dressed frequencies, the exchange coupling J,
and the residual ZZ strength zeta.  Sweeping flux and fitting the resulting
curves (harmonic fits for frequencies, a regularized inverse-detuning
surrogate for J and zeta) yields the parameter curves that drive the
effective and Duffing models.  Results serialize to a hashed JSON artifact.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.optimize import Bounds, least_squares, linear_sum_assignment, minimize

from .device import (
    DeviceParams,
    ModelHamiltonian,
    QubitParams,
    TruncationConfig,
    basis_labels,
    build_hamiltonian,
    duffing_matrix,
    ej_of_flux,
    transmon_charge_hamiltonian,
    truncate_to_eigenbasis,
)
from .linalg import Spectrum, eigh, lowdin_orthonormalize

__all__ = [
    "AssignmentMap",
    "StaticExtraction",
    "HarmonicFit",
    "SurrogateFit",
    "EffectiveCurves",
    "DuffingCurves",
    "CalibrationArtifact",
    "assign_dressed_states",
    "project_computational",
    "extract_static_quantities",
    "extract_from_model",
    "sweep_circuit",
    "fit_harmonic",
    "fit_surrogate",
    "calibrate_effective",
    "calibrate_duffing",
    "fingerprint_hash",
    "save_artifact",
    "load_artifact",
]

# Label order everywhere: (q1, q0) = (0,0), (0,1), (1,0), (1,1).
AMBIGUOUS_THRESHOLD = 0.5
WARN_THRESHOLD = 0.7

SURROGATE_EPS_BOUNDS = (1e-4, 5.0)
SURROGATE_EPS_STARTS = (0.01, 0.0316, 0.1, 0.316, 1.0)

REFINEMENT_BOUND = 0.15


@dataclass(frozen=True)
class AssignmentMap:
    """Dressed-eigenstate indices for the four computational labels.

    ``indices[i]`` is the eigenvector column assigned to label i in the
    order (00, 01, 10, 11); ``overlaps`` are overlap magnitudes with the
    bare states; ``comp_coords`` the flat coordinates of |q1, 0, q0>.
    """

    indices: tuple[int, int, int, int]
    overlaps: tuple[float, float, float, float]
    comp_coords: tuple[int, int, int, int]

    def __post_init__(self) -> None:
        if len(set(self.indices)) != 4:
            raise ValueError("assigned eigenstate indices must be distinct")


@dataclass(frozen=True)
class StaticExtraction:
    """Dressed computational quantities at one flux point (all GHz).

    ``energies`` are the four assigned dressed energies relative to the
    global dressed ground, in label order (00, 01, 10, 11); ``zeta`` must
    equal E00 - E01 - E10 + E11 of those stored energies.
    """

    phi: float
    energies: tuple[float, float, float, float]
    omega_tilde_1: float
    omega_tilde_0: float
    j: float
    zeta: float
    overlaps: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)

    def __post_init__(self) -> None:
        e = self.energies
        combo = e[0] - e[1] - e[2] + e[3]
        if abs(self.zeta - combo) > 1e-10:
            raise ValueError(
                f"zeta {self.zeta} inconsistent with stored energies (combination {combo})"
            )


def assign_dressed_states(
    spectrum: Spectrum, labels: Sequence[tuple[int, int, int]], phi: float | None = None
) -> AssignmentMap:
    """Map each computational label to a distinct dressed eigenstate.

    The assignment maximizes total squared overlap between the bare states
    |q1, 0, q0> and the eigenvector columns, which resolves conflicts that a
    per-label greedy argmax cannot.
    """
    labels = list(labels)
    comp_coords = []
    for q1, q0 in ((0, 0), (0, 1), (1, 0), (1, 1)):
        try:
            comp_coords.append(labels.index((q1, 0, q0)))
        except ValueError:
            raise ValueError(f"labels do not contain computational state ({q1},0,{q0})")
    table = np.abs(spectrum.vectors[comp_coords, :]) ** 2
    rows, cols = linear_sum_assignment(-table)
    indices = tuple(int(cols[list(rows).index(i)]) for i in range(4))
    overlaps = tuple(float(np.sqrt(table[i, indices[i]])) for i in range(4))
    if min(overlaps) < AMBIGUOUS_THRESHOLD:
        where = "unknown" if phi is None else format(phi, "g")
        raise ValueError(f"assignment ambiguous at flux {where}")
    if min(overlaps) < WARN_THRESHOLD:
        warnings.warn("computational-state overlap magnitude below 0.7", stacklevel=2)
    return AssignmentMap(indices=indices, overlaps=overlaps, comp_coords=tuple(comp_coords))


def project_computational(spectrum: Spectrum, amap: AssignmentMap) -> np.ndarray:
    """4x4 computational-subspace Hamiltonian from the assigned eigenpairs.

    Restricts the assigned eigenvectors to the computational coordinates,
    orthonormalizes them symmetrically, and rebuilds
    ``h4 = W diag(E) W^dag`` in the ordered bare basis, so the eigenvalues
    of h4 are exactly the assigned dressed energies.

    Each eigenvector is rephased so its own assigned coordinate is real
    positive.  The assignment threshold keeps that component at magnitude
    0.5 or more, so the gauge is well defined and varies smoothly with
    flux; without it the sign of the exchange element J flips wherever the
    dominant component of a hybridized state changes.
    """
    v4 = spectrum.vectors[np.ix_(amap.comp_coords, amap.indices)]
    diag = np.diagonal(v4).copy()
    diag[np.abs(diag) == 0] = 1.0
    v4 = v4 * (np.abs(diag) / diag)
    w = lowdin_orthonormalize(v4)
    energies = spectrum.energies[list(amap.indices)]
    return (w * energies) @ w.conj().T


def extract_static_quantities(
    h4: np.ndarray, energies: Sequence[float], phi: float = 0.0,
    overlaps: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0),
) -> StaticExtraction:
    """Read omega_tilde, J, and zeta off a projected Hamiltonian.

    zeta comes from the assigned energies (E00 - E01 - E10 + E11), J from
    the off-diagonal <01|h4|10>, and the dressed qubit frequencies from the
    h4 diagonal, omega_tilde_j = <1_j|h4|1_j> - <00|h4|00> + zeta/2.  Using
    the diagonal instead of raw eigenvalues keeps the extraction an exact
    inverse of the 4x4 model construction even at nonzero J.
    """
    e = tuple(float(x) for x in energies)
    zeta = e[0] - e[1] - e[2] + e[3]
    j = 0.5 * float(np.real(h4[1, 2]))
    d = np.real(np.diag(h4))
    omega_tilde_0 = float(d[1] - d[0]) + 0.5 * zeta
    omega_tilde_1 = float(d[2] - d[0]) + 0.5 * zeta
    return StaticExtraction(
        phi=float(phi),
        energies=e,
        omega_tilde_1=omega_tilde_1,
        omega_tilde_0=omega_tilde_0,
        j=j,
        zeta=zeta,
        overlaps=overlaps,
    )


def extract_from_model(model: ModelHamiltonian) -> StaticExtraction:
    """Assignment, projection, and extraction for one built model."""
    amap = assign_dressed_states(model.spectrum, model.labels, phi=model.phi)
    h4 = project_computational(model.spectrum, amap)
    ground = model.spectrum.energies[0]
    energies = tuple(float(model.spectrum.energies[k] - ground) for k in amap.indices)
    h4 = h4 - ground * np.eye(4)
    return extract_static_quantities(h4, energies, phi=model.phi, overlaps=amap.overlaps)


def sweep_circuit(
    device: DeviceParams, trunc: TruncationConfig, phis: Sequence[float]
) -> tuple[list[StaticExtraction], list[tuple[float, str]]]:
    """Extract static quantities from the circuit model over a flux grid.

    Flux points where the dressed-state assignment fails are recorded as
    (phi, message) failures and skipped; the sweep continues.
    """
    out: list[StaticExtraction] = []
    failures: list[tuple[float, str]] = []
    for phi in phis:
        model = build_hamiltonian("circuit", float(phi), device, trunc)
        try:
            out.append(extract_from_model(model))
        except ValueError as exc:
            failures.append((float(phi), str(exc)))
    return out, failures


@dataclass(frozen=True)
class HarmonicFit:
    """Truncated Fourier series c0 + sum_k (a_k cos 2*pi*k*phi + b_k sin ...)."""

    order: int
    c0: float
    a: tuple[float, ...]
    b: tuple[float, ...]
    rms_residual: float = 0.0

    def __call__(self, phi):
        phi = np.asarray(phi, dtype=float)
        out = np.full(phi.shape, self.c0)
        for k in range(1, self.order + 1):
            ang = 2.0 * np.pi * k * phi
            out = out + self.a[k - 1] * np.cos(ang) + self.b[k - 1] * np.sin(ang)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class SurrogateFit:
    """Regularized inverse-detuning curve for resonance-peaked quantities.

    f(phi) = offset + amplitude / sqrt(Delta(phi)^2 + epsilon^2) where
    Delta(phi) = omega_tilde_1_fit(phi) - omega_c.
    """

    amplitude: float
    epsilon: float
    offset: float
    omega_c: float
    omega_tilde_fit: HarmonicFit
    rms_residual: float = 0.0

    def __post_init__(self) -> None:
        if self.epsilon <= 0:
            raise ValueError("surrogate regularizer epsilon must be positive")

    def __call__(self, phi):
        delta = np.asarray(self.omega_tilde_fit(phi), dtype=float) - self.omega_c
        out = self.offset + self.amplitude / np.sqrt(delta**2 + self.epsilon**2)
        return out if out.ndim else float(out)


def fit_harmonic(phis, values, order: int = 4) -> HarmonicFit:
    """Linear least-squares fit of a 1-periodic harmonic series."""
    phis = np.asarray(phis, dtype=float)
    values = np.asarray(values, dtype=float)
    n_params = 2 * order + 1
    if phis.size < n_params or np.unique(phis).size < n_params:
        raise ValueError(
            f"insufficient flux coverage: need {n_params} distinct samples for order {order}, "
            f"got {np.unique(phis).size}"
        )
    cols = [np.ones_like(phis)]
    for k in range(1, order + 1):
        ang = 2.0 * np.pi * k * phis
        cols.append(np.cos(ang))
        cols.append(np.sin(ang))
    design = np.column_stack(cols)
    coeffs, _, rank, _ = np.linalg.lstsq(design, values, rcond=None)
    if rank < n_params:
        raise ValueError("insufficient flux coverage: rank-deficient design matrix")
    resid = design @ coeffs - values
    rms = float(np.sqrt(np.mean(resid**2)))
    return HarmonicFit(
        order=order,
        c0=float(coeffs[0]),
        a=tuple(float(coeffs[2 * k - 1]) for k in range(1, order + 1)),
        b=tuple(float(coeffs[2 * k]) for k in range(1, order + 1)),
        rms_residual=rms,
    )


def fit_surrogate(phis, values, omega_tilde_fit: HarmonicFit, omega_c: float) -> SurrogateFit:
    """Bounded multi-start least squares of the inverse-detuning surrogate.

    Starts share offset = median and an amplitude consistent with the most
    extremal sample; epsilon starts ladder across its allowed range.  Fails
    only when no start matches at least the best constant fit.
    """
    phis = np.asarray(phis, dtype=float)
    values = np.asarray(values, dtype=float)
    if phis.size < 8:
        raise ValueError("surrogate fit failed: need at least 8 samples")
    delta = np.asarray(omega_tilde_fit(phis), dtype=float) - omega_c

    def residual(p):
        amp, eps, off = p
        return off + amp / np.sqrt(delta**2 + eps**2) - values

    offset0 = float(np.median(values))
    ext = int(np.argmax(np.abs(values - offset0)))
    baseline = float(np.sqrt(np.mean((values - np.mean(values)) ** 2)))
    lo = [-np.inf, SURROGATE_EPS_BOUNDS[0], -np.inf]
    hi = [np.inf, SURROGATE_EPS_BOUNDS[1], np.inf]
    best = None
    for eps0 in SURROGATE_EPS_STARTS:
        amp0 = (values[ext] - offset0) * np.sqrt(delta[ext] ** 2 + eps0**2)
        try:
            res = least_squares(
                residual, x0=[amp0, eps0, offset0], bounds=(lo, hi), method="trf"
            )
        except Exception:
            continue
        rms = float(np.sqrt(np.mean(res.fun**2)))
        if best is None or rms < best[0]:
            best = (rms, res.x)
    if best is None or best[0] > baseline * (1.0 + 1e-9) + 1e-12:
        raise ValueError(
            f"surrogate fit failed: best residual {np.inf if best is None else best[0]:.3e} "
            f"does not beat constant baseline {baseline:.3e}"
        )
    rms, (amp, eps, off) = best
    return SurrogateFit(
        amplitude=float(amp),
        epsilon=float(eps),
        offset=float(off),
        omega_c=float(omega_c),
        omega_tilde_fit=omega_tilde_fit,
        rms_residual=rms,
    )


@dataclass(frozen=True)
class EffectiveCurves:
    """Calibrated flux curves of the 4x4 model: dressed frequencies via
    harmonic fits, J and zeta via surrogate fits (harmonic on fallback)."""

    omega_tilde_1_fit: HarmonicFit
    omega_tilde_0_fit: HarmonicFit
    j_fit: SurrogateFit | HarmonicFit
    zeta_fit: SurrogateFit | HarmonicFit
    residuals: dict = field(default_factory=dict)
    flags: tuple[str, ...] = ()

    def omega_tilde(self, qubit: int, phi) -> float:
        fit = self.omega_tilde_1_fit if qubit == 1 else self.omega_tilde_0_fit
        return fit(phi)

    def j(self, phi) -> float:
        return self.j_fit(phi)

    def zeta(self, phi) -> float:
        return self.zeta_fit(phi)


@dataclass(frozen=True)
class DuffingCurves:
    """Calibrated flux curves of the Duffing model (all harmonic fits)."""

    omega_1_fit: HarmonicFit
    alpha_1_fit: HarmonicFit
    omega_0_fit: HarmonicFit
    alpha_0_fit: HarmonicFit
    residuals: dict = field(default_factory=dict)
    flags: tuple[str, ...] = ()

    def omega(self, qubit: int, phi) -> float:
        fit = self.omega_1_fit if qubit == 1 else self.omega_0_fit
        return fit(phi)

    def alpha(self, qubit: int, phi) -> float:
        fit = self.alpha_1_fit if qubit == 1 else self.alpha_0_fit
        return fit(phi)


def calibrate_effective(
    extractions: Sequence[StaticExtraction], omega_c: float, order: int = 4
) -> EffectiveCurves:
    """Fit the effective-model parameter curves to a circuit sweep."""
    phis = [x.phi for x in extractions]
    flags: list[str] = []
    w1_fit = fit_harmonic(phis, [x.omega_tilde_1 for x in extractions], order)
    w0_fit = fit_harmonic(phis, [x.omega_tilde_0 for x in extractions], order)

    def peaked_fit(name, values):
        try:
            return fit_surrogate(phis, values, w1_fit, omega_c)
        except ValueError as exc:
            if "surrogate fit failed" not in str(exc):
                raise
            flags.append(f"{name} fit fell back to harmonic: {exc}")
            return fit_harmonic(phis, values, order)

    j_fit = peaked_fit("j", [x.j for x in extractions])
    zeta_fit = peaked_fit("zeta", [x.zeta for x in extractions])
    residuals = {
        "omega_tilde_1": w1_fit.rms_residual,
        "omega_tilde_0": w0_fit.rms_residual,
        "j": j_fit.rms_residual,
        "zeta": zeta_fit.rms_residual,
    }
    return EffectiveCurves(
        omega_tilde_1_fit=w1_fit,
        omega_tilde_0_fit=w0_fit,
        j_fit=j_fit,
        zeta_fit=zeta_fit,
        residuals=residuals,
        flags=tuple(flags),
    )


def transmon_levels(qubit: QubitParams, phi: float, n_q: int, n_levels: int = 3) -> np.ndarray:
    """Lowest levels of one bare transmon at flux, relative to its ground."""
    ej = ej_of_flux(qubit.ej_max, phi, qubit.d)
    h, n_hat = transmon_charge_hamiltonian(ej, qubit.ec, n_q, qubit.n_g)
    energies, _ = truncate_to_eigenbasis(h, n_hat, n_levels)
    return energies


def _extract_duffing(params, device: DeviceParams, n_duff: int, phi: float):
    """StaticExtraction of a candidate Duffing model; None when ambiguous."""
    w1, a1, w0, a0 = params
    h = duffing_matrix(w1, a1, w0, a0, device.omega_c, device.q1.g, device.q0.g, n_duff)
    spec = eigh(h, check=False)
    spec = Spectrum(spec.energies - spec.energies[0], spec.vectors)
    labels = basis_labels((n_duff, n_duff, n_duff))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            amap = assign_dressed_states(spec, labels, phi=phi)
        except ValueError:
            return None
    h4 = project_computational(spec, amap)
    energies = tuple(float(spec.energies[k]) for k in amap.indices)
    return extract_static_quantities(h4, energies, phi=phi, overlaps=amap.overlaps)


def _refinement_objective(extraction: StaticExtraction | None, target: StaticExtraction) -> float:
    if extraction is None:
        return 1e6
    de = np.array(extraction.energies) - np.array(target.energies)
    return float(np.mean(de**2) + (extraction.j - target.j) ** 2 + (extraction.zeta - target.zeta) ** 2)


def calibrate_duffing(
    device: DeviceParams,
    trunc: TruncationConfig,
    phis: Sequence[float],
    targets: Sequence[StaticExtraction] | None = None,
    order: int = 4,
) -> DuffingCurves:
    """Three-stage Duffing calibration against the circuit reference.

    Stage 1 takes pointwise (omega_j, alpha_j) from bare transmon spectra;
    stage 2 refines each flux point inside a +-0.15 GHz box so the Duffing
    static quantities match the circuit extraction; stage 3 compresses the
    refined samples into harmonic fits.  Points whose refinement cannot
    improve on stage 1, or with no circuit target, keep stage-1 values and
    are flagged.
    """
    phis = [float(p) for p in phis]
    if targets is None:
        targets, _ = sweep_circuit(device, trunc, phis)
    target_by_phi = {t.phi: t for t in targets}

    flags: list[str] = []
    refined = np.zeros((len(phis), 4))
    stage1 = np.zeros((len(phis), 4))
    e0_q0 = transmon_levels(device.q0, 0.0, trunc.n_q)
    for i, phi in enumerate(phis):
        e1 = transmon_levels(device.q1, phi, trunc.n_q)
        x0 = np.array([e1[1], e1[2] - 2 * e1[1], e0_q0[1], e0_q0[2] - 2 * e0_q0[1]])
        stage1[i] = x0
        target = target_by_phi.get(phi)
        if target is None:
            refined[i] = x0
            flags.append(f"phi={phi:g}: no circuit target, kept stage-1 values")
            continue

        def objective(x):
            return _refinement_objective(
                _extract_duffing(x, device, trunc.n_duff, phi), target
            )

        f0 = objective(x0)
        bounds = Bounds(x0 - REFINEMENT_BOUND, x0 + REFINEMENT_BOUND)
        res = minimize(
            objective,
            x0,
            method="Nelder-Mead",
            bounds=bounds,
            options={"xatol": 1e-7, "fatol": 1e-13, "maxiter": 400},
        )
        if res.fun < f0:
            refined[i] = res.x
        else:
            refined[i] = x0
            if res.fun > f0:
                flags.append(f"phi={phi:g}: refinement worsened objective, kept stage-1 values")

    fits = {}
    for col, name in enumerate(("omega_1", "alpha_1", "omega_0", "alpha_0")):
        fits[name] = fit_harmonic(phis, refined[:, col], order)
    for name in ("alpha_1", "alpha_0"):
        if np.any(np.asarray(fits[name](np.asarray(phis))) >= 0.0):
            raise ValueError(f"calibrated {name} is not negative across the flux range")
    residuals = {name: fit.rms_residual for name, fit in fits.items()}
    return DuffingCurves(
        omega_1_fit=fits["omega_1"],
        alpha_1_fit=fits["alpha_1"],
        omega_0_fit=fits["omega_0"],
        alpha_0_fit=fits["alpha_0"],
        residuals=residuals,
        flags=tuple(flags),
    )


ARTIFACT_VERSION = 1


def _canonical_bytes(payload) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()


def fingerprint_hash(device: DeviceParams, trunc: TruncationConfig) -> str:
    """Stable hash of the device and truncation a calibration belongs to."""
    return hashlib.sha256(_canonical_bytes(_fingerprint_dict(device, trunc))).hexdigest()


def _fingerprint_dict(device: DeviceParams, trunc: TruncationConfig) -> dict:
    def qubit_dict(q: QubitParams) -> dict:
        return {"ej_max": q.ej_max, "ec": q.ec, "g": q.g, "d": q.d, "n_g": q.n_g}

    return {
        "q1": qubit_dict(device.q1),
        "q0": qubit_dict(device.q0),
        "omega_c": device.omega_c,
        "kappa": device.kappa,
        "n_q": trunc.n_q,
        "n_eq": trunc.n_eq,
        "n_ec": trunc.n_ec,
        "n_duff": trunc.n_duff,
    }


def _fit_to_dict(fit) -> dict:
    if isinstance(fit, HarmonicFit):
        return {
            "form": "harmonic",
            "order": fit.order,
            "c0": fit.c0,
            "a": list(fit.a),
            "b": list(fit.b),
            "rms_residual": fit.rms_residual,
        }
    if isinstance(fit, SurrogateFit):
        return {
            "form": "surrogate",
            "amplitude": fit.amplitude,
            "epsilon": fit.epsilon,
            "offset": fit.offset,
            "omega_c": fit.omega_c,
            "omega_tilde_fit": _fit_to_dict(fit.omega_tilde_fit),
            "rms_residual": fit.rms_residual,
        }
    raise TypeError(f"unknown fit type {type(fit)!r}")


def _fit_from_dict(d: dict):
    if d["form"] == "harmonic":
        return HarmonicFit(
            order=int(d["order"]),
            c0=float(d["c0"]),
            a=tuple(float(x) for x in d["a"]),
            b=tuple(float(x) for x in d["b"]),
            rms_residual=float(d["rms_residual"]),
        )
    if d["form"] == "surrogate":
        return SurrogateFit(
            amplitude=float(d["amplitude"]),
            epsilon=float(d["epsilon"]),
            offset=float(d["offset"]),
            omega_c=float(d["omega_c"]),
            omega_tilde_fit=_fit_from_dict(d["omega_tilde_fit"]),
            rms_residual=float(d["rms_residual"]),
        )
    raise ValueError(f"unknown fit form {d.get('form')!r}")


@dataclass(frozen=True)
class CalibrationArtifact:
    """Loaded calibration: parameter curves plus provenance metadata."""

    version: int
    effective: EffectiveCurves
    duffing: DuffingCurves
    flux_grid: tuple[float, ...]
    failures: tuple[tuple[float, str], ...]
    device_hash: str
    content_hash: str


def save_artifact(
    path,
    effective: EffectiveCurves,
    duffing: DuffingCurves,
    device: DeviceParams,
    trunc: TruncationConfig,
    flux_grid: Sequence[float],
    failures: Sequence[tuple[float, str]] = (),
) -> str:
    """Write a hashed, human-readable calibration artifact; returns its
    content hash.  Identical inputs produce byte-identical files."""
    payload = {
        "version": ARTIFACT_VERSION,
        "fingerprint": _fingerprint_dict(device, trunc),
        "device_hash": fingerprint_hash(device, trunc),
        "flux_grid": [float(p) for p in flux_grid],
        "failures": [[float(p), str(m)] for p, m in failures],
        "effective": {
            "omega_tilde_1": _fit_to_dict(effective.omega_tilde_1_fit),
            "omega_tilde_0": _fit_to_dict(effective.omega_tilde_0_fit),
            "j": _fit_to_dict(effective.j_fit),
            "zeta": _fit_to_dict(effective.zeta_fit),
            "residuals": dict(effective.residuals),
            "flags": list(effective.flags),
        },
        "duffing": {
            "omega_1": _fit_to_dict(duffing.omega_1_fit),
            "alpha_1": _fit_to_dict(duffing.alpha_1_fit),
            "omega_0": _fit_to_dict(duffing.omega_0_fit),
            "alpha_0": _fit_to_dict(duffing.alpha_0_fit),
            "residuals": dict(duffing.residuals),
            "flags": list(duffing.flags),
        },
    }
    content_hash = hashlib.sha256(_canonical_bytes(payload)).hexdigest()
    payload["content_hash"] = content_hash
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return content_hash


def load_artifact(path) -> CalibrationArtifact:
    """Load and verify a calibration artifact; rejects tampered content."""
    with open(path) as fh:
        payload = json.load(fh)
    stored_hash = payload.pop("content_hash", None)
    if stored_hash is None:
        raise ValueError("artifact hash mismatch: content hash missing")
    actual = hashlib.sha256(_canonical_bytes(payload)).hexdigest()
    if actual != stored_hash:
        raise ValueError("artifact hash mismatch: content does not match its hash")
    if payload["version"] != ARTIFACT_VERSION:
        raise ValueError(f"unsupported artifact version {payload['version']}")
    eff = payload["effective"]
    duf = payload["duffing"]
    effective = EffectiveCurves(
        omega_tilde_1_fit=_fit_from_dict(eff["omega_tilde_1"]),
        omega_tilde_0_fit=_fit_from_dict(eff["omega_tilde_0"]),
        j_fit=_fit_from_dict(eff["j"]),
        zeta_fit=_fit_from_dict(eff["zeta"]),
        residuals=dict(eff["residuals"]),
        flags=tuple(eff["flags"]),
    )
    duffing = DuffingCurves(
        omega_1_fit=_fit_from_dict(duf["omega_1"]),
        alpha_1_fit=_fit_from_dict(duf["alpha_1"]),
        omega_0_fit=_fit_from_dict(duf["omega_0"]),
        alpha_0_fit=_fit_from_dict(duf["alpha_0"]),
        residuals=dict(duf["residuals"]),
        flags=tuple(duf["flags"]),
    )
    return CalibrationArtifact(
        version=int(payload["version"]),
        effective=effective,
        duffing=duffing,
        flux_grid=tuple(float(p) for p in payload["flux_grid"]),
        failures=tuple((float(p), str(m)) for p, m in payload["failures"]),
        device_hash=str(payload["device_hash"]),
        content_hash=stored_hash,
    )
