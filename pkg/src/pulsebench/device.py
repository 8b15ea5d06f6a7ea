"""Device Hamiltonians for two flux-tunable transmons coupled by a harmonic bus.

Three model tiers share one parameter set and one subsystem ordering
|q1, bus, q0> (q0 least significant):

* ``effective`` - a 4x4 two-qubit model with exchange and ZZ terms, built
  from calibrated flux curves;
* ``duffing`` - three Duffing/harmonic modes with excitation-conserving
  qubit-bus coupling;
* ``circuit`` - transmons built in the charge basis, truncated to their
  eigenbasis per flux, with a charge-type qubit-bus coupling.

Qubit q1 carries the tunable junction; q0 sits at zero flux bias.  Energies
are GHz, flux is in units of the flux quantum.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Sequence

import numpy as np

from .linalg import Spectrum, check_hermitian, eigh, embed_operator

__all__ = [
    "QubitParams",
    "DeviceParams",
    "TruncationConfig",
    "ModelHamiltonian",
    "MODEL_KINDS",
    "default_device",
    "ej_of_flux",
    "transmon_charge_hamiltonian",
    "charge_number_operator",
    "truncate_to_eigenbasis",
    "basis_labels",
    "flat_index",
    "computational_indices",
    "model_dims",
    "effective_matrix",
    "duffing_matrix",
    "circuit_matrix",
    "bosonic_lowering",
    "nearest_level_lowering",
    "assemble_drift",
    "build_hamiltonian",
    "drive_operator",
    "number_operator",
]

MODEL_KINDS = ("effective", "duffing", "circuit")

# Offsets of the four computational labels |q1, 0, q0>, in the fixed order
# (0,0), (0,1), (1,0), (1,1) of (q1, q0).
COMP_QUBIT_LABELS = ((0, 0), (0, 1), (1, 0), (1, 1))


@dataclass(frozen=True)
class QubitParams:
    """Single-transmon parameters (all GHz except the dimensionless d, n_g)."""

    ej_max: float
    ec: float
    g: float
    d: float = 0.0
    n_g: float = 0.0

    def __post_init__(self) -> None:
        if self.ej_max <= 0 or self.ec <= 0:
            raise ValueError("qubit parameters: ej_max and ec must be positive")
        if not 0.0 <= self.d <= 1.0:
            raise ValueError("qubit parameters: junction asymmetry d must lie in [0, 1]")
        if self.ej_max / self.ec < 10.0:
            warnings.warn(
                f"ej_max/ec = {self.ej_max / self.ec:.1f} is outside the transmon regime",
                stacklevel=2,
            )


@dataclass(frozen=True)
class DeviceParams:
    """Two transmons and one harmonic bus.

    ``kappa`` (bus linewidth, GHz) is recorded for provenance only; the
    propagation model is closed, so it enters no generator.
    """

    q1: QubitParams
    q0: QubitParams
    omega_c: float
    kappa: float = 0.001

    def __post_init__(self) -> None:
        if self.omega_c <= 0:
            raise ValueError("device parameters: omega_c must be positive")

    def qubit(self, j: int) -> QubitParams:
        if j == 1:
            return self.q1
        if j == 0:
            return self.q0
        raise ValueError(f"qubit index must be 0 or 1, got {j}")


def default_device() -> DeviceParams:
    """Production device parameters used by all benchmarks by default."""
    return DeviceParams(
        q1=QubitParams(ej_max=28.48, ec=0.317, g=0.183),
        q0=QubitParams(ej_max=42.34, ec=0.297, g=0.199),
        omega_c=6.902,
        kappa=0.001,
    )


@dataclass(frozen=True)
class TruncationConfig:
    """Basis sizes: charge basis per transmon, kept transmon levels, bus
    levels, and levels per mode of the Duffing model."""

    n_q: int = 23
    n_eq: int = 9
    n_ec: int = 6
    n_duff: int = 3

    def __post_init__(self) -> None:
        if self.n_q < 3 or self.n_q % 2 == 0:
            raise ValueError("charge basis must be symmetric: n_q must be odd and >= 3")
        if not 2 <= self.n_eq <= self.n_q:
            raise ValueError(f"n_eq must lie in [2, n_q], got {self.n_eq}")
        if self.n_ec < 2:
            raise ValueError(f"n_ec must be >= 2, got {self.n_ec}")
        if self.n_duff < 2:
            raise ValueError(f"n_duff must be >= 2, got {self.n_duff}")


def ej_of_flux(ej_max: float, phi, d: float = 0.0):
    """Flux-tuned Josephson energy of an asymmetric SQUID.

    ``EJ(phi) = ej_max * sqrt(cos^2(pi phi) + d^2 sin^2(pi phi))``; periodic
    with period 1 and even in phi.
    """
    if ej_max <= 0:
        raise ValueError("ej_max must be positive")
    if not 0.0 <= d <= 1.0:
        raise ValueError("junction asymmetry d must lie in [0, 1]")
    phi = np.asarray(phi, dtype=float)
    c = np.cos(np.pi * phi)
    s = np.sin(np.pi * phi)
    out = ej_max * np.sqrt(c * c + d * d * s * s)
    return out if out.ndim else float(out)


def charge_number_operator(n_q: int) -> np.ndarray:
    """Diagonal Cooper-pair number operator on the symmetric charge grid."""
    if n_q < 3 or n_q % 2 == 0:
        raise ValueError("charge basis must be symmetric: n_q must be odd and >= 3")
    ncut = n_q // 2
    return np.diag(np.arange(-ncut, ncut + 1, dtype=float))


def transmon_charge_hamiltonian(
    ej: float, ec: float, n_q: int, n_g: float = 0.0
) -> tuple[np.ndarray, np.ndarray]:
    """Single transmon in the charge basis, paired with its charge operator.

    Returns ``(h, n_hat)``: ``4 ec (n - n_g)^2`` on the diagonal of ``h``,
    ``-ej/2`` on the first off-diagonals; basis n = -n_q//2 .. +n_q//2, and
    ``n_hat`` the diagonal Cooper-pair number operator on the same grid.
    """
    if ec <= 0:
        raise ValueError("ec must be positive")
    if ej < 0:
        raise ValueError("ej must be non-negative")
    n_hat = charge_number_operator(n_q)
    n = np.diag(n_hat)
    h = np.diag(4.0 * ec * (n - n_g) ** 2)
    off = -0.5 * ej * np.ones(n_q - 1)
    h += np.diag(off, 1) + np.diag(off, -1)
    return h, n_hat


def truncate_to_eigenbasis(
    h: np.ndarray, n_hat: np.ndarray, n_keep: int
) -> tuple[np.ndarray, np.ndarray]:
    """Diagonalize a transmon and project its charge operator onto the
    lowest levels.

    Returns ``(energies, n_proj)``: the lowest ``n_keep`` eigenvalues shifted
    so ``energies[0] = 0``, and ``n_proj[a, b] = <a| n_hat |b>`` in the kept
    eigenbasis.

    Eigenvector signs are chosen so the nearest-level elements
    ``n_proj[k, k+1]`` are non-negative.  Any fixed per-vector convention
    would do for a single diagonalization, but this one varies smoothly
    with flux; conventions tied to the wavefunction shape flip sign as the
    levels deform, which would scramble the sign of coupling elements in
    operators assembled from n_proj across a flux sweep.
    """
    h = np.asarray(h, dtype=float)
    dim = h.shape[0]
    if not 1 <= n_keep <= dim:
        raise ValueError(f"cannot keep {n_keep} of {dim} levels")
    spec = eigh(h)
    v = spec.vectors[:, :n_keep]
    energies = spec.energies[:n_keep] - spec.energies[0]
    n_proj = v.conj().T @ (np.asarray(n_hat) @ v)
    signs = np.ones(n_keep)
    for k in range(n_keep - 1):
        if np.real(n_proj[k, k + 1]) * signs[k] < 0:
            signs[k + 1] = -1.0
    n_proj = signs[:, None] * n_proj * signs[None, :]
    return energies, n_proj


def bosonic_lowering(n: int) -> np.ndarray:
    """Truncated bosonic lowering operator, sqrt(k) on the superdiagonal."""
    return np.diag(np.sqrt(np.arange(1.0, n)), 1)


def nearest_level_lowering(n_proj: np.ndarray) -> np.ndarray:
    """Lowering operator distilled from a projected charge operator.

    Keeps only the nearest-level lowering part |k><k+1| of ``n_proj`` (its
    diagonal dropped) and rescales so ``<0|a|1> = 1`` exactly, reproducing
    the two-level convention a = |0><1|.  Dividing by the signed element is
    a gauge choice; higher-level magnitudes are unaffected.
    """
    n = n_proj.shape[0]
    elems = np.array([n_proj[k, k + 1] for k in range(n - 1)])
    if np.abs(elems[0]) == 0.0:
        raise ValueError("charge operator has no 0-1 matrix element")
    return np.diag(elems / elems[0], 1)


def basis_labels(dims: Sequence[int]) -> list[tuple[int, int, int]]:
    """(q1, bus, q0) occupation labels in flat index order."""
    d1, dc, d0 = dims
    return [(i, j, k) for i in range(d1) for j in range(dc) for k in range(d0)]


def flat_index(label: Sequence[int], dims: Sequence[int]) -> int:
    f = 0
    for d, i in zip(dims, label):
        if not 0 <= i < d:
            raise ValueError(f"label {tuple(label)} outside dims {tuple(dims)}")
        f = f * d + i
    return f


def computational_indices(dims: Sequence[int]) -> list[int]:
    """Flat indices of |q1, 0, q0> for (q1, q0) in ((0,0), (0,1), (1,0), (1,1))."""
    return [flat_index((a, 0, b), dims) for a, b in COMP_QUBIT_LABELS]


@dataclass
class ModelHamiltonian:
    """A drift Hamiltonian of one model tier at a fixed flux bias.

    ``drift`` is Hermitian (GHz) with the dressed ground energy shifted to
    zero; ``ground_shift`` is the energy that was subtracted.  The cached
    ``spectrum`` belongs to the shifted drift.
    """

    kind: str
    phi: float
    dims: tuple[int, int, int]
    drift: np.ndarray
    ground_shift: float
    _spectrum: Spectrum | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def labels(self) -> list[tuple[int, int, int]]:
        return basis_labels(self.dims)

    @property
    def spectrum(self) -> Spectrum:
        if self._spectrum is None:
            self._spectrum = eigh(self.drift)
        return self._spectrum

    @property
    def energies_rel_ground(self) -> np.ndarray:
        s = self.spectrum
        return s.energies - s.energies[0]


def effective_matrix(omega1: float, omega0: float, j: float, zeta: float) -> np.ndarray:
    """4x4 two-qubit drift: single-qubit splittings, exchange, and ZZ terms.

    Basis order |q1 q0> = |00>, |01>, |10>, |11>.  Sign convention: the
    excited state of each qubit lies ``omega_tilde`` above its ground state,
    so the splitting terms read (omega/2) diag(-1, +1) per qubit.
    """
    sz = np.diag([-1.0, 1.0])
    sx = np.array([[0.0, 1.0], [1.0, 0.0]])
    sy = np.array([[0.0, -1.0j], [1.0j, 0.0]])
    dims = (2, 1, 2)
    z1 = embed_operator(sz, 0, dims)
    z0 = embed_operator(sz, 2, dims)
    h = 0.5 * omega1 * z1 + 0.5 * omega0 * z0 + 0.25 * zeta * (z1 @ z0)
    h = h + j * (
        embed_operator(sx, 0, dims) @ embed_operator(sx, 2, dims)
        + embed_operator(sy, 0, dims) @ embed_operator(sy, 2, dims)
    )
    return h


def duffing_matrix(
    omega1: float,
    alpha1: float,
    omega0: float,
    alpha0: float,
    omega_c: float,
    g1: float,
    g0: float,
    n: int,
) -> np.ndarray:
    """Three Duffing/harmonic modes with excitation-conserving coupling."""
    k = np.arange(n, dtype=float)
    num = np.diag(k)
    anh = np.diag(0.5 * k * (k - 1.0))
    low = bosonic_lowering(n)
    dims = (n, n, n)
    h = (
        embed_operator(omega1 * num + alpha1 * anh, 0, dims)
        + embed_operator(omega_c * num, 1, dims)
        + embed_operator(omega0 * num + alpha0 * anh, 2, dims)
    )
    a1 = embed_operator(low, 0, dims)
    a0 = embed_operator(low, 2, dims)
    ac = embed_operator(low, 1, dims)
    h = h + g1 * (a1.conj().T @ ac + ac.conj().T @ a1)
    h = h + g0 * (a0.conj().T @ ac + ac.conj().T @ a0)
    return h


@lru_cache(maxsize=64)
def _transmon_eigenbasis_cached(
    ej: float, ec: float, n_q: int, n_keep: int, n_g: float
) -> tuple[np.ndarray, np.ndarray]:
    h, n_hat = transmon_charge_hamiltonian(ej, ec, n_q, n_g)
    energies, n_proj = truncate_to_eigenbasis(h, n_hat, n_keep)
    energies.setflags(write=False)
    n_proj.setflags(write=False)
    return energies, n_proj


def circuit_matrix(device: DeviceParams, trunc: TruncationConfig, phi: float) -> np.ndarray:
    """Charge-basis circuit model projected onto per-flux transmon eigenbases.

    The qubit-bus term is ``g_j n_j (a_c + a_c^dag)`` with each projected
    charge operator rescaled by its own |<0|n|1>| so the Table-scale g values
    set the physical 0-1 coupling for every model tier alike.
    """
    q1, q0 = device.q1, device.q0
    e1, n1 = _transmon_eigenbasis_cached(
        ej_of_flux(q1.ej_max, phi, q1.d), q1.ec, trunc.n_q, trunc.n_eq, q1.n_g
    )
    e0, n0 = _transmon_eigenbasis_cached(
        ej_of_flux(q0.ej_max, 0.0, q0.d), q0.ec, trunc.n_q, trunc.n_eq, q0.n_g
    )
    s1 = np.abs(n1[0, 1])
    s0 = np.abs(n0[0, 1])
    if s1 == 0.0 or s0 == 0.0:
        raise ValueError("charge operator has no 0-1 matrix element")
    low_c = bosonic_lowering(trunc.n_ec)
    x_c = low_c + low_c.conj().T
    # Assembled from three-factor Kronecker products of the small per-mode
    # operators; embedding each factor at full dimension and multiplying
    # costs dim^3 per coupling term, which dominates ramp schedules that
    # rebuild the drift at thousands of flux values.
    eye_q = np.eye(trunc.n_eq)
    h = (q1.g / s1) * np.kron(np.kron(n1, x_c), eye_q)
    h = h + (q0.g / s0) * np.kron(np.kron(eye_q, x_c), n0)
    mode_energies = (
        e1[:, None, None]
        + device.omega_c * np.arange(trunc.n_ec, dtype=float)[None, :, None]
        + e0[None, None, :]
    )
    h[np.diag_indices_from(h)] += mode_energies.ravel()
    return h


def model_dims(kind: str, trunc: TruncationConfig) -> tuple[int, int, int]:
    if kind == "effective":
        return (2, 1, 2)
    if kind == "duffing":
        return (trunc.n_duff, trunc.n_duff, trunc.n_duff)
    if kind == "circuit":
        return (trunc.n_eq, trunc.n_ec, trunc.n_eq)
    raise ValueError(f"unknown model kind {kind!r}")


def assemble_drift(
    kind: str,
    phi: float,
    device: DeviceParams,
    trunc: TruncationConfig,
    curves=None,
) -> np.ndarray:
    """Drift matrix of one model tier at flux ``phi``, without the dressed
    ground shift.

    Duffing and circuit mode energies are zero-referenced per mode; the
    effective tier uses the symmetric Pauli form.  The propagation engine
    uses this unshifted assembly directly (identity shifts are a pure
    gauge); :func:`build_hamiltonian` adds the exact dressed-ground shift
    for spectral work.
    """
    if kind == "effective":
        if curves is None:
            raise ValueError("model not calibrated: effective tier needs flux curves")
        return effective_matrix(
            curves.omega_tilde(1, phi),
            curves.omega_tilde(0, phi),
            curves.j(phi),
            curves.zeta(phi),
        )
    if kind == "duffing":
        if curves is None:
            raise ValueError("model not calibrated: duffing tier needs flux curves")
        return duffing_matrix(
            curves.omega(1, phi),
            curves.alpha(1, phi),
            curves.omega(0, phi),
            curves.alpha(0, phi),
            device.omega_c,
            device.q1.g,
            device.q0.g,
            trunc.n_duff,
        )
    if kind == "circuit":
        return circuit_matrix(device, trunc, phi)
    raise ValueError(f"unknown model kind {kind!r}")


def build_hamiltonian(
    kind: str,
    phi: float,
    device: DeviceParams,
    trunc: TruncationConfig,
    curves=None,
) -> ModelHamiltonian:
    """Build one model tier at flux ``phi`` with its dressed ground at zero."""
    drift = assemble_drift(kind, phi, device, trunc, curves)
    drift = check_hermitian(drift)
    spec = eigh(drift, check=False)
    shift = float(spec.energies[0])
    dim = drift.shape[0]
    drift_shifted = drift - shift * np.eye(dim)
    spec_shifted = Spectrum(spec.energies - shift, spec.vectors)
    return ModelHamiltonian(
        kind=kind,
        phi=float(phi),
        dims=model_dims(kind, trunc),
        drift=drift_shifted,
        ground_shift=shift,
        _spectrum=spec_shifted,
    )


def drive_operator(
    kind: str,
    qubit: int,
    device: DeviceParams,
    trunc: TruncationConfig,
    phi: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Embedded (lowering, raising) pair for a charge drive on one qubit.

    The drive Hamiltonian at time t is
    ``-A(t)/2 * (exp(-i theta(t)) a^dag + exp(+i theta(t)) a)``.
    Normalization |<0|a|1>| = 1 in every tier, so a drive amplitude means the
    same 0-1 Rabi scale in all three models.
    """
    if qubit not in (0, 1):
        raise ValueError(f"qubit index must be 0 or 1, got {qubit}")
    dims = model_dims(kind, trunc)
    slot = 0 if qubit == 1 else 2
    if kind == "effective":
        low = np.array([[0.0, 1.0], [0.0, 0.0]])
    elif kind == "duffing":
        low = bosonic_lowering(trunc.n_duff)
    elif kind == "circuit":
        q = device.qubit(qubit)
        flux = phi if qubit == 1 else 0.0
        _, n_proj = _transmon_eigenbasis_cached(
            ej_of_flux(q.ej_max, flux, q.d), q.ec, trunc.n_q, trunc.n_eq, q.n_g
        )
        low = nearest_level_lowering(n_proj)
    else:
        raise ValueError(f"unknown model kind {kind!r}")
    lower = embed_operator(low, slot, dims)
    return lower, lower.conj().T


def number_operator(kind: str, trunc: TruncationConfig) -> np.ndarray:
    """Total excitation number, used as the co-rotating frame generator."""
    dims = model_dims(kind, trunc)
    total = np.zeros((int(np.prod(dims)), int(np.prod(dims))))
    for slot, d in enumerate(dims):
        total += embed_operator(np.diag(np.arange(d, dtype=float)), slot, dims)
    return total
