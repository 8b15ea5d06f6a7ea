"""Dense linear algebra for small closed quantum systems.

Energies are linear frequencies in GHz and times are in ns throughout the
package.  The conversion factor 2*pi between linear frequency and phase is
applied in exactly one place, :func:`unitary_step` (and its Krylov variant
:func:`expm_apply`), so generators stay in GHz everywhere else.

Subsystem ordering for embedded operators is |q1, bus, q0> with q0 least
significant, i.e. the last factor of the Kronecker product varies fastest.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np

__all__ = [
    "Spectrum",
    "EigensolveError",
    "check_hermitian",
    "embed_operator",
    "eigh",
    "unitary_step",
    "step_from_spectrum",
    "expm_apply",
    "lowdin_orthonormalize",
]

TWO_PI = 2.0 * math.pi

# Relative tolerance of the Hermiticity check used on every generator.
HERMITICITY_RTOL = 1e-10


class EigensolveError(RuntimeError):
    """Raised when the dense eigensolver fails to converge."""


class Spectrum(NamedTuple):
    """Eigendecomposition of a Hermitian operator.

    ``energies`` are ascending (GHz); column ``vectors[:, k]`` is the
    orthonormal eigenvector of ``energies[k]`` with its largest-magnitude
    component rotated to be real and positive.
    """

    energies: np.ndarray
    vectors: np.ndarray


def check_hermitian(h: np.ndarray, rtol: float = HERMITICITY_RTOL) -> np.ndarray:
    """Validate that ``h`` is square and Hermitian; return it as complex."""
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"not hermitian: expected a square matrix, got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise ValueError("not hermitian: matrix has non-finite entries")
    scale = np.max(np.abs(h)) if h.size else 0.0
    dev = np.max(np.abs(h - h.conj().T)) if h.size else 0.0
    if dev > rtol * max(scale, 1e-300):
        raise ValueError(
            f"not hermitian: max deviation {dev:.3e} exceeds {rtol:.1e} * {scale:.3e}"
        )
    return h.astype(complex, copy=False)


def embed_operator(op: np.ndarray, slot: int, dims: Sequence[int]) -> np.ndarray:
    """Embed a single-subsystem operator into the full tensor-product space.

    Parameters
    ----------
    op : ndarray
        Square operator acting on subsystem ``slot``.
    slot : int
        Position in ``dims``; ordering is |q1, bus, q0> with the last
        subsystem least significant.
    dims : sequence of int
        Dimension of every subsystem.

    Returns
    -------
    ndarray
        ``I (x) ... (x) op (x) ... (x) I`` of dimension ``prod(dims)``.
    """
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims):
        raise ValueError(f"embed dimension: subsystem dimensions must be >= 1, got {dims}")
    if not 0 <= slot < len(dims):
        raise ValueError(f"embed dimension: slot {slot} outside 0..{len(dims) - 1}")
    op = np.asarray(op)
    if op.ndim != 2 or op.shape != (dims[slot], dims[slot]):
        raise ValueError(
            f"embed dimension: operator shape {op.shape} incompatible with dims[{slot}]={dims[slot]}"
        )
    left = int(np.prod(dims[:slot], dtype=np.int64)) if slot else 1
    right = int(np.prod(dims[slot + 1:], dtype=np.int64)) if slot + 1 < len(dims) else 1
    return np.kron(np.kron(np.eye(left), op), np.eye(right))


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive."""
    idx = np.argmax(np.abs(vectors), axis=0)
    pivots = vectors[idx, np.arange(vectors.shape[1])]
    mags = np.abs(pivots)
    # Unit columns always have a nonzero pivot; guard anyway.
    safe = np.where(mags > 0.0, mags, 1.0)
    vectors = vectors * (pivots.conj() / safe)
    return vectors


def _lex_order_ties(energies: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Within exactly-degenerate eigenvalue runs, order columns lexicographically.

    Comparison is by the first differing vector component, real part first.
    Exact float ties are rare; this only pins a deterministic convention.
    """
    n = energies.size
    order = np.arange(n)
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and energies[stop] == energies[start]:
            stop += 1
        if stop - start > 1:
            def key(col: int) -> tuple:
                v = vectors[:, col]
                return tuple(np.stack([v.real, v.imag], axis=1).ravel())

            order[start:stop] = sorted(order[start:stop], key=key)
        start = stop
    return order


def eigh(h: np.ndarray, *, check: bool = True) -> Spectrum:
    """Eigendecomposition of a Hermitian operator with fixed conventions.

    Eigenvalues ascend; exact degeneracies are ordered by the first
    differing vector component; each eigenvector's largest-magnitude
    component is made real positive.
    """
    if check:
        h = check_hermitian(h)
    else:
        h = np.asarray(h, dtype=complex)
    try:
        energies, vectors = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure path
        raise EigensolveError(f"eigensolve failed: {exc}") from exc
    vectors = _fix_phases(vectors)
    if energies.size > 1 and np.any(energies[1:] == energies[:-1]):
        order = _lex_order_ties(energies, vectors)
        energies = energies[order]
        vectors = vectors[:, order]
    return Spectrum(energies, vectors)


def step_from_spectrum(spectrum: Spectrum, dt: float) -> np.ndarray:
    """Propagator exp(-i 2*pi dt H) assembled from a precomputed spectrum."""
    phases = np.exp(-1j * TWO_PI * dt * spectrum.energies)
    return (spectrum.vectors * phases) @ spectrum.vectors.conj().T


def unitary_step(h: np.ndarray, dt: float) -> np.ndarray:
    """One piecewise-constant propagation step, exp(-i 2*pi dt H).

    Computed through the Hermitian eigendecomposition
    ``V diag(exp(-i 2*pi dt E)) V†`` so the result is unitary to machine
    precision.  ``h`` is in GHz, ``dt`` in ns.
    """
    return step_from_spectrum(eigh(h), dt)


def expm_apply(
    h: np.ndarray,
    psi: np.ndarray,
    dt: float,
    *,
    tol: float = 1e-14,
    m_max: int = 96,
) -> np.ndarray:
    """Apply exp(-i 2*pi dt H) to a state without forming the full propagator.

    Lanczos projection onto a Krylov subspace; the small tridiagonal block is
    exponentiated through its own Hermitian eigendecomposition, so the result
    matches :func:`unitary_step` applied to ``psi`` to ~1e-13.  Intended for
    generators that are used for a single step, where a full dense
    eigendecomposition would be wasted.
    """
    h = np.asarray(h, dtype=complex)
    dim = h.shape[0]
    norm0 = np.linalg.norm(psi)
    if norm0 == 0.0:
        return psi.copy()
    theta = TWO_PI * dt
    m_cap = min(dim, m_max)

    basis = np.empty((m_cap + 1, dim), dtype=complex)
    alphas: list[float] = []
    betas: list[float] = []
    basis[0] = psi / norm0

    y_prev: np.ndarray | None = None
    m = 0
    while m < m_cap:
        w = h @ basis[m]
        alpha = float(np.real(np.vdot(basis[m], w)))
        w -= alpha * basis[m]
        if m > 0:
            w -= betas[m - 1] * basis[m - 1]
        # Full reorthogonalization; the subspace is small.
        w -= basis[: m + 1].T @ (basis[: m + 1].conj() @ w)
        alphas.append(alpha)
        beta = float(np.linalg.norm(w))
        m += 1
        converged_exactly = beta <= 1e-14 * max(1.0, abs(alpha))
        if not converged_exactly:
            betas.append(beta)
            basis[m] = w / beta
        # Check convergence every few iterations (small-eigh cost is trivial).
        if converged_exactly or m >= 12 and m % 4 == 0 or m == m_cap:
            t = np.diag(np.array(alphas)) + np.diag(np.array(betas[: m - 1]), 1) + np.diag(
                np.array(betas[: m - 1]), -1
            )
            ew, ev = np.linalg.eigh(t)
            coef = ev @ (np.exp(-1j * theta * ew) * ev[0].conj())
            y = coef @ basis[:m]
            if converged_exactly:
                return norm0 * y
            if y_prev is not None and np.linalg.norm(y - y_prev) <= tol:
                return norm0 * y
            y_prev = y
    # Krylov space exhausted without meeting tol: fall back to the dense step.
    return unitary_step(h, dt) @ psi


def lowdin_orthonormalize(v: np.ndarray) -> np.ndarray:
    """Symmetric (Lowdin) orthonormalization W = v (v† v)^(-1/2).

    Among all orthonormal bases of span(v), W is the one closest to v in
    Frobenius norm.  Raises if the columns are numerically dependent
    (smallest singular value at or below 1e-8).
    """
    v = np.asarray(v, dtype=complex)
    if v.ndim != 2 or v.shape[0] < v.shape[1]:
        raise ValueError(f"degenerate computational projection: bad shape {v.shape}")
    s = v.conj().T @ v
    svals, u = eigh(s, check=False)
    if svals[0] <= 1e-16:  # sigma_min(v) = sqrt(lambda_min(S)) <= 1e-8
        raise ValueError(
            "degenerate computational projection: smallest singular value "
            f"{math.sqrt(max(svals[0], 0.0)):.3e} <= 1e-8"
        )
    inv_sqrt = (u * (svals ** -0.5)) @ u.conj().T
    return v @ inv_sqrt
