"""Tests for the dense linear-algebra layer.

Every derived expectation is checked against an independent oracle:
brute-force index enumeration for embeddings, a 40-digit mpmath
eigensolver for the seeded eigh case (values frozen below), scipy's
scaling-and-squaring expm for the step propagator, and an explicit
S^(-1/2) for the symmetric orthonormalization.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose
from scipy.linalg import expm, fractional_matrix_power

from pulsebench.linalg import (
    Spectrum,
    embed_operator,
    eigh,
    expm_apply,
    lowdin_orthonormalize,
    step_from_spectrum,
    unitary_step,
)

TWO_PI = 2.0 * math.pi


def random_hermitian(rng, n, scale=1.0):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (a + a.conj().T) / 2.0


# ---------------------------------------------------------------------------
# embed_operator
# ---------------------------------------------------------------------------


def embed_bruteforce(op, slot, dims):
    """Independent oracle: build the embedding element by element."""
    total = int(np.prod(dims))
    out = np.zeros((total, total), dtype=complex)
    ranges = [range(d) for d in dims]
    import itertools

    def flat(idx):
        f = 0
        for d, i in zip(dims, idx):
            f = f * d + i
        return f

    for row in itertools.product(*ranges):
        for col in itertools.product(*ranges):
            if all(r == c for k, (r, c) in enumerate(zip(row, col)) if k != slot):
                out[flat(row), flat(col)] = op[row[slot], col[slot]]
    return out


def test_embed_number_op_at_q0():
    # diag(0, 1) on the least-significant slot tiles the full diagonal
    op = np.diag([0.0, 1.0])
    full = embed_operator(op, 2, (2, 2, 2))
    assert_allclose(np.diag(full), [0, 1, 0, 1, 0, 1, 0, 1], atol=0)


def test_embed_identity_middle_slot():
    full = embed_operator(np.eye(3), 1, (2, 3, 2))
    assert_allclose(full, np.eye(12), atol=0)


def test_embed_matches_bruteforce_oracle():
    rng = np.random.default_rng(11)
    for dims in [(2, 3, 2), (3, 1, 4), (2, 2, 2)]:
        for slot in range(3):
            op = rng.normal(size=(dims[slot], dims[slot])) + 1j * rng.normal(
                size=(dims[slot], dims[slot])
            )
            assert_allclose(
                embed_operator(op, slot, dims),
                embed_bruteforce(op, slot, dims),
                atol=1e-14,
            )


def test_embed_rejects_shape_mismatch():
    with pytest.raises(ValueError, match="embed dimension"):
        embed_operator(np.eye(3), 0, (2, 2, 2))
    with pytest.raises(ValueError, match="embed dimension"):
        embed_operator(np.eye(2), 3, (2, 2, 2))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2), st.integers(0, 10))
def test_embed_is_multiplicative(slot, seed):
    # embedding a product equals the product of embeddings
    rng = np.random.default_rng(seed)
    dims = (2, 3, 2)
    d = dims[slot]
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    b = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    lhs = embed_operator(a @ b, slot, dims)
    rhs = embed_operator(a, slot, dims) @ embed_operator(b, slot, dims)
    assert_allclose(lhs, rhs, atol=1e-12)


def test_embeddings_in_different_slots_commute():
    rng = np.random.default_rng(3)
    dims = (2, 3, 2)
    a = embed_operator(random_hermitian(rng, 2), 0, dims)
    b = embed_operator(random_hermitian(rng, 2), 2, dims)
    assert_allclose(a @ b, b @ a, atol=1e-12)


# ---------------------------------------------------------------------------
# eigh
# ---------------------------------------------------------------------------

# Eigenvalues of the seeded matrix below, computed once with mpmath.mp.eighe
# at 40 significant digits (independent of LAPACK).
EIGH_ORACLE_SEED = 20260815
EIGH_ORACLE_VALUES = [
    -4.55823422820367358,
    -2.3217363356086703826,
    -1.1289082343576160378,
    0.26431898240444240684,
    1.1562690196594687701,
    1.9509458347984158513,
    3.3646605426760735672,
    3.8704371091603477546,
]


def test_eigh_matches_high_precision_oracle():
    rng = np.random.default_rng(EIGH_ORACLE_SEED)
    a = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    h = (a + a.conj().T) / 2
    spec = eigh(h)
    assert_allclose(spec.energies, EIGH_ORACLE_VALUES, atol=1e-10, rtol=0)


def test_eigh_matches_oracle_recomputed_live():
    # Re-run the oracle in-process so the frozen literals cannot rot silently.
    mp = pytest.importorskip("mpmath")
    rng = np.random.default_rng(EIGH_ORACLE_SEED)
    a = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    h = (a + a.conj().T) / 2
    mp.mp.dps = 40
    m = mp.matrix(8, 8)
    for i in range(8):
        for j in range(8):
            m[i, j] = mp.mpc(h[i, j].real, h[i, j].imag)
    ev = mp.mp.eighe(m, eigvals_only=True)
    oracle = np.array([float(ev[i]) for i in range(8)])
    assert_allclose(oracle, EIGH_ORACLE_VALUES, atol=1e-12, rtol=0)
    assert_allclose(eigh(h).energies, oracle, atol=1e-10, rtol=0)


def test_eigh_sorts_diagonal():
    spec = eigh(np.diag([3.0, 1.0, 2.0]))
    assert_allclose(spec.energies, [1.0, 2.0, 3.0], atol=0)
    assert_allclose(np.abs(spec.vectors), np.eye(3)[:, [1, 2, 0]], atol=0)


def test_eigh_rejects_non_hermitian():
    with pytest.raises(ValueError, match="not hermitian"):
        eigh(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ValueError, match="not hermitian"):
        eigh(np.ones((2, 3)))


def test_eigh_rejects_non_finite_entries():
    h = np.eye(3, dtype=complex)
    h[1, 1] = np.nan
    with pytest.raises(ValueError, match="non-finite"):
        eigh(h)


def test_eigh_phase_convention():
    rng = np.random.default_rng(5)
    h = random_hermitian(rng, 6)
    spec = eigh(h)
    for k in range(6):
        col = spec.vectors[:, k]
        piv = col[np.argmax(np.abs(col))]
        assert piv.imag == pytest.approx(0.0, abs=1e-14)
        assert piv.real > 0


def test_eigh_invariant_under_input_column_phases():
    # the phase convention makes the decomposition of H itself reproducible:
    # rebuilding H from a phase-scrambled eigenbasis returns the same vectors
    rng = np.random.default_rng(6)
    h = random_hermitian(rng, 5)
    spec = eigh(h)
    scramble = np.exp(1j * rng.uniform(0, TWO_PI, size=5))
    h2 = (spec.vectors * scramble * spec.energies) @ (spec.vectors * scramble).conj().T
    h2 = (h2 + h2.conj().T) / 2
    spec2 = eigh(h2)
    assert_allclose(spec2.vectors, spec.vectors, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 9), st.integers(0, 2**31 - 1))
def test_eigh_reconstruction_property(n, seed):
    rng = np.random.default_rng(seed)
    h = random_hermitian(rng, n, scale=3.0)
    spec = eigh(h)
    scale = max(np.max(np.abs(spec.energies)), 1e-300)
    recon = (spec.vectors * spec.energies) @ spec.vectors.conj().T
    assert np.max(np.abs(recon - h)) <= 1e-9 * scale
    # residual norm per eigenpair
    res = h @ spec.vectors - spec.vectors * spec.energies
    bound = 1e-8 * (1.0 + np.abs(spec.energies))
    assert np.all(np.linalg.norm(res, axis=0) <= bound)
    # orthonormality
    gram = spec.vectors.conj().T @ spec.vectors
    assert np.max(np.abs(gram - np.eye(n))) < 1e-12


def test_eigh_exact_degeneracy_deterministic_order():
    h = np.zeros((4, 4))
    spec = eigh(h)
    assert_allclose(spec.energies, 0.0, atol=0)
    # all-degenerate spectrum: column order pinned by the lexicographic rule
    spec2 = eigh(h)
    assert_allclose(spec.vectors, spec2.vectors, atol=0)


# ---------------------------------------------------------------------------
# unitary_step
# ---------------------------------------------------------------------------


def test_unitary_step_one_dim():
    # 1 GHz for half a nanosecond: exp(-i pi) = -1
    u = unitary_step(np.array([[1.0]]), 0.5)
    assert_allclose(u, [[-1.0]], atol=1e-15)


def test_unitary_step_zero_dt_is_identity():
    rng = np.random.default_rng(8)
    h = random_hermitian(rng, 5)
    assert_allclose(unitary_step(h, 0.0), np.eye(5), atol=1e-15)


def test_unitary_step_matches_expm_oracle():
    # independent scaling-and-squaring route
    rng = np.random.default_rng(9)
    for n in (2, 5, 12):
        h = random_hermitian(rng, n, scale=4.0)
        dt = 0.013
        u = unitary_step(h, dt)
        ref = expm(-1j * TWO_PI * dt * h)
        assert_allclose(u, ref, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 8), st.floats(-0.5, 0.5), st.integers(0, 2**31 - 1))
def test_unitary_step_is_unitary(n, dt, seed):
    rng = np.random.default_rng(seed)
    h = random_hermitian(rng, n, scale=5.0)
    u = unitary_step(h, dt)
    assert np.max(np.abs(u.conj().T @ u - np.eye(n))) <= 1e-12


def test_unitary_step_group_property():
    rng = np.random.default_rng(10)
    h = random_hermitian(rng, 6, scale=2.0)
    u1 = unitary_step(h, 0.01) @ unitary_step(h, 0.02)
    u2 = unitary_step(h, 0.03)
    assert_allclose(u1, u2, atol=1e-13)


def test_step_from_spectrum_matches_unitary_step():
    rng = np.random.default_rng(12)
    h = random_hermitian(rng, 7, scale=3.0)
    assert_allclose(step_from_spectrum(eigh(h), 0.004), unitary_step(h, 0.004), atol=0)


def test_expm_apply_matches_dense_route():
    rng = np.random.default_rng(13)
    for n, scale in [(4, 1.0), (40, 20.0), (300, 80.0)]:
        h = random_hermitian(rng, n, scale=scale)
        psi = rng.normal(size=n) + 1j * rng.normal(size=n)
        psi /= np.linalg.norm(psi)
        ref = unitary_step(h, 0.002) @ psi
        y = expm_apply(h, psi, 0.002)
        assert np.linalg.norm(y - ref) < 1e-12
        assert abs(np.linalg.norm(y) - 1.0) < 1e-13


def test_expm_apply_eigenvector_shortcut():
    # a drift eigenstate picks up only a phase (lucky Lanczos breakdown)
    h = np.diag([0.0, 3.0, 7.0])
    psi = np.array([0.0, 1.0, 0.0], dtype=complex)
    y = expm_apply(h, psi, 0.25)
    assert_allclose(y, np.exp(-1j * TWO_PI * 0.25 * 3.0) * psi, atol=1e-14)


# ---------------------------------------------------------------------------
# lowdin_orthonormalize
# ---------------------------------------------------------------------------


def test_lowdin_fixed_point():
    rng = np.random.default_rng(14)
    q = np.linalg.qr(rng.normal(size=(6, 3)) + 1j * rng.normal(size=(6, 3)))[0]
    assert_allclose(lowdin_orthonormalize(q), q, atol=1e-12)


def test_lowdin_column_rescaling_restored():
    rng = np.random.default_rng(15)
    q = np.linalg.qr(rng.normal(size=(5, 2)) + 1j * rng.normal(size=(5, 2)))[0]
    scaled = q * np.array([2.0, 0.3])
    assert_allclose(lowdin_orthonormalize(scaled), q, atol=1e-12)


def test_lowdin_matches_explicit_inverse_sqrt_oracle():
    # 2x2 overlap block of known form, resolved by an independent routine
    rng = np.random.default_rng(16)
    q = np.linalg.qr(rng.normal(size=(6, 2)) + 1j * rng.normal(size=(6, 2)))[0]
    mix = np.array([[1.0, 0.3], [0.0, 1.0]])
    v = q @ mix
    s = v.conj().T @ v
    assert_allclose(s, np.array([[1.0, 0.3], [0.3, 1.09]]), atol=1e-12)
    w_oracle = v @ fractional_matrix_power(s, -0.5)
    assert_allclose(lowdin_orthonormalize(v), w_oracle, atol=1e-11)


def test_lowdin_output_is_orthonormal_and_spans_input():
    rng = np.random.default_rng(17)
    v = rng.normal(size=(8, 3)) + 1j * rng.normal(size=(8, 3))
    w = lowdin_orthonormalize(v)
    assert_allclose(w.conj().T @ w, np.eye(3), atol=1e-12)
    # same column span: projecting v onto span(w) reproduces v
    assert_allclose(w @ (w.conj().T @ v), v, atol=1e-10)


def test_lowdin_minimizes_frobenius_distance():
    # small random orthonormal perturbations never get closer to v than W
    rng = np.random.default_rng(18)
    v = rng.normal(size=(6, 3)) + 1j * rng.normal(size=(6, 3))
    v = v @ np.diag([1.0, 0.7, 1.3])
    w = lowdin_orthonormalize(v)
    base = np.linalg.norm(w - v)
    for _ in range(25):
        g = random_hermitian(rng, 3, scale=0.05)
        rot = expm(1j * g)
        assert np.linalg.norm(w @ rot - v) >= base - 1e-12


def test_lowdin_rejects_dependent_columns():
    v = np.ones((4, 2), dtype=complex)
    v[:, 1] = v[:, 0] * (1 + 1e-12)
    with pytest.raises(ValueError, match="degenerate computational projection"):
        lowdin_orthonormalize(v)


def test_lowdin_idempotent():
    rng = np.random.default_rng(19)
    v = rng.normal(size=(7, 4)) + 1j * rng.normal(size=(7, 4))
    w = lowdin_orthonormalize(v)
    assert_allclose(lowdin_orthonormalize(w), w, atol=1e-12)
