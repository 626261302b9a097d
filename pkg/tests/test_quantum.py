import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oneway_cqed import quantum as q


def test_basis_convention():
    # |e> first, so sigma_z = diag(1, -1) and sigma_+ = |e><g|
    assert np.allclose(q.SIGMA_PLUS @ q.KET_G, q.KET_E)
    assert np.allclose(q.SIGMA_MINUS @ q.KET_E, q.KET_G)
    assert np.allclose(q.SIGMA_Z @ q.KET_E, q.KET_E)
    assert np.allclose(q.atomic_ket("gg"), [0, 0, 0, 1])
    assert np.allclose(q.atomic_ket("ee"), [1, 0, 0, 0])
    assert np.allclose(q.atomic_ket("eg"), [0, 1, 0, 0])
    assert np.allclose(q.atomic_ket("01"), q.atomic_ket("eg"))


def test_atomic_ket_rejects_unknown_label():
    with pytest.raises(ValueError, match="'x'"):
        q.atomic_ket("gx")


def test_fock_annihilation_matrix_elements():
    a = q.fock_annihilation(4)
    assert np.allclose(a @ q.fock_ket(3, 4), math.sqrt(3) * q.fock_ket(2, 4))
    assert np.allclose(a @ q.fock_ket(0, 4), 0)
    # [a, a^dag] = 1 except on the truncation edge
    comm = q.commutator(a, a.conj().T)
    assert np.allclose(np.diag(comm)[:-1], 1.0)
    assert np.isclose(comm[-1, -1], -3.0)


def test_tensor_product_limits():
    with pytest.raises(q.DimensionError):
        q.tensor_product(np.eye(64), np.eye(128))
    with pytest.raises(q.DimensionError):
        q.tensor_product(np.ones((2, 3)))
    with pytest.raises(ValueError):
        q.tensor_product()


def test_cavity_operator_algebra():
    spec = q.HilbertSpec(2, 5)
    ops = q.cavity_operators(spec)
    assert ops.a.shape == (spec.dim, spec.dim)
    for sp, sm, sz in zip(ops.sigma_plus, ops.sigma_minus, ops.sigma_z):
        assert np.allclose(q.commutator(sp, sm), sz)
        assert np.allclose(q.commutator(ops.a, sp), 0)
    sx = ops.collective_sigma_x()
    assert q.is_hermitian(sx)
    # Sx has eigenvalues -1, 0, 0, 1 on two atoms (times the field identity)
    ev = np.unique(np.round(np.linalg.eigvalsh(q.collective_sigma_x(2)), 12))
    assert np.allclose(ev, [-1, 0, 1])


def test_embed_out_of_range():
    with pytest.raises(IndexError):
        q.embed(q.SIGMA_X, 2, 2)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5), st.floats(0, 3))
def test_matrix_exponential_is_unitary(a, b, c, t):
    h = a * q.SIGMA_X + b * q.SIGMA_Y + c * q.SIGMA_Z
    u = q.matrix_exponential_skew(h, t)
    assert q.is_unitary(u, 1e-10)
    from scipy.linalg import expm

    assert np.allclose(u, expm(-1j * h * t), atol=1e-10)


def test_matrix_exponential_rejects_non_hermitian():
    with pytest.raises(q.NotHermitianError):
        q.matrix_exponential_skew(q.SIGMA_PLUS, 1.0)


def test_partial_traces_of_product_state():
    spec = q.HilbertSpec(2, 3)
    rho_a = q.ket_to_density(q.normalize(q.atomic_ket("eg") + q.atomic_ket("ge")))
    rho_f = q.thermal_state(3, 0.5)
    rho = q.tensor_product(rho_a, rho_f)
    assert np.allclose(q.partial_trace_field(rho, spec), rho_a)
    assert np.allclose(q.partial_trace_atoms(rho, spec), rho_f)
    with pytest.raises(q.DimensionError):
        q.partial_trace_field(np.eye(5), spec)


def test_fidelity_and_purity():
    psi = q.atomic_ket("gg")
    assert q.fidelity(q.ket_to_density(psi), psi) == 1.0
    mixed = np.eye(4) / 4
    assert math.isclose(q.fidelity(mixed, psi), 0.25)
    assert math.isclose(q.purity(mixed), 0.25)


def test_validate_density():
    with pytest.raises(ValueError, match="trace"):
        q.validate_density(2 * np.eye(2) / 2 * 1.5)
    with pytest.raises(ValueError, match="Hermitian"):
        q.validate_density(np.array([[0.5, 0.1], [0.3, 0.5]]))
    with pytest.raises(ValueError, match="negative"):
        q.validate_density(np.diag([1.5, -0.5]))


def test_thermal_state_oracles():
    # Bose-Einstein: p_n = n_th^n / (1 + n_th)^(n+1)
    p = q.thermal_populations(40, 1.0)
    assert np.allclose(p[:4], [0.5, 0.25, 0.125, 0.0625], atol=1e-12)
    assert math.isclose(float(np.arange(40) @ p), 1.0, rel_tol=1e-9)
    assert q.thermal_tail(14, 1.0) == 0.5**14
    assert q.fock_dim_for(1.0, 1e-4) == 15
    assert q.fock_dim_for(0.0, minimum=6) == 6


@given(st.floats(0.01, 3.0), st.integers(4, 30))
def test_thermal_populations_normalized(n_th, dim):
    p = q.thermal_populations(dim, n_th)
    assert math.isclose(p.sum(), 1.0, rel_tol=1e-12)
    assert np.all(np.diff(p) <= 0)
