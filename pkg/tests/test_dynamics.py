import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oneway_cqed import dynamics as dyn
from oneway_cqed.quantum import (
    atomic_ket,
    collective_sigma_x,
    fock_ket,
    is_hermitian,
    is_unitary,
    ket_to_density,
    matrix_exponential_skew,
    tensor_product,
    thermal_state,
)

TWO_PI = 2 * math.pi


def test_system_params_defaults_and_validation():
    p = dyn.SystemParams(g=1.0, delta=2.0, Omega=5.0, n_th=1.0)
    assert p.fock_dim == 15  # thermal tail 0.5^15 < 1e-4
    assert p.lam == 0.125
    assert p.spec.dim == 60
    assert math.isclose(p.max_dt(), TWO_PI / (50 * 5.0))
    with pytest.raises(ValueError, match="truncates"):
        dyn.SystemParams(g=1.0, delta=1.0, Omega=5.0, n_th=1.0, fock_dim=12)
    with pytest.raises(ValueError):
        dyn.SystemParams(g=0.0, delta=1.0, Omega=1.0)
    with pytest.raises(ValueError):
        dyn.SystemParams(g=1.0, delta=1.0, Omega=1.0, Gamma=-1)


@given(st.floats(0, 20), st.floats(0.1, 3), st.floats(0.1, 3), st.floats(-10, 10))
def test_hamiltonians_hermitian(omega, g, delta, t):
    p = dyn.SystemParams(g=g, delta=delta, Omega=omega, fock_dim=4)
    assert is_hermitian(dyn.interaction_hamiltonian(p, t), 1e-12)
    assert is_hermitian(dyn.effective_hamiltonian(p, t), 1e-12)


@pytest.mark.parametrize("m", [1, 2, 3, 4, 5])
def test_effective_coefficients_vanish_on_periods(m):
    p = dyn.SystemParams(g=1.0, delta=1.3, Omega=0.0)
    c = dyn.effective_coefficients(p, TWO_PI * m / p.delta)
    assert abs(c.B) < 1e-12 and abs(c.C) < 1e-12
    assert math.isclose(c.A.real, p.lam * TWO_PI * m / p.delta, rel_tol=1e-12)


def test_effective_phase_quarter_turn_at_resonant_detuning():
    p = dyn.SystemParams(g=2.5, delta=2.5, Omega=0.0)
    c = dyn.effective_coefficients(p, TWO_PI / p.delta)
    assert abs(c.A - math.pi / 2) < 1e-12


@pytest.mark.parametrize("field_level", [0, 1, 3])
def test_operator_form_matches_integrated_effective_hamiltonian(field_level):
    """exp(-iA Sx^2) exp(-iB Sx a) exp(-iC Sx a^dag) against RK4 on H_e, off and on period."""
    # off period the closed form leans on high Fock levels, hence the large truncation
    p = dyn.SystemParams(g=1.0, delta=1.0, Omega=0.0, fock_dim=40)
    psi_atoms = (atomic_ket("gg") + 0.5 * atomic_ket("eg")) / math.sqrt(1.25)
    psi0 = np.kron(psi_atoms, fock_ket(field_level, 40))
    for t in (0.7 * TWO_PI, TWO_PI):
        traj = dyn.integrate_schrodinger(dyn.effective_terms(p), psi0, t, 0.002, spec=p.spec, stride=10**9)
        closed = dyn.effective_unitary_operator_form(p, t) @ psi0
        assert np.abs(traj.final_state() - closed).max() < 1e-9


def test_effective_unitary_form_and_period_check():
    p = dyn.SystemParams(g=1.0, delta=1.0, Omega=3.0)
    u = dyn.effective_unitary(p, TWO_PI)
    sx = collective_sigma_x(2)
    assert is_unitary(u)
    assert np.allclose(u, matrix_exponential_skew(3.0 * sx + 0.25 * sx @ sx, TWO_PI))
    assert dyn.period_count(p, 2 * TWO_PI) == 2
    with pytest.raises(dyn.PeriodError):
        dyn.effective_unitary(p, 1.0)


def test_schrodinger_constant_hamiltonian_matches_exponential():
    h = np.diag([1.0, -0.5, 0.2]).astype(complex) + 0.3 * (np.eye(3, k=1) + np.eye(3, k=-1))
    psi0 = np.array([1.0, 0.0, 0.0], dtype=complex)
    h_op = dyn.HarmonicOperator.constant(h)
    traj = dyn.integrate_schrodinger(h_op, psi0, 2.0, 0.005)
    assert np.abs(traj.final_state() - matrix_exponential_skew(h, 2.0) @ psi0).max() < 1e-9


def test_step_size_guard():
    p = dyn.SystemParams(g=1.0, delta=1.0, Omega=5.0, fock_dim=4)
    rho0 = dyn.product_state(atomic_ket("gg"), ket_to_density(fock_ket(0, 4)))
    with pytest.raises(dyn.StepSizeError):
        dyn.integrate_lindblad(p, rho0, 1.0, 0.1)


def test_lindblad_without_decay_equals_schrodinger():
    p = dyn.SystemParams(g=1.0, delta=1.0, Omega=4.0, fock_dim=5)
    psi0 = np.kron(atomic_ket("eg"), fock_ket(1, 5))
    # RK4 on rho and on psi differ at O(dt^4); a fine step makes that negligible
    dt = p.max_dt() / 8
    a = dyn.integrate_schrodinger(dyn.interaction_terms(p), psi0, 3.0, dt, spec=p.spec)
    b = dyn.integrate_lindblad(p, ket_to_density(psi0), 3.0, dt)
    assert np.abs(a.atomic - b.atomic).max() < 1e-7


def test_rk4_against_adaptive_reference():
    """Fixed-step RK4 at the step limit vs scipy's DOP853 on the full model."""
    from scipy.integrate import solve_ivp

    p = dyn.SystemParams(g=1.0, delta=1.0, Omega=5.0, fock_dim=6)
    terms = dyn.interaction_terms(p)
    psi0 = np.kron(atomic_ket("gg"), fock_ket(1, 6))
    sol = solve_ivp(lambda t, y: -1j * (terms(t) @ y), (0, TWO_PI), psi0, method="DOP853", rtol=1e-11, atol=1e-12)
    traj = dyn.integrate_schrodinger(terms, psi0, TWO_PI, p.max_dt())
    assert np.abs(traj.final_state() - sol.y[:, -1]).max() < 1e-4


@pytest.mark.parametrize("convention", list(dyn.Convention))
def test_lindblad_preserves_trace_and_hermiticity(convention):
    p = dyn.SystemParams(g=1.0, delta=1.0, Omega=5.0, Gamma=0.05, n_th=0.3, fock_dim=9)
    rho0 = dyn.product_state(atomic_ket("gg"), thermal_state(9, 0.3))
    traj = dyn.integrate_lindblad(p, rho0, TWO_PI, p.max_dt() / 4, convention, stride=25)
    for rho in traj.states:
        assert abs(np.trace(rho) - 1) < 1e-10
        assert is_hermitian(rho, 1e-12)
        # RK4 is not positivity preserving; the dip shrinks as dt^4
        assert np.linalg.eigvalsh(rho).min() > -1e-8


@pytest.mark.parametrize(
    "convention, rate",
    [("standard_thermal", 0.0), ("paper_literal", 3.0)],  # Gamma (2 n_th + 1) for the literal rates
)
def test_jump_rates_at_thermal_equilibrium(convention, rate):
    """d<n>/dt at the thermal state, field only (Hamiltonian switched off)."""
    n_th, gamma, fock = 1.0, 0.01, 40
    p = dyn.SystemParams(g=1e-9, delta=1.0, Omega=0.0, Gamma=gamma, n_th=n_th, fock_dim=fock)
    rho0 = dyn.product_state(atomic_ket("gg"), thermal_state(fock, n_th))
    zero = dyn.HarmonicOperator.constant(np.zeros((p.spec.dim, p.spec.dim)), max_frequency=1.0)
    traj = dyn.integrate_lindblad(p, rho0, 0.1, 0.01, convention, hamiltonian=zero)
    slope = (traj.mean_photons[-1] - traj.mean_photons[0]) / 0.1
    assert abs(slope - rate * gamma) < 1e-4


def test_trajectory_csv_columns():
    p = dyn.SystemParams(g=1.0, delta=1.0, Omega=5.0, fock_dim=4)
    rho0 = dyn.product_state(atomic_ket("gg"), ket_to_density(fock_ket(0, 4)))
    traj = dyn.integrate_lindblad(p, rho0, 0.5, p.max_dt(), stride=5)
    lines = traj.to_csv().splitlines()
    assert lines[0] == "time_s,p_gg,p_ee,re_coh,im_coh,purity,mean_n"
    assert len(lines) == len(traj.times) + 1
    assert lines[1].split(",")[:3] == ["0.0", "1.0", "0.0"]


def test_fidelity_oracles_frozen():
    """Full vs effective dynamics from |gg> with a thermal field, n_th = 1, at delta t = 2 pi."""
    frozen = {5.0: 0.7520708782257159, 20.0: 0.980659357939732}
    for omega, value in frozen.items():
        p = dyn.SystemParams(g=1.0, delta=1.0, Omega=omega, n_th=1.0)
        f = dyn.effective_vs_full_fidelity(p, atomic_ket("gg"), thermal_state(p.fock_dim, 1.0), TWO_PI)
        assert math.isclose(f, value, abs_tol=1e-9)


def test_fidelity_approaches_one_in_vacuum_and_strong_drive():
    p = dyn.SystemParams(g=1.0, delta=1.0, Omega=40.0, fock_dim=6)
    f = dyn.effective_vs_full_fidelity(p, atomic_ket("gg"), ket_to_density(fock_ket(0, 6)), TWO_PI)
    assert f > 0.998


def test_ripple_report_frozen():
    p = dyn.SystemParams(g=1.0, delta=1.0, Omega=5.0, Gamma=0.01, n_th=1.0)
    rep = dyn.ripple_report(p, dyn.fig3_trajectory(p))
    assert math.isclose(rep.slow_amplitude, 0.9880106011106975, abs_tol=1e-9)
    assert math.isclose(rep.ripple_ratio, 0.058590301165992204, abs_tol=1e-9)
    assert math.isclose(rep.purity_at_period, 0.6938802457140303, abs_tol=1e-9)


def test_ideal_populations_start_and_sum():
    p = dyn.SystemParams(g=1.0, delta=1.0, Omega=5.0, fock_dim=14)
    times = np.linspace(0, TWO_PI, 11)
    pops = dyn.ideal_populations(p, atomic_ket("gg"), times, ket_to_density(fock_ket(0, 14)))
    assert np.allclose(pops[0], [0, 0, 0, 1])
    assert np.allclose(pops.sum(axis=1), 1, atol=1e-9)
    # at the period the field factors out: populations of U_eff |gg>
    u = dyn.effective_unitary(p, TWO_PI) @ atomic_ket("gg")
    assert np.abs(pops[-1] - np.abs(u) ** 2).max() < 1e-6


def test_parallel_map_preserves_order():
    assert dyn.parallel_map(abs, [-3, 2, -1]) == [3, 2, 1]
    assert dyn.parallel_map(abs, [-3, 2, -1], workers=2) == [3, 2, 1]


def test_product_state_shape():
    rho = dyn.product_state(atomic_ket("gg"), thermal_state(3, 0.2))
    assert rho.shape == (12, 12)
    assert np.allclose(rho, tensor_product(ket_to_density(atomic_ket("gg")), thermal_state(3, 0.2)))
