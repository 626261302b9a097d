import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oneway_cqed import gates
from oneway_cqed.dynamics import effective_unitary
from oneway_cqed.quantum import atomic_ket, is_unitary


def test_gate_conditions_oracle():
    gp = gates.gate_conditions(1.0, m=1, k=10)
    assert gp.delta_required == 1.0
    assert math.isclose(gp.t_gate, 2 * math.pi)
    assert math.isclose(gp.Omega_required, 10.25)  # (2k + 1/2) pi / t
    assert gp.lam == 0.25
    assert math.isclose(gp.lam * gp.t_gate, math.pi / 2)
    assert gp.strong_drive


def test_gate_conditions_laboratory_units():
    gp = gates.gate_conditions(2 * math.pi * 25e3, m=1)
    assert math.isclose(gp.t_gate, 4e-5, rel_tol=1e-12)


@pytest.mark.parametrize("bad", [dict(g=0.0), dict(g=1.0, m=0), dict(g=1.0, k=-1)])
def test_gate_conditions_rejects(bad):
    with pytest.raises(ValueError):
        gates.gate_conditions(**bad)


@pytest.mark.parametrize("k", [0, 5, 10])
def test_truth_table_atomic_convention(k):
    gate = gates.controlled_phase(1.0, 1, k)
    res = gates.truth_table_residuals(gate)
    assert max(res.values()) < 1e-9
    assert np.abs(gate - gates.CZ).max() < 1e-9
    assert gates.z_phase_correction(gate) == (0.0, 0.0)


def test_computational_hadamard_moves_the_sign_to_ee():
    gate = gates.controlled_phase(1.0, 1, 10, convention="computational")
    assert np.abs(gate - np.diag([-1, 1, 1, 1])).max() < 1e-9
    assert gates.truth_table_residuals(gate)["gg"] > 1.9


@given(st.floats(0.2, 50.0), st.integers(1, 4), st.integers(0, 12))
def test_truth_table_holds_for_any_coupling(g, m, k):
    gate = gates.controlled_phase(g, m, k)
    assert max(gates.truth_table_residuals(gate).values()) < 1e-8


def test_collision_unitary_matches_effective_unitary():
    gp = gates.gate_conditions(1.0, 2, 3)
    u = effective_unitary(gp.system_params(), gp.t_gate)
    v = gates.collision_unitary(gp.Omega_required * gp.t_gate, gp.lam * gp.t_gate)
    assert np.allclose(u, v, atol=1e-12)


def test_hadamards():
    ha = gates.HADAMARD_ATOMIC
    assert is_unitary(ha)
    s = 1 / math.sqrt(2)
    # |g> -> (|g> + |e>)/sqrt2 and |e> -> (|g> - |e>)/sqrt2 in the (|e>, |g>) basis
    assert np.allclose(ha @ np.array([0, 1]), [s, s])
    assert np.allclose(ha @ np.array([1, 0]), [-s, s])
    assert np.allclose(gates.hadamard_on(2, 1) @ atomic_ket("ee"), (atomic_ket("ee") + atomic_ket("eg")) * s)
    with pytest.raises(IndexError):
        gates.hadamard_on(2, 2)


def test_phase_helpers():
    u = np.exp(0.3j) * gates.CZ
    assert gates.equal_up_to_phase(u, gates.CZ)
    assert np.allclose(gates.strip_global_phase(u), gates.CZ)
    s_gate = np.kron(np.diag([1, 1j]), np.eye(2))
    assert gates.z_phase_correction(s_gate @ gates.CZ) == (1.5 * math.pi, 0.0)
    assert gates.z_phase_correction(np.eye(4)[[1, 0, 2, 3]]) is None


@given(st.floats(-math.pi, math.pi))
def test_ramsey_rotation_maps_basis(phase):
    r = gates.ramsey_rotation(phase)
    assert is_unitary(r)
    plus = np.array([1, np.exp(1j * phase)]) / math.sqrt(2)
    minus = np.array([1, -np.exp(1j * phase)]) / math.sqrt(2)
    assert np.allclose(r @ plus, [1, 0])
    assert np.allclose(r @ minus, [0, 1])


def test_ramsey_pulse_phase():
    pulse = gates.RamseyPulse.for_phase(math.pi, T=1e-5, omega0=1e9)
    assert math.isclose(pulse.phase, math.pi, rel_tol=1e-6)
    assert np.allclose(gates.ramsey_rotation(pulse), gates.ramsey_rotation(math.pi), atol=1e-6)
