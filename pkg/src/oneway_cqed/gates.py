"""Collision-gate parameters, the composite controlled-phase gate and Ramsey pulses.

Two Hadamard conventions exist here:

* :func:`hadamard_on` with ``convention="computational"`` is the textbook
  Hadamard on ``|0> = |e>, |1> = |g>``;
* ``convention="atomic"`` maps ``|g> -> |+>`` and ``|e> -> |->`` with
  ``|+-> = (|g> +- |e>)/sqrt 2``, the dressed basis of the driven atoms.

The composite gate ``H (x) H . U . H (x) H`` only reproduces the truth table
``|gg> -> -|gg>`` (others unchanged) with the atomic convention; with the
computational one the sign lands on ``|ee>`` instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import SystemParams, effective_unitary
from .quantum import IDENTITY_2, atomic_ket, collective_sigma_x, embed, matrix_exponential_skew, tensor_product

TWO_PI = 2.0 * math.pi
GATE_REL_TOL = 1e-9

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
# columns: image of |e>, image of |g>  in the (|e>, |g>) basis
HADAMARD_ATOMIC = np.array([[-1, 1], [1, 1]], dtype=complex) / math.sqrt(2)
PAULI_Z = np.diag([1.0, -1.0]).astype(complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
CZ = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)

TRUTH_TABLE = {"gg": -1.0, "ge": 1.0, "eg": 1.0, "ee": 1.0}


@dataclass(frozen=True)
class GateParams:
    g: float
    m: int
    k: int
    t_gate: float
    Omega_required: float
    delta_required: float
    lam: float

    @property
    def strong_drive(self) -> bool:
        """Whether ``Omega`` dominates both ``g`` and ``delta`` (by 5x)."""
        return self.Omega_required >= 5 * max(self.g, self.delta_required)

    def system_params(self, **kwargs) -> SystemParams:
        return SystemParams(g=self.g, delta=self.delta_required, Omega=self.Omega_required, **kwargs)


@dataclass(frozen=True)
class RamseyPulse:
    omega_r: float
    T: float
    omega0: float = 0.0

    @property
    def phase(self) -> float:
        return (self.omega_r - self.omega0) * self.T

    @classmethod
    def for_phase(cls, phase: float, T: float, omega0: float = 0.0) -> "RamseyPulse":
        return cls(omega_r=omega0 + phase / T, T=T, omega0=omega0)


def gate_conditions(g: float, m: int = 1, k: int = 10) -> GateParams:
    """Detuning, gate time and Rabi frequency meeting all three phase conditions.

    ``delta t = 2 pi m`` removes the field, ``lambda t = pi/2`` fixes the
    two-atom phase, ``Omega t = (2k + 1/2) pi`` fixes the single-atom phase.
    """
    if not g > 0:
        raise ValueError("g must be positive")
    if m < 1 or k < 0:
        raise ValueError(f"need m >= 1 and k >= 0, got m={m}, k={k}")
    delta = g * math.sqrt(m)
    t_gate = TWO_PI * m / delta
    omega = (2 * k + 0.5) * math.pi / t_gate
    return GateParams(
        g=g, m=m, k=k, t_gate=t_gate, Omega_required=omega, delta_required=delta, lam=g * g / (4 * delta)
    )


def collision_unitary(theta_rabi: float, theta_nl: float) -> np.ndarray:
    """``exp(-i theta_rabi Sx - i theta_nl Sx^2)`` on two atoms."""
    sx = collective_sigma_x(2)
    return matrix_exponential_skew(theta_rabi * sx + theta_nl * (sx @ sx), 1.0)


def hadamard_on(n_atoms: int, target: int, convention: str = "computational") -> np.ndarray:
    if not 0 <= target < n_atoms:
        raise IndexError(f"target {target} out of range for {n_atoms} atoms")
    h = {"computational": HADAMARD, "atomic": HADAMARD_ATOMIC}[convention]
    return embed(h, target, n_atoms)


def hadamard_all(n_atoms: int, convention: str = "computational") -> np.ndarray:
    h = {"computational": HADAMARD, "atomic": HADAMARD_ATOMIC}[convention]
    return tensor_product(*[h] * n_atoms)


def composite_gate(u: np.ndarray, convention: str = "atomic") -> np.ndarray:
    hh = hadamard_all(2, convention)
    return hh @ u @ hh


def controlled_phase(g: float = 1.0, m: int = 1, k: int = 10, convention: str = "atomic") -> np.ndarray:
    """Composite gate built from the effective propagator at the gate conditions."""
    gp = gate_conditions(g, m, k)
    u = effective_unitary(gp.system_params(), gp.t_gate)
    return composite_gate(u, convention)


def truth_table_residuals(gate: np.ndarray) -> dict[str, float]:
    """Per-line amplitude error of ``gate |xy> = sign |xy>``."""
    out = {}
    for label, sign in TRUTH_TABLE.items():
        ket = atomic_ket(label)
        out[label] = float(np.abs(gate @ ket - sign * ket).max())
    return out


def strip_global_phase(u: np.ndarray) -> np.ndarray:
    """Rescale so the largest-magnitude entry is real and positive."""
    flat = u.ravel()
    ref = flat[np.argmax(np.abs(flat))]
    return u * (abs(ref) / ref)


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    overlap = np.vdot(b.ravel(), a.ravel())
    if abs(overlap) < 1e-15:
        return False
    phase = overlap / abs(overlap)
    return float(np.abs(a - phase * b).max()) < tol


def z_phase_correction(gate: np.ndarray, target: np.ndarray = CZ, tol: float = 1e-9):
    """Find single-qubit diagonal phases with ``(D1 (x) D2) gate = target`` up to global phase.

    Diagonal corrections are searched over multiples of ``pi/2`` for each qubit
    (``I, S, Z, S^dagger``).  Returns ``(phi1, phi2)`` or ``None``.
    """
    for p1 in range(4):
        for p2 in range(4):
            d1 = np.diag([1.0, np.exp(0.5j * math.pi * p1)])
            d2 = np.diag([1.0, np.exp(0.5j * math.pi * p2)])
            if equal_up_to_phase(np.kron(d1, d2) @ gate, target, tol):
                return (0.5 * math.pi * p1, 0.5 * math.pi * p2)
    return None


def ramsey_rotation(pulse: RamseyPulse | float) -> np.ndarray:
    """Unitary sending ``(|0> +- e^{i phase}|1>)/sqrt 2`` to ``|0>`` / ``|1>``."""
    phase = pulse.phase if isinstance(pulse, RamseyPulse) else float(pulse)
    plus = np.array([1.0, np.exp(1j * phase)]) / math.sqrt(2)
    minus = np.array([1.0, -np.exp(1j * phase)]) / math.sqrt(2)
    return np.vstack([plus.conj(), minus.conj()]).astype(complex)


def identity(n_atoms: int) -> np.ndarray:
    return tensor_product(*[IDENTITY_2] * n_atoms)
