"""Two driven atoms in a detuned cavity: Hamiltonians, effective gate, integrators.

All frequencies are angular (rad/s) and ``hbar = 1``.  The interaction-picture
Hamiltonian is

    H_i(t) = sum_j [ Omega/2 (s+_j + s-_j) + g/2 (e^{-i delta t} a^dag s-_j + h.c.) ]

and for ``Omega >> delta, g`` its propagator over ``delta t = 2 pi m`` collapses
to ``exp(-i Omega t Sx - i lambda t Sx^2)`` with ``Sx`` the collective half-sum
and ``lambda = g^2 / (4 delta)``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .quantum import (
    HilbertSpec,
    atomic_ket,
    cavity_operators,
    collective_sigma_x,
    fidelity,
    fock_dim_for,
    ket_to_density,
    matrix_exponential_skew,
    partial_trace_field,
    tensor_product,
    thermal_state,
    thermal_tail,
    validate_density,
)

TWO_PI = 2.0 * math.pi
STEPS_PER_PERIOD = 50
PERIOD_REL_TOL = 1e-9
THERMAL_TAIL_TOL = 1e-4
MIN_FOCK_DIM = 6


class Convention(str, Enum):
    """Pairing of thermal rates with the cavity jump operators."""

    PAPER_LITERAL = "paper_literal"  # sqrt(G n) a, sqrt(G (n+1)) a^dag
    STANDARD_THERMAL = "standard_thermal"  # sqrt(G (n+1)) a, sqrt(G n) a^dag


class StepSizeError(ValueError):
    pass


class PeriodError(ValueError):
    """The evolution time is not a whole number of detuning periods."""


@dataclass(frozen=True)
class SystemParams:
    g: float
    delta: float
    Omega: float
    Gamma: float = 0.0
    n_th: float = 0.0
    fock_dim: int | None = None
    omega0: float = 0.0

    def __post_init__(self):
        if not self.g > 0:
            raise ValueError(f"g must be positive, got {self.g}")
        if self.Gamma < 0 or self.n_th < 0:
            raise ValueError("Gamma and n_th must be non-negative")
        if self.fock_dim is None:
            object.__setattr__(self, "fock_dim", fock_dim_for(self.n_th, THERMAL_TAIL_TOL, MIN_FOCK_DIM))
        elif self.fock_dim < 2:
            raise ValueError(f"fock_dim must be >= 2, got {self.fock_dim}")
        elif thermal_tail(self.fock_dim, self.n_th) >= THERMAL_TAIL_TOL:
            raise ValueError(
                f"fock_dim={self.fock_dim} truncates {thermal_tail(self.fock_dim, self.n_th):.2e} "
                f"of the n_th={self.n_th} thermal weight (limit {THERMAL_TAIL_TOL})"
            )

    @property
    def omega_a(self) -> float:
        return self.omega0 - self.delta

    @property
    def omega(self) -> float:
        # classical drive is resonant with the atoms
        return self.omega0

    @property
    def lam(self) -> float:
        return self.g**2 / (4.0 * self.delta)

    @property
    def spec(self) -> HilbertSpec:
        return HilbertSpec(atom_count=2, fock_dim=self.fock_dim)

    def max_dt(self) -> float:
        return TWO_PI / (STEPS_PER_PERIOD * max(abs(self.Omega), abs(self.delta), self.g))

    def with_(self, **changes) -> "SystemParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class EffectiveCoefficients:
    A: complex
    B: complex
    C: complex
    lam: float


@dataclass
class HarmonicOperator:
    """``H(t) = static + sum_k (e^{-i w_k t} M_k + h.c.)``; Hermitian for every t."""

    static: np.ndarray
    mats: np.ndarray
    freqs: np.ndarray
    max_frequency: float | None = None

    def __post_init__(self):
        self.static = np.asarray(self.static, dtype=complex)
        d = self.static.shape[0]
        self.mats = np.asarray(self.mats, dtype=complex).reshape(-1, d, d)
        self.freqs = np.asarray(self.freqs, dtype=float).reshape(-1)
        if self.mats.shape[0] != self.freqs.shape[0]:
            raise ValueError("need one frequency per harmonic term")
        if self.max_frequency is None:
            scale = np.abs(np.linalg.eigvalsh(self.static)).max() if d else 0.0
            for w, m in zip(self.freqs, self.mats):
                scale = max(scale, abs(w), 2.0 * np.linalg.norm(m, 2))
            self.max_frequency = float(scale)

    @property
    def dim(self) -> int:
        return self.static.shape[0]

    def __call__(self, t: float) -> np.ndarray:
        h = self.static.copy()
        for w, m in zip(self.freqs, self.mats):
            ph = np.exp(-1j * w * t)
            h += ph * m + np.conj(ph) * m.conj().T
        return h

    @classmethod
    def constant(cls, h: np.ndarray, max_frequency: float | None = None) -> "HarmonicOperator":
        h = np.asarray(h, dtype=complex)
        return cls(h, np.zeros((0,) + h.shape, dtype=complex), np.zeros(0), max_frequency)


def interaction_terms(params: SystemParams) -> HarmonicOperator:
    """Harmonic decomposition of the interaction-picture Hamiltonian."""
    ops = cavity_operators(params.spec)
    drive = sum(sp + sm for sp, sm in zip(ops.sigma_plus, ops.sigma_minus))
    emit = sum(ops.a_dag @ sm for sm in ops.sigma_minus)
    return HarmonicOperator(
        static=0.5 * params.Omega * drive,
        mats=[0.5 * params.g * emit],
        freqs=[params.delta],
        max_frequency=max(abs(params.Omega), abs(params.delta), params.g),
    )


def effective_terms(params: SystemParams) -> HarmonicOperator:
    """Harmonic decomposition of ``g/2 (e^{-i delta t} a^dag + h.c.) Sx``."""
    ops = cavity_operators(params.spec)
    sx = ops.collective_sigma_x()
    return HarmonicOperator(
        static=np.zeros_like(sx),
        mats=[0.5 * params.g * ops.a_dag @ sx],
        freqs=[params.delta],
        max_frequency=max(abs(params.delta), params.g),
    )


def interaction_hamiltonian(params: SystemParams, t: float) -> np.ndarray:
    return interaction_terms(params)(t)


def effective_hamiltonian(params: SystemParams, t: float) -> np.ndarray:
    return effective_terms(params)(t)


def effective_coefficients(params: SystemParams, t: float) -> EffectiveCoefficients:
    d, g = params.delta, params.g
    if d == 0:
        raise ValueError("effective coefficients need a finite detuning")
    e_plus = np.exp(1j * d * t)
    e_minus = np.exp(-1j * d * t)
    B = g * (e_plus - 1.0) / (2j * d)
    C = -g * (e_minus - 1.0) / (2j * d)
    A = g**2 * (t + (e_minus - 1.0) / (1j * d)) / (4.0 * d)
    return EffectiveCoefficients(A=complex(A), B=complex(B), C=complex(C), lam=params.lam)


def effective_unitary_operator_form(params: SystemParams, t: float) -> np.ndarray:
    """``exp(-iA Sx^2) exp(-iB Sx a) exp(-iC Sx a^dag)`` on the truncated joint space.

    Valid for any ``t``; truncation distorts only amplitudes that reach the
    top Fock level.
    """
    from scipy.linalg import expm

    c = effective_coefficients(params, t)
    ops = cavity_operators(params.spec)
    sx = ops.collective_sigma_x()
    return expm(-1j * c.A * sx @ sx) @ expm(-1j * c.B * sx @ ops.a) @ expm(-1j * c.C * sx @ ops.a_dag)


def period_count(params: SystemParams, t: float) -> int:
    """Number ``m`` of whole detuning periods in ``t``; raises otherwise."""
    m_real = params.delta * t / TWO_PI
    m = int(round(m_real))
    if m < 1 or abs(m_real - m) > PERIOD_REL_TOL * max(1.0, abs(m_real)):
        raise PeriodError(f"delta*t = {params.delta * t:.12g} is not 2*pi*m for a positive integer m")
    return m


def effective_unitary(params: SystemParams, t: float) -> np.ndarray:
    """Field-independent two-atom propagator at ``delta t = 2 pi m``."""
    period_count(params, t)
    sx = collective_sigma_x(2)
    return matrix_exponential_skew(params.Omega * sx + params.lam * (sx @ sx), t)


# --- integration -------------------------------------------------------------


@dataclass
class TrajectoryResult:
    """Sampled states with the atomic observables used for population and purity plots.

    ``states`` holds kets (n, d) or density matrices (n, d, d).  Observables are
    only filled when ``spec`` describes a two-atom ``atoms (x) field`` space.
    """

    times: np.ndarray
    states: np.ndarray
    spec: HilbertSpec | None = None
    atomic: np.ndarray | None = field(default=None, repr=False)
    mean_photons: np.ndarray | None = None

    def __post_init__(self):
        if self.spec is None or self.spec.atom_count != 2:
            return
        n, d = self.states.shape[0], self.spec.dim
        rhos = self.states if self.states.ndim == 3 else np.einsum("ti,tj->tij", self.states, self.states.conj())
        r = rhos.reshape(n, self.spec.atom_dim, self.spec.fock_dim, self.spec.atom_dim, self.spec.fock_dim)
        self.atomic = np.einsum("tinjn->tij", r)
        field_rho = np.einsum("tiaib->tab", r)
        self.mean_photons = np.real(np.einsum("taa,a->t", field_rho, np.arange(self.spec.fock_dim)))
        assert rhos.shape[1] == d

    # atomic basis indices for (e,g) ordering: ee=0, eg=1, ge=2, gg=3
    @property
    def p_gg(self) -> np.ndarray:
        return np.real(self.atomic[:, 3, 3])

    @property
    def p_ee(self) -> np.ndarray:
        return np.real(self.atomic[:, 0, 0])

    @property
    def coherence(self) -> np.ndarray:
        """``rho_{gg,ee}`` per sample."""
        return self.atomic[:, 3, 0]

    @property
    def purity(self) -> np.ndarray:
        return np.real(np.einsum("tij,tji->t", self.atomic, self.atomic))

    @property
    def populations(self) -> np.ndarray:
        return np.real(np.einsum("tii->ti", self.atomic))

    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["time_s", "p_gg", "p_ee", "re_coh", "im_coh", "purity", "mean_n"])
        coh = self.coherence
        for row in zip(self.times, self.p_gg, self.p_ee, coh.real, coh.imag, self.purity, self.mean_photons):
            writer.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


def _steps(t_final: float, dt: float, max_dt: float) -> tuple[int, float]:
    if dt <= 0 or t_final < 0:
        raise StepSizeError("dt must be positive and t_final non-negative")
    if dt > max_dt * (1 + 1e-12):
        raise StepSizeError(f"dt={dt:.3e} exceeds the resolution limit {max_dt:.3e}")
    n = max(1, int(math.ceil(t_final / dt - 1e-9)))
    return n, t_final / n


def _as_harmonic(h) -> HarmonicOperator:
    if isinstance(h, HarmonicOperator):
        return h
    return HarmonicOperator.constant(np.asarray(h, dtype=complex))


def integrate_schrodinger(
    h: HarmonicOperator | np.ndarray,
    psi0: np.ndarray,
    t_final: float,
    dt: float,
    spec: HilbertSpec | None = None,
    stride: int = 1,
    use_numba: bool | None = None,
) -> TrajectoryResult:
    """Fixed-step RK4 propagation of ``i d psi/dt = H(t) psi``.

    ``dt`` must resolve the fastest frequency with 50 steps per period; the
    step actually used is ``t_final / n`` for the smallest admissible ``n``.
    """
    h = _as_harmonic(h)
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (h.dim,):
        raise ValueError(f"psi0 has shape {psi0.shape}, Hamiltonian dimension is {h.dim}")
    max_dt = TWO_PI / (STEPS_PER_PERIOD * h.max_frequency) if h.max_frequency > 0 else math.inf
    n, step = _steps(t_final, dt, max_dt)
    stride = min(stride, n)
    states = _kernels.rk4_schrodinger(h.static, h.mats, h.freqs, psi0, step, n, stride, use_numba)
    times = step * stride * np.arange(states.shape[0])
    return TrajectoryResult(times=times, states=states, spec=spec)


def jump_operators(params: SystemParams, convention: Convention | str = Convention.PAPER_LITERAL) -> np.ndarray:
    convention = Convention(convention)
    ops = cavity_operators(params.spec)
    down = math.sqrt(params.Gamma * params.n_th)
    up = math.sqrt(params.Gamma * (params.n_th + 1.0))
    if convention is Convention.PAPER_LITERAL:
        return np.array([down * ops.a, up * ops.a_dag])
    return np.array([up * ops.a, down * ops.a_dag])


def integrate_lindblad(
    params: SystemParams,
    rho0: np.ndarray,
    t_final: float,
    dt: float,
    convention: Convention | str = Convention.PAPER_LITERAL,
    stride: int = 1,
    hamiltonian: HarmonicOperator | None = None,
    use_numba: bool | None = None,
) -> TrajectoryResult:
    """RK4 integration of the thermal master equation driven by ``H_i(t)``.

    ``hamiltonian`` replaces the interaction-picture Hamiltonian (for example
    with :func:`effective_terms`); the jump operators always follow ``params``.
    """
    spec = params.spec
    rho0 = validate_density(rho0)
    if rho0.shape != (spec.dim, spec.dim):
        raise ValueError(f"rho0 has shape {rho0.shape}, expected {(spec.dim, spec.dim)}")
    h = hamiltonian if hamiltonian is not None else interaction_terms(params)
    n, step = _steps(t_final, dt, params.max_dt())
    stride = min(stride, n)
    jumps = jump_operators(params, convention) if params.Gamma > 0 else np.zeros((0, spec.dim, spec.dim), complex)
    states = _kernels.rk4_lindblad(h.static, h.mats, h.freqs, jumps, rho0, step, n, stride, use_numba)
    times = step * stride * np.arange(states.shape[0])
    return TrajectoryResult(times=times, states=states, spec=spec)


def default_dt(params: SystemParams, refine: int = 2) -> float:
    return params.max_dt() / refine


def product_state(psi_atoms: np.ndarray, field_state: np.ndarray) -> np.ndarray:
    return tensor_product(ket_to_density(psi_atoms), np.asarray(field_state, dtype=complex))


def effective_vs_full_fidelity(
    params: SystemParams,
    psi_atoms0: np.ndarray,
    field_state: np.ndarray,
    t: float,
    dt: float | None = None,
    convention: Convention | str = Convention.PAPER_LITERAL,
) -> float:
    """Fidelity of the reduced atomic state under ``H_i`` with the effective-gate image."""
    period_count(params, t)
    psi_atoms0 = np.asarray(psi_atoms0, dtype=complex)
    rho0 = product_state(psi_atoms0, field_state)
    traj = integrate_lindblad(params, rho0, t, dt or default_dt(params), convention, stride=10**9)
    target = effective_unitary(params, t) @ psi_atoms0
    return fidelity(partial_trace_field(traj.final_state(), params.spec), target)


# --- thermal-field trajectory and ripple -----------------------------------


@dataclass(frozen=True)
class RippleReport:
    slow_amplitude: float
    ripple_amplitude: float
    ripple_ratio: float
    deviation_ratio: float
    purity_at_period: float
    fidelity_at_period: float


def ideal_populations(
    params: SystemParams,
    psi_atoms0: np.ndarray,
    times: Sequence[float],
    field_state: np.ndarray | None = None,
) -> np.ndarray:
    """Atomic populations under the effective model ``exp(-i Omega t Sx) U_e(t)``.

    ``U_e`` is obtained by integrating the effective Hamiltonian rather than from
    the closed operator form, whose ``exp(-iB Sx a)`` factors stop being unitary
    once a thermal field populates the top of the Fock ladder.  ``times`` must be
    evenly spaced from zero.
    """
    times = np.asarray(times, dtype=float)
    spec = params.spec
    if field_state is None:
        field_state = thermal_state(spec.fock_dim, params.n_th)
    rho0 = product_state(psi_atoms0, field_state)
    closed = params.with_(Gamma=0.0)
    n_samples = len(times) - 1
    if n_samples == 0:
        rhos = rho0[None]
    else:
        n = int(math.ceil(times[-1] / default_dt(params) / n_samples)) * n_samples
        traj = integrate_lindblad(
            closed, rho0, times[-1], times[-1] / n, hamiltonian=effective_terms(params), stride=n // n_samples
        )
        rhos = traj.states
    sx = collective_sigma_x(2)
    out = np.empty((len(times), spec.atom_dim))
    for k, t in enumerate(times):
        u = matrix_exponential_skew(params.Omega * sx, t)
        r = u @ partial_trace_field(rhos[k], spec) @ u.conj().T
        out[k] = np.real(np.diag(r))
    return out


def fig3_trajectory(
    params: SystemParams,
    periods: int = 1,
    samples_per_period: int = 200,
    convention: Convention | str = Convention.PAPER_LITERAL,
    refine: int = 2,
) -> TrajectoryResult:
    """Master-equation run from ``|g>|g>`` with a thermal cavity field."""
    t_final = periods * TWO_PI / params.delta
    dt = default_dt(params, refine)
    n = max(1, int(math.ceil(t_final / dt - 1e-9)))
    n_samples = periods * samples_per_period
    n = int(math.ceil(n / n_samples)) * n_samples
    rho0 = product_state(atomic_ket("gg"), thermal_state(params.fock_dim, params.n_th))
    return integrate_lindblad(params, rho0, t_final, t_final / n, convention, stride=n // n_samples)


def _high_pass(signal: np.ndarray, window: int) -> np.ndarray:
    """Residual after a centred boxcar average; edges without a full window are dropped."""
    if window < 2 or signal.size <= window:
        return np.zeros(0)
    kernel = np.ones(window) / window
    smooth = np.convolve(signal, kernel, mode="valid")
    lo = (window - 1) // 2
    return signal[lo : lo + smooth.size] - smooth


def ripple_report(params: SystemParams, traj: TrajectoryResult) -> RippleReport:
    """Compare a thermal-field trajectory with the ideal effective evolution.

    The slow amplitude is the peak-to-peak swing of the ideal ``p_gg`` curve.
    The deviation is the simulated minus ideal population of ``|gg>`` and
    ``|ee>``; its ripple part is what survives a boxcar average over one drive
    period ``2 pi / Omega``, i.e. the components at or above the Rabi frequency.
    """
    psi_gg = atomic_ket("gg")
    ideal = ideal_populations(params, psi_gg, traj.times)
    slow = float(ideal[:, 3].max() - ideal[:, 3].min())
    dev_gg = traj.p_gg - ideal[:, 3]
    dev_ee = traj.p_ee - ideal[:, 0]
    sample_dt = traj.times[1] - traj.times[0]
    window = int(round(TWO_PI / abs(params.Omega) / sample_dt)) if params.Omega else 0
    ripple = max(
        [float(np.abs(_high_pass(d, window)).max(initial=0.0)) for d in (dev_gg, dev_ee)]
    )
    deviation = float(max(np.abs(dev_gg).max(), np.abs(dev_ee).max()))
    period_idx = [i for i, t in enumerate(traj.times) if t > 0 and _is_period(params, t)]
    k = period_idx[0] if period_idx else len(traj.times) - 1
    fid = float("nan")
    if period_idx:
        fid = fidelity(traj.atomic[k], effective_unitary(params, traj.times[k]) @ psi_gg)
    return RippleReport(
        slow_amplitude=slow,
        ripple_amplitude=ripple,
        ripple_ratio=ripple / slow if slow > 0 else math.inf,
        deviation_ratio=deviation / slow if slow > 0 else math.inf,
        purity_at_period=float(traj.purity[k]),
        fidelity_at_period=fid,
    )


def _is_period(params: SystemParams, t: float) -> bool:
    try:
        period_count(params, t)
    except PeriodError:
        return False
    return True


def parallel_map(fn: Callable, jobs: Sequence, workers: int | None = None) -> list:
    """Order-preserving map over independent jobs; serial unless ``workers > 1``."""
    if not workers or workers <= 1:
        return [fn(job) for job in jobs]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))
