"""Dense linear algebra for two-level atoms coupled to a truncated cavity mode.

Basis conventions used everywhere in the package:

* tensor order is ``atom 1 (x) atom 2 (x) ... (x) field``;
* the atomic basis is ordered ``(|e>, |g>)`` so that the computational
  labels ``|0> = |e>`` and ``|1> = |g>`` are a direct index map;
* Fock states run ``|0>, |1>, ..., |fock_dim - 1>``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10
NORM_TOL = 1e-10
TRACE_TOL = 1e-8
POSITIVITY_TOL = 1e-8
MAX_DIM = 4096

# single atom, basis (|e>, |g>)
KET_E = np.array([1.0, 0.0], dtype=complex)
KET_G = np.array([0.0, 1.0], dtype=complex)
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)  # |e><g|
SIGMA_MINUS = SIGMA_PLUS.T.copy()  # |g><e|
SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)  # |e><e| - |g><g|
SIGMA_X = SIGMA_PLUS + SIGMA_MINUS
SIGMA_Y = -1j * (SIGMA_PLUS - SIGMA_MINUS)
IDENTITY_2 = np.eye(2, dtype=complex)


class DimensionError(ValueError):
    pass


class NotHermitianError(ValueError):
    pass


@dataclass(frozen=True)
class HilbertSpec:
    """Shape of an ``atoms (x) field`` space."""

    atom_count: int = 2
    fock_dim: int = 8

    def __post_init__(self):
        if self.atom_count < 1:
            raise ValueError(f"atom_count must be positive, got {self.atom_count}")
        if self.fock_dim < 2:
            raise ValueError(f"fock_dim must be >= 2, got {self.fock_dim}")

    @property
    def atom_dim(self) -> int:
        return 2**self.atom_count

    @property
    def dim(self) -> int:
        return self.atom_dim * self.fock_dim


def tensor_product(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of square operators (or of vectors), left factor first."""
    if not ops:
        raise ValueError("tensor_product needs at least one factor")
    arrays = [np.asarray(op) for op in ops]
    total = int(np.prod([a.shape[0] for a in arrays]))
    if total > MAX_DIM:
        raise DimensionError(f"product dimension {total} exceeds MAX_DIM={MAX_DIM}")
    for a in arrays:
        if a.ndim == 2 and a.shape[0] != a.shape[1]:
            raise DimensionError(f"operator factor is not square: {a.shape}")
    return reduce(np.kron, arrays)


def fock_annihilation(fock_dim: int) -> np.ndarray:
    if fock_dim < 2:
        raise ValueError(f"fock_dim must be >= 2, got {fock_dim}")
    return np.diag(np.sqrt(np.arange(1, fock_dim, dtype=float)), k=1).astype(complex)


def fock_ket(n: int, fock_dim: int) -> np.ndarray:
    if not 0 <= n < fock_dim:
        raise ValueError(f"Fock level {n} outside truncation 0..{fock_dim - 1}")
    ket = np.zeros(fock_dim, dtype=complex)
    ket[n] = 1.0
    return ket


def atomic_ket(labels: str) -> np.ndarray:
    """Product ket from a label string such as ``"gg"`` or ``"eg"``."""
    table = {"e": KET_E, "g": KET_G, "0": KET_E, "1": KET_G}
    try:
        return tensor_product(*[table[c] for c in labels])
    except KeyError as exc:
        raise ValueError(f"unknown atomic label {exc.args[0]!r} in {labels!r}") from None


def embed(op: np.ndarray, site: int, n_sites: int, local_dim: int = 2) -> np.ndarray:
    """Place a single-site operator at ``site`` of ``n_sites`` identical sites."""
    if not 0 <= site < n_sites:
        raise IndexError(f"site {site} out of range for {n_sites} sites")
    eye = np.eye(local_dim, dtype=complex)
    return tensor_product(*[op if k == site else eye for k in range(n_sites)])


@dataclass(frozen=True)
class CavityOperators:
    """The standard operator set on ``atoms (x) field``, already embedded."""

    spec: HilbertSpec
    a: np.ndarray
    sigma_plus: tuple
    sigma_minus: tuple
    sigma_z: tuple

    @property
    def a_dag(self) -> np.ndarray:
        return self.a.conj().T

    @property
    def identity(self) -> np.ndarray:
        return np.eye(self.spec.dim, dtype=complex)

    def collective_sigma_x(self) -> np.ndarray:
        """Half-sum ``1/2 sum_j (sigma_j^+ + sigma_j^-)`` on the joint space."""
        return 0.5 * sum(sp + sm for sp, sm in zip(self.sigma_plus, self.sigma_minus))


def cavity_operators(spec: HilbertSpec) -> CavityOperators:
    eye_atoms = np.eye(spec.atom_dim, dtype=complex)
    eye_field = np.eye(spec.fock_dim, dtype=complex)
    a = tensor_product(eye_atoms, fock_annihilation(spec.fock_dim))

    def on_atom(op, j):
        return tensor_product(embed(op, j, spec.atom_count), eye_field)

    n = spec.atom_count
    return CavityOperators(
        spec=spec,
        a=a,
        sigma_plus=tuple(on_atom(SIGMA_PLUS, j) for j in range(n)),
        sigma_minus=tuple(on_atom(SIGMA_MINUS, j) for j in range(n)),
        sigma_z=tuple(on_atom(SIGMA_Z, j) for j in range(n)),
    )


def collective_sigma_x(n_atoms: int = 2) -> np.ndarray:
    """Atomic-only collective operator ``1/2 sum_j sigma_x^(j)``."""
    return 0.5 * sum(embed(SIGMA_X, j, n_atoms) for j in range(n_atoms))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.max(np.abs(m - m.conj().T)) < tol


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) < tol


def matrix_exponential_skew(h: np.ndarray, t: float) -> np.ndarray:
    """``exp(-i h t)`` for Hermitian ``h`` via eigendecomposition."""
    h = np.asarray(h, dtype=complex)
    if not is_hermitian(h, tol=max(HERMITIAN_TOL, 1e-12 * max(1.0, np.abs(h).max()))):
        raise NotHermitianError("generator must be Hermitian")
    evals, evecs = np.linalg.eigh(0.5 * (h + h.conj().T))
    return (evecs * np.exp(-1j * evals * t)) @ evecs.conj().T


def normalize(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ValueError("cannot normalize the zero vector")
    return psi / norm


def ket_to_density(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def validate_density(rho: np.ndarray, trace_tol: float = TRACE_TOL) -> np.ndarray:
    """Raise ``ValueError`` unless ``rho`` is a Hermitian, unit-trace, PSD matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"density matrix must be square, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
        raise ValueError("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"density matrix trace is {tr}, expected 1")
    if np.linalg.eigvalsh(rho).min() < -POSITIVITY_TOL:
        raise ValueError("density matrix has negative eigenvalues")
    return rho


def partial_trace_field(rho: np.ndarray, spec: HilbertSpec) -> np.ndarray:
    """Trace out the cavity mode, leaving the ``atom_dim x atom_dim`` atomic state."""
    rho = np.asarray(rho)
    if rho.shape != (spec.dim, spec.dim):
        raise DimensionError(f"rho has shape {rho.shape}, expected {(spec.dim, spec.dim)} for {spec}")
    r = rho.reshape(spec.atom_dim, spec.fock_dim, spec.atom_dim, spec.fock_dim)
    return np.einsum("injn->ij", r)


def partial_trace_atoms(rho: np.ndarray, spec: HilbertSpec) -> np.ndarray:
    rho = np.asarray(rho)
    if rho.shape != (spec.dim, spec.dim):
        raise DimensionError(f"rho has shape {rho.shape}, expected {(spec.dim, spec.dim)} for {spec}")
    r = rho.reshape(spec.atom_dim, spec.fock_dim, spec.atom_dim, spec.fock_dim)
    return np.einsum("iaib->ab", r)


def fidelity(rho: np.ndarray, psi: np.ndarray) -> float:
    """Overlap ``<psi|rho|psi>`` of a mixed state with a pure target."""
    rho = np.asarray(rho)
    psi = np.asarray(psi)
    if rho.shape != (psi.size, psi.size):
        raise DimensionError(f"rho {rho.shape} does not match psi of length {psi.size}")
    value = np.real(np.vdot(psi, rho @ psi))
    return float(min(1.0, max(0.0, value)))


def purity(rho: np.ndarray) -> float:
    rho = np.asarray(rho)
    return float(np.real(np.einsum("ij,ji->", rho, rho)))


def thermal_populations(fock_dim: int, n_th: float) -> np.ndarray:
    """Bose-Einstein populations on the truncated ladder, renormalized."""
    if n_th < 0:
        raise ValueError("n_th must be non-negative")
    if n_th == 0:
        p = np.zeros(fock_dim)
        p[0] = 1.0
        return p
    ratio = n_th / (1.0 + n_th)
    p = ratio ** np.arange(fock_dim) / (1.0 + n_th)
    return p / p.sum()


def thermal_tail(fock_dim: int, n_th: float) -> float:
    """Probability weight lost by truncating a thermal state at ``fock_dim`` levels."""
    if n_th == 0:
        return 0.0
    return float((n_th / (1.0 + n_th)) ** fock_dim)


def fock_dim_for(n_th: float, tail_tol: float = 1e-4, minimum: int = 2) -> int:
    """Smallest truncation whose thermal tail is below ``tail_tol``."""
    if n_th == 0:
        return minimum
    ratio = n_th / (1.0 + n_th)
    return max(minimum, int(np.ceil(np.log(tail_tol) / np.log(ratio))) + 1)


def thermal_state(fock_dim: int, n_th: float) -> np.ndarray:
    return np.diag(thermal_populations(fock_dim, n_th)).astype(complex)
