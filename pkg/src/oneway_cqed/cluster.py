"""Cluster graphs, cluster-state construction and eigenvalue verification.

Vertices are numbered from 1 as atoms are; vertex ``a`` is tensor factor
``a - 1`` (vertex 1 leftmost).  Computational states are ``|0> = |e>`` and
``|1> = |g>``, so ``sigma_z = diag(1, -1)`` in both pictures.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .gates import CZ, HADAMARD, PAULI_X, PAULI_Z
from .quantum import IDENTITY_2, tensor_product

MAX_QUBITS = 10
EIGEN_TOL = 1e-9
OVERLAP_TOL = 1e-9

PLUS = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2)
MINUS = np.array([1.0, -1.0], dtype=complex) / math.sqrt(2)
ZERO = np.array([1.0, 0.0], dtype=complex)
ONE = np.array([0.0, 1.0], dtype=complex)

LOCAL_GATES = {"I": IDENTITY_2, "Z": PAULI_Z, "X": PAULI_X, "H": HADAMARD}


class Provenance(str, Enum):
    IDEAL_CZ = "ideal_cz"
    COLLISION_SEQUENCE = "collision_sequence"
    PAPER_EXPLICIT = "paper_explicit"


@dataclass(frozen=True)
class ClusterGraph:
    n: int
    edges: frozenset
    kappa: tuple | None = None

    def __init__(self, n: int, edges: Iterable[Sequence[int]], kappa: Sequence[int] | None = None):
        norm = set()
        for e in edges:
            a, b = (int(x) for x in e)
            if a == b:
                raise ValueError(f"self-loop on vertex {a}")
            for v in (a, b):
                if not 1 <= v <= n:
                    raise ValueError(f"edge {tuple(e)} has vertex outside 1..{n}")
            norm.add((min(a, b), max(a, b)))
        if kappa is not None:
            kappa = tuple(int(k) for k in kappa)
            if len(kappa) != n or any(k not in (0, 1) for k in kappa):
                raise ValueError("kappa needs one bit per vertex")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "edges", frozenset(norm))
        object.__setattr__(self, "kappa", kappa)

    @property
    def vertices(self) -> range:
        return range(1, self.n + 1)

    def neighbors(self, a: int) -> list[int]:
        self._check(a)
        return sorted({b for e in self.edges if a in e for b in e if b != a})

    def has_edge(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.edges

    def _check(self, a: int):
        if not 1 <= a <= self.n:
            raise ValueError(f"vertex {a} not in graph with vertices 1..{self.n}")

    @classmethod
    def box4(cls) -> "ClusterGraph":
        return cls(4, [(1, 2), (2, 3), (3, 4), (1, 4)])

    @classmethod
    def linear(cls, n: int) -> "ClusterGraph":
        return cls(n, [(i, i + 1) for i in range(1, n)])


# reference collision order for the Box(4) cluster
BOX4_COLLISION_ORDER = ((4, 3), (4, 1), (3, 2), (2, 1))


@dataclass
class ClusterState:
    state: np.ndarray
    graph: ClusterGraph
    provenance: Provenance
    kappa: tuple | None = field(default=None)


@dataclass(frozen=True)
class ClusterVerification:
    ok: bool
    kappa: tuple | None
    residuals: tuple
    failed_vertex: int | None = None

    def as_dict(self) -> dict:
        return {
            "ok": self.ok,
            "kappa": list(self.kappa) if self.kappa is not None else None,
            "residuals": [float(r) for r in self.residuals],
            "failed_vertex": self.failed_vertex,
        }


def product_operator(n: int, factors: dict) -> np.ndarray:
    """``(x)_q factors.get(q, I)`` over 1-based qubits ``q``."""
    return tensor_product(*[factors.get(q, IDENTITY_2) for q in range(1, n + 1)])


def correlation_operator(graph: ClusterGraph, a: int) -> np.ndarray:
    graph._check(a)
    factors = {b: PAULI_Z for b in graph.neighbors(a)}
    factors[a] = PAULI_X
    return product_operator(graph.n, factors)


def apply_local(state: np.ndarray, op: np.ndarray, qubit: int, n: int) -> np.ndarray:
    """Apply a one-qubit operator to 1-based ``qubit`` without building the full matrix."""
    t = np.asarray(state, dtype=complex).reshape((2,) * n)
    t = np.tensordot(op, t, axes=([1], [qubit - 1]))
    return np.moveaxis(t, 0, qubit - 1).reshape(-1)


def apply_two(state: np.ndarray, op: np.ndarray, q1: int, q2: int, n: int) -> np.ndarray:
    """Apply a 4x4 operator to qubits ``(q1, q2)``, ``q1`` as the left factor of ``op``."""
    if q1 == q2:
        raise ValueError("two-qubit gate needs distinct qubits")
    t = np.asarray(state, dtype=complex).reshape((2,) * n)
    op4 = op.reshape(2, 2, 2, 2)
    t = np.tensordot(op4, t, axes=([2, 3], [q1 - 1, q2 - 1]))
    return np.moveaxis(t, [0, 1], [q1 - 1, q2 - 1]).reshape(-1)


def plus_state(n: int) -> np.ndarray:
    return tensor_product(*[PLUS] * n)


def build_cluster_ideal(graph: ClusterGraph) -> ClusterState:
    if graph.n > MAX_QUBITS:
        raise ValueError(f"dense simulation limited to {MAX_QUBITS} qubits, got {graph.n}")
    psi = plus_state(graph.n)
    for a, b in sorted(graph.edges):
        psi = apply_two(psi, CZ, a, b, graph.n)
    return ClusterState(psi, graph, Provenance.IDEAL_CZ, kappa=(0,) * graph.n)


def build_cluster_collision(
    graph: ClusterGraph, gate: np.ndarray, order: Sequence[Sequence[int]] | None = None
) -> ClusterState:
    """Apply ``gate`` to each colliding pair in turn, starting from ``|+>`` on every atom."""
    if graph.n > MAX_QUBITS:
        raise ValueError(f"dense simulation limited to {MAX_QUBITS} qubits, got {graph.n}")
    if order is None:
        order = BOX4_COLLISION_ORDER if graph == ClusterGraph.box4() else sorted(graph.edges)
    psi = plus_state(graph.n)
    for pair in order:
        a, b = pair
        if not graph.has_edge(a, b):
            raise ValueError(f"collision pair {tuple(pair)} is not an edge of the graph")
        psi = apply_two(psi, gate, a, b, graph.n)
    state = ClusterState(psi, graph, Provenance.COLLISION_SEQUENCE)
    result = verify_cluster(psi, graph)
    state.kappa = result.kappa
    return state


def verify_cluster(state: np.ndarray, graph: ClusterGraph, tol: float = EIGEN_TOL) -> ClusterVerification:
    """Check ``K^(a) psi = (-1)^kappa_a psi`` for every vertex; never raises on failure."""
    psi = np.asarray(state, dtype=complex)
    kappa, residuals = [], []
    for a in graph.vertices:
        k_psi = correlation_operator(graph, a) @ psi
        r_plus = float(np.linalg.norm(k_psi - psi))
        r_minus = float(np.linalg.norm(k_psi + psi))
        bit, res = (0, r_plus) if r_plus <= r_minus else (1, r_minus)
        residuals.append(res)
        kappa.append(bit)
        if res > tol:
            return ClusterVerification(False, None, tuple(residuals), failed_vertex=a)
    return ClusterVerification(True, tuple(kappa), tuple(residuals))


def stabilizer_projection(state: np.ndarray, graph: ClusterGraph, kappa: Sequence[int] | None = None) -> np.ndarray:
    """``prod_a (I + (-1)^kappa_a K^(a)) / 2`` applied to ``state``."""
    kappa = kappa or (0,) * graph.n
    psi = np.asarray(state, dtype=complex)
    for a, k in zip(graph.vertices, kappa):
        psi = 0.5 * (psi + (-1) ** k * (correlation_operator(graph, a) @ psi))
    return psi


def box4_paper_state() -> np.ndarray:
    """Four-term Box(4) expression as written for the Grover experiment."""
    terms = [
        (ZERO, PLUS, ZERO, PLUS),
        (ZERO, MINUS, ONE, MINUS),
        (ONE, MINUS, ZERO, PLUS),
        (ONE, PLUS, ONE, MINUS),
    ]
    return 0.5 * sum(tensor_product(*t) for t in terms)


@dataclass(frozen=True)
class LocalEquivalence:
    """``(x)_q gates[q]`` maps ``s1`` onto ``phase * s2``."""

    gates: tuple
    phase: complex
    overlap: float

    def operator(self, gate_set: dict | None = None) -> np.ndarray:
        table = gate_set or LOCAL_GATES
        return tensor_product(*[table[g] for g in self.gates])

    def apply(self, state: np.ndarray, gate_set: dict | None = None) -> np.ndarray:
        table = gate_set or LOCAL_GATES
        n = len(self.gates)
        for q, name in enumerate(self.gates, start=1):
            state = apply_local(state, table[name], q, n)
        return state


def single_qubit_cliffords() -> dict:
    """The 24 one-qubit Cliffords (modulo global phase), named by H/S words."""
    s = np.diag([1.0, 1j])
    found = {"I": IDENTITY_2}
    keys = {_phase_key(IDENTITY_2)}
    frontier = ["I"]
    while frontier:
        nxt = []
        for name in frontier:
            for g_name, g in (("H", HADAMARD), ("S", s)):
                m = g @ found[name]
                key = _phase_key(m)
                if key not in keys:
                    keys.add(key)
                    word = g_name if name == "I" else g_name + name
                    found[word] = m
                    nxt.append(word)
        frontier = nxt
    return found


def _phase_key(m: np.ndarray) -> tuple:
    flat = m.ravel()
    ref = flat[np.argmax(np.abs(flat) > 1e-9)]
    return tuple(np.round(flat * (abs(ref) / ref), 8))


def local_equivalence(
    s1: np.ndarray, s2: np.ndarray, gate_set: dict | None = None, tol: float = OVERLAP_TOL
) -> LocalEquivalence | None:
    """Exhaustive search for a product of one-qubit gates taking ``s1`` to ``s2``.

    Among all assignments that work, the one with the fewest non-identity
    gates is returned (ties broken by ``gate_set`` order, identity first).
    """
    table = gate_set or LOCAL_GATES
    s1 = np.asarray(s1, dtype=complex)
    s2 = np.asarray(s2, dtype=complex)
    if s1.shape != s2.shape:
        raise ValueError("states must have equal size")
    n = int(round(math.log2(s1.size)))
    if n > 4:
        raise ValueError("exhaustive local search is limited to 4 qubits")
    names = list(table)
    mats = np.array([table[name] for name in names])
    s2_last = s2.reshape(-1, 2).conj()
    best = None
    # the last qubit is handled in one contraction over all candidate gates
    for head in itertools.product(range(len(names)), repeat=n - 1):
        psi = s1
        for q, idx in enumerate(head, start=1):
            psi = apply_local(psi, mats[idx], q, n)
        m = s2_last.T @ psi.reshape(-1, 2)  # m[a, b] = sum_rest conj(s2[rest, a]) psi[rest, b]
        overlaps = np.einsum("gab,ab->g", mats, m)
        for g in np.nonzero(np.abs(overlaps) > 1 - tol)[0]:
            combo = head + (int(g),)
            key = (sum(1 for c in combo if c != 0), combo)
            if best is None or key < best[0]:
                best = (key, overlaps[g])
    if best is None:
        return None
    (_, combo), ov = best
    return LocalEquivalence(tuple(names[i] for i in combo), complex(ov / abs(ov)), float(abs(ov)))
