"""Measurement-based Grover search over four elements on the Box(4) cluster.

Atoms 4 and 3 are measured in rotated bases ``(|0> +- e^{i phi}|1>)/sqrt 2``
that encode the oracle, then atoms 2 and 1 pass through ``sigma_z`` and a
Hadamard and are read out in the computational basis.  The marked element is
``(r1 xor r3, r2 xor r4)``.

Which atom carries ``alpha`` matters.  Reading the prose literally (``alpha``
on atom 4) reproduces the settings ``pi pi -> 00`` and ``00 -> 11`` but
exchanges ``01`` and ``10``; the setting-to-element table is only reproduced
with ``alpha`` on atom 3, so that assignment is the default.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .cluster import (
    ClusterGraph,
    apply_local,
    box4_paper_state,
    build_cluster_collision,
    build_cluster_ideal,
)
from .gates import HADAMARD, PAULI_Z, controlled_phase

N_QUBITS = 4
ZERO_PROB_TOL = 1e-12
MEASUREMENT_ORDER = (4, 3, 2, 1)
READOUT = HADAMARD @ PAULI_Z  # sigma_z first, then Hadamard


class Source(str, Enum):
    PAPER_EXPLICIT = "paper_explicit"
    COLLISION_GENERATED = "collision_generated"
    IDEAL = "ideal"


class Assignment(str, Enum):
    """Which measured atom carries the ``alpha`` basis."""

    ALPHA_ON_3 = "alpha_on_3"
    ALPHA_ON_4 = "alpha_on_4"


class ValidityRule(str, Enum):
    ALWAYS = "always"
    R3_R4_NOT_BOTH_ZERO = "r3_r4_not_both_zero"


DEFAULT_ASSIGNMENT = Assignment.ALPHA_ON_3
# fixed by derive_validity_rule over every setting and source; see tests
DERIVED_RULE = ValidityRule.ALWAYS


class ZeroProbabilityBranch(ValueError):
    pass


@dataclass(frozen=True)
class OracleSetting:
    alpha: float
    beta: float

    def label(self) -> str:
        def name(x):
            return "pi" if math.isclose(x % (2 * math.pi), math.pi) else ("0" if _is_zero(x) else f"{x:.6g}")

        return f"{name(self.alpha)},{name(self.beta)}"


def _is_zero(x: float) -> bool:
    r = x % (2 * math.pi)
    return math.isclose(r, 0.0, abs_tol=1e-12) or math.isclose(r, 2 * math.pi)


CANONICAL_SETTINGS = (
    OracleSetting(math.pi, math.pi),
    OracleSetting(math.pi, 0.0),
    OracleSetting(0.0, math.pi),
    OracleSetting(0.0, 0.0),
)


@dataclass(frozen=True)
class MeasurementRecord:
    r4: int
    r3: int
    r2: int
    r1: int
    branch_probability: float
    decoded: tuple
    valid: bool
    order: tuple = MEASUREMENT_ORDER

    @property
    def outcomes(self) -> tuple:
        return (self.r4, self.r3, self.r2, self.r1)

    def as_row(self) -> dict:
        return {
            "r4": self.r4,
            "r3": self.r3,
            "r2": self.r2,
            "r1": self.r1,
            "probability": self.branch_probability,
            "decoded": f"{self.decoded[0]}{self.decoded[1]}",
            "valid": int(self.valid),
        }


def measure_in_basis(
    state: np.ndarray,
    qubit: int,
    phase: float,
    forced_outcome: int | None = None,
    rng: np.random.Generator | None = None,
    n: int = N_QUBITS,
):
    """Projective measurement of ``qubit`` (1-based) in the ``(|0> +- e^{i phase}|1>)/sqrt 2`` basis.

    Outcome 0 is the ``+`` projector.  Without ``forced_outcome`` the outcome
    is drawn from ``rng``.  Returns ``(outcome, probability, post_state)``;
    the post-measurement state stays on the full register.
    """
    psi = np.asarray(state, dtype=complex)
    norm = float(np.vdot(psi, psi).real)
    if not math.isclose(norm, 1.0, abs_tol=1e-9):
        raise ValueError(f"state is not normalized (norm^2 = {norm})")
    e = np.exp(1j * phase)
    kets = (np.array([1.0, e]) / math.sqrt(2), np.array([1.0, -e]) / math.sqrt(2))
    projected = [apply_local(psi, np.outer(k, k.conj()), qubit, n) for k in kets]
    probs = [float(np.vdot(p, p).real) for p in projected]
    return _finish(projected, probs, forced_outcome, rng)


def measure_computational(state, qubit, forced_outcome=None, rng=None, n=N_QUBITS):
    psi = np.asarray(state, dtype=complex)
    projected = [apply_local(psi, np.diag([1.0, 0.0]), qubit, n), apply_local(psi, np.diag([0.0, 1.0]), qubit, n)]
    probs = [float(np.vdot(p, p).real) for p in projected]
    return _finish(projected, probs, forced_outcome, rng)


def _finish(projected, probs, forced_outcome, rng):
    if forced_outcome is None:
        if rng is None:
            raise ValueError("need forced_outcome or rng")
        outcome = int(rng.random() >= probs[0])
    else:
        outcome = int(forced_outcome)
        if outcome not in (0, 1):
            raise ValueError(f"outcome must be 0 or 1, got {forced_outcome}")
    p = probs[outcome]
    if p < ZERO_PROB_TOL:
        raise ZeroProbabilityBranch(f"outcome {outcome} has probability {p:.3e}")
    return outcome, p, projected[outcome] / math.sqrt(p)


def readout_transform(state: np.ndarray, qubit: int, n: int = N_QUBITS) -> np.ndarray:
    """``sigma_z`` then Hadamard on a readout atom (1 or 2)."""
    if qubit not in (1, 2):
        raise ValueError(f"readout atoms are 1 and 2, got {qubit}")
    return apply_local(state, READOUT, qubit, n)


def decode(r1: int, r2: int, r3: int, r4: int) -> tuple:
    return (r1 ^ r3, r2 ^ r4)


def oracle_truth(setting: OracleSetting, strict: bool = True) -> tuple | None:
    """Marked element for a canonical setting: pi pi -> 00, pi 0 -> 01, 0 pi -> 10, 00 -> 11."""
    bits = []
    for angle in (setting.alpha, setting.beta):
        if _is_zero(angle):
            bits.append(1)
        elif math.isclose(angle % (2 * math.pi), math.pi):
            bits.append(0)
        elif strict:
            raise ValueError(f"non-canonical oracle setting {setting}")
        else:
            return None
    return tuple(bits)


def is_valid(outcomes: Sequence[int], rule: ValidityRule | str = DERIVED_RULE) -> bool:
    r4, r3 = outcomes[0], outcomes[1]
    if ValidityRule(rule) is ValidityRule.ALWAYS:
        return True
    return bool(r3 or r4)


def cluster_source(source: Source | str, apply_frame: bool = True) -> np.ndarray:
    """Box(4) input state for the search.

    For generated clusters the recorded eigenvalue frame ``kappa`` is undone
    with ``Z`` on every vertex where ``kappa = 1``.  The explicit state has no
    such frame (it is not a Box(4) stabilizer state) and is returned as is.
    """
    source = Source(source)
    graph = ClusterGraph.box4()
    if source is Source.PAPER_EXPLICIT:
        return box4_paper_state()
    cs = build_cluster_ideal(graph) if source is Source.IDEAL else build_cluster_collision(graph, controlled_phase())
    psi = cs.state
    if apply_frame and cs.kappa is not None:
        for a, k in zip(graph.vertices, cs.kappa):
            if k:
                psi = apply_local(psi, PAULI_Z, a, graph.n)
    return psi


def _phases(setting: OracleSetting, assignment: Assignment) -> dict:
    if Assignment(assignment) is Assignment.ALPHA_ON_3:
        return {3: setting.alpha, 4: setting.beta}
    return {4: setting.alpha, 3: setting.beta}


def branch_probability(
    state: np.ndarray,
    setting: OracleSetting,
    outcomes: Sequence[int],
    assignment: Assignment | str = DEFAULT_ASSIGNMENT,
    first: int = 4,
) -> float:
    """Joint probability of ``(r4, r3, r2, r1)``; zero for impossible branches."""
    phases = _phases(setting, assignment)
    bits = dict(zip(MEASUREMENT_ORDER, outcomes))
    psi = state
    prob = 1.0
    try:
        for q in (first, 7 - first):
            _, p, psi = measure_in_basis(psi, q, phases[q], bits[q])
            prob *= p
        for q in (2, 1):
            psi = readout_transform(psi, q)
        for q in (2, 1):
            _, p, psi = measure_computational(psi, q, bits[q])
            prob *= p
    except ZeroProbabilityBranch:
        return 0.0
    return prob


def enumerate_branches(
    setting: OracleSetting,
    source: Source | str = Source.COLLISION_GENERATED,
    assignment: Assignment | str = DEFAULT_ASSIGNMENT,
    rule: ValidityRule | str = DERIVED_RULE,
    first: int = 4,
    state: np.ndarray | None = None,
) -> list[MeasurementRecord]:
    """All 16 outcome branches in ``(r4, r3, r2, r1)`` lexicographic order.

    ``first`` picks which of atoms 4 and 3 is measured first.
    """
    if first not in (3, 4):
        raise ValueError("first measured atom must be 3 or 4")
    psi = cluster_source(source) if state is None else state
    records = []
    for r4, r3, r2, r1 in itertools.product((0, 1), repeat=4):
        p = branch_probability(psi, setting, (r4, r3, r2, r1), assignment, first)
        records.append(
            MeasurementRecord(r4, r3, r2, r1, p, decode(r1, r2, r3, r4), is_valid((r4, r3), rule))
        )
    return records


def branches_csv(records: Sequence[MeasurementRecord]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, ["r4", "r3", "r2", "r1", "probability", "decoded", "valid"], lineterminator="\n")
    writer.writeheader()
    for rec in records:
        row = rec.as_row()
        row["probability"] = repr(float(row["probability"]))
        writer.writerow(row)
    return buf.getvalue()


@dataclass(frozen=True)
class RuleCheck:
    rule: ValidityRule
    holds: bool
    accepted_probability: float
    failures: tuple


def check_rule(
    rule: ValidityRule | str,
    source: Source | str = Source.COLLISION_GENERATED,
    assignment: Assignment | str = DEFAULT_ASSIGNMENT,
    settings: Sequence[OracleSetting] = CANONICAL_SETTINGS,
) -> RuleCheck:
    """Does every nonzero branch the rule accepts decode to the marked element?"""
    rule = ValidityRule(rule)
    failures = []
    accepted = 0.0
    for s in settings:
        truth = oracle_truth(s)
        for rec in enumerate_branches(s, source, assignment, rule):
            if rec.branch_probability < ZERO_PROB_TOL or not rec.valid:
                continue
            accepted += rec.branch_probability
            if rec.decoded != truth:
                failures.append((s.label(), rec.outcomes))
    return RuleCheck(rule, not failures, accepted / len(settings), tuple(failures))


def derive_validity_rule(
    source: Source | str = Source.COLLISION_GENERATED, assignment: Assignment | str = DEFAULT_ASSIGNMENT
) -> tuple[ValidityRule | None, list[RuleCheck]]:
    """Test the stated rule first, then the unconditional one; keep the most permissive that holds."""
    checks = [check_rule(r, source, assignment) for r in (ValidityRule.R3_R4_NOT_BOTH_ZERO, ValidityRule.ALWAYS)]
    holding = [c for c in checks if c.holds]
    if not holding:
        return None, checks
    return max(holding, key=lambda c: c.accepted_probability).rule, checks


def decoded_distribution(records: Sequence[MeasurementRecord]) -> dict:
    """Probability mass per decoded pair over valid branches."""
    out: dict = {}
    for rec in records:
        if rec.valid and rec.branch_probability >= ZERO_PROB_TOL:
            out[rec.decoded] = out.get(rec.decoded, 0.0) + rec.branch_probability
    return out


def sample_run(
    setting: OracleSetting,
    seed: int,
    source: Source | str = Source.COLLISION_GENERATED,
    assignment: Assignment | str = DEFAULT_ASSIGNMENT,
    rule: ValidityRule | str = DERIVED_RULE,
) -> MeasurementRecord:
    """One simulated experimental run: sequential measurements with a seeded generator."""
    rng = np.random.default_rng(seed)
    phases = _phases(setting, assignment)
    psi = cluster_source(source)
    bits = {}
    prob = 1.0
    for q in (4, 3):
        bits[q], p, psi = measure_in_basis(psi, q, phases[q], rng=rng)
        prob *= p
    for q in (2, 1):
        psi = readout_transform(psi, q)
    for q in (2, 1):
        bits[q], p, psi = measure_computational(psi, q, rng=rng)
        prob *= p
    r4, r3, r2, r1 = (bits[q] for q in MEASUREMENT_ORDER)
    return MeasurementRecord(r4, r3, r2, r1, prob, decode(r1, r2, r3, r4), is_valid((r4, r3), rule))


def sample_shots(
    setting: OracleSetting,
    seed: int,
    shots: int,
    source: Source | str = Source.COLLISION_GENERATED,
    assignment: Assignment | str = DEFAULT_ASSIGNMENT,
    rule: ValidityRule | str = DERIVED_RULE,
) -> list[MeasurementRecord]:
    """Many runs drawn from the enumerated branch distribution with one seeded generator."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    records = enumerate_branches(setting, source, assignment, rule)
    probs = np.array([r.branch_probability for r in records])
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(records), size=shots, p=probs / probs.sum())
    return [records[i] for i in picks]


def histogram(records: Sequence[MeasurementRecord]) -> dict:
    counts = Counter(f"{r.decoded[0]}{r.decoded[1]}" for r in records if r.valid)
    return dict(sorted(counts.items()))
