"""Atom-collision scheduling: every pair of atoms must cross one cavity centre together.

Atom ``i`` leaves the source (x = 0) at time ``t_i`` with speed ``v_i``, so its
worldline is ``x = v_i (t - t_i)``.  Pair ``(i, j)`` meets at cavity ``k`` when

    L_k (1/v_j - 1/v_i) = t_i - t_j.

Two cavity labelings are supported.  ``paper_eq10`` uses ``k = i + j - 2``;
``table1_reversed`` uses ``k = 2N - i - j``, the same system after the
relabeling ``i -> N + 1 - i``.  The printed N = 4 solution only satisfies the
second one.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from . import _kernels

T_RYDBERG = 3e-2  # radiative lifetime, n ~ 50
T_CAVITY = 1e-3  # photon storage time
T_CAVITY_EFFECTIVE = 0.1  # ~1 % virtual excitation


class Orientation(str, Enum):
    PAPER_EQ10 = "paper_eq10"
    TABLE1_REVERSED = "table1_reversed"


class ScheduleError(ValueError):
    pass


def pair_to_cavity(i: int, j: int, n: int, orientation: Orientation | str = Orientation.TABLE1_REVERSED) -> int:
    """1-based cavity index where atoms ``i < j`` must meet."""
    if not (1 <= i < j <= n):
        raise ValueError(f"invalid pair ({i}, {j}) for N={n}")
    if Orientation(orientation) is Orientation.PAPER_EQ10:
        return i + j - 2
    return 2 * n - i - j


def pairs(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]


@dataclass(frozen=True)
class ScheduleConfig:
    n: int
    v: tuple
    t: tuple
    L: tuple
    orientation: Orientation = Orientation.TABLE1_REVERSED

    def __post_init__(self):
        object.__setattr__(self, "v", tuple(float(x) for x in self.v))
        object.__setattr__(self, "t", tuple(float(x) for x in self.t))
        object.__setattr__(self, "L", tuple(float(x) for x in self.L))
        object.__setattr__(self, "orientation", Orientation(self.orientation))
        errors = config_errors(self.n, self.v, self.t, self.L)
        if errors:
            raise ScheduleError("; ".join(errors))

    @property
    def variable_count(self) -> int:
        return 4 * (self.n - 1)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "orientation": self.orientation.value,
            "v_mps": list(self.v),
            "t_s": list(self.t),
            "L_m": list(self.L),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "ScheduleConfig":
        errors = []
        for key in ("n", "v_mps", "t_s", "L_m"):
            if key not in data:
                errors.append(f"missing key {key!r}")
        unknown = set(data) - {"n", "orientation", "v_mps", "t_s", "L_m"}
        errors.extend(f"unknown key {k!r}" for k in sorted(unknown))
        if errors:
            raise ScheduleError("; ".join(errors))
        orientation = data.get("orientation", Orientation.TABLE1_REVERSED.value)
        try:
            orientation = Orientation(orientation)
        except ValueError:
            raise ScheduleError(f"orientation: unknown value {orientation!r}") from None
        errors = config_errors(int(data["n"]), data["v_mps"], data["t_s"], data["L_m"])
        if errors:
            raise ScheduleError("; ".join(errors))
        return cls(int(data["n"]), data["v_mps"], data["t_s"], data["L_m"], orientation)


def config_errors(n: int, v: Sequence[float], t: Sequence[float], L: Sequence[float]) -> list[str]:
    """All structural problems with a configuration (empty list when valid)."""
    errors = []
    if n < 2:
        errors.append(f"n: need at least 2 atoms, got {n}")
        return errors
    if len(v) != n:
        errors.append(f"v_mps: expected {n} velocities, got {len(v)}")
    if len(t) != n:
        errors.append(f"t_s: expected {n} emission times, got {len(t)}")
    if len(L) != 2 * n - 3:
        errors.append(f"L_m: expected {2 * n - 3} cavity positions, got {len(L)}")
    for idx, x in enumerate(v):
        if not x > 0:
            errors.append(f"v_mps[{idx}]: velocity must be positive, got {x}")
    if len(t) and t[0] != 0:
        errors.append(f"t_s[0]: first emission time must be 0, got {t[0]}")
    for idx in range(1, len(L)):
        if not L[idx] > L[idx - 1]:
            errors.append(f"L_m[{idx}]: positions must increase strictly ({L[idx - 1]} -> {L[idx]})")
    return errors


TABLE1 = ScheduleConfig(
    n=4,
    v=(100.0, 122.0, 146.0, 250.0),
    t=(0.0, 0.359e-3, 0.471e-3, 0.500e-3),
    L=(0.0100, 0.0335, 0.0833, 0.1500, 0.2000),
    orientation=Orientation.TABLE1_REVERSED,
)


@dataclass(frozen=True)
class PhysicalBounds:
    v_range: tuple = (100.0, 1000.0)
    velocity_precision: float = 2.0
    timing_precision: float = 2e-6
    max_length: float = 0.20
    cavity_waist: float = 3e-3
    min_event_gap: float = 2e-5
    t_max: float = 2e-3
    detector_position: float = 0.25

    def __post_init__(self):
        object.__setattr__(self, "v_range", tuple(float(x) for x in self.v_range))
        errors = bounds_errors(asdict(self))
        if errors:
            raise ScheduleError("; ".join(errors))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["v_range"] = list(self.v_range)
        return d


def bounds_errors(data: dict) -> list[str]:
    errors = []
    known = {f for f in PhysicalBounds.__dataclass_fields__}
    for key in sorted(set(data) - known):
        errors.append(f"unknown key {key!r}")
    vr = data.get("v_range", PhysicalBounds.v_range)
    try:
        lo, hi = (float(x) for x in vr)
        if not 0 < lo < hi:
            errors.append(f"v_range: need 0 < low < high, got {list(vr)}")
    except (TypeError, ValueError):
        errors.append(f"v_range: expected [low, high], got {vr!r}")
    for key in known - {"v_range"}:
        if key in data:
            try:
                value = float(data[key])
            except (TypeError, ValueError):
                errors.append(f"{key}: expected a number, got {data[key]!r}")
                continue
            if not value > 0:
                errors.append(f"{key}: must be positive, got {value}")
    return errors


# --- residuals and events -----------------------------------------------------


def _pair_index(n: int, orientation: Orientation):
    ps = pairs(n)
    pi = np.array([i - 1 for i, _ in ps], dtype=np.int64)
    pj = np.array([j - 1 for _, j in ps], dtype=np.int64)
    pk = np.array([pair_to_cavity(i, j, n, orientation) - 1 for i, j in ps], dtype=np.int64)
    return pi, pj, pk


def residuals(config: ScheduleConfig) -> np.ndarray:
    """Arrival-time mismatch (s) at the assigned cavity, one entry per pair ``i < j``."""
    pi, pj, pk = _pair_index(config.n, config.orientation)
    return _kernels.schedule_residuals(config.v, config.t, config.L, pi, pj, pk)


def collision_distance(i: int, j: int, config: ScheduleConfig) -> float:
    """Distance from the source where the worldlines of atoms ``i`` and ``j`` cross."""
    vi, vj = config.v[i - 1], config.v[j - 1]
    if vi == vj:
        raise ScheduleError(f"atoms {i} and {j} have equal velocity {vi} m/s and never meet")
    return (config.t[j - 1] - config.t[i - 1]) / (1.0 / vi - 1.0 / vj)


@dataclass(frozen=True)
class CollisionEvent:
    pair: tuple
    cavity: int
    time: float
    position: float


def collision_events(config: ScheduleConfig, tolerance: float | None = None) -> list[CollisionEvent]:
    """One event per pair at its assigned cavity, sorted by time.

    The event time is the mean of the two arrival times at the cavity centre;
    a mismatch larger than ``tolerance`` (default: timing precision) raises.
    """
    tol = PhysicalBounds().timing_precision if tolerance is None else tolerance
    res = residuals(config)
    worst = float(np.abs(res).max()) if res.size else 0.0
    if worst > tol:
        raise ScheduleError(f"schedule misses a collision by {worst:.3e} s (tolerance {tol:.1e} s)")
    events = []
    for i, j in pairs(config.n):
        k = pair_to_cavity(i, j, config.n, config.orientation)
        lk = config.L[k - 1]
        ti = config.t[i - 1] + lk / config.v[i - 1]
        tj = config.t[j - 1] + lk / config.v[j - 1]
        events.append(CollisionEvent((i, j), k, 0.5 * (ti + tj), lk))
    events.sort(key=lambda e: (e.time, e.pair))
    return events


def arrival_times(config: ScheduleConfig, position: float) -> np.ndarray:
    return np.asarray(config.t) + position / np.asarray(config.v)


def detector_order(config: ScheduleConfig, detector_position: float = 0.25) -> list[int]:
    """Atoms (1-based) in order of arrival at the detector."""
    return [int(a) + 1 for a in np.argsort(arrival_times(config, detector_position), kind="stable")]


# --- validation -------------------------------------------------------------


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)
    max_residual: float = 0.0
    total_span: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.violations

    def as_dict(self) -> dict:
        return {
            "ok": self.ok,
            "violations": list(self.violations),
            "max_residual_s": self.max_residual,
            "total_span_s": self.total_span,
        }


def validate_schedule(config: ScheduleConfig, bounds: PhysicalBounds | None = None) -> ValidationReport:
    bounds = bounds or PhysicalBounds()
    report = ValidationReport()
    bad = report.violations
    w = bounds.cavity_waist
    L = np.asarray(config.L)
    v = np.asarray(config.v)

    gaps = np.diff(np.concatenate([[0.0], L]))
    for k, gap in enumerate(gaps, start=1):
        if gap <= 2 * w:
            where = "source" if k == 1 else f"cavity {k - 1}"
            bad.append(f"waist separation: cavity {k} is {gap * 1e3:.2f} mm from {where} (need > {2 * w * 1e3:.1f} mm)")
    if L[-1] > bounds.max_length * (1 + 1e-12):
        bad.append(f"length: last cavity at {L[-1] * 100:.2f} cm exceeds {bounds.max_length * 100:.1f} cm")
    if bounds.detector_position <= L[-1]:
        bad.append("detector: must sit beyond the last cavity")

    lo, hi = bounds.v_range
    for idx, x in enumerate(v, start=1):
        if not lo <= x <= hi:
            bad.append(f"velocity: v_{idx} = {x:.2f} m/s outside [{lo}, {hi}]")
    for i, j in pairs(config.n):
        if abs(v[i - 1] - v[j - 1]) <= 2 * bounds.velocity_precision:
            bad.append(
                f"velocity resolution: v_{i} and v_{j} differ by {abs(v[i - 1] - v[j - 1]):.2f} m/s "
                f"(need > {2 * bounds.velocity_precision} m/s)"
            )
    for idx, x in enumerate(config.t, start=1):
        if not 0 <= x <= bounds.t_max:
            bad.append(f"timing: t_{idx} = {x:.3e} s outside [0, {bounds.t_max:.1e}]")

    res = residuals(config)
    report.max_residual = float(np.abs(res).max())
    for (i, j), r in zip(pairs(config.n), res):
        if abs(r) >= bounds.timing_precision:
            bad.append(f"residual: pair ({i},{j}) misses by {abs(r) * 1e6:.2f} us")

    # events are reconstructed regardless of residual failures
    events = collision_events(config, tolerance=math.inf)
    by_cavity: dict[int, list[CollisionEvent]] = {}
    for ev in events:
        by_cavity.setdefault(ev.cavity, []).append(ev)
    for k, evs in sorted(by_cavity.items()):
        for a, b in zip(evs, evs[1:]):
            if b.time - a.time <= bounds.min_event_gap:
                bad.append(
                    f"event gap: pairs {a.pair} and {b.pair} in cavity {k} only "
                    f"{(b.time - a.time) * 1e6:.1f} us apart"
                )

    # a third atom must not be inside the waist while a pair interacts there
    t0 = np.asarray(config.t)
    for ev in events:
        i, j = ev.pair
        lk = ev.position
        enter = t0 + (lk - w) / v
        leave = t0 + (lk + w) / v
        # the pair interacts while both atoms sit inside the waist
        win_lo = max(enter[i - 1], enter[j - 1])
        win_hi = min(leave[i - 1], leave[j - 1])
        for m in range(1, config.n + 1):
            if m in ev.pair:
                continue
            if enter[m - 1] < win_hi and leave[m - 1] > win_lo:
                bad.append(f"crossing: atom {m} inside cavity {ev.cavity} during the {ev.pair} collision")

    report.total_span = float(arrival_times(config, bounds.detector_position).max())
    if report.total_span >= T_RYDBERG:
        bad.append(f"budget: schedule span {report.total_span * 1e3:.2f} ms exceeds T_r = {T_RYDBERG * 1e3:.0f} ms")
    return report


# --- solver -----------------------------------------------------------------


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass
class _Layout:
    """Smooth map from unconstrained parameters to a bounded configuration."""

    n: int
    bounds: PhysicalBounds
    gap: float

    @property
    def n_cav(self) -> int:
        return 2 * self.n - 3

    @property
    def size(self) -> int:
        # n velocities, n - 1 times, n_cav + 1 softmax logits (one slack bucket)
        return self.n + (self.n - 1) + self.n_cav + 1

    def decode(self, u: np.ndarray):
        n, b = self.n, self.bounds
        lo, hi = b.v_range
        sv = _sigmoid(u[:n])
        v = lo + (hi - lo) * sv
        st = _sigmoid(u[n : 2 * n - 1])
        t = np.concatenate([[0.0], b.t_max * st])
        z = u[2 * n - 1 :]
        w = np.exp(z - z.max())
        w /= w.sum()
        c = np.cumsum(w)[: self.n_cav]
        room = b.max_length - self.n_cav * self.gap
        L = self.gap * np.arange(1, self.n_cav + 1) + room * c
        return v, t, L, (sv, st, w, c)

    def jacobian(self, u: np.ndarray, aux) -> np.ndarray:
        """d(v, t, L) / du as a dense (2n + n_cav) x size matrix."""
        n, b = self.n, self.bounds
        sv, st, w, c = aux
        lo, hi = b.v_range
        jac = np.zeros((2 * n + self.n_cav, self.size))
        jac[np.arange(n), np.arange(n)] = (hi - lo) * sv * (1 - sv)
        # t_1 is fixed at zero
        jac[n + 1 + np.arange(n - 1), n + np.arange(n - 1)] = b.t_max * st * (1 - st)
        room = b.max_length - self.n_cav * self.gap
        n_z = self.n_cav + 1
        # dc_k/dz_m = w_m [m <= k] - c_k w_m
        k_idx = np.arange(self.n_cav)[:, None]
        m_idx = np.arange(n_z)[None, :]
        dc = w[None, :] * (m_idx <= k_idx) - c[:, None] * w[None, :]
        jac[2 * n :, 2 * n - 1 :] = room * dc
        return jac


@dataclass(frozen=True)
class Infeasible:
    n: int
    starts: int
    best_residual: float
    reason: str = "no start met the residual and validation criteria"


@dataclass(frozen=True)
class SolveStats:
    starts: int
    successes: int
    best_residual: float


def _levenberg_marquardt(fun, jac, u0, max_iter=300, tol=1e-12):
    """Damped Gauss-Newton with multiplicative (Nielsen) damping updates."""
    u = u0.copy()
    r = fun(u)
    cost = 0.5 * r @ r
    mu = None
    nu = 2.0
    for _ in range(max_iter):
        J = jac(u)
        A = J.T @ J
        gvec = J.T @ r
        if mu is None:
            mu = 1e-3 * max(np.diag(A).max(), 1e-12)
        if np.abs(gvec).max() < tol:
            break
        try:
            step = np.linalg.solve(A + mu * np.eye(A.shape[0]), -gvec)
        except np.linalg.LinAlgError:
            step = None
        if step is None or not np.all(np.isfinite(step)):
            mu *= nu
            nu *= 2.0
            if mu > 1e16:
                break
            continue
        u_new = u + step
        with np.errstate(over="ignore", invalid="ignore"):
            r_new = fun(u_new)
            cost_new = 0.5 * r_new @ r_new if np.all(np.isfinite(r_new)) else math.inf
            # gain predicted by the damped linear model
            predicted = 0.5 * step @ (mu * step - gvec)
        rho = (cost - cost_new) / predicted if predicted > 0 else -1.0
        if rho > 0:
            u, r, cost = u_new, r_new, cost_new
            mu *= max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0) ** 3)
            nu = 2.0
            if cost < tol**2:
                break
        else:
            mu *= nu
            nu *= 2.0
            if mu > 1e16:
                break
    return u, r


def _constraint_hinges(x, n, pi, pj, pk, bounds: PhysicalBounds, margin: float = 1.1) -> np.ndarray:
    """Hinge penalties, zero when the non-equation checks of validation hold.

    ``x`` stacks (v, t, L).  Entries cover third-atom clearance at every event,
    velocity resolution and same-cavity event spacing, each in units of its
    own precision so they weigh like the timing residuals.
    """
    v, t, L = x[:n], x[n : 2 * n], x[2 * n :]
    w = bounds.cavity_waist
    lk = L[pk]
    t_ev = 0.5 * (t[pi] + lk / v[pi] + t[pj] + lk / v[pj])
    v_fast = np.maximum(v[pi], v[pj])
    # arrival of every atom at every event's cavity: (pairs, atoms)
    arrive = t[None, :] + lk[:, None] / v[None, :]
    need = margin * (w / v[None, :] + (w / v_fast)[:, None])
    clear = np.maximum(0.0, need - np.abs(arrive - t_ev[:, None]))
    mask = np.ones_like(clear, dtype=bool)
    mask[np.arange(pi.size), pi] = False
    mask[np.arange(pi.size), pj] = False
    out = [clear[mask] / bounds.timing_precision]
    dv = np.abs(v[pi] - v[pj])
    out.append(np.maximum(0.0, margin * 2 * bounds.velocity_precision - dv) / bounds.velocity_precision)
    same = pk[:, None] == pk[None, :]
    iu = np.triu_indices(pi.size, 1)
    gaps = np.abs(t_ev[:, None] - t_ev[None, :])[iu][same[iu]]
    out.append(np.maximum(0.0, margin * bounds.min_event_gap - gaps) / bounds.timing_precision)
    return np.concatenate(out)


def _hinge_jacobian(x, n, pi, pj, pk, bounds: PhysicalBounds, margin: float = 1.1) -> np.ndarray:
    """Analytic Jacobian of :func:`_constraint_hinges` with respect to (v, t, L)."""
    v, t, L = x[:n], x[n : 2 * n], x[2 * n :]
    n_p, n_x = pi.size, x.size
    w = bounds.cavity_waist
    rows = np.arange(n_p)
    lk = L[pk]
    t_ev = 0.5 * (t[pi] + lk / v[pi] + t[pj] + lk / v[pj])
    d_ev = np.zeros((n_p, n_x))
    d_ev[rows, pi] += -0.5 * lk / v[pi] ** 2
    d_ev[rows, pj] += -0.5 * lk / v[pj] ** 2
    d_ev[rows, n + pi] += 0.5
    d_ev[rows, n + pj] += 0.5
    d_ev[rows, 2 * n + pk] += 0.5 * (1.0 / v[pi] + 1.0 / v[pj])
    fast = np.where(v[pi] >= v[pj], pi, pj)
    v_fast = v[fast]

    blocks = []
    # third-atom clearance, same (pair, atom) ordering as the hinge vector
    arrive = t[None, :] + lk[:, None] / v[None, :]
    need = margin * (w / v[None, :] + (w / v_fast)[:, None])
    diff = arrive - t_ev[:, None]
    active = need - np.abs(diff) > 0
    sgn = np.sign(diff)
    jc = np.zeros((n_p, n, n_x))
    atoms = np.arange(n)
    jc[:, atoms, atoms] += -margin * w / v[None, :] ** 2
    jc[rows, :, fast] += (-margin * w / v_fast**2)[:, None]
    d_arr = np.zeros((n_p, n, n_x))
    d_arr[:, atoms, n + atoms] = 1.0
    d_arr[:, atoms, atoms] = -lk[:, None] / v[None, :] ** 2
    d_arr[rows[:, None], atoms[None, :], 2 * n + pk[:, None]] = 1.0 / v[None, :]
    jc -= sgn[:, :, None] * (d_arr - d_ev[:, None, :])
    jc *= active[:, :, None]
    mask = np.ones((n_p, n), dtype=bool)
    mask[rows, pi] = False
    mask[rows, pj] = False
    blocks.append(jc[mask] / bounds.timing_precision)

    dv = v[pi] - v[pj]
    active = margin * 2 * bounds.velocity_precision - np.abs(dv) > 0
    jv = np.zeros((n_p, n_x))
    jv[rows, pi] = -np.sign(dv) * active
    jv[rows, pj] = np.sign(dv) * active
    blocks.append(jv / bounds.velocity_precision)

    iu, ju = np.triu_indices(n_p, 1)
    keep = pk[iu] == pk[ju]
    iu, ju = iu[keep], ju[keep]
    gap = t_ev[iu] - t_ev[ju]
    active = margin * bounds.min_event_gap - np.abs(gap) > 0
    jg = -(np.sign(gap) * active)[:, None] * (d_ev[iu] - d_ev[ju])
    blocks.append(jg / bounds.timing_precision)
    return np.vstack(blocks)


def _apparatus_key(config: ScheduleConfig, bounds: PhysicalBounds) -> tuple:
    return (round(config.L[-1], 12), round(float(arrival_times(config, bounds.detector_position).max()), 12))


@dataclass(frozen=True)
class _Problem:
    n: int
    bounds: PhysicalBounds
    orientation: Orientation

    def __post_init__(self):
        object.__setattr__(self, "layout", _Layout(self.n, self.bounds, 2.0 * self.bounds.cavity_waist * 1.1))
        object.__setattr__(self, "index", _pair_index(self.n, self.orientation))

    def fun(self, u):
        v, t, L, _ = self.layout.decode(u)
        pi, pj, pk = self.index
        eq = _kernels.schedule_residuals(v, t, L, pi, pj, pk) / self.bounds.timing_precision
        hinge = _constraint_hinges(np.concatenate([v, t, L]), self.n, pi, pj, pk, self.bounds)
        return np.concatenate([eq, hinge])

    def jac(self, u):
        v, t, L, aux = self.layout.decode(u)
        pi, pj, pk = self.index
        jx = _kernels.schedule_jacobian(v, t, L, pi, pj, pk) / self.bounds.timing_precision
        jh = _hinge_jacobian(np.concatenate([v, t, L]), self.n, pi, pj, pk, self.bounds)
        return np.vstack([jx, jh]) @ self.layout.jacobian(u, aux)

    def run_start(self, child: np.random.SeedSequence):
        """One LM descent; returns (max equation residual in s, config or None)."""
        rng = np.random.default_rng(child)
        u0 = rng.normal(0.0, 1.5, size=self.layout.size)
        u, r = _levenberg_marquardt(self.fun, self.jac, u0)
        n_eq = self.index[0].size
        worst = float(np.abs(r[:n_eq]).max()) * self.bounds.timing_precision
        if not worst < 0.5 * self.bounds.timing_precision:
            return worst, None
        v, t, L, _ = self.layout.decode(u)
        if np.any(np.diff(L) <= 0):
            return worst, None
        config = ScheduleConfig(self.n, v, t, L, self.orientation)
        return worst, (config if validate_schedule(config, self.bounds).ok else None)


def _run_start(job):
    problem, child = job
    return problem.run_start(child)


def solve_schedule(
    n: int,
    bounds: PhysicalBounds | None = None,
    seed: int = 0,
    starts: int = 200,
    orientation: Orientation | str = Orientation.TABLE1_REVERSED,
    stop_after: int | None = None,
    workers: int | None = None,
    return_stats: bool = False,
):
    """Multi-start bounded least squares for the collision system.

    The residual vector holds the collision equations (in units of the timing
    precision) followed by hinge terms that vanish once the other validation
    checks hold.  Bounds are enforced by a sigmoid map on velocities and
    emission times and a softmax-cumsum map on cavity positions.

    Each start draws its initial point from its own child of
    ``SeedSequence(seed)``.  A start succeeds when every collision residual is
    below half the timing precision and :func:`validate_schedule` is clean.
    Among successes the shortest apparatus wins, then the shortest total
    schedule, then the lowest start index.  ``stop_after`` (serial only) ends
    the search once that many successes are in hand; ``workers > 1`` spreads
    the starts over processes with identical results.
    """
    if n < 2:
        raise ValueError("need at least two atoms")
    bounds = bounds or PhysicalBounds()
    problem = _Problem(n, bounds, Orientation(orientation))
    layout = problem.layout
    if layout.n_cav * layout.gap >= bounds.max_length:
        out = Infeasible(n, 0, math.inf, "cavities cannot fit within max_length at the waist spacing")
        return (out, SolveStats(0, 0, math.inf)) if return_stats else out
    children = np.random.SeedSequence(seed).spawn(starts)

    if workers and workers > 1:
        from .dynamics import parallel_map

        results = parallel_map(_run_start, [(problem, c) for c in children], workers)
    else:
        results = []
        found = 0
        for child in children:
            results.append(problem.run_start(child))
            found += results[-1][1] is not None
            if stop_after and found >= stop_after:
                break

    winners = [(_apparatus_key(cfg, bounds), idx, cfg) for idx, (_, cfg) in enumerate(results) if cfg is not None]
    best_res = min((w for w, _ in results), default=math.inf)
    stats = SolveStats(len(results), len(winners), best_res)
    if not winners:
        out = Infeasible(n, len(results), best_res)
    else:
        out = min(winners, key=lambda w: (w[0], w[1]))[2]
    return (out, stats) if return_stats else out


@dataclass(frozen=True)
class ScanRow:
    n: int
    trials: int
    successes: int
    best_residual_s: float


def feasibility_scan(
    n_values: Iterable[int],
    bounds: PhysicalBounds | None = None,
    trials: int = 3,
    seed: int = 0,
    starts: int = 200,
    orientation: Orientation | str = Orientation.TABLE1_REVERSED,
) -> list[ScanRow]:
    """Per-N count of seeds for which :func:`solve_schedule` succeeds."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    bounds = bounds or PhysicalBounds()
    rows = []
    for n in n_values:
        successes, best = 0, math.inf
        for trial in range(trials):
            out, stats = solve_schedule(
                n, bounds, seed=seed * 1_000_003 + trial, starts=starts,
                orientation=orientation, stop_after=1, return_stats=True,
            )
            best = min(best, stats.best_residual)
            successes += isinstance(out, ScheduleConfig)
        rows.append(ScanRow(n, trials, successes, best))
    return rows


def scan_csv(rows: Sequence[ScanRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n", "trials", "successes", "best_residual_s"])
    for row in rows:
        writer.writerow([row.n, row.trials, row.successes, repr(float(row.best_residual_s))])
    return buf.getvalue()


# --- budget -----------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentBudget:
    total_flight_time: float
    interaction_time: float
    T_r: float = T_RYDBERG
    T_c: float = T_CAVITY
    T_ceff: float = T_CAVITY_EFFECTIVE
    margins: dict = field(default_factory=dict)

    @property
    def passes(self) -> bool:
        return self.total_flight_time < self.T_r and self.interaction_time < self.T_ceff

    def as_dict(self) -> dict:
        d = asdict(self)
        d["passes"] = self.passes
        return d


DEFAULT_COUPLING = 2.0 * math.pi * 25e3  # rad/s


def experiment_budget(
    config: ScheduleConfig,
    params=None,
    gate=None,
    detector_position: float = 0.25,
) -> ExperimentBudget:
    """Flight time to the detector and gate time against the coherence budget.

    ``gate`` (a :class:`~oneway_cqed.gates.GateParams`) supplies the
    interaction time; without it one is derived for ``m = 1`` from the
    coupling of ``params`` (default ``g = 2 pi x 25 kHz``).
    """
    if gate is None:
        from .gates import gate_conditions

        g = params.g if params is not None else DEFAULT_COUPLING
        gate = gate_conditions(g, m=1)
    interaction = float(gate.t_gate)
    span = float(arrival_times(config, detector_position).max())
    margins = {
        "T_r_over_flight": T_RYDBERG / span,
        "T_ceff_over_interaction": T_CAVITY_EFFECTIVE / interaction,
        "T_c_over_interaction": T_CAVITY / interaction,
    }
    return ExperimentBudget(total_flight_time=span, interaction_time=interaction, margins=margins)
