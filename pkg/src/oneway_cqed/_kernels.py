"""Hot inner loops: fixed-step RK4 propagation and the schedule residual system.

Each kernel is written once as plain numpy-compatible Python and compiled with
``numba.njit`` unless :data:`oneway_cqed.options.USE_NUMBA` is false, in which
case the interpreted numpy version runs.  Both paths execute the same
arithmetic, so results agree to rounding.

A time-dependent Hamiltonian enters the propagators in harmonic form

    H(t) = S + sum_k ( exp(-i w_k t) M_k + exp(+i w_k t) M_k^dagger )

with ``S`` Hermitian, passed as ``static``, ``mats`` (K, d, d) and ``freqs`` (K,).
"""

import numpy as np

from . import options


def _hamiltonian_at(static, mats, mats_dag, freqs, t):
    h = static.copy()
    for k in range(freqs.shape[0]):
        ph = np.exp(-1j * freqs[k] * t)
        h += ph * mats[k] + np.conj(ph) * mats_dag[k]
    return h


def _rk4_schrodinger(static, mats, mats_dag, freqs, psi0, dt, n_steps, stride):
    n_out = n_steps // stride + 1
    out = np.empty((n_out, psi0.shape[0]), dtype=np.complex128)
    psi = psi0.copy()
    out[0] = psi
    j = 1
    for step in range(n_steps):
        t = step * dt
        h0 = _hamiltonian_at(static, mats, mats_dag, freqs, t)
        hm = _hamiltonian_at(static, mats, mats_dag, freqs, t + 0.5 * dt)
        h1 = _hamiltonian_at(static, mats, mats_dag, freqs, t + dt)
        k1 = -1j * (h0 @ psi)
        k2 = -1j * (hm @ (psi + 0.5 * dt * k1))
        k3 = -1j * (hm @ (psi + 0.5 * dt * k2))
        k4 = -1j * (h1 @ (psi + dt * k3))
        psi = psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (step + 1) % stride == 0:
            out[j] = psi
            j += 1
    return out


def _lindblad_rhs(h, rho, jumps, jumps_dag, decay):
    # decay = 1/2 sum_k L_k^dagger L_k
    drho = -1j * (h @ rho - rho @ h)
    drho -= decay @ rho + rho @ decay
    for k in range(jumps.shape[0]):
        drho += jumps[k] @ rho @ jumps_dag[k]
    return drho


def _rk4_lindblad(static, mats, mats_dag, freqs, jumps, rho0, dt, n_steps, stride):
    d = rho0.shape[0]
    n_out = n_steps // stride + 1
    out = np.empty((n_out, d, d), dtype=np.complex128)
    jumps_dag = np.empty_like(jumps)
    decay = np.zeros((d, d), dtype=np.complex128)
    for k in range(jumps.shape[0]):
        jumps_dag[k] = np.conj(jumps[k]).T.copy()
        decay += 0.5 * (jumps_dag[k] @ jumps[k])
    rho = rho0.copy()
    out[0] = rho
    j = 1
    for step in range(n_steps):
        t = step * dt
        h0 = _hamiltonian_at(static, mats, mats_dag, freqs, t)
        hm = _hamiltonian_at(static, mats, mats_dag, freqs, t + 0.5 * dt)
        h1 = _hamiltonian_at(static, mats, mats_dag, freqs, t + dt)
        k1 = _lindblad_rhs(h0, rho, jumps, jumps_dag, decay)
        k2 = _lindblad_rhs(hm, rho + 0.5 * dt * k1, jumps, jumps_dag, decay)
        k3 = _lindblad_rhs(hm, rho + 0.5 * dt * k2, jumps, jumps_dag, decay)
        k4 = _lindblad_rhs(h1, rho + dt * k3, jumps, jumps_dag, decay)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        # keep Hermiticity exact against rounding drift
        rho = 0.5 * (rho + np.conj(rho).T)
        if (step + 1) % stride == 0:
            out[j] = rho
            j += 1
    return out


def _schedule_residuals(v, t, L, pair_i, pair_j, pair_k):
    """Arrival-time mismatch t_i + L_k/v_i - (t_j + L_k/v_j) for every pair."""
    n = pair_i.shape[0]
    res = np.empty(n)
    for p in range(n):
        i = pair_i[p]
        j = pair_j[p]
        lk = L[pair_k[p]]
        res[p] = t[i] + lk / v[i] - (t[j] + lk / v[j])
    return res


def _schedule_jacobian(v, t, L, pair_i, pair_j, pair_k):
    """Jacobian of the residuals w.r.t. the stacked vector (v, t, L)."""
    n_atoms = v.shape[0]
    n_cav = L.shape[0]
    n = pair_i.shape[0]
    jac = np.zeros((n, 2 * n_atoms + n_cav))
    for p in range(n):
        i = pair_i[p]
        j = pair_j[p]
        k = pair_k[p]
        lk = L[k]
        jac[p, i] = -lk / (v[i] * v[i])
        jac[p, j] = lk / (v[j] * v[j])
        jac[p, n_atoms + i] = 1.0
        jac[p, n_atoms + j] = -1.0
        jac[p, 2 * n_atoms + k] = 1.0 / v[i] - 1.0 / v[j]
    return jac


_PY = {
    "rk4_schrodinger": _rk4_schrodinger,
    "rk4_lindblad": _rk4_lindblad,
    "schedule_residuals": _schedule_residuals,
    "schedule_jacobian": _schedule_jacobian,
}
_JIT = {}


def _compile():
    from numba import njit

    opts = options.njit_opts()
    global _hamiltonian_at_jit, _lindblad_rhs_jit
    ham = njit(**opts)(_hamiltonian_at)
    rhs = njit(**opts)(_lindblad_rhs)
    # nested helpers must resolve to jitted versions inside the compiled kernels
    g = dict(globals())
    g["_hamiltonian_at"] = ham
    g["_lindblad_rhs"] = rhs
    for name, fn in _PY.items():
        clone = type(fn)(fn.__code__, g, fn.__name__, fn.__defaults__, fn.__closure__)
        _JIT[name] = njit(**opts)(clone)


def get(name: str, use_numba: bool | None = None):
    """Return the kernel ``name`` for the requested (or configured) backend."""
    if use_numba is None:
        use_numba = options.USE_NUMBA
    if not use_numba:
        return _PY[name]
    if not _JIT:
        _compile()
    return _JIT[name]


def rk4_schrodinger(static, mats, freqs, psi0, dt, n_steps, stride=1, use_numba=None):
    mats = np.ascontiguousarray(mats, dtype=np.complex128)
    mats_dag = np.ascontiguousarray(np.conj(np.transpose(mats, (0, 2, 1))))
    return get("rk4_schrodinger", use_numba)(
        np.ascontiguousarray(static, dtype=np.complex128),
        mats,
        mats_dag,
        np.ascontiguousarray(freqs, dtype=np.float64),
        np.ascontiguousarray(psi0, dtype=np.complex128),
        float(dt),
        int(n_steps),
        int(stride),
    )


def rk4_lindblad(static, mats, freqs, jumps, rho0, dt, n_steps, stride=1, use_numba=None):
    mats = np.ascontiguousarray(mats, dtype=np.complex128)
    mats_dag = np.ascontiguousarray(np.conj(np.transpose(mats, (0, 2, 1))))
    return get("rk4_lindblad", use_numba)(
        np.ascontiguousarray(static, dtype=np.complex128),
        mats,
        mats_dag,
        np.ascontiguousarray(freqs, dtype=np.float64),
        np.ascontiguousarray(jumps, dtype=np.complex128),
        np.ascontiguousarray(rho0, dtype=np.complex128),
        float(dt),
        int(n_steps),
        int(stride),
    )


def schedule_residuals(v, t, L, pair_i, pair_j, pair_k, use_numba=None):
    return get("schedule_residuals", use_numba)(
        np.asarray(v, dtype=np.float64),
        np.asarray(t, dtype=np.float64),
        np.asarray(L, dtype=np.float64),
        pair_i,
        pair_j,
        pair_k,
    )


def schedule_jacobian(v, t, L, pair_i, pair_j, pair_k, use_numba=None):
    return get("schedule_jacobian", use_numba)(
        np.asarray(v, dtype=np.float64),
        np.asarray(t, dtype=np.float64),
        np.asarray(L, dtype=np.float64),
        pair_i,
        pair_j,
        pair_k,
    )
