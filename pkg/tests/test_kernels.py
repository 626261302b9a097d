"""Numba and pure-numpy kernel paths must agree (they run the same arithmetic)."""

import numpy as np
import pytest

from oneway_cqed import _kernels, options
from oneway_cqed import dynamics as dyn
from oneway_cqed import schedule as sch
from oneway_cqed.quantum import atomic_ket

needs_numba = pytest.mark.skipif(not options.HAVE_NUMBA, reason="numba not installed")


@pytest.mark.parametrize("value, expected", [("1", "False"), ("0", str(options.HAVE_NUMBA)), ("yes", "False")])
def test_env_flag_selects_backend(value, expected):
    import os
    import subprocess
    import sys

    env = dict(os.environ, ONEWAY_CQED_DISABLE_NUMBA=value)
    env.pop("NUMBA_DISABLE_JIT", None)
    out = subprocess.run(
        [sys.executable, "-c", "from oneway_cqed import options; print(options.USE_NUMBA)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == expected


@needs_numba
def test_lindblad_backends_agree():
    params = dyn.SystemParams(g=1.0, delta=1.0, Omega=5.0, Gamma=0.02, n_th=0.3, fock_dim=8)
    terms = dyn.interaction_terms(params)
    rho0 = dyn.product_state(atomic_ket("gg"), dyn.thermal_state(8, 0.3))
    jumps = dyn.jump_operators(params)
    args = (terms.static, terms.mats, terms.freqs, jumps, rho0, 0.01, 60, 20)
    a = _kernels.rk4_lindblad(*args, use_numba=False)
    b = _kernels.rk4_lindblad(*args, use_numba=True)
    assert a.shape == (4, 32, 32)
    assert np.allclose(a, b, atol=1e-13, rtol=0)


@needs_numba
def test_schrodinger_backends_agree():
    params = dyn.SystemParams(g=1.0, delta=1.0, Omega=3.0, fock_dim=6)
    terms = dyn.interaction_terms(params)
    psi0 = np.kron(atomic_ket("eg"), np.eye(6)[1]).astype(complex)
    a = _kernels.rk4_schrodinger(terms.static, terms.mats, terms.freqs, psi0, 0.01, 100, 7, use_numba=False)
    b = _kernels.rk4_schrodinger(terms.static, terms.mats, terms.freqs, psi0, 0.01, 100, 7, use_numba=True)
    assert a.shape == (100 // 7 + 1, 24)
    assert np.allclose(a, b, atol=1e-13, rtol=0)


@needs_numba
def test_schedule_kernels_agree():
    pi, pj, pk = sch._pair_index(5, sch.Orientation.PAPER_EQ10)
    rng = np.random.default_rng(3)
    v = rng.uniform(100, 900, 5)
    t = np.r_[0.0, rng.uniform(0, 1e-3, 4)]
    L = np.sort(rng.uniform(0, 0.2, 7))
    for name in ("schedule_residuals", "schedule_jacobian"):
        f = getattr(_kernels, name)
        assert np.array_equal(f(v, t, L, pi, pj, pk, use_numba=False), f(v, t, L, pi, pj, pk, use_numba=True))


def test_schedule_jacobian_matches_finite_differences():
    pi, pj, pk = sch._pair_index(4, sch.Orientation.TABLE1_REVERSED)
    v = np.array([100.0, 122.0, 146.0, 250.0])
    t = np.array([0.0, 3.59e-4, 4.71e-4, 5e-4])
    L = np.array([0.01, 0.0335, 0.0833, 0.15, 0.2])
    x = np.concatenate([v, t, L])
    jac = _kernels.schedule_jacobian(v, t, L, pi, pj, pk, use_numba=False)

    def f(x):
        return _kernels.schedule_residuals(x[:4], x[4:8], x[8:], pi, pj, pk, use_numba=False)

    num = np.empty_like(jac)
    for c in range(x.size):
        h = 1e-6 * max(abs(x[c]), 1e-3)
        xp, xm = x.copy(), x.copy()
        xp[c] += h
        xm[c] -= h
        num[:, c] = (f(xp) - f(xm)) / (2 * h)
    assert np.allclose(jac, num, rtol=1e-6, atol=1e-12)
