"""Time the numba and pure-numpy kernel paths on representative workloads.

    python benchmarks/bench_kernels.py [--repeat 3] [--json out.json]

Both paths run in this process; the numba path is compiled (and cached) on
its first call, which is excluded from the timings.
"""

import argparse
import json
import time

import numpy as np

from oneway_cqed import _kernels, options
from oneway_cqed import dynamics as dyn
from oneway_cqed import schedule as sch
from oneway_cqed.quantum import atomic_ket


def _time(fn, repeat):
    fn()  # warm-up / compile
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def workloads():
    params = dyn.SystemParams(g=1.0, delta=1.0, Omega=5.0, Gamma=0.01, n_th=1.0)
    terms = dyn.interaction_terms(params)
    rho0 = dyn.product_state(atomic_ket("gg"), dyn.thermal_state(params.fock_dim, params.n_th))
    jumps = dyn.jump_operators(params)
    dt = dyn.default_dt(params)
    n_steps = int(np.ceil(2 * np.pi / dt))
    psi0 = np.kron(atomic_ket("gg"), np.eye(params.fock_dim)[0]).astype(complex)
    pi, pj, pk = sch._pair_index(6, sch.Orientation.TABLE1_REVERSED)
    rng = np.random.default_rng(0)
    v = rng.uniform(100, 1000, 6)
    t = np.r_[0.0, rng.uniform(0, 1e-3, 5)]
    L = np.sort(rng.uniform(0, 0.2, 9))

    def lindblad(use):
        return lambda: _kernels.rk4_lindblad(
            terms.static, terms.mats, terms.freqs, jumps, rho0, dt, n_steps, 10, use_numba=use
        )

    def schrodinger(use):
        return lambda: _kernels.rk4_schrodinger(terms.static, terms.mats, terms.freqs, psi0, dt, n_steps, 10, use_numba=use)

    def residuals(use):
        return lambda: [_kernels.schedule_residuals(v, t, L, pi, pj, pk, use_numba=use) for _ in range(2000)][-1]

    def jacobian(use):
        return lambda: [_kernels.schedule_jacobian(v, t, L, pi, pj, pk, use_numba=use) for _ in range(2000)][-1]

    return {
        f"lindblad_rk4 (d={rho0.shape[0]}, {n_steps} steps)": lindblad,
        f"schrodinger_rk4 (d={psi0.size}, {n_steps} steps)": schrodinger,
        "schedule_residuals (N=6, x2000)": residuals,
        "schedule_jacobian (N=6, x2000)": jacobian,
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="write the timing table here")
    args = ap.parse_args(argv)
    if not options.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    rows = []
    print(f"{'kernel':48s} {'numpy [s]':>10s} {'numba [s]':>10s} {'speedup':>8s} {'max |diff|':>11s}")
    for name, make in workloads().items():
        t_py, out_py = _time(make(False), args.repeat)
        t_jit, out_jit = _time(make(True), args.repeat)
        diff = float(np.abs(np.asarray(out_py) - np.asarray(out_jit)).max())
        rows.append({"kernel": name, "numpy_s": t_py, "numba_s": t_jit, "speedup": t_py / t_jit, "max_abs_diff": diff})
        print(f"{name:48s} {t_py:10.4f} {t_jit:10.4f} {t_py / t_jit:8.1f} {diff:11.2e}")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
