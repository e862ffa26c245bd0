"""Hot numeric kernels, JIT-compiled with numba when available.

Set ``WFHSIM_NO_NUMBA=1`` to force the pure-numpy/Python fallback; the same
source runs either way, so both paths produce identical results.  The kernels
here are the two loops that dominate key-rate sweeps and lock simulations:

* a cyclic Jacobi eigensolver for the small Hermitian matrices that appear
  once per detector outcome in the eavesdropper-entropy scan, and
* the sample-by-sample closed-loop phase-lock integration.

``benchmarks/bench_kernels.py`` compares the two paths.
"""

from __future__ import annotations

import math
import os

import numpy as np

_ENV_FLAG = "WFHSIM_NO_NUMBA"


def _numba_disabled() -> bool:
    return os.environ.get(_ENV_FLAG, "").strip().lower() in {"1", "true", "yes", "on"}


if _numba_disabled():
    NUMBA_ENABLED = False

    def njit(*args, **kwargs):  # no-op stand-in
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap

else:
    try:
        from numba import njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False

        def njit(*args, **kwargs):
            if args and callable(args[0]):
                return args[0]

            def wrap(func):
                return func

            return wrap


LOG2E = 1.4426950408889634


@njit(cache=True)
def hermitian_eigvals_jacobi(matrix: np.ndarray, tol: float = 1e-14, max_sweeps: int = 60) -> np.ndarray:
    """Eigenvalues of a small Hermitian matrix by cyclic Jacobi rotations.

    Deterministic and solver-free; intended for matrices up to ~16x16.  The
    input is copied.  Returned eigenvalues are ascending.
    """
    a = matrix.copy().astype(np.complex128)
    n = a.shape[0]
    for _ in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += abs(a[p, q].real) + abs(a[p, q].imag)
        if off <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= tol * 0.01:
                    continue
                app = a[p, p].real
                aqq = a[q, q].real
                # Unitary 2x2 rotation zeroing the (p, q) element.
                tau = (aqq - app) / (2.0 * mag)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                phase = apq / mag
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * np.conj(phase) * akq
                    a[k, q] = s * phase * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * phase * aqk
                    a[q, k] = s * np.conj(phase) * apk + c * aqk
    eig = np.empty(n, dtype=np.float64)
    for i in range(n):
        eig[i] = a[i, i].real
    return np.sort(eig)


@njit(cache=True)
def conditional_entropy_scan(
    cond_probs: np.ndarray,
    priors: np.ndarray,
    overlaps: np.ndarray,
    skip_threshold: float,
) -> tuple[float, float]:
    """Outcome-averaged von Neumann entropy of the conditional ensembles.

    Args:
        cond_probs: (M, K) conditional outcome probabilities p(o | symbol k).
        priors: (M,) symbol priors.
        overlaps: (M, M) Hermitian matrix of pairwise state overlaps.
        skip_threshold: outcomes with total probability below this are skipped
            and their mass reported separately.

    Returns:
        (entropy_bits, skipped_mass): the sum over kept outcomes of
        p(o) * S(ensemble | o), and the total probability skipped.
    """
    m, n_out = cond_probs.shape
    gram = np.empty((m, m), dtype=np.complex128)
    weights = np.empty(m, dtype=np.float64)
    total = 0.0
    skipped = 0.0
    for o in range(n_out):
        p_o = 0.0
        for k in range(m):
            w = priors[k] * cond_probs[k, o]
            weights[k] = w
            p_o += w
        if p_o < skip_threshold:
            skipped += p_o
            continue
        for j in range(m):
            wj = weights[j] / p_o
            for k in range(m):
                wk = weights[k] / p_o
                gram[j, k] = math.sqrt(wj * wk) * overlaps[j, k]
        eig = hermitian_eigvals_jacobi(gram)
        s_o = 0.0
        for i in range(m):
            lam = eig[i]
            if lam > 1e-300:
                s_o -= lam * math.log(lam) * LOG2E
        total += p_o * s_o
    return total, skipped


@njit(cache=True)
def pi_lock_loop(
    noise: np.ndarray,
    dt: float,
    kp: float,
    ki: float,
    setpoint: float,
    out_min: float,
    out_max: float,
    actuator_gain: float,
    actuator_alpha: float,
    lock_enabled: bool,
) -> tuple[np.ndarray, int]:
    """Euler-stepped closed loop: disturbance + low-passed PI actuation.

    ``actuator_alpha`` is the per-step smoothing factor of the single-pole
    actuator response.  Returns the residual trace (measured phase minus
    setpoint) and the index of divergence (-1 if the loop stayed bounded).
    """
    n = noise.shape[0]
    residual = np.empty(n, dtype=np.float64)
    integral = 0.0
    act = 0.0
    for i in range(n):
        phi = noise[i] + act
        r = phi - setpoint
        residual[i] = r
        if abs(r) > 1e3:
            return residual, i
        if lock_enabled:
            err = -r
            unsat = kp * err + ki * integral
            if unsat > out_max:
                u = out_max
            elif unsat < out_min:
                u = out_min
            else:
                u = unsat
                integral += err * dt  # anti-windup: integrate only unsaturated
            act += actuator_alpha * (actuator_gain * u - act)
    return residual, -1
