import os
import subprocess
import sys

import numpy as np
import pytest

from wfhsim import _kernels


class TestJacobiEigensolver:
    @pytest.mark.parametrize("n", [1, 2, 3, 4, 8, 16])
    def test_matches_lapack_on_random_hermitian(self, n):
        rng = np.random.default_rng(n)
        for _ in range(25):
            x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            h = np.ascontiguousarray((x + x.conj().T) / 2)
            ours = _kernels.hermitian_eigvals_jacobi(h)
            ref = np.linalg.eigvalsh(h)
            assert np.max(np.abs(ours - ref)) < 1e-12 * max(1.0, np.abs(ref).max())

    def test_diagonal_matrix(self):
        h = np.diag([3.0, -1.0, 2.0]).astype(complex)
        assert _kernels.hermitian_eigvals_jacobi(h) == pytest.approx([-1.0, 2.0, 3.0])

    def test_input_not_mutated(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        h = np.ascontiguousarray((x + x.conj().T) / 2)
        copy = h.copy()
        _kernels.hermitian_eigvals_jacobi(h)
        assert np.array_equal(h, copy)


class TestEntropyScan:
    def test_skips_negligible_outcomes(self):
        cond = np.array([[0.5, 0.5, 0.0], [0.5, 0.5, 1e-18]])
        priors = np.array([0.5, 0.5])
        overlaps = np.eye(2, dtype=complex)
        total, skipped = _kernels.conditional_entropy_scan(cond, priors, overlaps, 1e-15)
        # orthogonal states, equal posterior weights: one bit per kept outcome
        assert total == pytest.approx(1.0, abs=1e-12)
        assert skipped == pytest.approx(5e-19)


class TestLockLoopKernel:
    def test_lock_disabled_passes_noise_through(self):
        noise = np.linspace(-0.5, 0.5, 100)
        residual, diverged = _kernels.pi_lock_loop(
            noise, 1e-3, 0.0, 0.0, 0.0, -1.0, 1.0, 1.0, 0.1, False
        )
        assert diverged == -1
        assert np.array_equal(residual, noise)

    def test_divergence_index_reported(self):
        noise = np.zeros(100)
        noise[10] = 2e3
        residual, diverged = _kernels.pi_lock_loop(
            noise, 1e-3, 0.0, 1.0, 0.0, -10.0, 10.0, 1.0, 0.1, True
        )
        assert diverged == 10


@pytest.mark.slow
class TestFallbackEquivalence:
    def test_env_flag_reproduces_numba_results(self):
        """Both paths run the same source; agreement to ~ulp level.

        Exact bit-identity is not guaranteed (complex abs and libm rounding
        differ between CPython and compiled code), so compare tightly instead.
        """
        code = (
            "import numpy as np\n"
            "from wfhsim import _kernels\n"
            "from wfhsim.constellation import build_psk\n"
            "from wfhsim.security import kgr\n"
            "from wfhsim.wf_receiver import WfReceiverParams\n"
            "import warnings; warnings.filterwarnings('ignore')\n"
            "assert _kernels.NUMBA_ENABLED == (%r == 'numba')\n"
            "r = kgr(build_psk(4, 2.04), WfReceiverParams(lo_amplitude=3.53, transmissivity=0.5))\n"
            "print(repr(r.kgr_bits), repr(r.s_e_bits), repr(r.s_e_given_b_bits))\n"
        )

        def run(mode: str) -> list[float]:
            env = dict(os.environ)
            if mode == "fallback":
                env["WFHSIM_NO_NUMBA"] = "1"
            else:
                env.pop("WFHSIM_NO_NUMBA", None)
            out = subprocess.run(
                [sys.executable, "-c", code % mode],
                capture_output=True,
                text=True,
                env=env,
                check=True,
            )
            return [float(tok) for tok in out.stdout.split()]

        a, b = run("numba"), run("fallback")
        assert a == pytest.approx(b, abs=1e-12)
