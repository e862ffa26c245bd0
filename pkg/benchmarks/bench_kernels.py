#!/usr/bin/env python3
"""Benchmark the JIT-compiled kernels against the pure-Python/numpy fallback.

Runs each workload twice in subprocesses: once with numba active and once
with ``WFHSIM_NO_NUMBA=1``.  Workloads are the two hot loops: the
eavesdropper-entropy outcome scan inside a key-rate evaluation and the
sample-by-sample lock simulation.

    python benchmarks/bench_kernels.py
"""

import os
import subprocess
import sys

WORKLOADS = {
    "key-rate point (entropy scan, QPSK)": """
import time, warnings
warnings.filterwarnings("ignore")
from wfhsim.constellation import build_psk
from wfhsim.security import kgr
from wfhsim.wf_receiver import WfReceiverParams
c = build_psk(4, 2.04)
params = WfReceiverParams(lo_amplitude=3.53, transmissivity=0.5)
kgr(c, params)  # warmup / JIT compile
t0 = time.perf_counter()
for _ in range(5):
    kgr(c, params)
print((time.perf_counter() - t0) / 5)
""",
    "lock simulation (60 s at 10 kHz)": """
import time, warnings
warnings.filterwarnings("ignore")
from wfhsim.lock_sim import ActuatorModel, NoiseModel, default_fast_pi, simulate_lock
pi, act = default_fast_pi(), ActuatorModel()
simulate_lock(1.0, 1e-4, pi, act, NoiseModel(seed=0))  # warmup / JIT compile
t0 = time.perf_counter()
for seed in range(3):
    simulate_lock(60.0, 1e-4, pi, act, NoiseModel(seed=seed))
print((time.perf_counter() - t0) / 3)
""",
}


def run(code: str, disable_numba: bool) -> float:
    env = dict(os.environ)
    if disable_numba:
        env["WFHSIM_NO_NUMBA"] = "1"
    else:
        env.pop("WFHSIM_NO_NUMBA", None)
    out = subprocess.run(
        [sys.executable, "-c", code], capture_output=True, text=True, env=env, check=True
    )
    return float(out.stdout.strip().splitlines()[-1])


def main() -> None:
    print(f"{'workload':42s} {'numba':>10s} {'fallback':>10s} {'speedup':>9s}")
    for name, code in WORKLOADS.items():
        fast = run(code, disable_numba=False)
        slow = run(code, disable_numba=True)
        print(f"{name:42s} {fast:9.3f}s {slow:9.3f}s {slow / fast:8.1f}x")


if __name__ == "__main__":
    main()
