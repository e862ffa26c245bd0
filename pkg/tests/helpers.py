"""Test-only oracles: dense Fock-space entropy and brute-force convolutions."""

import numpy as np
from scipy.special import gammaln


def fock_vn_entropy(amplitudes, weights, n_cut: int = 40) -> float:
    """Entropy of a coherent-state mixture via explicit Fock-basis truncation.

    Builds the density matrix up to photon number ``n_cut`` and diagonalizes
    it directly; independent of the Gram-spectrum route in the package.
    """
    n = np.arange(n_cut + 1)
    log_fact = gammaln(n + 1.0)
    rho = np.zeros((n_cut + 1, n_cut + 1), dtype=complex)
    for a, w in zip(np.asarray(amplitudes, dtype=complex), weights):
        coeff = np.exp(-0.5 * abs(a) ** 2) * np.power(a, n) / np.exp(0.5 * log_fact)
        rho += w * np.outer(coeff, coeff.conj())
    eig = np.linalg.eigvalsh(rho)
    eig = np.clip(eig.real, 0.0, None)
    nz = eig[eig > 1e-300]
    return float(-np.sum(nz * np.log2(nz)))


def brute_force_difference(joint: np.ndarray, d_max: int) -> np.ndarray:
    """P(d) summed directly from a joint (n, m) table."""
    out = np.zeros(2 * d_max + 1)
    n_max = joint.shape[0] - 1
    for n in range(n_max + 1):
        for m in range(n_max + 1):
            d = n - m
            if -d_max <= d <= d_max:
                out[d + d_max] += joint[n, m]
    return out
