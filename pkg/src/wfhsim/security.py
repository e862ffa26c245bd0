"""Key-rate analysis for beam-splitting collective attacks, reverse reconciliation.

The eavesdropper holds the lost fraction of each coherent pulse.  Her
accessible information is bounded by the Holevo quantity chi = S(E) - S(E|B),
evaluated exactly on the span of the constellation states: the nonzero
spectrum of a coherent-state mixture equals that of the weighted Gram matrix
G'_{jk} = sqrt(w_j w_k) <beta_j | beta_k>, so an M x M eigenproblem per
detector outcome suffices.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .constellation import Constellation
from .info_metrics import MiResult, wf_mutual_information
from .wf_receiver import WfReceiverParams, conditional_tables

# Outcomes below this probability are skipped in the conditional-entropy
# average; their mass bounds the omitted contribution by ~1e-11 bits.
OUTCOME_SKIP_THRESHOLD = 1e-15


class NumericalFailureError(ArithmeticError):
    """An eigenvalue fell below the tolerated negative round-off band."""


@dataclass(frozen=True)
class Ensemble:
    """Weighted set of coherent amplitudes (a mixed state of pure coherent states)."""

    amplitudes: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        w = np.asarray(self.weights, dtype=np.float64)
        if amps.shape != w.shape or amps.ndim != 1 or amps.size == 0:
            raise ValueError("amplitudes and weights must be matching 1-D arrays")
        if np.any(w < 0.0):
            raise ValueError("weights must be >= 0")
        if abs(float(w.sum()) - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1 within 1e-12, got {w.sum()!r}")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_polar(cls, moduli, phases, weights) -> "Ensemble":
        amps = np.asarray(moduli, dtype=np.float64) * np.exp(
            1j * np.asarray(phases, dtype=np.float64)
        )
        return cls(amplitudes=amps, weights=np.asarray(weights, dtype=np.float64))


@dataclass(frozen=True)
class KgrResult:
    """Key rate decomposition: KGR = MI - chi, chi = S(E) - S(E|B)."""

    kgr_bits: float
    mi_bits: float
    holevo_bits: float
    s_e_bits: float
    s_e_given_b_bits: float

    @property
    def insecure(self) -> bool:
        return self.kgr_bits < 0.0


def coherent_overlap(a: complex, b: complex) -> complex:
    """Inner product <a|b> = exp(-|a|^2/2 - |b|^2/2 + conj(a) b) of coherent states."""
    return cmath.exp(
        -0.5 * (abs(a) ** 2) - 0.5 * (abs(b) ** 2) + a.conjugate() * b
    )


def overlap_matrix(amplitudes: np.ndarray) -> np.ndarray:
    amps = np.asarray(amplitudes, dtype=np.complex128)
    mags2 = np.abs(amps) ** 2
    log_ov = (
        -0.5 * mags2[:, None] - 0.5 * mags2[None, :] + np.conj(amps[:, None]) * amps[None, :]
    )
    return np.exp(log_ov)


def _entropy_of_eigvals(eig: np.ndarray) -> float:
    if np.any(eig < -1e-10):
        raise NumericalFailureError(
            f"Gram eigenvalue {eig.min():.3e} below -1e-10; inputs ill-conditioned"
        )
    lam = np.clip(eig, 0.0, None)
    nz = lam[lam > 0.0]
    return float(-np.sum(nz * np.log2(nz)))


def vn_entropy(e: Ensemble) -> float:
    """Von Neumann entropy of the ensemble's density operator, in bits.

    Computed as the Shannon entropy of the weighted Gram spectrum; exact for
    any mixture of pure states, with cost set only by the ensemble size.
    """
    gram = np.sqrt(np.outer(e.weights, e.weights)) * overlap_matrix(e.amplitudes)
    eig = _kernels.hermitian_eigvals_jacobi(np.ascontiguousarray(gram))
    return _entropy_of_eigvals(eig)


def eve_ensemble(c: Constellation, transmissivity: float) -> Ensemble:
    """The eavesdropper's ensemble: each symbol attenuated by sqrt(1 - T)."""
    root = math.sqrt(max(0.0, 1.0 - transmissivity))
    return Ensemble.from_polar(
        moduli=[root * s.amplitude for s in c.symbols],
        phases=[s.phase for s in c.symbols],
        weights=[s.prior for s in c.symbols],
    )


def conditional_eve_entropy(c: Constellation, params: WfReceiverParams) -> float:
    """Outcome-averaged entropy of the eavesdropper's conditional states, in bits.

    For every detector outcome the conditional ensemble reweights the symbols
    by their posterior; the average runs over the truncated outcome table,
    skipping outcomes with negligible probability.
    """
    tables = conditional_tables(c, params)
    m = len(c.symbols)
    n_out = tables[0].probs.size
    cond = np.empty((m, n_out), dtype=np.float64)
    for k, table in enumerate(tables):
        cond[k, :] = table.probs.ravel()
    priors = np.array([s.prior for s in c.symbols], dtype=np.float64)
    overlaps = overlap_matrix(eve_ensemble(c, params.transmissivity).amplitudes)
    entropy, _skipped = _kernels.conditional_entropy_scan(
        cond, priors, np.ascontiguousarray(overlaps), OUTCOME_SKIP_THRESHOLD
    )
    return float(entropy)


def kgr(c: Constellation, params: WfReceiverParams) -> KgrResult:
    """Key generation rate against beam-splitting collective attacks.

    Negative rates are reported as-is and flagged through
    :attr:`KgrResult.insecure` rather than clamped.
    """
    mi: MiResult = wf_mutual_information(c, params)
    s_e = vn_entropy(eve_ensemble(c, params.transmissivity))
    s_e_given_b = conditional_eve_entropy(c, params)
    holevo = s_e - s_e_given_b
    return KgrResult(
        kgr_bits=mi.mi_bits - holevo,
        mi_bits=mi.mi_bits,
        holevo_bits=holevo,
        s_e_bits=s_e,
        s_e_given_b_bits=s_e_given_b,
    )
