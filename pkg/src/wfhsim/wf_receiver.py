"""Photon-counting interferometric receiver: exact outcome statistics.

The signal interferes with a mesoscopic reference beam on a balanced splitter;
both outputs are photon-number resolved.  Conditioned on the sent symbol, each
branch is Poissonian with a mean set by the interference term, so the joint
outcome table is a product of two Poisson laws and the count difference
follows a Skellam distribution.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .constellation import Constellation, CoherentSymbol

# Nodes for Gauss-Hermite averaging over Gaussian phase jitter.
DEFAULT_JITTER_NODES = 21

# Largest probability mass a table may lose to truncation before erroring.
TRUNCATION_LIMIT = 1e-6


class TruncationError(ValueError):
    """Probability mass lost to table truncation exceeded the allowed budget."""


@dataclass(frozen=True)
class WfReceiverParams:
    """Operating point of the receiver and channel.

    ``lo_amplitude`` is the reference-beam field amplitude (sqrt photons),
    ``visibility`` the mode overlap scaling the interference term, and
    ``phase_jitter_rms`` the RMS of residual Gaussian phase noise folded into
    the outcome tables.  ``n_max`` of None lets table builders choose the
    truncation from a Poisson tail bound.
    """

    lo_amplitude: float
    visibility: float = 1.0
    transmissivity: float = 1.0
    n_max: int | None = None
    phase_jitter_rms: float = 0.0
    jitter_quad_nodes: int = DEFAULT_JITTER_NODES

    def __post_init__(self) -> None:
        if self.lo_amplitude < 0.0:
            raise ValueError(f"lo_amplitude must be >= 0, got {self.lo_amplitude}")
        if not 0.0 <= self.visibility <= 1.0:
            raise ValueError(f"visibility must be in [0, 1], got {self.visibility}")
        if not 0.0 <= self.transmissivity <= 1.0:
            raise ValueError(
                f"transmissivity must be in [0, 1], got {self.transmissivity}"
            )
        if self.n_max is not None and self.n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {self.n_max}")
        if self.phase_jitter_rms < 0.0:
            raise ValueError(
                f"phase_jitter_rms must be >= 0, got {self.phase_jitter_rms}"
            )
        if self.jitter_quad_nodes < 1:
            raise ValueError("jitter_quad_nodes must be >= 1")


@dataclass(frozen=True)
class JointPnrDistribution:
    """Joint probability table over count pairs (n, m), n, m in [0, n_max]."""

    probs: np.ndarray
    n_max: int
    truncation_mass: float

    def __post_init__(self) -> None:
        if self.probs.shape != (self.n_max + 1, self.n_max + 1):
            raise ValueError("probs must be (n_max+1, n_max+1)")
        if np.any(self.probs < 0.0):
            raise ValueError("table entries must be >= 0")

    def marginal_transmitted(self) -> np.ndarray:
        return self.probs.sum(axis=1)

    def marginal_reflected(self) -> np.ndarray:
        return self.probs.sum(axis=0)


@dataclass(frozen=True)
class DiffDistribution:
    """Distribution of the count difference d = n - m over [-d_max, d_max]."""

    probs: np.ndarray
    d_max: int

    def __post_init__(self) -> None:
        if self.probs.shape != (2 * self.d_max + 1,):
            raise ValueError("probs must have length 2*d_max + 1")
        if np.any(self.probs < 0.0) or float(self.probs.sum()) > 1.0 + 1e-9:
            raise ValueError("probs must be >= 0 with total mass <= 1")

    @property
    def support(self) -> np.ndarray:
        return np.arange(-self.d_max, self.d_max + 1)

    def mean(self) -> float:
        return float(np.dot(self.support, self.probs))

    def variance(self) -> float:
        mu = self.mean()
        return float(np.dot((self.support - mu) ** 2, self.probs))


def branch_means(symbol: CoherentSymbol, params: WfReceiverParams) -> tuple[float, float]:
    """Mean photon numbers (mu_t, mu_r) at the two interferometer outputs.

    mu_t/r = (T a^2 + z^2 +/- 2 xi sqrt(T) a z cos(phase)) / 2.  The split is
    computed so the sum mu_t + mu_r equals T a^2 + z^2 exactly in floating
    point (the smaller branch is the exact complement of the larger one).
    """
    t = params.transmissivity
    z = params.lo_amplitude
    a = symbol.amplitude
    total = t * a * a + z * z
    half = 0.5 * total
    cross = params.visibility * math.sqrt(t) * a * z * math.cos(symbol.phase)
    # |cross| <= half by AM-GM; clamp guards the float boundary case.
    cross = min(max(cross, -half), half)
    big = half + abs(cross)
    if big > total:
        big = total
    small = total - big  # exact (Sterbenz): big in [total/2, total]
    if cross >= 0.0:
        return big, small
    return small, big


def homodyne_limit_ok(symbol: CoherentSymbol, params: WfReceiverParams) -> bool:
    """True when the reference beam dominates the signal energy (z^2 >= 3 T a^2)."""
    return params.lo_amplitude**2 >= 3.0 * params.transmissivity * symbol.amplitude**2


def auto_n_max(amplitude: float, params: WfReceiverParams) -> int:
    """Truncation from a Poisson tail bound on the largest possible branch mean."""
    t = params.transmissivity
    z = params.lo_amplitude
    mu_bound = 0.5 * (
        t * amplitude * amplitude
        + z * z
        + 2.0 * params.visibility * math.sqrt(t) * amplitude * z
    )
    return int(math.ceil(mu_bound + 12.0 * math.sqrt(mu_bound) + 20.0))


def _resolve_n_max(amplitudes, params: WfReceiverParams) -> int:
    if params.n_max is not None:
        return params.n_max
    return max(auto_n_max(a, params) for a in amplitudes)


def poisson_pmf(mu: float, n_max: int) -> np.ndarray:
    """Poisson probabilities for counts 0..n_max, evaluated in log space."""
    if mu < 0.0:
        raise ValueError(f"Poisson mean must be >= 0, got {mu}")
    n = np.arange(n_max + 1, dtype=np.float64)
    if mu == 0.0:
        out = np.zeros(n_max + 1)
        out[0] = 1.0
        return out
    logp = n * math.log(mu) - mu - gammaln(n + 1.0)
    return np.exp(logp)


def _joint_table(mu_t: float, mu_r: float, n_max: int) -> np.ndarray:
    return np.outer(poisson_pmf(mu_t, n_max), poisson_pmf(mu_r, n_max))


def _gauss_hermite_weights(sigma: float, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.hermite.hermgauss(nodes)
    return math.sqrt(2.0) * sigma * x, w / math.sqrt(math.pi)


def joint_pnr_conditional(
    symbol: CoherentSymbol, params: WfReceiverParams
) -> JointPnrDistribution:
    """Joint count table conditioned on one sent symbol.

    With zero phase jitter this is the product of the two branch Poisson laws;
    otherwise the table is averaged over Gaussian phase jitter by
    Gauss-Hermite quadrature.
    """
    if not homodyne_limit_ok(symbol, params):
        warnings.warn(
            "reference beam weaker than 3x the signal energy; difference "
            "statistics drift away from the quadrature-readout regime",
            stacklevel=2,
        )
    n_max = _resolve_n_max([symbol.amplitude], params)
    sigma = params.phase_jitter_rms
    if sigma == 0.0:
        mu_t, mu_r = branch_means(symbol, params)
        table = _joint_table(mu_t, mu_r, n_max)
    else:
        deltas, weights = _gauss_hermite_weights(sigma, params.jitter_quad_nodes)
        table = np.zeros((n_max + 1, n_max + 1))
        for delta, weight in zip(deltas, weights):
            shifted = CoherentSymbol(
                amplitude=symbol.amplitude,
                phase=symbol.phase + delta,
                prior=symbol.prior,
            )
            mu_t, mu_r = branch_means(shifted, params)
            table += weight * _joint_table(mu_t, mu_r, n_max)
    truncation_mass = max(0.0, 1.0 - float(table.sum()))
    if truncation_mass > TRUNCATION_LIMIT:
        raise TruncationError(
            f"{truncation_mass:.3e} of probability truncated at n_max={n_max}; "
            "increase n_max"
        )
    return JointPnrDistribution(probs=table, n_max=n_max, truncation_mass=truncation_mass)


def joint_pnr_marginal(c: Constellation, params: WfReceiverParams) -> JointPnrDistribution:
    """Prior-weighted mixture of the conditional tables of a constellation."""
    tables = conditional_tables(c, params)
    mixed = np.zeros_like(tables[0].probs)
    for symbol, table in zip(c.symbols, tables):
        mixed += symbol.prior * table.probs
    truncation_mass = max(0.0, 1.0 - float(mixed.sum()))
    return JointPnrDistribution(
        probs=mixed, n_max=tables[0].n_max, truncation_mass=truncation_mass
    )


def conditional_tables(
    c: Constellation, params: WfReceiverParams
) -> list[JointPnrDistribution]:
    """Conditional tables for every symbol, on one shared truncation grid."""
    n_max = _resolve_n_max([s.amplitude for s in c.symbols], params)
    shared = WfReceiverParams(
        lo_amplitude=params.lo_amplitude,
        visibility=params.visibility,
        transmissivity=params.transmissivity,
        n_max=n_max,
        phase_jitter_rms=params.phase_jitter_rms,
        jitter_quad_nodes=params.jitter_quad_nodes,
    )
    return [joint_pnr_conditional(s, shared) for s in c.symbols]


def difference_dist(mu_t: float, mu_r: float, d_max: int | None = None) -> DiffDistribution:
    """Skellam law of the branch count difference, by truncated convolution.

    P(d) = sum_m P_{m+d}(mu_t) P_m(mu_r).  ``d_max`` of None picks a span from
    the Skellam moments; an explicit span that captures less than 1 - 1e-9 of
    the mass raises :class:`TruncationError`.
    """
    if mu_t < 0.0 or mu_r < 0.0:
        raise ValueError("branch means must be >= 0")
    if d_max is None:
        d_max = default_d_max(mu_t, mu_r)
    if d_max < 0:
        raise ValueError("d_max must be >= 0")
    # Internal Poisson truncation generous enough that the correlation below
    # carries all mass the requested window could possibly hold.
    n_hi = int(math.ceil(max(mu_t, mu_r) + 12.0 * math.sqrt(max(mu_t, mu_r, 1.0)) + 25.0))
    n_hi = max(n_hi, d_max + 1)
    p_t = poisson_pmf(mu_t, n_hi)
    p_r = poisson_pmf(mu_r, n_hi)
    # correlate gives P(d) = sum_m p_t[m + d] p_r[m] for d in [-n_hi, n_hi].
    full = np.correlate(p_t, p_r, mode="full")
    center = n_hi
    lo = center - d_max
    hi = center + d_max + 1
    probs = full[lo:hi].copy()
    mass = float(probs.sum())
    if mass < 1.0 - 1e-9:
        raise TruncationError(
            f"difference window [-{d_max}, {d_max}] captures only {mass:.12f} "
            "of the distribution; increase d_max"
        )
    return DiffDistribution(probs=probs, d_max=d_max)


def default_d_max(mu_t: float, mu_r: float) -> int:
    spread = math.sqrt(mu_t + mu_r)
    return int(math.ceil(abs(mu_t - mu_r) + 12.0 * spread + 20.0))
