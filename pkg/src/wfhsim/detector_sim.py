"""Shot-by-shot Monte Carlo of the two-detector receiver.

Samples Poissonian branch counts per pulse with optional Gaussian phase
jitter, dark counts, and single-generation crosstalk, and reduces record
streams to the empirical distributions used for fidelity checks and plug-in
information estimates.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .constellation import Constellation, CoherentSymbol
from .wf_receiver import DiffDistribution, WfReceiverParams, branch_means


@dataclass(frozen=True)
class DetectorImperfections:
    """Dark counts (mean per gate), crosstalk probability, trusted mean range.

    ``crosstalk_prob`` is the chance that each primary count triggers exactly
    one extra count (a single duplication generation; the measured crosstalk
    is ~1%, so higher generations are negligible).  Branch means outside
    ``valid_mean_range`` trigger a :class:`RangeWarning`.
    """

    dark_mean: float = 0.0
    crosstalk_prob: float = 0.0
    valid_mean_range: tuple[float, float] = (0.5, 15.0)

    def __post_init__(self) -> None:
        if self.dark_mean < 0.0:
            raise ValueError(f"dark_mean must be >= 0, got {self.dark_mean}")
        if not 0.0 <= self.crosstalk_prob < 1.0:
            raise ValueError(
                f"crosstalk_prob must be in [0, 1), got {self.crosstalk_prob}"
            )


NO_IMPERFECTIONS = DetectorImperfections()


@dataclass(frozen=True)
class ShotRecord:
    """One detected pulse: symbol index and the two branch counts."""

    symbol_index: int
    n: int
    m: int

    def __post_init__(self) -> None:
        if self.symbol_index < 0 or self.n < 0 or self.m < 0:
            raise ValueError("symbol index and counts must be >= 0")


class RangeWarning(UserWarning):
    """A branch mean left the trusted detection range."""


def _check_range(mu: float, imperfections: DetectorImperfections) -> None:
    lo, hi = imperfections.valid_mean_range
    if not lo <= mu <= hi:
        warnings.warn(
            f"branch mean {mu:.3f} outside trusted range [{lo}, {hi}]",
            RangeWarning,
            stacklevel=3,
        )


def _detect(
    mu: np.ndarray, imperfections: DetectorImperfections, rng: np.random.Generator
) -> np.ndarray:
    counts = rng.poisson(mu)
    if imperfections.dark_mean > 0.0:
        counts = counts + rng.poisson(imperfections.dark_mean, size=counts.shape)
    if imperfections.crosstalk_prob > 0.0:
        counts = counts + rng.binomial(counts, imperfections.crosstalk_prob)
    return counts


def sample_shot(
    symbol: CoherentSymbol,
    params: WfReceiverParams,
    imperfections: DetectorImperfections,
    rng: np.random.Generator,
) -> ShotRecord:
    """Draw one detected pulse for a fixed sent symbol."""
    phase = symbol.phase
    if params.phase_jitter_rms > 0.0:
        phase = phase + rng.normal(0.0, params.phase_jitter_rms)
    jittered = CoherentSymbol(amplitude=symbol.amplitude, phase=phase, prior=symbol.prior)
    mu_t, mu_r = branch_means(jittered, params)
    _check_range(mu_t, imperfections)
    _check_range(mu_r, imperfections)
    n = int(_detect(np.array([mu_t]), imperfections, rng)[0])
    m = int(_detect(np.array([mu_r]), imperfections, rng)[0])
    return ShotRecord(symbol_index=0, n=n, m=m)


def run_experiment(
    c: Constellation,
    params: WfReceiverParams,
    imperfections: DetectorImperfections,
    shots: int,
    rng: np.random.Generator,
) -> dict[tuple[int, int, int], int]:
    """Acquire ``shots`` pulses with symbols drawn i.i.d. from the priors.

    Returns occurrence counts keyed by (symbol index, n, m), ready for
    :func:`wfhsim.info_metrics.plugin_mi_estimate`.  Deterministic for a
    given generator state.
    """
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    priors = np.array([s.prior for s in c.symbols])
    ks = rng.choice(len(c.symbols), size=shots, p=priors)
    n, m = sample_branch_counts(c, ks, params, imperfections, rng)
    triples = np.stack([ks, n, m], axis=1)
    uniq, counts = np.unique(triples, axis=0, return_counts=True)
    return {(int(k), int(a), int(b)): int(v) for (k, a, b), v in zip(uniq, counts)}


def sample_branch_counts(
    c: Constellation,
    symbol_indices: np.ndarray,
    params: WfReceiverParams,
    imperfections: DetectorImperfections,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized branch counts for a sequence of symbol indices."""
    amps = np.array([s.amplitude for s in c.symbols])[symbol_indices]
    phases = np.array([s.phase for s in c.symbols])[symbol_indices]
    if params.phase_jitter_rms > 0.0:
        phases = phases + rng.normal(0.0, params.phase_jitter_rms, size=phases.shape)
    t = params.transmissivity
    z = params.lo_amplitude
    total = t * amps**2 + z * z
    half_cross = params.visibility * math.sqrt(t) * amps * z * np.cos(phases)
    mu_t = 0.5 * total + half_cross
    mu_r = 0.5 * total - half_cross
    np.clip(mu_t, 0.0, None, out=mu_t)
    np.clip(mu_r, 0.0, None, out=mu_r)
    for symbol in c.symbols:
        nominal = branch_means(symbol, params)
        _check_range(nominal[0], imperfections)
        _check_range(nominal[1], imperfections)
    return _detect(mu_t, imperfections, rng), _detect(mu_r, imperfections, rng)


def empirical_difference_dist(records) -> DiffDistribution:
    """Normalized histogram of the count difference d = n - m of a record stream."""
    records = list(records)
    if not records:
        raise ValueError("no records")
    diffs = np.array([r.n - r.m for r in records])
    d_max = int(np.max(np.abs(diffs))) if diffs.size else 0
    probs = np.zeros(2 * d_max + 1)
    for d, cnt in zip(*np.unique(diffs, return_counts=True)):
        probs[d + d_max] = cnt
    return DiffDistribution(probs=probs / probs.sum(), d_max=d_max)


def difference_hist_from_counts(
    counts: dict[tuple[int, int, int], int], symbol_index: int, d_max: int
) -> DiffDistribution:
    """Per-symbol difference histogram extracted from an experiment counts table."""
    probs = np.zeros(2 * d_max + 1)
    total = 0
    for (k, n, m), v in counts.items():
        if k != symbol_index:
            continue
        d = n - m
        if abs(d) > d_max:
            raise ValueError(f"difference {d} outside [-{d_max}, {d_max}]")
        probs[d + d_max] += v
        total += v
    if total == 0:
        raise ValueError(f"no records for symbol {symbol_index}")
    return DiffDistribution(probs=probs / total, d_max=d_max)


def fidelity(p_a, p_b, method: str = "bhattacharyya") -> float:
    """Agreement between two distributions on the same support, in [0, 1].

    The default is the Bhattacharyya coefficient sum(sqrt(p q)), which is 1
    iff the distributions coincide.  ``method='product'`` computes the plain
    product sum sum(p q) instead; it underestimates agreement for broad
    distributions (sum(p^2) << 1) and is kept for comparison only.
    """
    a = p_a.probs if isinstance(p_a, DiffDistribution) else np.asarray(p_a, dtype=float)
    b = p_b.probs if isinstance(p_b, DiffDistribution) else np.asarray(p_b, dtype=float)
    if isinstance(p_a, DiffDistribution) and isinstance(p_b, DiffDistribution):
        if p_a.d_max != p_b.d_max:
            raise ValueError("distributions have mismatched supports")
    if a.shape != b.shape:
        raise ValueError(f"mismatched supports: {a.shape} vs {b.shape}")
    for name, p in (("p_a", a), ("p_b", b)):
        s = p.sum()
        if not 0.99 <= s <= 1.0 + 1e-9:
            raise ValueError(f"{name} is not normalized (mass {s!r})")
    if method == "bhattacharyya":
        return float(np.sum(np.sqrt(a * b)))
    if method == "product":
        return float(np.sum(a * b))
    raise ValueError(f"unknown fidelity method {method!r}")
