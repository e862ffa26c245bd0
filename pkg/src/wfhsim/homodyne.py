"""Ideal quadrature-readout benchmark for the same constellations.

A balanced homodyne receiver measuring a single quadrature sees each symbol
as a Gaussian with shot-noise variance; the mutual information follows from
the differential entropy of the Gaussian mixture.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constellation import Constellation, CoherentSymbol

LOG2_2PIE = math.log2(2.0 * math.pi * math.e)

# Default integration grid: this many steps per shot-noise sigma.
STEPS_PER_SIGMA = 200
GRID_PAD_SIGMAS = 10.0


class GridAccuracyError(ValueError):
    """Quadrature grid too coarse for the requested entropy accuracy."""


@dataclass(frozen=True)
class HomodyneParams:
    """Shot-noise variance, channel transmissivity and integration grid.

    ``grid`` is (x_min, x_max, step); None lets the integrator pick a grid
    covering every conditional mean plus a 10-sigma pad.  ``visibility``
    scales the conditional means for imperfect mode overlap (1 = ideal).
    """

    shot_noise_variance: float = 1.0
    transmissivity: float = 1.0
    grid: tuple[float, float, float] | None = None
    visibility: float = 1.0

    def __post_init__(self) -> None:
        if self.shot_noise_variance <= 0.0:
            raise ValueError(
                f"shot_noise_variance must be > 0, got {self.shot_noise_variance}"
            )
        if not 0.0 <= self.transmissivity <= 1.0:
            raise ValueError(
                f"transmissivity must be in [0, 1], got {self.transmissivity}"
            )
        if not 0.0 <= self.visibility <= 1.0:
            raise ValueError(f"visibility must be in [0, 1], got {self.visibility}")
        if self.grid is not None:
            x_min, x_max, step = self.grid
            if not (x_max > x_min and step > 0.0):
                raise ValueError(f"malformed grid {self.grid}")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.shot_noise_variance)


def conditional_mean(symbol: CoherentSymbol, params: HomodyneParams) -> float:
    """Quadrature mean 2 sigma0 xi sqrt(T) a cos(phase) of one symbol."""
    return (
        2.0
        * params.sigma
        * params.visibility
        * math.sqrt(params.transmissivity)
        * symbol.amplitude
        * math.cos(symbol.phase)
    )


def hd_conditional_pdf(
    x: float | np.ndarray, symbol: CoherentSymbol, params: HomodyneParams
) -> float | np.ndarray:
    """Gaussian density of the measured quadrature given one sent symbol."""
    mean = conditional_mean(symbol, params)
    var = params.shot_noise_variance
    return np.exp(-((x - mean) ** 2) / (2.0 * var)) / math.sqrt(2.0 * math.pi * var)


def _grid(c: Constellation, params: HomodyneParams) -> np.ndarray:
    if params.grid is not None:
        x_min, x_max, step = params.grid
    else:
        means = [conditional_mean(s, params) for s in c.symbols]
        reach = max(abs(m) for m in means) + GRID_PAD_SIGMAS * params.sigma
        x_min, x_max, step = -reach, reach, params.sigma / STEPS_PER_SIGMA
    n = int(math.ceil((x_max - x_min) / step)) + 1
    if n % 2 == 0:  # Simpson needs an odd point count
        n += 1
    return np.linspace(x_min, x_max, n)


def _simpson_weights(n: int, h: float) -> np.ndarray:
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (h / 3.0)


def _mixture_pdf(x: np.ndarray, c: Constellation, params: HomodyneParams, jitter_rms: float) -> np.ndarray:
    mix = np.zeros_like(x)
    for s in c.symbols:
        mix += s.prior * _jittered_pdf(x, s, params, jitter_rms)
    return mix


def _jittered_pdf(
    x: np.ndarray, symbol: CoherentSymbol, params: HomodyneParams, jitter_rms: float
) -> np.ndarray:
    if jitter_rms == 0.0:
        return hd_conditional_pdf(x, symbol, params)
    nodes, weights = np.polynomial.hermite.hermgauss(21)
    deltas = math.sqrt(2.0) * jitter_rms * nodes
    out = np.zeros_like(x)
    for delta, w in zip(deltas, weights / math.sqrt(math.pi)):
        shifted = CoherentSymbol(
            amplitude=symbol.amplitude, phase=symbol.phase + delta, prior=symbol.prior
        )
        out += w * hd_conditional_pdf(x, shifted, params)
    return out


def _differential_entropy_bits(pdf: np.ndarray, weights: np.ndarray) -> float:
    integrand = np.where(pdf > 1e-300, -pdf * np.log2(pdf, where=pdf > 1e-300), 0.0)
    return float(np.dot(weights, integrand))


def hd_mutual_information(
    c: Constellation,
    params: HomodyneParams,
    phase_jitter_rms: float = 0.0,
    check_convergence: bool = True,
) -> float:
    """Mutual information of the homodyne benchmark, in bits.

    Entropy of the quadrature mixture minus the conditional Gaussian entropy,
    both by composite Simpson quadrature.  With ``phase_jitter_rms`` set, the
    conditional densities are Gaussian-jitter averaged (and the conditional
    entropy is then itself integrated per symbol).  Raises
    :class:`GridAccuracyError` when halving the step moves the result by more
    than 1e-6.
    """
    x = _grid(c, params)
    result = _hd_mi_on_grid(x, c, params, phase_jitter_rms)
    if check_convergence:
        x2 = np.linspace(x[0], x[-1], 2 * len(x) - 1)
        refined = _hd_mi_on_grid(x2, c, params, phase_jitter_rms)
        if abs(refined - result) > 1e-6:
            raise GridAccuracyError(
                f"entropy moved by {abs(refined - result):.3e} when halving the "
                "grid step; refine the grid"
            )
    return result


def _hd_mi_on_grid(
    x: np.ndarray, c: Constellation, params: HomodyneParams, jitter_rms: float
) -> float:
    w = _simpson_weights(len(x), float(x[1] - x[0]))
    h_mix = _differential_entropy_bits(_mixture_pdf(x, c, params, jitter_rms), w)
    if jitter_rms == 0.0:
        h_cond = 0.5 * math.log2(2.0 * math.pi * math.e * params.shot_noise_variance)
    else:
        h_cond = 0.0
        for s in c.symbols:
            h_cond += s.prior * _differential_entropy_bits(
                _jittered_pdf(x, s, params, jitter_rms), w
            )
    return max(0.0, h_mix - h_cond)
