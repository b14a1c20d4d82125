"""
Gaussian-kernel density estimate for a univariate sample and its derivative.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy import stats

from .exceptions import InvalidInput

_EVAL_CHUNK = 512

ArrayOrFloat = Union[float, np.ndarray]


def default_bandwidth(n: int) -> float:
    """The raw rule h = n^{-1/5}, with no rescaling by sample spread."""
    return float(n) ** -0.2


@dataclass(frozen=True)
class Kde1d:
    """
    Fitted kernel density estimate f(u) = (n h)^{-1} sum_k K((u - u_k) / h).

    Attributes
    ----------
    samples : np.ndarray
        The fitted sample.
    h : float
        Bandwidth.
    """
    samples: np.ndarray = field(repr=False)
    h: float

    @property
    def n(self) -> int:
        return len(self.samples)

    def _kernel_sum(self, u, derivative: bool) -> ArrayOrFloat:
        u = np.asarray(u, dtype=float)
        flat = u.ravel()
        out = np.empty(flat.shape)
        for start in range(0, flat.size, _EVAL_CHUNK):
            z = (flat[start:start + _EVAL_CHUNK, None] - self.samples) / self.h
            kernel = stats.norm.pdf(z)
            if derivative:
                kernel = -kernel * z
            out[start:start + _EVAL_CHUNK] = kernel.sum(axis=1)
        scale = self.n * self.h * (self.h if derivative else 1.0)
        out = (out / scale).reshape(u.shape)
        return float(out) if out.ndim == 0 else out

    def evaluate(self, u: ArrayOrFloat) -> ArrayOrFloat:
        return self._kernel_sum(u, derivative=False)

    def derivative(self, u: ArrayOrFloat) -> ArrayOrFloat:
        return self._kernel_sum(u, derivative=True)


def kde_fit(u, h: Optional[float] = None) -> Kde1d:
    """
    Fit a Gaussian KDE.

    Parameters
    ----------
    u : array_like
        At least two finite observations.
    h : float, optional
        Bandwidth; defaults to n^{-1/5}.

    Raises
    ------
    InvalidInput
        On fewer than two observations, non-finite values or a non-positive bandwidth.
    """
    samples = np.asarray(u, dtype=float).ravel()
    if samples.size < 2:
        raise InvalidInput(f"kde_fit needs at least 2 observations, got {samples.size}")
    if not np.all(np.isfinite(samples)):
        raise InvalidInput("kde_fit: samples contain non-finite values")
    bandwidth = default_bandwidth(samples.size) if h is None else float(h)
    if not (bandwidth > 0 and math.isfinite(bandwidth)):
        raise InvalidInput(f"bandwidth must be positive, got {h}")
    samples = samples.copy()
    samples.setflags(write=False)
    return Kde1d(samples=samples, h=bandwidth)


def kde_eval(model: Kde1d, u: ArrayOrFloat) -> ArrayOrFloat:
    """Density estimate at u (scalar or array)."""
    return model.evaluate(u)


def kde_deriv(model: Kde1d, u: ArrayOrFloat) -> ArrayOrFloat:
    """Derivative of the density estimate at u, built from K'(z) = -K(z) z."""
    return model.derivative(u)


def score_ratio(model: Kde1d, u: np.ndarray, density_floor: float = 1e-12, cap: Optional[float] = None) -> np.ndarray:
    """
    Clipped f'(u) / f(u).

    The density is floored at ``density_floor`` before dividing and the ratio
    is capped in absolute value at ``cap`` (default 10 / h).
    """
    cap = 10.0 / model.h if cap is None else cap
    dens = np.maximum(np.asarray(model.evaluate(u)), density_floor)
    ratio = np.asarray(model.derivative(u)) / dens
    return np.clip(ratio, -cap, cap)
