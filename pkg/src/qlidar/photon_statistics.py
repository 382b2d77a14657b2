"""Photon-number distributions: construction, convolution, moments, sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import stats

from .errors import DomainError

#: Largest pre-renormalisation tail mass tolerated by the constructors.
TAIL_MASS = 1e-12
#: Accepted deviation from unit total mass.
NORM_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Pmf:
    """Truncated, normalised probability mass function on counts ``0..m_max``.

    The probability array is stored read-only so instances can be shared
    freely between threads.
    """

    probabilities: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = np.array(self.probabilities, dtype=np.float64, copy=True)
        if p.ndim != 1 or p.size == 0:
            raise DomainError("probabilities must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise DomainError("probabilities must be finite and non-negative")
        if abs(p.sum() - 1.0) > NORM_TOL:
            raise DomainError(f"probabilities sum to {p.sum():.12g}, not 1")
        p.flags.writeable = False
        object.__setattr__(self, "probabilities", p)

    @classmethod
    def from_weights(cls, weights) -> "Pmf":
        """Renormalise non-negative ``weights`` into a :class:`Pmf`."""
        w = np.asarray(weights, dtype=np.float64)
        total = w.sum()
        if not total > 0:
            raise DomainError("weights must have positive total mass")
        return cls(w / total)

    @classmethod
    def delta(cls, m: int) -> "Pmf":
        """Point mass at count ``m``."""
        if m < 0:
            raise DomainError("count must be non-negative")
        p = np.zeros(m + 1)
        p[m] = 1.0
        return cls(p)

    @property
    def m_max(self) -> int:
        return self.probabilities.size - 1

    def __len__(self):
        return self.probabilities.size

    def __getitem__(self, m):
        if isinstance(m, (int, np.integer)) and m > self.m_max:
            return 0.0
        return self.probabilities[m]

    def __repr__(self):
        mean, var = self.moments()
        return f"Pmf(m_max={self.m_max}, mean={mean:.6g}, variance={var:.6g})"

    @cached_property
    def cdf(self) -> np.ndarray:
        c = np.cumsum(self.probabilities)
        c.flags.writeable = False
        return c

    def moments(self) -> tuple[float, float]:
        return pmf_moments(self)

    @property
    def mean(self) -> float:
        return self.moments()[0]

    @property
    def variance(self) -> float:
        return self.moments()[1]

    def tail(self, m: int) -> float:
        """``P(count >= m)``."""
        if m <= 0:
            return 1.0
        if m > self.m_max:
            return 0.0
        return float(self.probabilities[m:].sum())

    def sample(self, rng, size=None):
        return pmf_sample(self, rng, size)


def auto_m_max(mean: float, variance: float) -> int:
    """Default truncation bound ``max(50, ceil(mean + 10 * sd))``."""
    return max(50, math.ceil(mean + 10.0 * math.sqrt(max(variance, 0.0))))


def _check_mu(mu):
    if not (mu >= 0) or not math.isfinite(mu):
        raise DomainError(f"mean photon number must be finite and >= 0, got {mu}")


def pmf_poisson(mu: float, m_max: int | None = None) -> Pmf:
    """Poisson photon statistics (coherent light, many-mode thermal noise)."""
    _check_mu(mu)
    if m_max is None:
        m_max = auto_m_max(mu, mu)
        while stats.poisson.sf(m_max, mu) >= TAIL_MASS:
            m_max += 10
    p = stats.poisson.pmf(np.arange(m_max + 1), mu) if mu > 0 else _vacuum(m_max)
    return Pmf.from_weights(p)


def pmf_thermal(mu: float, m_max: int | None = None) -> Pmf:
    """Single-mode thermal (geometric) law ``mu**m / (1 + mu)**(m + 1)``."""
    _check_mu(mu)
    if mu == 0:
        return Pmf(_vacuum(50 if m_max is None else m_max))
    ratio = mu / (1.0 + mu)
    if m_max is None:
        m_max = auto_m_max(mu, mu * (1.0 + mu))
        # geometric tails decay slower than the 10-sd rule assumes
        m_max = max(m_max, math.ceil(math.log(TAIL_MASS) / math.log(ratio)))
    m = np.arange(m_max + 1)
    return Pmf.from_weights(np.exp(m * math.log(ratio)) / (1.0 + mu))


def _vacuum(m_max):
    p = np.zeros(m_max + 1)
    p[0] = 1.0
    return p


def pmf_convolve(a: Pmf, b: Pmf) -> Pmf:
    """Distribution of the sum of two independent counts.

    ``out[m] = sum_l a[m - l] * b[l]`` on ``0..a.m_max + b.m_max``.
    """
    return Pmf.from_weights(np.convolve(a.probabilities, b.probabilities))


def pmf_moments(p: Pmf) -> tuple[float, float]:
    """Exact mean and variance of the truncated pmf."""
    w = p.probabilities
    m = np.arange(w.size, dtype=np.float64)
    mean = float(np.dot(m, w))
    var = float(np.dot((m - mean) ** 2, w))
    return mean, var


def pmf_sample(p: Pmf, rng, size=None):
    """Inverse-CDF draw(s) from ``p``.

    ``rng`` is anything with a ``random(size)`` method returning uniforms in
    [0, 1): a :class:`~qlidar.streams.CounterStream` or a numpy Generator.
    The draw is the smallest ``m`` with ``u < cdf[m]``.
    """
    u = rng.random(size)
    m = np.searchsorted(p.cdf, u, side="right")
    m = np.minimum(m, p.m_max)
    if size is None:
        return int(m)
    return m
