"""Detector response: photon-number law in, recorded-event law out.

A multiplexed detector splits the light uniformly over ``M`` click/no-click
elements. Each photon is detected with probability ``eta`` by the element it
lands on, and each element also fires spuriously with probability ``p_d`` per
pulse. The recorded event count is the number of elements that clicked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import DomainError, NumericalError
from .photon_statistics import Pmf

IDEAL = "ideal"
MULTIPLEXED = "multiplexed"

# inclusion-exclusion is exact but cancels catastrophically as M grows
INCLUSION_EXCLUSION_MAX_M = 16
NEGATIVE_CLAMP = -1e-12


@dataclass(frozen=True)
class DetectorModel:
    kind: str = IDEAL
    M: int = 1
    eta: float = 1.0
    p_d: float = 0.0

    def __post_init__(self):
        if self.kind == IDEAL:
            if (self.M, self.eta, self.p_d) != (1, 1.0, 0.0):
                raise DomainError("an ideal detector has M=1, eta=1 and p_d=0")
        elif self.kind == MULTIPLEXED:
            if not isinstance(self.M, (int, np.integer)) or self.M < 1:
                raise DomainError(f"M must be a positive integer, got {self.M!r}")
            if not 0.0 <= self.eta <= 1.0:
                raise DomainError(f"eta must lie in [0, 1], got {self.eta}")
            if not 0.0 <= self.p_d < 1.0:
                raise DomainError(f"p_d must lie in [0, 1), got {self.p_d}")
        else:
            raise DomainError(f"unknown detector kind {self.kind!r}")

    @classmethod
    def ideal(cls) -> "DetectorModel":
        return cls()

    @classmethod
    def multiplexed(cls, M: int = 16, eta: float = 0.1, p_d: float = 1e-4) -> "DetectorModel":
        return cls(MULTIPLEXED, int(M), float(eta), float(p_d))

    @property
    def is_ideal(self) -> bool:
        return self.kind == IDEAL

    def label(self) -> str:
        return "ideal" if self.is_ideal else "mapd"


def _silent_probabilities(photons: Pmf, det: DetectorModel) -> np.ndarray:
    """``G[j] = sum_m photons(m) * (1 - eta*j/M)**m`` for ``j = 0..M``.

    ``G[j]`` is the probability that no photon is detected by a fixed set of
    ``j`` elements. Computed in extended precision.
    """
    M = det.M
    j = np.arange(M + 1, dtype=np.longdouble)
    base = 1 - np.longdouble(det.eta) * j / M
    m = np.arange(photons.m_max + 1, dtype=np.longdouble)
    p = photons.probabilities.astype(np.longdouble)
    # 0**0 == 1 keeps the vacuum term when base hits zero
    return np.array([np.dot(np.power(b, m), p) for b in base], dtype=np.longdouble)


def _inclusion_exclusion(photons: Pmf, det: DetectorModel) -> np.ndarray:
    M = det.M
    G = _silent_probabilities(photons, det)
    keep = 1 - np.longdouble(det.p_d)
    out = np.zeros(M + 1, dtype=np.longdouble)
    for k in range(M + 1):
        acc = np.longdouble(0)
        for i in range(k + 1):
            jj = M - k + i
            term = math.comb(k, i) * keep**jj * G[jj]
            acc += -term if i % 2 else term
        out[k] = math.comb(M, k) * acc
    if out.min() < NEGATIVE_CLAMP:
        raise NumericalError(
            f"click probabilities went negative ({float(out.min()):.3g}); "
            f"inclusion-exclusion lost precision for M={M}"
        )
    return np.maximum(out, 0).astype(np.float64)


def _occupancy(photons: Pmf, det: DetectorModel) -> np.ndarray:
    """Forward recursion over photons, all terms non-negative.

    State ``k`` is the number of elements already hit by a detected photon.
    The next photon moves ``k -> k + 1`` with probability ``eta * (M - k) / M``
    and otherwise leaves ``k`` unchanged.
    """
    M = det.M
    k = np.arange(M + 1)
    advance = det.eta * (M - k) / M
    stay = 1.0 - advance
    state = np.zeros(M + 1)
    state[0] = 1.0
    hit = np.zeros(M + 1)
    p = photons.probabilities
    remaining = 1.0
    for n in range(p.size):
        hit += p[n] * state
        remaining -= p[n]
        if remaining <= 0.0:
            break
        moved = state * advance
        state = state * stay
        state[1:] += moved[:-1]
    if det.p_d == 0:
        return hit
    out = np.zeros(M + 1)
    for j in range(M + 1):
        if hit[j] > 0:
            out[j:] += hit[j] * stats.binom.pmf(np.arange(M - j + 1), M - j, det.p_d)
    return out


def click_distribution(photons: Pmf, det: DetectorModel, method: str = "auto") -> Pmf:
    """Distribution of recorded events for photon law ``photons``.

    ``method`` is ``"inclusion-exclusion"``, ``"occupancy"`` or ``"auto"``.
    ``"auto"`` picks inclusion-exclusion up to ``M = 16``.
    """
    if det.is_ideal:
        return photons
    if method == "auto":
        method = "inclusion-exclusion" if det.M <= INCLUSION_EXCLUSION_MAX_M else "occupancy"
    if method == "inclusion-exclusion":
        out = _inclusion_exclusion(photons, det)
    elif method == "occupancy":
        out = _occupancy(photons, det)
    else:
        raise DomainError(f"unknown click-distribution method {method!r}")
    if abs(out.sum() - 1.0) > 1e-6:
        raise NumericalError(f"click distribution mass {out.sum():.12g} is not 1")
    return Pmf.from_weights(out)


def mean_clicks(photons: Pmf, det: DetectorModel) -> float:
    """Mean recorded events, ``M * (1 - (1 - p_d) * G[1])`` for multiplexed detectors."""
    if det.is_ideal:
        return photons.mean
    m = np.arange(photons.m_max + 1)
    g1 = float(np.dot(photons.probabilities, (1.0 - det.eta / det.M) ** m))
    return det.M * (1.0 - (1.0 - det.p_d) * g1)


__all__ = [
    "DetectorModel",
    "IDEAL",
    "MULTIPLEXED",
    "click_distribution",
    "mean_clicks",
]
