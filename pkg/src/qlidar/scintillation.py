"""Photon statistics of a coherent signal broadened by log-normal scintillation.

The count law is the Poisson mixture

    p(m) = integral_0^inf  exp(-q) q**m / m!  P(q) dq

with ``log q ~ Normal(log(qbar) - sigma**2 / 2, sigma**2)`` so that ``E[q] = qbar``.

The integral is evaluated in ``x = log q`` with a trapezoid rule on a smoothly
stretched grid. Node spacing follows ``1 / (1/h0 + sqrt(q)/c)``: it resolves
both the Gaussian factor (width ``sigma``) and the Poisson kernel, whose
width in ``x`` shrinks like ``1/sqrt(q)``. For integrands that are analytic
and decay fast, the trapezoid rule converges geometrically in the node
density. This gives every ``p(m)`` to near machine precision. A fixed
Gauss-Hermite rule does not: its nodes spread on the scale of ``sigma``
and cannot resolve the Poisson kernel once ``sigma >~ 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, ndtri

from .errors import DomainError, NumericalError
from .photon_statistics import TAIL_MASS, Pmf, auto_m_max, pmf_poisson

# Gaussian factor cut at +-Z_CUT standard deviations (density ratio ~ 2.6e-18).
Z_CUT = 9.0
# Poisson windows span mean +- (WINDOW_SD * sd + WINDOW_PAD).
WINDOW_SD = 12.0
WINDOW_PAD = 12.0
# Relative second-moment mass allowed beyond the truncation bound.
SECOND_MOMENT_TAIL = 1e-4
# Normalisation defect that counts as quadrature failure.
QUAD_TOL = 1e-6


@dataclass(frozen=True)
class ScintillationParams:
    """Log-normal intensity fluctuations with log-sd ``sigma`` and mean ``qbar``."""

    sigma: float
    qbar: float

    def __post_init__(self):
        if not (self.sigma >= 0) or not math.isfinite(self.sigma):
            raise DomainError(f"sigma must be finite and >= 0, got {self.sigma}")
        if not (self.qbar > 0) or not math.isfinite(self.qbar):
            raise DomainError(f"qbar must be finite and > 0, got {self.qbar}")

    @property
    def log_location(self) -> float:
        return math.log(self.qbar) - 0.5 * self.sigma**2

    @property
    def intensity_variance(self) -> float:
        return self.qbar**2 * math.expm1(self.sigma**2)

    @property
    def count_variance(self) -> float:
        """Variance of the mixed count law (law of total variance)."""
        return self.qbar + self.intensity_variance

    def density(self, q):
        """Log-normal intensity density."""
        q = np.asarray(q, dtype=np.float64)
        s = self.sigma
        with np.errstate(divide="ignore"):
            z = (np.log(q) - self.log_location) / s
        return np.where(q > 0, np.exp(-0.5 * z * z) / (s * q * math.sqrt(2 * math.pi)), 0.0)


def scintillated_m_max(params: ScintillationParams) -> int:
    """Truncation bound for the mixed count law.

    Beyond the default moment rule, the bound must cover the intensity range
    holding all but ``TAIL_MASS`` of the probability and all but
    ``SECOND_MOMENT_TAIL`` of ``E[q**2]``. The log-normal tail is far heavier
    than the 10-sd rule assumes once ``sigma`` approaches 2.
    """
    s, loc = params.sigma, params.log_location
    m_max = auto_m_max(params.qbar, params.count_variance)
    if s == 0:
        return m_max
    z_mass = -ndtri(TAIL_MASS)
    z_second = -ndtri(SECOND_MOMENT_TAIL)
    log_hi = max(loc + z_mass * s, loc + 2 * s * s + z_second * s)
    q_hi = math.exp(log_hi)
    return max(m_max, math.ceil(q_hi + 10.0 * math.sqrt(q_hi) + 10.0))


def lognormal_nodes(params: ScintillationParams, log_q_max: float = math.inf, stretch: float = 0.5):
    """Quadrature nodes ``q_k`` and weights ``w_k`` for ``E[f(q)]``.

    ``sum_k w_k f(q_k)`` approximates the log-normal expectation of ``f``.
    ``stretch`` is the node spacing in units of the Poisson-kernel width.
    Nodes above ``log_q_max`` are dropped.
    """
    s, loc = params.sigma, params.log_location
    if s == 0:
        return np.array([params.qbar]), np.array([1.0])
    h0 = 0.5 * s
    c = stretch
    x_lo = loc - Z_CUT * s
    x_hi = min(loc + Z_CUT * s, log_q_max)
    if x_hi <= x_lo:
        raise DomainError("log_q_max lies below the bulk of the intensity law")

    def u_of(x):
        return x / h0 + (2.0 / c) * np.exp(0.5 * x)

    u_lo, u_hi = u_of(x_lo), u_of(x_hi)
    n = max(int(math.ceil(u_hi - u_lo)), 16)
    u = np.linspace(u_lo, u_hi, n + 1)
    # u(x) is convex and increasing, so Newton from x = h0*u (>= root) is monotone
    x = np.minimum(h0 * u, x_hi)
    for _ in range(200):
        step = (u_of(x) - u) / (1.0 / h0 + np.exp(0.5 * x) / c)
        x = x - step
        if np.max(np.abs(step)) <= 1e-15 * max(1.0, np.max(np.abs(x))):
            break
    else:
        raise NumericalError("node placement did not converge")
    du = (u_hi - u_lo) / n
    jac = du / (1.0 / h0 + np.exp(0.5 * x) / c)
    z = (x - loc) / s
    w = jac * np.exp(-0.5 * z * z) / (s * math.sqrt(2 * math.pi))
    w[0] *= 0.5
    w[-1] *= 0.5
    return np.exp(x), w


@lru_cache(maxsize=64)
def _mixture_weights(sigma: float, qbar: float, m_max: int) -> np.ndarray:
    params = ScintillationParams(sigma, qbar)
    cap = math.log(m_max + WINDOW_SD * math.sqrt(m_max) + WINDOW_PAD)
    q, w = lognormal_nodes(params, log_q_max=cap)
    weight_total = w.sum()
    out = np.zeros(m_max + 1)
    lgam = gammaln(np.arange(m_max + 1, dtype=np.float64) + 1.0)
    for qk, wk in zip(q, w):
        r = WINDOW_SD * math.sqrt(qk) + WINDOW_PAD
        lo = max(0, int(qk - r))
        if lo > m_max:
            continue
        hi = min(m_max, int(qk + r) + 1)
        mm = np.arange(lo, hi + 1, dtype=np.float64)
        out[lo : hi + 1] += wk * np.exp(mm * math.log(qk) - qk - lgam[lo : hi + 1])
    total = out.sum()
    # nodes cut at the cap carry at most TAIL_MASS of the intensity law
    if abs(total - 1.0) > QUAD_TOL or abs(weight_total - 1.0) > QUAD_TOL:
        raise NumericalError(
            f"scintillation quadrature lost normalisation: pmf mass {total:.9g}, "
            f"node mass {weight_total:.9g} (sigma={sigma}, qbar={qbar}, m_max={m_max})"
        )
    out /= total
    out.flags.writeable = False
    return out


def pmf_scintillated(params: ScintillationParams, m_max: int | None = None) -> Pmf:
    """Count law of a scintillated coherent signal (Mandel's formula)."""
    if params.sigma == 0:
        return pmf_poisson(params.qbar, m_max)
    if m_max is None:
        m_max = scintillated_m_max(params)
    return Pmf(_mixture_weights(float(params.sigma), float(params.qbar), int(m_max)))
