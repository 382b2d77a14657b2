"""Two-bin thresholded identification protocol.

One *iteration* draws a count for the good bin (signal + noise) and one for
the bad bin (noise only) and tags each bin whose count passes the threshold.
A *run* aggregates ``n_c`` iterations into a verdict by a vote rule, and
the success probability is the fraction of correct runs out of ``N``.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats

from . import kernels, streams
from .errors import DomainError
from .photon_statistics import Pmf, pmf_sample

GEQ = "geq"
GT = "gt"
PLURALITY = "plurality"
JOINT = "joint"
SEPARATE = "separate"
RULES = (PLURALITY, JOINT, SEPARATE)
TIES_INCONCLUSIVE = "inconclusive"
TIES_SUCCESS = "success-if-tied"

DEFAULT_RUNS = 2000


class Verdict(str, enum.Enum):
    CORRECT = "correct"
    INCORRECT = "incorrect"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class DecisionPolicy:
    """Threshold, comparison and majority-vote settings for one estimate.

    ``compare`` is ``"geq"`` (count >= S) or ``"gt"`` (count > S).

    ``rule`` selects how the ``n_c`` iterations are combined:

    * ``"plurality"``: the bin tagged in more iterations is declared good;
      equal tallies are inconclusive.
    * ``"joint"``: correct when more than half of the iterations tag the good
      bin and not the bad one.
    * ``"separate"``: correct when the good bin is tagged in more than half
      of the iterations and the bad bin is untagged in more than half.

    With ``ties="success-if-tied"`` an exact tie in the deciding count is
    promoted to correct.
    """

    threshold: int = 1
    n_c: int = 1
    runs: int = DEFAULT_RUNS
    compare: str = GEQ
    rule: str = PLURALITY
    ties: str = TIES_INCONCLUSIVE

    def __post_init__(self):
        if int(self.threshold) != self.threshold or self.threshold < 0:
            raise DomainError(f"threshold must be a non-negative integer, got {self.threshold!r}")
        if int(self.n_c) != self.n_c or self.n_c < 1:
            raise DomainError(f"n_c must be a positive integer, got {self.n_c!r}")
        if int(self.runs) != self.runs or self.runs < 1:
            raise DomainError(f"runs must be a positive integer, got {self.runs!r}")
        if self.compare not in (GEQ, GT):
            raise DomainError(f"compare must be 'geq' or 'gt', got {self.compare!r}")
        if self.rule not in RULES:
            raise DomainError(f"rule must be one of {', '.join(RULES)}, got {self.rule!r}")
        if self.ties not in (TIES_INCONCLUSIVE, TIES_SUCCESS):
            raise DomainError(f"ties must be 'inconclusive' or 'success-if-tied', got {self.ties!r}")

    @property
    def min_count(self) -> int:
        """Smallest count that passes the threshold test."""
        return self.threshold + (1 if self.compare == GT else 0)

    def with_cell(self, threshold: int, n_c: int) -> "DecisionPolicy":
        return replace(self, threshold=threshold, n_c=n_c)


@dataclass(frozen=True)
class EstimateResult:
    N_s: int
    N: int
    n_incorrect: int = 0
    n_inconclusive: int = 0

    @property
    def P(self) -> float:
        return self.N_s / self.N

    @property
    def std_error(self) -> float:
        p = self.P
        return math.sqrt(p * (1.0 - p) / self.N)


@dataclass(frozen=True)
class SweepCell:
    threshold: int
    n_c: int
    estimate: EstimateResult | None
    exact_P: float


def bin_exceedance(p: Pmf, policy: DecisionPolicy) -> float:
    """Probability that one draw from ``p`` passes the threshold test."""
    return p.tail(policy.min_count)


def _verdicts(counts: np.ndarray, policy: DecisionPolicy) -> np.ndarray:
    """Map per-run iteration counts to codes 0=correct, 1=incorrect, 2=inconclusive."""
    n = policy.n_c
    good_only, bad_only, n1, n2 = counts.T
    if policy.rule == PLURALITY:
        correct = good_only > bad_only
        incorrect = bad_only > good_only
        if policy.ties == TIES_SUCCESS:
            correct |= good_only == bad_only
    elif policy.rule == JOINT:
        correct = 2 * good_only > n
        incorrect = 2 * bad_only > n
        if policy.ties == TIES_SUCCESS:
            correct |= 2 * good_only == n
    else:
        n2_off = n - n2
        correct = (2 * n1 > n) & (2 * n2_off > n)
        incorrect = (2 * (n - n1) > n) & (2 * n2 > n)
        if policy.ties == TIES_SUCCESS:
            correct = (2 * n1 >= n) & (2 * n2_off >= n)
    return np.where(correct, 0, np.where(incorrect, 1, 2))


_CODES = (Verdict.CORRECT, Verdict.INCORRECT, Verdict.INCONCLUSIVE)


def run_trial(p_good: Pmf, p_bad: Pmf, policy: DecisionPolicy, rng) -> Verdict:
    """One run of ``n_c`` iterations, drawing from ``rng`` in the order good, bad."""
    s = policy.min_count
    good_only = bad_only = n1 = n2 = 0
    for _ in range(policy.n_c):
        b1 = pmf_sample(p_good, rng) >= s
        b2 = pmf_sample(p_bad, rng) >= s
        n1 += b1
        n2 += b2
        good_only += b1 and not b2
        bad_only += b2 and not b1
    code = _verdicts(np.array([[good_only, bad_only, n1, n2]]), policy)[0]
    return _CODES[code]


def trial_stream(seed: int, policy: DecisionPolicy, trial: int) -> streams.CounterStream:
    """The random stream consumed by trial ``trial`` of the estimate for ``policy``."""
    key = streams.trial_key(streams.cell_key(seed, policy.threshold, policy.n_c), trial)
    return streams.CounterStream(key)


def estimate_success_probability(
    p_good: Pmf, p_bad: Pmf, policy: DecisionPolicy, seed: int = 0
) -> EstimateResult:
    """Monte Carlo estimate ``P = N_s / N`` over ``policy.runs`` independent runs.

    Trial ``t`` uses the stream :func:`trial_stream` ``(seed, policy, t)``, so
    the result depends only on the inputs and never on scheduling.
    """
    key = streams.cell_key(seed, policy.threshold, policy.n_c)
    counts = kernels.simulate_counts(
        p_good.cdf, p_bad.cdf, key, policy.runs, policy.n_c, policy.min_count
    )
    codes = np.bincount(_verdicts(counts, policy), minlength=3)
    return EstimateResult(
        N_s=int(codes[0]), N=policy.runs, n_incorrect=int(codes[1]), n_inconclusive=int(codes[2])
    )


def _binom_above_half(n: int, p: float, inclusive: bool) -> float:
    """``P(Binomial(n, p) > n/2)``, or ``>= n/2`` when ``inclusive``."""
    k = n // 2  # largest count not above n/2
    if inclusive and n % 2 == 0:
        k -= 1
    return float(stats.binom.sf(k, n, p))


def _plurality(n: int, a: float, b: float, tie_ok: bool) -> tuple[float, float]:
    """Probabilities that the good-only tally beats (or, with ``tie_ok``,
    matches) the bad-only tally, and that it loses. Each iteration is
    good-only with probability ``a`` and bad-only with probability ``b``.
    """
    c = max(0.0, 1.0 - a - b)
    # distribution of (good-only minus bad-only), offset by n
    diff = np.zeros(2 * n + 1)
    diff[n] = 1.0
    for _ in range(n):
        nxt = c * diff
        nxt[1:] += a * diff[:-1]
        nxt[:-1] += b * diff[1:]
        diff = nxt
    win = diff[n + 1 :].sum() + (diff[n] if tie_ok else 0.0)
    return float(win), float(diff[:n].sum())


def exact_outcome_probabilities(
    p_good: Pmf, p_bad: Pmf, policy: DecisionPolicy
) -> tuple[float, float, float]:
    """Exact (correct, incorrect, inconclusive) probabilities of one run."""
    p1 = bin_exceedance(p_good, policy)
    p2 = bin_exceedance(p_bad, policy)
    return exact_outcomes_from_exceedance(p1, p2, policy)


def exact_outcomes_from_exceedance(p1: float, p2: float, policy: DecisionPolicy):
    n = policy.n_c
    tie_ok = policy.ties == TIES_SUCCESS
    # under either tie setting the correct and incorrect events are disjoint
    if policy.rule == PLURALITY:
        correct, incorrect = _plurality(n, p1 * (1.0 - p2), (1.0 - p1) * p2, tie_ok)
    elif policy.rule == JOINT:
        correct = _binom_above_half(n, p1 * (1.0 - p2), tie_ok)
        incorrect = _binom_above_half(n, (1.0 - p1) * p2, False)
    else:
        correct = _binom_above_half(n, p1, tie_ok) * _binom_above_half(n, 1.0 - p2, tie_ok)
        incorrect = _binom_above_half(n, 1.0 - p1, False) * _binom_above_half(n, p2, False)
    # rounding in the tails can overshoot [0, 1] by an ulp
    correct = min(max(correct, 0.0), 1.0)
    incorrect = min(max(incorrect, 0.0), 1.0 - correct)
    return correct, incorrect, 1.0 - correct - incorrect


def exact_success_probability(p_good: Pmf, p_bad: Pmf, policy: DecisionPolicy) -> float:
    """Exact success probability of one run, computed from the two exceedances."""
    return exact_outcome_probabilities(p_good, p_bad, policy)[0]


def sweep(
    p_good: Pmf,
    p_bad: Pmf,
    thresholds,
    nc_values,
    base_policy: DecisionPolicy | None = None,
    seed: int = 0,
    workers: int = 1,
    simulate: bool = True,
) -> list[SweepCell]:
    """Estimate ``P`` on the grid ``thresholds x nc_values`` (row-major in ``thresholds``).

    Each cell draws from its own stream, keyed by ``(seed, S, n_c)``. Output
    is identical for any ``workers``. With ``simulate=False`` only the exact
    values are filled in.
    """
    thresholds = list(thresholds)
    nc_values = list(nc_values)
    if not thresholds or not nc_values:
        raise DomainError("sweep grids must be non-empty")
    base = base_policy or DecisionPolicy()
    policies = [base.with_cell(s, n) for s in thresholds for n in nc_values]

    def one(policy):
        est = estimate_success_probability(p_good, p_bad, policy, seed) if simulate else None
        return SweepCell(policy.threshold, policy.n_c, est, exact_success_probability(p_good, p_bad, policy))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, policies))
    return [one(p) for p in policies]
