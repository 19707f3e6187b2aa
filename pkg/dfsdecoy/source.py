import dataclasses
import logging
import math
from typing import TypeAlias

import numpy as np
from scipy import special

logger = logging.getLogger(__name__)

DEFAULT_TAIL_BOUND: float = 1e-12
TRUNCATION_CAP: int = 10_000

# Half the mean number of photon pairs per pump pulse
PairIntensity: TypeAlias = float


class TruncationError(ValueError):
    pass


def _check_intensity(lambda_: PairIntensity):
    if not lambda_ >= 0:
        raise ValueError(f"Pair intensity must be non-negative, got {lambda_}.")


def pair_probability(lambda_: PairIntensity, n: int) -> float:
    """
    Probability that a phase-randomized PDC source emits exactly `n` photon pairs.

    Evaluated in log space, `lambda_ = 0` yields the vacuum distribution.
    :param lambda_: half the average number of photon pairs per pulse
    :param n: number of photon pairs
    :return: (n+1) lambda^n / (1+lambda)^(n+2)
    """
    _check_intensity(lambda_)
    if n < 0:
        raise ValueError(f"Pair number must be non-negative, got {n}.")
    return float(np.exp(math.log1p(n) + special.xlogy(n, lambda_) - (n + 2) * math.log1p(lambda_)))


def pair_probabilities(lambda_: PairIntensity, n_max: int) -> np.ndarray:
    """
    Vectorized `pair_probability` for all n in 0..n_max.
    """
    _check_intensity(lambda_)
    n = np.arange(n_max + 1)
    return np.exp(np.log1p(n) + special.xlogy(n, lambda_) - (n + 2) * np.log1p(lambda_))


def tail_probability(lambda_: PairIntensity, n_max: int) -> float:
    """
    Probability mass beyond `n_max`, i.e. 1 - sum_{n <= n_max} P_n, in closed form.

    With r = lambda/(1+lambda) the tail is r^(N+1) (N+2 - (N+1) r).
    """
    _check_intensity(lambda_)
    if lambda_ == 0:
        return 0.0
    r = lambda_ / (1 + lambda_)
    return float(np.exp((n_max + 1) * math.log(r)) * (n_max + 2 - (n_max + 1) * r))


def multi_pair_probability(lambda_: PairIntensity) -> float:
    """
    Exact probability of two or more pairs, 1 - P_0 - P_1.
    """
    _check_intensity(lambda_)
    return tail_probability(lambda_, 1)


@dataclasses.dataclass(frozen=True)
class PairDistribution:
    """
    Truncated photon-pair-number statistics of a phase-randomized PDC source.
    """
    lambda_: PairIntensity
    tail_bound: float
    probabilities: tuple[float, ...]

    @property
    def n_max(self) -> int:
        return len(self.probabilities) - 1

    @property
    def tail(self) -> float:
        return tail_probability(self.lambda_, self.n_max)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probabilities)

    def __getitem__(self, n: int) -> float:
        return self.probabilities[n]


def build_distribution(lambda_: PairIntensity, tail_bound: float = DEFAULT_TAIL_BOUND, *,
                       cap: int = TRUNCATION_CAP) -> PairDistribution:
    """
    Truncate the pair distribution at the smallest N_max whose tail is at most `tail_bound`.
    :param lambda_: half the average number of photon pairs per pulse
    :param tail_bound: largest admissible neglected probability mass
    :param cap: largest admissible N_max
    :return: the truncated distribution
    """
    _check_intensity(lambda_)
    if not 0 < tail_bound < 1:
        raise ValueError(f"Tail bound must lie in (0, 1), got {tail_bound}.")
    n_max = 0
    while tail_probability(lambda_, n_max) > tail_bound:
        n_max += 1
        if n_max > cap:
            raise TruncationError(f"Intensity {lambda_} needs more than {cap} terms to reach a tail of "
                                  f"{tail_bound}.")
    logger.debug("Truncated pair distribution for lambda=%g at N_max=%d", lambda_, n_max)
    return PairDistribution(lambda_=lambda_, tail_bound=tail_bound,
                            probabilities=tuple(pair_probabilities(lambda_, n_max).tolist()))


def mean_pair_number(dist: PairDistribution) -> float:
    """
    Mean number of pairs of a truncated distribution, 2 lambda up to truncation error.
    """
    return float(np.arange(dist.n_max + 1) @ dist.as_array())
