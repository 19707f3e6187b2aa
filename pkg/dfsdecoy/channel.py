"""
Bob's counting rates and error rates for n-pair emissions sent through lossy fiber to dark-counting detectors.

Bob keeps only events where exactly one detector fires for each of the two spatial modes; three- and four-fold
coincidences are discarded. Detector efficiency is folded into the fiber transmittance.
"""
import dataclasses
import enum
import itertools
import logging
import math

import numpy as np

import dfsdecoy.source as source

logger = logging.getLogger(__name__)


class ErrorYieldVariant(enum.Enum):
    """
    Final term of the error-weighted yield: both modes lost, one dark count in each.

    `AS_PRINTED` uses (1-eta)^(2n) 2D, `SQUARED_DARK` uses (1-eta)^(2n) 2D^2.
    """
    AS_PRINTED = "as_printed"
    SQUARED_DARK = "squared_dark"

    def __str__(self):
        return self.value


DEFAULT_VARIANT: ErrorYieldVariant = ErrorYieldVariant.SQUARED_DARK


@dataclasses.dataclass(frozen=True)
class ChannelParams:
    """
    Fiber loss in dB/km, fiber length in km and dark-count probability per detector and pulse.
    """
    k_db_per_km: float
    length_km: float
    dark_count: float

    def __post_init__(self):
        if not self.k_db_per_km >= 0:
            raise ValueError(f"Fiber loss must be non-negative, got {self.k_db_per_km}.")
        if not self.length_km >= 0:
            raise ValueError(f"Fiber length must be non-negative, got {self.length_km}.")
        if not 0 <= self.dark_count < 1:
            raise ValueError(f"Dark-count probability must lie in [0, 1), got {self.dark_count}.")

    @classmethod
    def with_transmittance(cls, eta: float, dark_count: float) -> "ChannelParams":
        """
        Parameters of a 1 dB/km fiber whose length gives transmittance `eta`.
        """
        if not 0 < eta <= 1:
            raise ValueError(f"Transmittance must lie in (0, 1], got {eta}.")
        return cls(k_db_per_km=1.0, length_km=-10 * math.log10(eta) if eta < 1 else 0.0, dark_count=dark_count)

    @property
    def eta(self) -> float:
        return 10 ** (-self.k_db_per_km * self.length_km / 10)

    def at_length(self, length_km: float) -> "ChannelParams":
        return dataclasses.replace(self, length_km=length_km)


def n_photon_transmittance(eta: float, n: int | np.ndarray) -> float | np.ndarray:
    """
    Probability that at least one of n photons survives the fiber.
    """
    return 1 - (1 - eta) ** n


def _single_mode_terms(params: ChannelParams, n: int) -> tuple[np.ndarray, np.ndarray, float]:
    # For each split m: probability that only the F detector (resp. only S) sees a photon in one spatial mode
    eta = params.eta
    t = 1 - eta
    m = np.arange(n + 1)
    only_f = n_photon_transmittance(eta, n - m) * t ** m
    only_s = n_photon_transmittance(eta, m) * t ** (n - m)
    return only_f, only_s, t ** n


def yield_n(params: ChannelParams, n: int) -> float:
    """
    Counting rate S_n of an n-pair emission.
    """
    if n < 0:
        raise ValueError(f"Pair number must be non-negative, got {n}.")
    d = params.dark_count
    x, y, lost = _single_mode_terms(params, n)
    total = np.sum((x + y) ** 2 + 4 * x * lost * d + 4 * y * lost * d + 4 * lost ** 2 * d ** 2)
    return float((1 - d) ** 2 / (n + 1) * total)


def error_yield_n(params: ChannelParams, n: int, variant: ErrorYieldVariant = DEFAULT_VARIANT) -> float:
    """
    Error-weighted counting rate e_n S_n of an n-pair emission.
    """
    if n < 0:
        raise ValueError(f"Pair number must be non-negative, got {n}.")
    d = params.dark_count
    x, y, lost = _single_mode_terms(params, n)
    both_lost = 2 * d ** 2 if variant is ErrorYieldVariant.SQUARED_DARK else 2 * d
    total = np.sum(2 * x * y + 2 * y * lost * d + 2 * x * lost * d + lost ** 2 * both_lost)
    return float((1 - d) ** 2 / (n + 1) * total)


@dataclasses.dataclass(frozen=True)
class YieldTable:
    S: tuple[float, ...]
    ES: tuple[float, ...]

    @property
    def n_max(self) -> int:
        return len(self.S) - 1


def build_yield_table(params: ChannelParams, n_max: int,
                      variant: ErrorYieldVariant = DEFAULT_VARIANT) -> YieldTable:
    return YieldTable(S=tuple(yield_n(params, n) for n in range(n_max + 1)),
                      ES=tuple(error_yield_n(params, n, variant) for n in range(n_max + 1)))


def enumerate_yield(params: ChannelParams, n: int) -> tuple[float, float]:
    """
    Exact S_n and e_n S_n by enumerating photon survival and dark-count events.

    Each spatial mode carries n-m photons towards detector F and m towards detector S, m uniform in 0..n. Every
    photon survives independently with probability eta and every detector clicks in the dark with probability D.
    An event counts when exactly one detector per spatial mode clicks; it is an error when the two clicks differ.
    :param params: channel parameters
    :param n: number of pairs, keep small as the cost grows like 4^n
    :return: the counting rate and the error-weighted counting rate
    """
    eta, d = params.eta, params.dark_count
    counted = 0.0
    errors = 0.0
    for m in range(n + 1):
        # photon targets per spatial mode: 0 for F, 1 for S
        targets = [0] * (n - m) + [1] * m
        for survival in itertools.product((True, False), repeat=2 * n):
            p_survival = math.prod(eta if s else 1 - eta for s in survival)
            if p_survival == 0:
                continue
            hits = [[False, False], [False, False]]
            for photon, survived in enumerate(survival):
                if survived:
                    hits[photon // n][targets[photon % n]] = True
            for dark in itertools.product((True, False), repeat=4):
                p_dark = math.prod(d if c else 1 - d for c in dark)
                if p_dark == 0:
                    continue
                clicks = [[hits[s][j] or dark[2 * s + j] for j in range(2)] for s in range(2)]
                if sum(clicks[0]) != 1 or sum(clicks[1]) != 1:
                    continue
                p = p_survival * p_dark / (n + 1)
                counted += p
                if clicks[0].index(True) != clicks[1].index(True):
                    errors += p
    return counted, errors


@dataclasses.dataclass(frozen=True)
class ObservedStatistics:
    """
    Counting rate per pulse and QBER seen by Bob for one source intensity.

    `rate_is_zero` flags that Q vanished and E is reported as 0. `qber_clamped` flags that the error-weighted rate
    exceeded the counting rate and E is reported as 1.
    """
    lambda_: source.PairIntensity
    Q: float
    E: float
    rate_is_zero: bool = False
    qber_clamped: bool = False

    def __post_init__(self):
        if not 0 <= self.Q <= 1:
            raise ValueError(f"Counting rate must lie in [0, 1], got {self.Q}.")
        if not 0 <= self.E <= 1:
            raise ValueError(f"QBER must lie in [0, 1], got {self.E}.")

    @property
    def EQ(self) -> float:
        return self.E * self.Q


def _statistics(lambda_: source.PairIntensity, q: float, eq: float) -> ObservedStatistics:
    if q <= 0:
        return ObservedStatistics(lambda_=lambda_, Q=0.0, E=0.0, rate_is_zero=True)
    if eq > q:
        logger.debug("QBER %.6g above 1 at lambda=%g, reported as 1", eq / q, lambda_)
        return ObservedStatistics(lambda_=lambda_, Q=q, E=1.0, qber_clamped=True)
    return ObservedStatistics(lambda_=lambda_, Q=q, E=eq / q)


def observed_closed_form(lambda_: source.PairIntensity, params: ChannelParams) -> ObservedStatistics:
    """
    Q and E of intensity `lambda_` from the summed closed forms.
    """
    d, eta, lam = params.dark_count, params.eta, lambda_
    denominator = (1 + lam * eta * (3 - eta) + lam ** 2 * eta ** 2 * (2 - eta)) ** 2
    bracket = (4 * lam * eta * d * (1 - eta) * (1 + lam * eta) + 2 * d ** 2 * (1 + lam * eta) ** 2
               + lam * eta ** 2 * (1 + lam ** 2 * (2 - eta) * eta + lam * (eta ** 2 - 2 * eta + 3)))
    q = 2 * (1 - d) ** 2 * bracket / denominator
    if bracket <= 0:
        return ObservedStatistics(lambda_=lambda_, Q=0.0, E=0.0, rate_is_zero=True)
    e = (d + lam * d * eta + lam * eta * (1 - eta)) ** 2 / bracket
    return ObservedStatistics(lambda_=lambda_, Q=q, E=e)


def observed_series(lambda_: source.PairIntensity, params: ChannelParams, dist: source.PairDistribution,
                    variant: ErrorYieldVariant = DEFAULT_VARIANT) -> ObservedStatistics:
    """
    Q = sum P_n S_n and E Q = sum P_n e_n S_n over the truncated distribution.
    """
    if dist.lambda_ != lambda_:
        raise ValueError(f"Distribution was built for lambda={dist.lambda_}, not {lambda_}.")
    table = build_yield_table(params, dist.n_max, variant)
    p = dist.as_array()
    return _statistics(lambda_, float(p @ np.asarray(table.S)), float(p @ np.asarray(table.ES)))


def observe(lambda_: source.PairIntensity, params: ChannelParams, *, variant: ErrorYieldVariant = DEFAULT_VARIANT,
            tail_bound: float = source.DEFAULT_TAIL_BOUND, closed_form: bool = False) -> ObservedStatistics:
    """
    Observed statistics from the series, building the truncated distribution on the way.

    `closed_form` switches to the summed closed forms, which only exist for `SQUARED_DARK`.
    """
    if closed_form:
        if variant is not ErrorYieldVariant.SQUARED_DARK:
            raise ValueError(f"No closed form for the {variant} error yield.")
        return observed_closed_form(lambda_, params)
    return observed_series(lambda_, params, source.build_distribution(lambda_, tail_bound), variant)


def agreement(lambda_: source.PairIntensity, params: ChannelParams, *, variant: ErrorYieldVariant = DEFAULT_VARIANT,
              tail_bound: float = source.DEFAULT_TAIL_BOUND) -> tuple[float, float]:
    """
    Relative deviation of Q and absolute deviation of E between the closed forms and the series.
    """
    series = observe(lambda_, params, variant=variant, tail_bound=tail_bound)
    closed = observed_closed_form(lambda_, params)
    q_dev = abs(closed.Q - series.Q) / series.Q if series.Q else abs(closed.Q)
    return q_dev, abs(closed.E - series.E)
