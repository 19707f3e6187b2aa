"""
GLLP secret-key-rate lower bound, secure-distance search and the distance limit set by the splitting attack.
"""
import concurrent.futures
import dataclasses
import logging
import math
from typing import Callable, Sequence

import numpy as np
from scipy import optimize, special

import dfsdecoy.bounds as bounds
import dfsdecoy.channel as channel
import dfsdecoy.source as source

logger = logging.getLogger(__name__)

COARSE_STEP_KM: float = 1.0
FINE_TOL_KM: float = 0.01
SCAN_END_KM: float = 300.0
PNS_ATTACK_SUCCESS: float = 0.30


class NoSecureDistanceError(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class ProtocolConstants:
    """
    Sifting factor q and error-correction inefficiency f, either a constant or a function of the QBER.
    """
    sifting: float = 0.5
    ec_inefficiency: float | Callable[[float], float] = 1.2

    def __post_init__(self):
        if not 0 < self.sifting <= 1:
            raise ValueError(f"Sifting factor must lie in (0, 1], got {self.sifting}.")
        if not callable(self.ec_inefficiency) and not self.ec_inefficiency >= 1:
            raise ValueError(f"Error-correction inefficiency must be at least 1, got {self.ec_inefficiency}.")

    def f(self, qber: float) -> float:
        if callable(self.ec_inefficiency):
            return self.ec_inefficiency(qber)
        return self.ec_inefficiency


def binary_entropy(x: float) -> float:
    """
    H2(x) = -x log2 x - (1-x) log2(1-x), with H2(0) = H2(1) = 0.
    """
    if not 0 <= x <= 1:
        raise ValueError(f"Binary entropy is defined on [0, 1], got {x}.")
    return float((special.entr(x) + special.entr(1 - x)) / math.log(2))


def gllp_rate_raw(obs: channel.ObservedStatistics, decoy_bounds: bounds.DecoyBounds,
                  consts: ProtocolConstants) -> float:
    """
    The unfloored rate. Without a single-pair bound the single-pair term contributes nothing, and a clamped QBER
    is charged the full error-correction leak.
    """
    entropy = 1.0 if obs.qber_clamped else binary_entropy(obs.E)
    leak = obs.Q * consts.f(obs.E) * entropy
    single = 0.0
    if decoy_bounds.available:
        single = source.pair_probability(obs.lambda_, 1) * decoy_bounds.S1_lower * (
                1 - binary_entropy(decoy_bounds.e1_upper))
    return consts.sifting * (single - leak)


def gllp_rate(obs: channel.ObservedStatistics, decoy_bounds: bounds.DecoyBounds, consts: ProtocolConstants) -> float:
    """
    R^L = q [-Q f(E) H2(E) + P1 S1^L (1 - H2(e1^U))], floored at 0.
    """
    return max(gllp_rate_raw(obs, decoy_bounds, consts), 0.0)


@dataclasses.dataclass(frozen=True)
class KeyRatePoint:
    """
    Result of the full pipeline at one fiber length.
    """
    length_km: float
    protocol: bounds.DecoyProtocol
    observed: channel.ObservedStatistics
    bounds: bounds.DecoyBounds
    R_raw: float

    @property
    def lambda_(self) -> float:
        return self.protocol.signal

    @property
    def lambda_prime(self) -> float | None:
        return self.protocol.decoy

    @property
    def R_lower(self) -> float:
        return max(self.R_raw, 0.0)

    @property
    def floored(self) -> bool:
        return self.R_raw <= 0


def evaluate_point(protocol: bounds.DecoyProtocol, params: channel.ChannelParams, consts: ProtocolConstants, *,
                   variant: channel.ErrorYieldVariant = channel.DEFAULT_VARIANT,
                   tail_bound: float = source.DEFAULT_TAIL_BOUND) -> KeyRatePoint:
    """
    Observe every intensity of `protocol` through the channel, bound the single-pair terms and evaluate R^L.
    """
    def observe(lambda_: float) -> channel.ObservedStatistics:
        return channel.observe(lambda_, params, variant=variant, tail_bound=tail_bound)

    obs_signal = observe(protocol.signal)
    obs_decoy = observe(protocol.decoy) if protocol.decoy is not None else None
    # The vacuum intensity only ever emits n = 0, its counting rate is S0
    s0 = channel.yield_n(params, 0) if protocol.kind is bounds.ProtocolKind.THREE_INTENSITY else None
    decoy_bounds = bounds.estimate_bounds(protocol, obs_signal, obs_decoy, s0)
    return KeyRatePoint(length_km=params.length_km, protocol=protocol, observed=obs_signal, bounds=decoy_bounds,
                        R_raw=gllp_rate_raw(obs_signal, decoy_bounds, consts))


def sweep(protocol: bounds.DecoyProtocol, params: channel.ChannelParams, consts: ProtocolConstants,
          lengths: Sequence[float], *, variant: channel.ErrorYieldVariant = channel.DEFAULT_VARIANT,
          workers: int = 1) -> list[KeyRatePoint]:
    """
    Evaluate `protocol` at every length; results keep the order of `lengths` whatever the number of workers.
    """
    def evaluate(length: float) -> KeyRatePoint:
        return evaluate_point(protocol, params.at_length(length), consts, variant=variant)

    if workers <= 1:
        return [evaluate(length) for length in lengths]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(evaluate, lengths))


def max_secure_distance(protocol: bounds.DecoyProtocol, params: channel.ChannelParams, consts: ProtocolConstants, *,
                        variant: channel.ErrorYieldVariant = channel.DEFAULT_VARIANT, step_km: float = COARSE_STEP_KM,
                        tol_km: float = FINE_TOL_KM, scan_end_km: float = SCAN_END_KM) -> float:
    """
    Largest fiber length with a positive key rate.

    The rate is scanned on a coarse grid, then the sign change is refined by bisection.
    :param protocol: the decoy protocol
    :param params: channel parameters, the length is ignored
    :param consts: protocol constants
    :param variant: error-yield variant used by the channel model
    :param step_km: coarse scan step
    :param tol_km: bisection resolution
    :param scan_end_km: the scan gives up beyond this length
    :return: the secure distance in km
    """
    def rate(length: float) -> float:
        return evaluate_point(protocol, params.at_length(length), consts, variant=variant).R_raw

    if rate(0.0) <= 0:
        raise NoSecureDistanceError(f"{protocol.kind} yields no secret key even without fiber.")
    lengths = np.arange(0.0, scan_end_km + step_km / 2, step_km)
    positive = np.array([rate(float(length)) > 0 for length in lengths])
    drops = np.flatnonzero(positive[:-1] & ~positive[1:])
    if len(drops) == 0:
        raise NoSecureDistanceError(f"{protocol.kind} still yields a key at {scan_end_km} km.")
    if len(drops) > 1 or positive[drops[0] + 1:].any():
        raise RuntimeError(f"Key rate of {protocol.kind} changes sign more than once: "
                           f"{[float(lengths[i]) for i in drops]} km.")
    lower, upper = float(lengths[drops[0]]), float(lengths[drops[0] + 1])
    logger.debug("Secure distance of %s bracketed in [%g, %g] km", protocol.kind, lower, upper)
    return float(optimize.bisect(rate, lower, upper, xtol=tol_km))


def loss_gap_db(k_db_per_km: float, shorter_km: float, longer_km: float) -> float:
    return k_db_per_km * (longer_km - shorter_km)


def pns_limit_distance(lambda_: source.PairIntensity, k_db_per_km: float,
                       attack_success: float = PNS_ATTACK_SUCCESS) -> float:
    """
    Length where single-pair counts P1 eta^2 drop to the attacked two-pair counts attack_success * P2.
    :param lambda_: signal intensity
    :param k_db_per_km: fiber loss
    :param attack_success: probability that the splitting attack succeeds on a two-pair emission
    :return: the limit in km, infinite if the attack never succeeds, 0 if the source is insecure at any length
    """
    if not lambda_ > 0 or not k_db_per_km > 0:
        raise ValueError("The splitting-attack limit needs a positive intensity and fiber loss.")
    if attack_success <= 0:
        return math.inf
    ratio = source.pair_probability(lambda_, 1) / (attack_success * source.pair_probability(lambda_, 2))
    # eta^2 = 1/ratio with eta = 10^(-kL/10)
    return max(5 * math.log10(ratio) / k_db_per_km, 0.0)


def pns_limit_distance_bisect(lambda_: source.PairIntensity, k_db_per_km: float,
                              attack_success: float = PNS_ATTACK_SUCCESS, *, upper_km: float = 1000.0,
                              xtol: float = 1e-9) -> float:
    """
    The same limit found by bisection on P1 eta^2 - attack_success P2.
    """
    p1 = source.pair_probability(lambda_, 1)
    p2 = source.pair_probability(lambda_, 2)

    def margin(length: float) -> float:
        return p1 * 10 ** (-k_db_per_km * length / 5) - attack_success * p2

    if margin(0.0) <= 0:
        return 0.0
    return float(optimize.bisect(margin, 0.0, upper_km, xtol=xtol))
