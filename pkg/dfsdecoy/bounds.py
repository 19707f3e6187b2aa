"""
Decoy-state estimation of the single-pair yield lower bound S1^L and error-rate upper bound e1^U.
"""
import dataclasses
import enum
import logging

import dfsdecoy.channel as channel
import dfsdecoy.source as source

logger = logging.getLogger(__name__)

DEGENERACY_GUARD: float = 1e-30
MAX_ERROR_RATE: float = 0.5


class DegenerateIntensitiesError(ValueError):
    pass


class BoundUnavailableError(ValueError):
    pass


class ProtocolKind(enum.Enum):
    THREE_INTENSITY = "three_intensity"
    TWO_INTENSITY = "two_intensity"
    NO_DECOY = "no_decoy"

    def __str__(self):
        return self.value


@dataclasses.dataclass(frozen=True)
class DecoyProtocol:
    """
    Intensities emitted by Alice. The three-intensity protocol adds the vacuum to signal and decoy.
    """
    kind: ProtocolKind
    signal: source.PairIntensity
    decoy: source.PairIntensity | None = None

    def __post_init__(self):
        if not self.signal > 0:
            raise ValueError(f"Signal intensity must be positive, got {self.signal}.")
        if self.kind is ProtocolKind.NO_DECOY:
            if self.decoy is not None:
                raise ValueError("The no-decoy protocol takes no decoy intensity.")
        elif self.decoy is None or not self.signal > self.decoy > 0:
            raise ValueError(f"Decoy protocols need signal > decoy > 0, got {self.signal} and {self.decoy}.")

    @classmethod
    def three_intensity(cls, signal: float, decoy: float) -> "DecoyProtocol":
        return cls(ProtocolKind.THREE_INTENSITY, signal, decoy)

    @classmethod
    def two_intensity(cls, signal: float, decoy: float) -> "DecoyProtocol":
        return cls(ProtocolKind.TWO_INTENSITY, signal, decoy)

    @classmethod
    def no_decoy(cls, signal: float) -> "DecoyProtocol":
        return cls(ProtocolKind.NO_DECOY, signal)


@dataclasses.dataclass(frozen=True)
class DecoyBounds:
    """
    Clamped bounds together with their raw values. `e1_upper` is None when S1^L is not positive.
    """
    S1_lower: float
    e1_upper: float | None
    S0_used: float
    method: DecoyProtocol
    S1_lower_raw: float
    e1_upper_raw: float | None

    @property
    def available(self) -> bool:
        return self.e1_upper is not None

    @property
    def s1_clamped(self) -> bool:
        return self.S1_lower != self.S1_lower_raw

    @property
    def e1_clamped(self) -> bool:
        return self.e1_upper is not None and self.e1_upper != self.e1_upper_raw


def clamp(value: float, lower: float, upper: float) -> float:
    clamped = min(max(value, lower), upper)
    if clamped != value:
        logger.debug("Clamped %.6g into [%g, %g]", value, lower, upper)
    return clamped


def _p(lambda_: float, n: int) -> float:
    return source.pair_probability(lambda_, n)


def _check_order(obs_signal: channel.ObservedStatistics, obs_decoy: channel.ObservedStatistics):
    if not obs_signal.lambda_ > obs_decoy.lambda_ > 0:
        raise ValueError(f"Need signal > decoy > 0, got {obs_signal.lambda_} and {obs_decoy.lambda_}.")


def _denominator(lam: float, lam_d: float) -> float:
    denominator = _p(lam, 2) * _p(lam_d, 1) - _p(lam_d, 2) * _p(lam, 1)
    if abs(denominator) < DEGENERACY_GUARD:
        raise DegenerateIntensitiesError(f"Intensities {lam} and {lam_d} are too close to separate S1.")
    return denominator


def s1_lower_three_raw(obs_signal: channel.ObservedStatistics, obs_decoy: channel.ObservedStatistics,
                       S0: float) -> float:
    _check_order(obs_signal, obs_decoy)
    lam, lam_d = obs_signal.lambda_, obs_decoy.lambda_
    numerator = ((_p(lam_d, 2) * _p(lam, 0) - _p(lam, 2) * _p(lam_d, 0)) * S0
                 + _p(lam, 2) * obs_decoy.Q - _p(lam_d, 2) * obs_signal.Q)
    return numerator / _denominator(lam, lam_d)


def s1_lower_three(obs_signal: channel.ObservedStatistics, obs_decoy: channel.ObservedStatistics,
                   S0: float) -> float:
    """
    S1^L from signal, decoy and vacuum counting rates, clamped to [0, 1].
    :param obs_signal: statistics of the signal intensity
    :param obs_decoy: statistics of the weaker decoy intensity
    :param S0: vacuum counting rate
    :return: lower bound of the single-pair counting rate
    """
    if not 0 <= S0 <= 1:
        raise ValueError(f"S0 must lie in [0, 1], got {S0}.")
    return clamp(s1_lower_three_raw(obs_signal, obs_decoy, S0), 0.0, 1.0)


def e1_upper_three_raw(obs_signal: channel.ObservedStatistics, S0: float, S1_lower: float) -> float:
    if not S1_lower > 0:
        raise BoundUnavailableError(f"e1 cannot be bounded with S1^L = {S1_lower}.")
    lam = obs_signal.lambda_
    return (obs_signal.EQ - S0 * _p(lam, 0) / 2) / (_p(lam, 1) * S1_lower)


def e1_upper_three(obs_signal: channel.ObservedStatistics, S0: float, S1_lower: float) -> float:
    """
    e1^U, attributing half of the vacuum counts to errors; clamped to [0, 0.5].
    """
    return clamp(e1_upper_three_raw(obs_signal, S0, S1_lower), 0.0, MAX_ERROR_RATE)


def s0_upper_two(obs_signal: channel.ObservedStatistics) -> float:
    """
    Upper bound of S0 when no vacuum intensity is sent: vacuum counts err half of the time.
    """
    return 2 * obs_signal.EQ / _p(obs_signal.lambda_, 0)


def s1_lower_two_raw(obs_signal: channel.ObservedStatistics, obs_decoy: channel.ObservedStatistics) -> float:
    # The S0 coefficient is negative, so the upper bound of S0 gives the worst case
    return s1_lower_three_raw(obs_signal, obs_decoy, s0_upper_two(obs_signal))


def s1_lower_two(obs_signal: channel.ObservedStatistics, obs_decoy: channel.ObservedStatistics) -> float:
    """
    S1^L from two non-vacuum intensities, clamped to [0, 1].
    """
    return clamp(s1_lower_two_raw(obs_signal, obs_decoy), 0.0, 1.0)


def s1_lower_two_as_printed(obs_signal: channel.ObservedStatistics,
                            obs_decoy: channel.ObservedStatistics) -> float:
    """
    The two-intensity bound with the whole fraction divided once more by P0(lambda). Unclamped, for comparison
    only.
    """
    _check_order(obs_signal, obs_decoy)
    lam, lam_d = obs_signal.lambda_, obs_decoy.lambda_
    p0 = _p(lam, 0)
    numerator = (2 * (_p(lam_d, 2) * p0 - _p(lam, 2) * _p(lam_d, 0)) * obs_signal.EQ / p0
                 + _p(lam, 2) * obs_decoy.Q - _p(lam_d, 2) * obs_signal.Q)
    return numerator / (_denominator(lam, lam_d) * p0)


def e1_upper_two_raw(obs_signal: channel.ObservedStatistics, S1_lower: float) -> float:
    return e1_upper_three_raw(obs_signal, 0.0, S1_lower)


def e1_upper_two(obs_signal: channel.ObservedStatistics, S1_lower: float) -> float:
    """
    e1^U with the lower bound of S0 set to 0; clamped to [0, 0.5].
    """
    return clamp(e1_upper_two_raw(obs_signal, S1_lower), 0.0, MAX_ERROR_RATE)


def s1_lower_none_raw(obs_signal: channel.ObservedStatistics) -> float:
    lam = obs_signal.lambda_
    return (obs_signal.Q * (1 - 2 * obs_signal.E) - source.multi_pair_probability(lam)) / _p(lam, 1)


def s1_lower_none(obs_signal: channel.ObservedStatistics) -> float:
    """
    S1^L without decoys, assuming every multi-pair emission is counted; clamped to [0, 1].
    """
    return clamp(s1_lower_none_raw(obs_signal), 0.0, 1.0)


def lemma_gap(obs_signal: channel.ObservedStatistics, obs_decoy: channel.ObservedStatistics, S0: float,
              S1: float) -> float:
    """
    Q_lambda - [P0 S0 + P1 S1 + P2(lambda)/P2(lambda') (Q_lambda' - P0' S0 - P1' S1)], non-negative when the
    multi-pair ratio inequality holds and S0, S1 are the true rates.
    """
    lam, lam_d = obs_signal.lambda_, obs_decoy.lambda_
    multi_decoy = obs_decoy.Q - _p(lam_d, 0) * S0 - _p(lam_d, 1) * S1
    return obs_signal.Q - _p(lam, 0) * S0 - _p(lam, 1) * S1 - _p(lam, 2) / _p(lam_d, 2) * multi_decoy


def estimate_bounds(protocol: DecoyProtocol, obs_signal: channel.ObservedStatistics,
                    obs_decoy: channel.ObservedStatistics | None = None, S0: float | None = None) -> DecoyBounds:
    """
    Assemble S1^L and e1^U for `protocol`.
    :param protocol: the decoy protocol
    :param obs_signal: statistics of the signal intensity
    :param obs_decoy: statistics of the decoy intensity, needed by the decoy protocols
    :param S0: measured vacuum counting rate, needed by the three-intensity protocol
    :return: the bounds; `e1_upper` is None when S1^L is not positive
    """
    if obs_signal.lambda_ != protocol.signal:
        raise ValueError(f"Signal statistics belong to lambda={obs_signal.lambda_}, not {protocol.signal}.")
    if protocol.kind is not ProtocolKind.NO_DECOY and (obs_decoy is None or obs_decoy.lambda_ != protocol.decoy):
        raise ValueError(f"{protocol.kind} needs statistics of the decoy intensity {protocol.decoy}.")
    match protocol.kind:
        case ProtocolKind.THREE_INTENSITY:
            if S0 is None:
                raise ValueError("The three-intensity protocol needs the vacuum counting rate.")
            s0_used = S0
            s1_raw = s1_lower_three_raw(obs_signal, obs_decoy, S0)
        case ProtocolKind.TWO_INTENSITY:
            s0_used = s0_upper_two(obs_signal)
            s1_raw = s1_lower_two_raw(obs_signal, obs_decoy)
        case _:
            s0_used = s0_upper_two(obs_signal)
            s1_raw = s1_lower_none_raw(obs_signal)
    s1 = clamp(s1_raw, 0.0, 1.0)
    e1 = e1_raw = None
    if s1 > 0:
        # Only the vacuum measurement gives a usable lower bound of S0
        s0_lower = S0 if protocol.kind is ProtocolKind.THREE_INTENSITY else 0.0
        e1_raw = e1_upper_three_raw(obs_signal, s0_lower, s1)
        e1 = clamp(e1_raw, 0.0, MAX_ERROR_RATE)
    else:
        logger.debug("%s: S1^L not positive (raw %.6g), single-pair bound unavailable", protocol.kind, s1_raw)
    return DecoyBounds(S1_lower=s1, e1_upper=e1, S0_used=s0_used, method=protocol, S1_lower_raw=s1_raw,
                       e1_upper_raw=e1_raw)
