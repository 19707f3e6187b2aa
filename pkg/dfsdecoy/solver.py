import dataclasses
import logging
from typing import Iterable

from ortools.sat.python import cp_model

import dfsdecoy.bounds as bounds
import dfsdecoy.channel as channel
import dfsdecoy.keyrate as keyrate

logger = logging.getLogger(__name__)


class EmptyGridError(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class IntensityChoice:
    lambda_: float
    lambda_prime: float | None
    point: keyrate.KeyRatePoint


def _protocol(kind: bounds.ProtocolKind, lambda_: float, lambda_prime: float | None) -> bounds.DecoyProtocol:
    if kind is bounds.ProtocolKind.NO_DECOY:
        return bounds.DecoyProtocol.no_decoy(lambda_)
    return bounds.DecoyProtocol(kind, lambda_, lambda_prime)


def feasible_pairs(kind: bounds.ProtocolKind, grid: Iterable[tuple[float, float | None]]) \
        -> list[tuple[float, float | None]]:
    """
    Grid pairs the protocol accepts, ordered by lambda then lambda'. The no-decoy protocol ignores lambda'.
    """
    pairs = set()
    for lambda_, lambda_prime in grid:
        if kind is bounds.ProtocolKind.NO_DECOY:
            if lambda_ > 0:
                pairs.add((lambda_, None))
        elif lambda_prime is not None and lambda_ > lambda_prime > 0:
            pairs.add((lambda_, lambda_prime))
    return sorted(pairs, key=lambda p: (p[0], -1.0 if p[1] is None else p[1]))


def optimize_intensities(params: channel.ChannelParams, consts: keyrate.ProtocolConstants,
                         kind: bounds.ProtocolKind, grid: Iterable[tuple[float, float | None]], *,
                         variant: channel.ErrorYieldVariant = channel.DEFAULT_VARIANT) -> IntensityChoice | None:
    """
    Pick the grid pair with the highest key rate at the fixed fiber length of `params`.

    Ties go to the smaller lambda, then the smaller lambda'.
    :param params: channel parameters including the fiber length
    :param consts: protocol constants
    :param kind: the decoy protocol
    :param grid: candidate (lambda, lambda') pairs
    :param variant: error-yield variant used by the channel model
    :return: the best pair with its evaluated point, or None if no pair yields a positive rate
    """
    pairs = feasible_pairs(kind, grid)
    if not pairs:
        raise EmptyGridError(f"No grid pair is feasible for {kind}.")
    points = [keyrate.evaluate_point(_protocol(kind, lam, lam_p), params, consts, variant=variant)
              for lam, lam_p in pairs]
    best_rate = max(p.R_lower for p in points)
    if best_rate <= 0:
        logger.info("No intensity pair yields a positive rate at %g km", params.length_km)
        return None

    n_pairs = len(pairs)
    # Integer scores rank the exact rates; pairs are sorted, so equal rates rank the earlier pair higher
    ranking = sorted(range(n_pairs), key=lambda i: (-points[i].R_lower, i))
    scores = [0] * n_pairs
    for position, i in enumerate(ranking):
        scores[i] = n_pairs - position

    # Create model
    model = cp_model.CpModel()
    # Flag indicating whether each pair is picked
    select = [model.NewBoolVar('s') for _ in range(n_pairs)]
    # Exactly one pair
    model.AddExactlyOne(select)
    model.Maximize(sum(select[i] * scores[i] for i in range(n_pairs)))

    # Create solver
    solver = cp_model.CpSolver()
    status = solver.Solve(model)

    if status == cp_model.OPTIMAL:
        chosen = next(i for i in range(n_pairs) if solver.Value(select[i]) == 1)
        lam, lam_p = pairs[chosen]
        logger.debug("Best intensities at %g km: lambda=%g, lambda'=%s", params.length_km, lam, lam_p)
        return IntensityChoice(lambda_=lam, lambda_prime=lam_p, point=points[chosen])
    else:
        raise RuntimeError(f"Model solving failed: {status}!")
