import itertools

import dfsdecoy.channel as channel
import dfsdecoy.source as source

# Synthetic channels the decoy bounds must hold on
SIGNAL_INTENSITIES = (0.05, 0.1, 0.2)
DECOY_INTENSITIES = (0.005, 0.01, 0.05)
LENGTHS_KM = (0.0, 10.0, 20.0, 30.0, 40.0)
DARK_COUNTS = (1e-6, 1e-5)


def get_params(length_km: float = 20.0, dark_count: float = 1e-6) -> channel.ChannelParams:
    return channel.ChannelParams(k_db_per_km=0.2, length_km=length_km, dark_count=dark_count)


def get_bound_grid():
    """
    (signal, decoy, params) for every ordered intensity pair of the synthetic grid.
    """
    for lam, lam_d, length, dark in itertools.product(SIGNAL_INTENSITIES, DECOY_INTENSITIES, LENGTHS_KM,
                                                      DARK_COUNTS):
        if lam > lam_d:
            yield lam, lam_d, get_params(length, dark)


def get_true_single_pair(params: channel.ChannelParams) -> tuple[float, float]:
    """
    True S1 and e1 of the channel model.
    """
    s1 = channel.yield_n(params, 1)
    return s1, channel.error_yield_n(params, 1) / s1


def get_observed(lambda_: float, error_count_rate: float) -> channel.ObservedStatistics:
    """
    Statistics with a hand-picked E*Q and Q equal to the single-pair emission probability.
    """
    q = source.pair_probability(lambda_, 1)
    return channel.ObservedStatistics(lambda_=lambda_, Q=q, E=error_count_rate / q)
