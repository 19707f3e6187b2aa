import math

import pytest
import dfsdecoy.bounds as bounds
import dfsdecoy.channel as channel
import dfsdecoy.keyrate as keyrate
import dfsdecoy.tests.utils as utils

NO_DECOY = bounds.DecoyProtocol.no_decoy(0.1)
THREE_INTENSITY = bounds.DecoyProtocol.three_intensity(0.1, 0.01)
TWO_INTENSITY = bounds.DecoyProtocol.two_intensity(0.1, 0.01)


def test_binary_entropy():
    assert keyrate.binary_entropy(0.0) == 0.0
    assert keyrate.binary_entropy(1.0) == 0.0
    assert keyrate.binary_entropy(0.5) == pytest.approx(1.0)
    assert keyrate.binary_entropy(0.11) == pytest.approx(0.499916, abs=1e-6)
    with pytest.raises(ValueError):
        keyrate.binary_entropy(1.5)


def test_protocol_constants():
    consts = keyrate.ProtocolConstants(ec_inefficiency=lambda e: 1 + e)
    assert consts.f(0.1) == pytest.approx(1.1)
    assert keyrate.ProtocolConstants().f(0.3) == 1.2
    with pytest.raises(ValueError):
        keyrate.ProtocolConstants(sifting=0.0)
    with pytest.raises(ValueError):
        keyrate.ProtocolConstants(ec_inefficiency=0.9)


def test_evaluate_point():
    point = keyrate.evaluate_point(THREE_INTENSITY, utils.get_params(10.0), keyrate.ProtocolConstants())
    assert point.R_lower > 0
    # Regression value of the full pipeline
    assert point.R_lower == pytest.approx(0.02286, rel=1e-3)
    assert not point.floored
    assert point.lambda_ == 0.1
    assert point.lambda_prime == 0.01
    assert point.bounds.S0_used == pytest.approx(4e-12, rel=1e-5)
    assert point.length_km == 10.0


def test_rate_floored():
    point = keyrate.evaluate_point(NO_DECOY, utils.get_params(30.0), keyrate.ProtocolConstants())
    assert point.R_raw < 0
    assert point.R_lower == 0.0
    assert point.floored
    assert keyrate.gllp_rate(point.observed, point.bounds, keyrate.ProtocolConstants()) == 0.0


def test_rate_decreases_with_length():
    lengths = [float(length) for length in range(0, 61, 5)]
    for protocol in (NO_DECOY, TWO_INTENSITY, THREE_INTENSITY):
        rates = [p.R_lower for p in keyrate.sweep(protocol, utils.get_params(), keyrate.ProtocolConstants(),
                                                  lengths)]
        assert all(r >= 0 for r in rates)
        assert rates == sorted(rates, reverse=True)


def test_sweep_workers_keep_order():
    lengths = [0.0, 25.0, 5.0, 40.0]
    serial = keyrate.sweep(THREE_INTENSITY, utils.get_params(), keyrate.ProtocolConstants(), lengths)
    parallel = keyrate.sweep(THREE_INTENSITY, utils.get_params(), keyrate.ProtocolConstants(), lengths, workers=3)
    assert [p.length_km for p in parallel] == lengths
    assert [p.R_raw for p in parallel] == [p.R_raw for p in serial]


def test_max_secure_distance():
    consts = keyrate.ProtocolConstants()
    params = utils.get_params()
    no_decoy = keyrate.max_secure_distance(NO_DECOY, params, consts)
    three = keyrate.max_secure_distance(THREE_INTENSITY, params, consts)
    assert 15.0 <= no_decoy <= 21.0
    assert 37.0 <= three <= 43.0
    assert 3.9 <= keyrate.loss_gap_db(0.2, no_decoy, three) <= 4.9
    for protocol, distance in ((NO_DECOY, no_decoy), (THREE_INTENSITY, three)):
        assert keyrate.evaluate_point(protocol, params.at_length(distance - 0.1), consts).R_raw > 0
        assert keyrate.evaluate_point(protocol, params.at_length(distance + 0.1), consts).floored


def test_max_secure_distance_beyond_scan():
    with pytest.raises(keyrate.NoSecureDistanceError):
        keyrate.max_secure_distance(THREE_INTENSITY, utils.get_params(), keyrate.ProtocolConstants(),
                                    scan_end_km=10.0)


def test_max_secure_distance_no_key():
    # Multi-pair emissions outweigh single pairs even without fiber
    with pytest.raises(keyrate.NoSecureDistanceError):
        keyrate.max_secure_distance(bounds.DecoyProtocol.no_decoy(2.0), utils.get_params(),
                                    keyrate.ProtocolConstants())


def test_pns_limit_distance():
    closed = keyrate.pns_limit_distance(0.1, 0.2)
    assert closed == pytest.approx(25 * math.log10(22 / 0.9), abs=1e-9)
    assert closed == pytest.approx(34.7044, abs=1e-3)
    assert keyrate.pns_limit_distance_bisect(0.1, 0.2) == pytest.approx(closed, abs=1e-6)


def test_pns_limit_distance_edge_cases():
    assert keyrate.pns_limit_distance(0.1, 0.2, attack_success=0.0) == math.inf
    assert keyrate.pns_limit_distance(100.0, 0.2, attack_success=1.0) == 0.0
    assert keyrate.pns_limit_distance_bisect(100.0, 0.2, attack_success=1.0) == 0.0
    with pytest.raises(ValueError):
        keyrate.pns_limit_distance(0.0, 0.2)


def test_decoy_rate_beats_no_decoy():
    consts = keyrate.ProtocolConstants()
    for length in utils.LENGTHS_KM:
        params = utils.get_params(length)
        obs_signal, obs_decoy = channel.observe(0.1, params), channel.observe(0.01, params)
        three = bounds.estimate_bounds(THREE_INTENSITY, obs_signal, obs_decoy, channel.yield_n(params, 0))
        none = bounds.estimate_bounds(NO_DECOY, obs_signal)
        assert keyrate.gllp_rate(obs_signal, three, consts) >= keyrate.gllp_rate(obs_signal, none, consts)


def test_pns_limit_distance_monotone():
    successes = [0.9, 0.5, 0.3, 0.1, 0.01]
    limits = [keyrate.pns_limit_distance(0.1, 0.2, s) for s in successes]
    assert all(a < b for a, b in zip(limits, limits[1:]))
    intensities = [0.01, 0.05, 0.1, 0.2, 0.5]
    limits = [keyrate.pns_limit_distance(lam, 0.2) for lam in intensities]
    assert all(a > b for a, b in zip(limits, limits[1:]))


@pytest.mark.parametrize("variant", list(channel.ErrorYieldVariant))
def test_max_secure_distance_variants(variant):
    consts = keyrate.ProtocolConstants()
    params = utils.get_params()
    for protocol in (NO_DECOY, THREE_INTENSITY):
        distance = keyrate.max_secure_distance(protocol, params, consts, variant=variant)
        reference = keyrate.max_secure_distance(protocol, params, consts)
        assert 0 < distance <= reference + keyrate.FINE_TOL_KM


def test_clamped_qber_rate():
    point = keyrate.evaluate_point(THREE_INTENSITY, utils.get_params(150.0), keyrate.ProtocolConstants(),
                                   variant=channel.ErrorYieldVariant.AS_PRINTED)
    assert point.observed.qber_clamped
    assert point.R_raw < 0
    assert point.floored
