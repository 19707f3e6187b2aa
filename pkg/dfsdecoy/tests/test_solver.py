import types

import pytest
import dfsdecoy.bounds as bounds
import dfsdecoy.keyrate as keyrate
import dfsdecoy.solver as solver
import dfsdecoy.tests.utils as utils

GRID = [(0.05, 0.01), (0.1, 0.01), (0.2, 0.01)]


def test_feasible_pairs():
    grid = [(0.2, 0.01), (0.01, 0.1), (0.1, 0.01), (0.1, 0.01), (0.1, 0.0)]
    assert solver.feasible_pairs(bounds.ProtocolKind.THREE_INTENSITY, grid) == [(0.1, 0.01), (0.2, 0.01)]
    assert solver.feasible_pairs(bounds.ProtocolKind.NO_DECOY, grid) == [(0.01, None), (0.1, None), (0.2, None)]


def test_optimize_intensities():
    params = utils.get_params(20.0)
    consts = keyrate.ProtocolConstants()
    choice = solver.optimize_intensities(params, consts, bounds.ProtocolKind.THREE_INTENSITY, GRID)
    assert choice is not None
    assert (choice.lambda_, choice.lambda_prime) in GRID
    rates = [keyrate.evaluate_point(bounds.DecoyProtocol.three_intensity(lam, lam_p), params, consts).R_lower
             for lam, lam_p in GRID]
    assert choice.point.R_lower == max(rates)
    assert choice.point.length_km == 20.0
    assert (choice.lambda_, choice.lambda_prime) == (0.1, 0.01)


def test_optimize_intensities_no_decoy():
    choice = solver.optimize_intensities(utils.get_params(5.0), keyrate.ProtocolConstants(),
                                         bounds.ProtocolKind.NO_DECOY, GRID)
    assert choice is not None
    assert choice.lambda_prime is None


def test_optimize_intensities_no_secure_rate():
    assert solver.optimize_intensities(utils.get_params(200.0), keyrate.ProtocolConstants(),
                                       bounds.ProtocolKind.THREE_INTENSITY, GRID) is None


def test_optimize_intensities_empty_grid():
    with pytest.raises(solver.EmptyGridError):
        solver.optimize_intensities(utils.get_params(), keyrate.ProtocolConstants(),
                                    bounds.ProtocolKind.TWO_INTENSITY, [(0.01, 0.1)])


def _fixed_rates(monkeypatch, rates):
    def evaluate_point(protocol, params, consts, *, variant):
        return types.SimpleNamespace(R_lower=rates[protocol.signal])
    monkeypatch.setattr(solver.keyrate, "evaluate_point", evaluate_point)


def test_optimize_intensities_exact_tie(monkeypatch):
    _fixed_rates(monkeypatch, {0.05: 1e-3, 0.1: 1e-3, 0.2: 5e-4})
    choice = solver.optimize_intensities(utils.get_params(), keyrate.ProtocolConstants(),
                                         bounds.ProtocolKind.THREE_INTENSITY, GRID)
    assert (choice.lambda_, choice.lambda_prime) == (0.05, 0.01)


def test_optimize_intensities_near_tie(monkeypatch):
    _fixed_rates(monkeypatch, {0.05: 1e-3, 0.1: 1e-3 * (1 + 1e-13), 0.2: 5e-4})
    choice = solver.optimize_intensities(utils.get_params(), keyrate.ProtocolConstants(),
                                         bounds.ProtocolKind.THREE_INTENSITY, GRID)
    assert choice.lambda_ == 0.1
