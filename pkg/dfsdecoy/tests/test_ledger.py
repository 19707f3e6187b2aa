import pytest
import dfsdecoy.bounds as bounds
import dfsdecoy.channel as channel
import dfsdecoy.ledger as ledger
import dfsdecoy.optics as optics


def test_squared_dark_matches_closed_form():
    report = ledger.check_agreement(channel.ErrorYieldVariant.SQUARED_DARK)
    assert report.passed
    assert report.max_q_deviation <= ledger.AGREEMENT_TOLERANCE
    assert report.max_e_deviation <= ledger.AGREEMENT_TOLERANCE


def test_as_printed_misses_closed_form():
    report = ledger.check_agreement(channel.ErrorYieldVariant.AS_PRINTED)
    assert not report.passed
    assert report.failures


def test_select_variant():
    assert ledger.select_variant() is channel.ErrorYieldVariant.SQUARED_DARK


def test_printed_split_state():
    state = ledger.printed_split_state()
    assert state.norm2 == pytest.approx(1.5)
    minus = optics.run_full_attack(optics.Code.MINUS)
    assert state.normalized().fidelity(minus.stages[0].state) == pytest.approx(1.0, abs=1e-12)


def test_collect_discrepancies():
    entries = ledger.collect_discrepancies()
    topics = [entry.topic for entry in entries]
    assert "splitting-attack distance limit" in topics
    assert "U1/P1 success probability" in topics
    assert "final state of code one" in topics
    limit = next(entry for entry in entries if entry.topic == "splitting-attack distance limit")
    assert limit.printed == "37.4 km"
    assert limit.derived.startswith("34.70")
    assert limit.note


def test_format_ledger():
    entries = [ledger.Discrepancy("topic", "1", "2", "note"), ledger.Discrepancy("other", "a", "b")]
    assert ledger.format_ledger(entries) == ("[topic] printed: 1 | derived: 2 | note\n"
                                             "[other] printed: a | derived: b\n")


def test_secure_distances():
    distances = ledger.secure_distances(channel.ErrorYieldVariant.SQUARED_DARK)
    assert 15 <= distances[bounds.ProtocolKind.NO_DECOY] <= 21
    assert 37 <= distances[bounds.ProtocolKind.THREE_INTENSITY] <= 43
    printed = ledger.secure_distances(channel.ErrorYieldVariant.AS_PRINTED)
    assert all(d is not None and d > 0 for d in printed.values())


def test_secure_distance_entries():
    entries = {entry.topic: entry for entry in ledger.collect_discrepancies()}
    for variant in channel.ErrorYieldVariant:
        entry = entries[f"secure distances, variant {variant}"]
        assert entry.printed == "18 km without decoys, 40 km with three intensities, gap 4.4 dB"
        assert "gap" in entry.derived
    assert entries["secure distances, variant squared_dark"].note == "within tolerance"


def test_distance_entry_without_sign_change():
    distances = {bounds.ProtocolKind.NO_DECOY: 17.98, bounds.ProtocolKind.THREE_INTENSITY: None}
    entry = ledger.distance_entry(channel.ErrorYieldVariant.SQUARED_DARK, distances, 0.2)
    assert entry.derived == "17.98 km / none"
