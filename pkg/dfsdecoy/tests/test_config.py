import pytest
import dfsdecoy.channel as channel
import dfsdecoy.config as config


def test_defaults():
    cfg = config.parse_config("")
    assert cfg == config.RunConfig()
    assert cfg.mode is config.Mode.FIG1_SWEEP
    assert cfg.eq20_variant is channel.ErrorYieldVariant.SQUARED_DARK
    assert cfg.lengths[0] == 0.0
    assert cfg.lengths[-1] == 60.0
    assert len(cfg.lengths) == 61


def test_parse_file():
    text = """
    # channel
    k_db_per_km = 0.25
    dark_count=1e-5   # per detector

    mode=pns_limit
    eq20_variant=as_printed
    diagnostics=yes
    lambda_grid=0.05, 0.1,0.2
    workers=4
    """
    cfg = config.parse_config(text)
    assert cfg.k_db_per_km == 0.25
    assert cfg.dark_count == 1e-5
    assert cfg.mode is config.Mode.PNS_LIMIT
    assert cfg.eq20_variant is channel.ErrorYieldVariant.AS_PRINTED
    assert cfg.diagnostics is True
    assert cfg.lambda_grid == (0.05, 0.1, 0.2)
    assert cfg.workers == 4


def test_command_line_wins():
    cfg = config.parse_config("k_db_per_km=0.25\nlambda=0.2\n", {"k_db_per_km": "0.2"})
    assert cfg.k_db_per_km == 0.2
    assert cfg.lambda_ == 0.2


def test_sweep_lengths():
    cfg = config.parse_config("l_start=10\nl_end=12\nl_step=0.5")
    assert cfg.lengths == [10.0, 10.5, 11.0, 11.5, 12.0]
    assert config.parse_config("l_start=5\nl_end=5").lengths == [5.0]
    assert config.parse_config("l_end=1\nl_step=0.1").lengths[-1] == pytest.approx(1.0)


def test_channel_params():
    params = config.parse_config("dark_count=1e-5").channel_params(30.0)
    assert params.length_km == 30.0
    assert params.dark_count == 1e-5
    assert params.k_db_per_km == 0.2


def test_unknown_key():
    with pytest.raises(config.ConfigError, match="Line 2"):
        config.parse_config("lambda=0.1\nlamda=0.2")
    with pytest.raises(config.ConfigError):
        config.parse_config("", {"speed": "1"})


def test_duplicate_key():
    with pytest.raises(config.ConfigError, match="duplicate"):
        config.parse_config("lambda=0.1\nlambda=0.2")


def test_malformed_lines():
    with pytest.raises(config.ConfigError):
        config.parse_config("lambda 0.1")
    with pytest.raises(config.ConfigError, match="lambda"):
        config.parse_config("lambda=abc")
    with pytest.raises(config.ConfigError):
        config.parse_config("workers=1.5")
    with pytest.raises(config.ConfigError):
        config.parse_config("diagnostics=maybe")
    with pytest.raises(config.ConfigError):
        config.parse_config("mode=fig2")


def test_invalid_values():
    for text in ("lambda=0.01\nlambda_prime=0.1", "lambda_prime=0", "k_db_per_km=-0.1", "dark_count=1",
                 "f_ec=0.9", "l_start=10\nl_end=5", "l_step=0", "workers=0", "lambda_grid=",
                 "tail_bound=0", "attack_tolerance=-1"):
        with pytest.raises(config.ConfigError):
            config.parse_config(text)


def test_lossless_fiber():
    cfg = config.parse_config("k_db_per_km=0")
    assert cfg.channel_params(50.0).eta == 1.0
    with pytest.raises(config.ConfigError, match="pns_limit"):
        config.parse_config("k_db_per_km=0\nmode=pns_limit")


def test_converters():
    assert config.to_float("1e-6") == 1e-6
    assert config.to_int("3") == 3
    assert config.to_bool("Off") is False
    assert config.to_float_list("0.1,0.2,") == (0.1, 0.2)
