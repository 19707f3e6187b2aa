import dataclasses
import enum
import logging
from typing import Any, Callable, Mapping

import dfsdecoy.channel as channel
import dfsdecoy.ledger as ledger
import dfsdecoy.source as source

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


class Mode(enum.Enum):
    FIG1_SWEEP = "fig1_sweep"
    PNS_LIMIT = "pns_limit"
    ATTACK_VERIFY = "attack_verify"
    BOUNDS_TABLE = "bounds_table"
    OPTIMIZE = "optimize"
    LEDGER = "ledger"

    def __str__(self):
        return self.value


def to_float(value: str) -> float:
    """
    Convert a configuration value to a float.
    :param value: the text to convert
    :return: `value` as a `float`
    """
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"Malformed number `{value}`.") from None


def to_int(value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"Malformed integer `{value}`.") from None


def to_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"Malformed boolean `{value}`.")


def to_float_list(value: str) -> tuple[float, ...]:
    return tuple(to_float(v) for v in value.split(",") if v.strip())


def _to_enum(enum_type: type[enum.Enum]) -> Callable[[str], Any]:
    def convert(value: str):
        try:
            return enum_type(value.strip())
        except ValueError:
            choices = ", ".join(e.value for e in enum_type)
            raise ConfigError(f"Unknown value `{value}`, expected one of {choices}.") from None
    return convert


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """
    Everything a batch run needs. Defaults reproduce the published comparison.
    """
    mode: Mode = Mode.FIG1_SWEEP
    lambda_: float = 0.1
    lambda_prime: float = 0.01
    k_db_per_km: float = 0.2
    dark_count: float = 1e-6
    f_ec: float = 1.2
    sifting: float = 0.5
    l_start: float = 0.0
    l_end: float = 60.0
    l_step: float = 1.0
    length_km: float = 20.0
    out: str = "-"
    eq20_variant: channel.ErrorYieldVariant = channel.DEFAULT_VARIANT
    diagnostics: bool = False
    attack_tolerance: float = 1e-10
    agreement_tolerance: float = ledger.AGREEMENT_TOLERANCE
    tail_bound: float = source.DEFAULT_TAIL_BOUND
    scan_end: float = 300.0
    workers: int = 1
    lambda_grid: tuple[float, ...] = (0.05, 0.1, 0.2)
    lambda_prime_grid: tuple[float, ...] = (0.01,)

    def __post_init__(self):
        if not self.lambda_ > self.lambda_prime:
            raise ConfigError(f"lambda must exceed lambda_prime, got {self.lambda_} and {self.lambda_prime}.")
        if not self.lambda_prime > 0:
            raise ConfigError(f"lambda_prime must be positive, got {self.lambda_prime}.")
        if not self.k_db_per_km >= 0:
            raise ConfigError(f"k_db_per_km must be non-negative, got {self.k_db_per_km}.")
        if self.mode is Mode.PNS_LIMIT and not self.k_db_per_km > 0:
            raise ConfigError(f"pns_limit needs a positive k_db_per_km, got {self.k_db_per_km}.")
        if not 0 <= self.dark_count < 1:
            raise ConfigError(f"dark_count must lie in [0, 1), got {self.dark_count}.")
        if not self.f_ec >= 1:
            raise ConfigError(f"f_ec must be at least 1, got {self.f_ec}.")
        if not 0 < self.sifting <= 1:
            raise ConfigError(f"sifting must lie in (0, 1], got {self.sifting}.")
        if not 0 <= self.l_start <= self.l_end:
            raise ConfigError(f"Need 0 <= l_start <= l_end, got {self.l_start} and {self.l_end}.")
        if not self.l_step > 0:
            raise ConfigError(f"l_step must be positive, got {self.l_step}.")
        if not self.length_km >= 0:
            raise ConfigError(f"length_km must be non-negative, got {self.length_km}.")
        if not self.attack_tolerance >= 0 or not self.agreement_tolerance >= 0:
            raise ConfigError("Tolerances must be non-negative.")
        if not 0 < self.tail_bound < 1:
            raise ConfigError(f"tail_bound must lie in (0, 1), got {self.tail_bound}.")
        if not self.scan_end > 0:
            raise ConfigError(f"scan_end must be positive, got {self.scan_end}.")
        if self.workers < 1:
            raise ConfigError(f"workers must be at least 1, got {self.workers}.")
        if not self.lambda_grid or not self.lambda_prime_grid:
            raise ConfigError("Intensity grids must not be empty.")

    @property
    def lengths(self) -> list[float]:
        """
        Sweep lengths from l_start to l_end inclusive, computed by index to stay free of accumulated rounding.
        """
        count = int((self.l_end - self.l_start) / self.l_step + 1e-9)
        return [self.l_start + i * self.l_step for i in range(count + 1)]

    def channel_params(self, length_km: float = 0.0) -> channel.ChannelParams:
        return channel.ChannelParams(k_db_per_km=self.k_db_per_km, length_km=length_km, dark_count=self.dark_count)


# Configuration key -> (RunConfig field, converter)
KEYS: dict[str, tuple[str, Callable[[str], Any]]] = {
    "mode": ("mode", _to_enum(Mode)),
    "lambda": ("lambda_", to_float),
    "lambda_prime": ("lambda_prime", to_float),
    "k_db_per_km": ("k_db_per_km", to_float),
    "dark_count": ("dark_count", to_float),
    "f_ec": ("f_ec", to_float),
    "sifting": ("sifting", to_float),
    "l_start": ("l_start", to_float),
    "l_end": ("l_end", to_float),
    "l_step": ("l_step", to_float),
    "length_km": ("length_km", to_float),
    "out": ("out", str.strip),
    "eq20_variant": ("eq20_variant", _to_enum(channel.ErrorYieldVariant)),
    "diagnostics": ("diagnostics", to_bool),
    "attack_tolerance": ("attack_tolerance", to_float),
    "agreement_tolerance": ("agreement_tolerance", to_float),
    "tail_bound": ("tail_bound", to_float),
    "scan_end": ("scan_end", to_float),
    "workers": ("workers", to_int),
    "lambda_grid": ("lambda_grid", to_float_list),
    "lambda_prime_grid": ("lambda_prime_grid", to_float_list),
}


def parse_lines(text: str) -> dict[str, str]:
    """
    Read flat `key=value` lines. `#` starts a comment, blank lines are skipped.
    :param text: the configuration file content
    :return: the raw values by key
    """
    values: dict[str, str] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"Line {number}: expected `key=value`, got `{line}`.")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"Line {number}: unknown key `{key}`.")
        if key in values:
            raise ConfigError(f"Line {number}: duplicate key `{key}`.")
        values[key] = value
    return values


def parse_config(text: str, overrides: Mapping[str, str] | None = None) -> RunConfig:
    """
    Build a run configuration from file content and command-line overrides.

    Command-line values take precedence over the file, the file over the defaults.
    :param text: the configuration file content, possibly empty
    :param overrides: raw values from the command line by configuration key
    :return: the validated configuration
    """
    values = parse_lines(text)
    for key, value in (overrides or {}).items():
        if key not in KEYS:
            raise ConfigError(f"Unknown key `{key}`.")
        values[key] = value
    fields = {}
    for key, value in values.items():
        field, convert = KEYS[key]
        try:
            fields[field] = convert(value)
        except ConfigError as e:
            raise ConfigError(f"`{key}`: {e}") from None
    config = RunConfig(**fields)
    logger.debug("Configuration: %s", config)
    return config
