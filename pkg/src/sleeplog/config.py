"""Runtime settings.

One flat namespace of typed keys.  Precedence, highest first:
command-line flag, SLEEPLOG_<KEY> environment variable, config file
line, built-in default.  Config files are plain "key = value" lines;
'#' starts a comment, blank lines are ignored.  Unknown keys are an
error anywhere, not a warning.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Mapping

ENV_PREFIX = "SLEEPLOG_"


class ConfigError(ValueError):
    """Bad key, bad value, or unreadable config file."""


@dataclass(frozen=True)
class Setting:
    name: str
    kind: str  # int | float | bool | str
    default: object
    help: str
    stamped: bool = True  # False: operational only, never changes output content


SETTINGS: tuple[Setting, ...] = (
    Setting("min_duration_minutes", "int", 120, "shortest believable sleep, minutes"),
    Setting("max_duration_minutes", "int", 720, "longest believable sleep, minutes"),
    Setting("require_deep_sleep", "bool", False, "drop logs without a deep-sleep field"),
    Setting("require_anchor", "bool", False, "drop logs without resolved dates"),
    Setting("slack_minutes", "int", 15, "allowed clock skew when anchoring dates"),
    Setting("workers", "int", 1, "parse worker count", stamped=False),
    Setting("min_logs_per_user", "int", 5, "per-user floor for the robustness re-run"),
    Setting("geo_offline", "bool", False, "never touch the network when resolving countries"),
    Setting("geo_cache", "str", "geo_cache.json", "persistent geocode cache path", stamped=False),
    Setting("geo_base_url", "str", "https://nominatim.openstreetmap.org/search", "geocoder endpoint"),
    Setting("seed", "int", 20151024, "corpus generator seed"),
    Setting("synth_users", "int", 100, "corpus generator user count"),
    Setting("presleep_window_minutes", "int", 120, "pre-sleep activity window, minutes"),
    Setting("presleep_denominator", "str", "night", "presleep probability denominator: night or day"),
)

_BY_NAME = {s.name: s for s in SETTINGS}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def parse_value(setting: Setting, raw: str) -> object:
    raw = raw.strip()
    try:
        if setting.kind == "int":
            return int(raw)
        if setting.kind == "float":
            return float(raw)
        if setting.kind == "bool":
            low = raw.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(raw)
        return raw
    except ValueError:
        raise ConfigError(f"bad value for {setting.name}: {raw!r} (expected {setting.kind})") from None


def load_file(path: str) -> dict[str, str]:
    """Raw key -> value strings from a config file."""
    values: dict[str, str] = {}
    try:
        with open(path, "r", encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                stripped = line.split("#", 1)[0].strip()
                if not stripped:
                    continue
                if "=" not in stripped:
                    raise ConfigError(f"{path}:{lineno}: expected key=value, got {stripped!r}")
                key, _, value = stripped.partition("=")
                key = key.strip()
                if key not in _BY_NAME:
                    raise ConfigError(f"{path}:{lineno}: unknown setting {key!r}")
                values[key] = value.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return values


def env_overrides(environ: Mapping[str, str] | None = None) -> dict[str, str]:
    environ = os.environ if environ is None else environ
    values: dict[str, str] = {}
    for setting in SETTINGS:
        env_key = ENV_PREFIX + setting.name.upper()
        if env_key in environ:
            values[setting.name] = environ[env_key]
    return values


def resolve(
    file_values: Mapping[str, str] | None = None,
    environ: Mapping[str, str] | None = None,
    flag_values: Mapping[str, object] | None = None,
) -> dict[str, object]:
    """Effective typed settings after applying precedence."""
    out: dict[str, object] = {s.name: s.default for s in SETTINGS}
    for name, raw in (file_values or {}).items():
        out[name] = parse_value(_BY_NAME[name], raw)
    for name, raw in env_overrides(environ).items():
        out[name] = parse_value(_BY_NAME[name], raw)
    for name, value in (flag_values or {}).items():
        if name not in _BY_NAME:
            raise ConfigError(f"unknown setting {name!r}")
        if value is not None:
            out[name] = value
    if out["presleep_denominator"] not in ("night", "day"):
        raise ConfigError("presleep_denominator must be 'night' or 'day'")
    if not 0 < out["min_duration_minutes"] < out["max_duration_minutes"]:
        raise ConfigError("need 0 < min_duration_minutes < max_duration_minutes")
    if out["workers"] < 1:
        raise ConfigError("workers must be at least 1")
    return out


def config_stamp(resolved: Mapping[str, object]) -> str:
    """Canonical one-line rendering, embedded in CSV headers and manifests.

    Operational knobs (worker count) are left out: the same data under a
    different parallelism must produce byte-identical files.
    """
    pairs = []
    for name in sorted(resolved):
        setting = _BY_NAME.get(name)
        if setting is not None and not setting.stamped:
            continue
        value = resolved[name]
        if isinstance(value, bool):
            value = "true" if value else "false"
        pairs.append(f"{name}={value}")
    return " ".join(pairs)
