import logging
import os
import re
import typing
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Set, Tuple, Union

from dotenv import load_dotenv
from pydantic import BaseModel, ValidationError

from orthoreg.constants import DEBUG_ENV_VAR, SEED_ENV_VAR
from orthoreg.harness.models import TrainConfig

# Configure logging
logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s")
logger = logging.getLogger(__name__)

# Load environment variables
load_dotenv()

# Short spellings accepted in config files and on the command line
KEY_ALIASES = {
    "proj_dims": "dims.proj",
    "whiten_target": "regularizer.whiten_target",
    "gamma": "regularizer.gamma",
}

_INT = re.compile(r"^[+-]?\d+$")


class ConfigError(ValueError):
    """Unknown key, missing value or invalid value in a run configuration."""

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


def get_env(key: str, default=None):
    """
    Get environment variable, handling empty strings as None.

    Args:
        key: Environment variable key
        default: Default value if not found

    Returns:
        Environment variable value or default
    """
    value = os.environ.get(key)
    if value == "" or value is None:
        return default
    return value


# ----- keys -----


def _model_type(annotation: Any) -> Optional[type]:
    if isinstance(annotation, type) and issubclass(annotation, BaseModel):
        return annotation
    return None


def _is_sequence(annotation: Any) -> bool:
    origin = typing.get_origin(annotation)
    if origin is Union:
        return any(_is_sequence(arg) for arg in typing.get_args(annotation))
    return origin in (list, tuple, List, Tuple)


def _walk_fields(model: type, prefix: str = "") -> Iterable[Tuple[str, Any]]:
    for name, field in model.model_fields.items():
        path = f"{prefix}{name}"
        nested = _model_type(field.annotation)
        if nested is not None:
            yield from _walk_fields(nested, f"{path}.")
        else:
            yield path, field.annotation


def known_keys() -> Set[str]:
    """Every dotted leaf key of TrainConfig."""
    return {path for path, _ in _walk_fields(TrainConfig)}


def _sequence_keys() -> Set[str]:
    return {path for path, annotation in _walk_fields(TrainConfig) if _is_sequence(annotation)}


def normalize_key(key: str) -> str:
    """Lower-case, hyphens to underscores, aliases resolved, then checked against TrainConfig."""
    normalized = key.strip().lower().replace("-", "_")
    normalized = KEY_ALIASES.get(normalized, normalized)
    if normalized not in known_keys():
        raise ConfigError("unknown configuration key", key)
    return normalized


# ----- values -----


def parse_value(text: str) -> Any:
    """
    Parse a config value: none, booleans, ints, floats, comma lists, else the
    raw string.
    """
    text = text.strip()
    if "," in text:
        return [parse_value(item) for item in text.split(",") if item.strip()]
    lowered = text.lower()
    if lowered in ("none", "null"):
        return None
    if lowered in ("true", "yes"):
        return True
    if lowered in ("false", "no"):
        return False
    if _INT.match(text):
        return int(text)
    try:
        return float(text)
    except ValueError:
        return text


def format_value(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ",".join(format_value(v) for v in value)
    return str(value)


# ----- files -----


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, Any]:
    """
    Parse flat ``key = value`` lines into ``{dotted key: value}``.

    Blank lines and ``#`` comments are ignored.

    Raises:
        ConfigError: Malformed line, missing value or unknown key
    """
    flat: Dict[str, Any] = {}
    for number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{number}: expected 'key = value', got {raw_line.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{number}: missing key")
        if not value:
            raise ConfigError(f"{source}:{number}: missing value", key)
        flat[normalize_key(key)] = parse_value(value)
    return flat


def _load_config_from_file(config_path: Union[str, Path]) -> Dict[str, Any]:
    """
    Load the flat configuration from a file.

    Raises:
        ConfigError: The file is missing or malformed
    """
    path = Path(config_path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(path.read_text(encoding="utf-8"), str(path))


def _build_config_from_envs() -> Dict[str, Any]:
    """
    Build configuration from environment variables.

    Returns:
        Flat configuration dictionary
    """
    config: Dict[str, Any] = {}
    env_mapping = {
        "seed": SEED_ENV_VAR,
        "debug": DEBUG_ENV_VAR,
    }
    for config_key, env_key in env_mapping.items():
        value = get_env(env_key)
        if value is None:
            continue
        if config_key == "debug":
            config[config_key] = str(value).lower() in ["true", "1", "yes"]
        else:
            try:
                config[config_key] = int(value)
            except ValueError:
                raise ConfigError(f"{env_key} must be an integer, got {value!r}", config_key) from None
    return config


def _set_nested_value(config: Dict[str, Any], key: str, value: Any) -> None:
    """
    Set a nested value in a dictionary using dot notation.

    Args:
        config: Configuration dictionary
        key: Dot-separated key (e.g., "regularizer.gamma")
        value: Value to set
    """
    keys = key.split(".")
    current = config

    for k in keys[:-1]:
        if k not in current:
            current[k] = {}
        current = current[k]

    current[keys[-1]] = value


def _merge_configs(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """
    Merge two configs with ``override`` taking precedence.

    Returns:
        Merged configuration
    """
    merged = dict(base)

    def merge_nested(target: Dict[str, Any], source: Dict[str, Any]) -> None:
        for key, value in source.items():
            if key in target and isinstance(target[key], dict) and isinstance(value, dict):
                merge_nested(target[key], value)
            else:
                target[key] = value

    merge_nested(merged, override)
    return merged


def _nest(flat: Mapping[str, Any]) -> Dict[str, Any]:
    sequences = _sequence_keys()
    nested: Dict[str, Any] = {}
    for key, value in flat.items():
        if key in sequences and value is not None and not isinstance(value, list):
            value = [value]
        _set_nested_value(nested, key, value)
    return nested


def load_config(config_path: Optional[str] = None, overrides: Optional[Mapping[str, Any]] = None) -> Dict[str, Any]:
    """
    Resolve the nested configuration dict.

    Precedence: CLI overrides > config file > environment fallback > built-in
    defaults (applied later by TrainConfig).
    """
    env_config = _build_config_from_envs()
    file_config = _load_config_from_file(config_path) if config_path else {}
    cli_config = {normalize_key(k): v for k, v in (overrides or {}).items()}

    flat = _merge_configs(_merge_configs(env_config, file_config), cli_config)
    config_dict = _nest(flat)

    # Enable debug logging if specified
    if config_dict.get("debug", False):
        logging.getLogger().setLevel(logging.DEBUG)
        logger.debug(f"Final configuration: {config_dict}")

    return config_dict


def build_train_config(config_dict: Mapping[str, Any]) -> TrainConfig:
    """
    Validate a nested config dict.

    Raises:
        ConfigError: Any field fails validation; the key names the first failing field
    """
    try:
        return TrainConfig.model_validate(dict(config_dict))
    except ValidationError as e:
        first = e.errors()[0]
        key = ".".join(str(part) for part in first["loc"]) or None
        raise ConfigError(first["msg"], key) from e


def load_train_config(config_path: Optional[str] = None, overrides: Optional[Mapping[str, Any]] = None) -> TrainConfig:
    return build_train_config(load_config(config_path, overrides))


def flatten_config(cfg: BaseModel) -> Dict[str, Any]:
    """``{dotted key: value}`` for every leaf of a config model."""
    flat: Dict[str, Any] = {}

    def walk(model: BaseModel, prefix: str) -> None:
        for name in type(model).model_fields:
            value = getattr(model, name)
            if isinstance(value, BaseModel):
                walk(value, f"{prefix}{name}.")
            else:
                flat[f"{prefix}{name}"] = value

    walk(cfg, "")
    return flat


def dump_resolved_config(cfg: TrainConfig) -> str:
    """Render the fully resolved config in the input file format, keys sorted."""
    flat = flatten_config(cfg)
    lines = [f"{key} = {format_value(flat[key])}" for key in sorted(flat)]
    return "\n".join(lines) + "\n"
