"""Scenario configuration files.

Resolution order (highest to lowest):
1. Explicit overrides (CLI flags)
2. Configuration file (YAML)
3. Profile defaults

Errors are reported as ConfigurationError carrying the 1-based line of the offending
key, taken from the YAML node marks.
"""

from pathlib import Path
from typing import Any, Optional, Union

import yaml
from pydantic import BaseModel, ValidationError

from isacsim.config.profiles import get_scenario_profile
from isacsim.config.scenario import ScenarioConfig
from isacsim.errors import ConfigurationError

DEFAULT_CONFIG_FILENAME = "isacsim_config.yaml"
DEFAULT_CONFIG_PATHS = [
    Path.cwd() / DEFAULT_CONFIG_FILENAME,
    Path.home() / ".config" / "isacsim" / DEFAULT_CONFIG_FILENAME,
]

KeyPath = tuple[Union[str, int], ...]


def _find_config_file(config_path: Optional[Path] = None) -> Optional[Path]:
    """Find the configuration file.

    Args:
        config_path: Explicit path to configuration file

    Returns:
        Path to configuration file if found, None otherwise
    """
    if config_path:
        if config_path.exists():
            return config_path
        return None

    for path in DEFAULT_CONFIG_PATHS:
        if path.exists():
            return path

    return None


def _key_lines(node: Optional[yaml.Node], prefix: KeyPath = ()) -> dict[KeyPath, int]:
    lines: dict[KeyPath, int] = {}
    if isinstance(node, yaml.MappingNode):
        for key_node, value_node in node.value:
            path = prefix + (key_node.value,)
            lines[path] = key_node.start_mark.line + 1
            lines.update(_key_lines(value_node, path))
    elif isinstance(node, yaml.SequenceNode):
        for index, item in enumerate(node.value):
            path = prefix + (index,)
            lines[path] = item.start_mark.line + 1
            lines.update(_key_lines(item, path))
    return lines


def _load_yaml_text(text: str, source: str) -> tuple[dict[str, Any], dict[KeyPath, int]]:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        problem = getattr(e, "problem", None) or str(e)
        raise ConfigurationError(f"malformed YAML: {problem}", line=line, source=source) from e

    if data is None:
        return {}, {}
    if not isinstance(data, dict):
        raise ConfigurationError("configuration must be a mapping of sections", line=1, source=source)
    return data, _key_lines(node)


def _deep_merge(base: dict[str, Any], update: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _line_for(loc: KeyPath, lines: dict[KeyPath, int]) -> Optional[int]:
    for end in range(len(loc), 0, -1):
        if loc[:end] in lines:
            return lines[loc[:end]]
    return None


def _describe(error: dict[str, Any]) -> str:
    loc = ".".join(str(part) for part in error["loc"])
    if error["type"] == "extra_forbidden":
        return f"unknown key '{loc}'"
    return f"{loc}: {error['msg']}" if loc else error["msg"]


def _validate(
    data: dict[str, Any], lines: dict[KeyPath, int], source: Optional[str]
) -> ScenarioConfig:
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as e:
        errors = e.errors()
        first = errors[0]
        message = "; ".join(_describe(err) for err in errors)
        raise ConfigurationError(message, line=_line_for(tuple(first["loc"]), lines), source=source) from e


def resolve_profile(profile: Optional[str]) -> ScenarioConfig:
    if profile is None:
        return ScenarioConfig()
    try:
        return get_scenario_profile(profile)
    except ValueError as e:
        raise ConfigurationError(str(e)) from e


def load_scenario_text(
    text: str,
    profile: Optional[str] = None,
    overrides: Optional[dict[str, dict[str, Any]]] = None,
    source: str = "<string>",
) -> ScenarioConfig:
    data, lines = _load_yaml_text(text, source)
    merged = _deep_merge(resolve_profile(profile).model_dump(mode="json"), data)
    if overrides:
        merged = _deep_merge(merged, overrides)
    return _validate(merged, lines, source)


def load_scenario_config(
    config_path: Optional[Path] = None,
    profile: Optional[str] = None,
    overrides: Optional[dict[str, dict[str, Any]]] = None,
) -> ScenarioConfig:
    """Load a scenario from file, profile defaults and overrides.

    Args:
        config_path: Optional explicit path to a YAML configuration file
        profile: Named profile supplying the defaults (None means the full-scale defaults)
        overrides: Section-keyed values that win over the file, e.g. ``{"experiment": {"seed": 7}}``

    Returns:
        Validated ScenarioConfig

    Raises:
        ConfigurationError: Explicit path missing, malformed YAML, unknown key or invalid value
    """
    if config_path is not None and not config_path.exists():
        raise ConfigurationError(f"configuration file not found: {config_path}")
    found_path = _find_config_file(config_path)

    if not found_path:
        base = resolve_profile(profile)
        if not overrides:
            return base
        return _validate(_deep_merge(base.model_dump(mode="json"), overrides), {}, None)

    return parse_config(found_path, profile=profile, overrides=overrides)


def parse_config(
    path: Path,
    profile: Optional[str] = None,
    overrides: Optional[dict[str, dict[str, Any]]] = None,
) -> ScenarioConfig:
    """Parse one configuration file on top of a profile's defaults (full scale when None)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"cannot read configuration file {path}: {e}") from e
    return load_scenario_text(text, profile=profile, overrides=overrides, source=str(path))


def save_default_config(path: Path, profile: Optional[str] = None) -> None:
    """Save the resolved defaults of a profile to a YAML file.

    Args:
        path: Path to save the configuration file
        profile: Profile to dump (None means the full-scale defaults)
    """
    data = resolve_profile(profile).model_dump(mode="json")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(data, f, default_flow_style=None, sort_keys=False)


def _section_lines(name: str, model: BaseModel, data: dict[str, Any]) -> list[str]:
    lines = [f"{name}:"]
    for field_name, field in type(model).model_fields.items():
        if field.description:
            lines.append(f"  # {field.description}")
        dumped = yaml.safe_dump(
            {field_name: data[field_name]}, default_flow_style=None, sort_keys=False, width=1000
        )
        lines.extend(f"  {line}" for line in dumped.rstrip("\n").splitlines())
    return lines


def get_config_template(profile: Optional[str] = None) -> str:
    """Get a YAML configuration template with comments.

    Returns:
        YAML template string documenting every key with its resolved default
    """
    scenario = resolve_profile(profile)
    data = scenario.model_dump(mode="json")
    label = profile or "full"
    lines = [
        "# isacsim scenario configuration",
        "# ==============================",
        f"# Defaults of the '{label}' profile. Only specify values you want to change;",
        "# dB-valued keys carry _db, _dbi, _dbsm or _dbm_per_hz suffixes.",
        "",
    ]
    for section in type(scenario).model_fields:
        lines.extend(_section_lines(section, getattr(scenario, section), data[section]))
        lines.append("")
    return "\n".join(lines)
