"""TOML config loading with flag-over-file-over-default precedence."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .validate import ValidationPolicy


@dataclass
class PipelineConfig:
    """Parsed config file: sections keyed by pipeline stage name."""

    sections: dict[str, dict[str, Any]] = field(default_factory=dict)

    @classmethod
    def load(cls, path: str) -> "PipelineConfig":
        with open(path, "rb") as fh:
            return cls(sections=tomllib.load(fh))

    def section(self, name: str) -> dict[str, Any]:
        value = self.sections.get(name, {})
        if not isinstance(value, dict):
            raise ValueError(f"config section [{name}] must be a table")
        return value

    def path(self, key: str) -> str | None:
        value = self.section("paths").get(key)
        return None if value is None else str(value)


def pick(flag_value: Any, section: dict[str, Any], key: str, default: Any) -> Any:
    """Flag beats config file beats built-in default."""
    if flag_value is not None:
        return flag_value
    if key in section:
        return section[key]
    return default


def policy_from_mapping(data: dict[str, Any], mode: str | None = None) -> ValidationPolicy:
    """Build a ValidationPolicy from a config table (e.g. a policy TOML)."""
    kwargs: dict[str, Any] = {}
    if "attribution_blacklist" in data:
        kwargs["attribution_blacklist"] = tuple(str(p) for p in data["attribution_blacklist"])
    for key in (
        "require_therefore",
        "min_answer_chars",
        "max_answer_chars",
        "min_question_chars",
        "max_question_chars",
    ):
        if key in data:
            kwargs[key] = data[key]
    kwargs["on_violation"] = mode or data.get("on_violation", "reject")
    return ValidationPolicy(**kwargs)


def load_policy(path: str, mode: str | None = None) -> ValidationPolicy:
    with open(path, "rb") as fh:
        return policy_from_mapping(tomllib.load(fh), mode)
