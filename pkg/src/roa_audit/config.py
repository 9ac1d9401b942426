"""Configuration file loading (TOML key/value) with environment overrides.

A single flat TOML document configures the detector thresholds and the
remote-classifier transport. Environment variables override endpoint
credentials only: ``ROA_AUDIT_API_KEY`` takes precedence over any key in
the file, so credentials never need to live on disk.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Any, Mapping

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - version-dependent import
    import tomli as tomllib

from .detector import DetectorConfig
from .trace import Sensitivity

__all__ = ["TransportSettings", "load_config_file", "detector_config_from_doc", "transport_settings_from_doc"]

API_KEY_ENV = "ROA_AUDIT_API_KEY"


@dataclass(frozen=True)
class TransportSettings:
    endpoint: str = ""
    api_key: str = ""
    model: str = ""
    temperature: float = 0.0
    max_in_flight: int = 4
    prompt_level: int = 4
    max_requests: int = 3


def load_config_file(path: str) -> dict[str, Any]:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def detector_config_from_doc(doc: Mapping[str, Any]) -> DetectorConfig:
    kwargs: dict[str, Any] = {}
    if "maze_depth_threshold" in doc:
        kwargs["maze_depth_threshold"] = int(doc["maze_depth_threshold"])
    if "prominence_gap_threshold" in doc:
        kwargs["prominence_gap_threshold"] = int(doc["prominence_gap_threshold"])
    if "min_required_channels" in doc:
        kwargs["min_required_channels"] = int(doc["min_required_channels"])
    if "ambiguous_label_lexicon" in doc:
        kwargs["ambiguous_label_lexicon"] = frozenset(doc["ambiguous_label_lexicon"])
    if "vague_section_lexicon" in doc:
        kwargs["vague_section_lexicon"] = frozenset(doc["vague_section_lexicon"])
    if "excessive_sensitivities" in doc:
        kwargs["excessive_sensitivities"] = frozenset(
            Sensitivity(v) for v in doc["excessive_sensitivities"]
        )
    return DetectorConfig(**kwargs)


def transport_settings_from_doc(doc: Mapping[str, Any]) -> TransportSettings:
    settings = TransportSettings(
        endpoint=str(doc.get("endpoint", "")),
        api_key=str(doc.get("api_key", "")),
        model=str(doc.get("model", "")),
        temperature=float(doc.get("temperature", 0.0)),
        max_in_flight=int(doc.get("max_in_flight", 4)),
        prompt_level=int(doc.get("prompt_level", 4)),
        max_requests=int(doc.get("max_requests", 3)),
    )
    env_key = os.environ.get(API_KEY_ENV)
    if env_key:
        settings = TransportSettings(
            endpoint=settings.endpoint,
            api_key=env_key,
            model=settings.model,
            temperature=settings.temperature,
            max_in_flight=settings.max_in_flight,
            prompt_level=settings.prompt_level,
            max_requests=settings.max_requests,
        )
    return settings
