"""Pipeline and CLI configuration.

A run's configuration is resolved from four layers, later layers winning:
built-in defaults, then the JSON config file, then command-line flags, then
``PLOTGEN_*`` environment variables. Unknown keys are rejected rather than
ignored so typos cannot silently fall back to defaults.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

from .codegen import AgentKind
from .errors import ConfigError

CONFIG_PATH_ENV = "PLOTGEN_CONFIG"

FEEDBACK_AGENTS = (AgentKind.NUMERIC, AgentKind.LEXICAL, AgentKind.VISUAL)

DERENDER_MODES = ("programmatic", "multimodal")


@dataclass(frozen=True)
class ModelRoles:
    planner: str = "gpt-4"
    codegen: str = "gpt-4"
    feedback: str = "gpt-4v"
    judge: str = "gpt-4v"


@dataclass(frozen=True)
class PipelineConfig:
    max_debug_iterations: int = 3
    max_feedback_iterations: int = 2
    agent_order: tuple[AgentKind, ...] = FEEDBACK_AGENTS
    models: ModelRoles = field(default_factory=ModelRoles)
    derender_mode: str = "programmatic"
    time_limit: float = 60.0
    max_output_tokens: int = 4096
    numeric_trend_threshold: float = 0.8
    runner_cmd: tuple[str, ...] | None = None
    session_id: str | None = None  # defaults to the request id

    def __post_init__(self) -> None:
        if self.max_debug_iterations < 1 or self.max_feedback_iterations < 1:
            raise ConfigError("iteration budgets must be >= 1")
        if sorted(a.value for a in self.agent_order) != sorted(a.value for a in FEEDBACK_AGENTS):
            raise ConfigError("agent_order must be a permutation of numeric, lexical, visual")
        if self.derender_mode not in DERENDER_MODES:
            raise ConfigError(f"derender_mode must be one of {DERENDER_MODES}")
        if self.time_limit <= 0:
            raise ConfigError("time_limit must be positive")


@dataclass(frozen=True)
class GatewaySettings:
    mode: str = "live"  # live | replay | record
    base_url: str = "https://api.openai.com/v1"
    credential_env: str = "PLOTGEN_API_KEY"
    cassette_dir: str = ""

    def __post_init__(self) -> None:
        if self.mode not in ("live", "replay", "record"):
            raise ConfigError("gateway mode must be live, replay, or record")
        if self.mode in ("replay", "record") and not self.cassette_dir:
            raise ConfigError(f"gateway mode {self.mode!r} needs a cassette_dir")


@dataclass(frozen=True)
class CliConfig:
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    gateway: GatewaySettings = field(default_factory=GatewaySettings)


# Scalar keys settable from any layer; (target, field, caster).
_SCALAR_KEYS: dict[str, tuple[str, str, Any]] = {
    "max_debug_iterations": ("pipeline", "max_debug_iterations", int),
    "max_feedback_iterations": ("pipeline", "max_feedback_iterations", int),
    "derender_mode": ("pipeline", "derender_mode", str),
    "time_limit": ("pipeline", "time_limit", float),
    "max_output_tokens": ("pipeline", "max_output_tokens", int),
    "numeric_trend_threshold": ("pipeline", "numeric_trend_threshold", float),
    "session_id": ("pipeline", "session_id", str),
}

_MODEL_KEYS = ("planner", "codegen", "feedback", "judge")
_GATEWAY_KEYS = ("mode", "base_url", "credential_env", "cassette_dir")

# Environment variables override everything else.
_ENV_KEYS: dict[str, str] = {
    "PLOTGEN_MAX_DEBUG_ITERATIONS": "max_debug_iterations",
    "PLOTGEN_MAX_FEEDBACK_ITERATIONS": "max_feedback_iterations",
    "PLOTGEN_DERENDER_MODE": "derender_mode",
    "PLOTGEN_TIME_LIMIT": "time_limit",
    "PLOTGEN_MAX_OUTPUT_TOKENS": "max_output_tokens",
    "PLOTGEN_NUMERIC_TREND_THRESHOLD": "numeric_trend_threshold",
    "PLOTGEN_BASE_URL": "gateway.base_url",
}


def _parse_agent_order(value: Any) -> tuple[AgentKind, ...]:
    if isinstance(value, str):
        value = [v.strip() for v in value.split(",")]
    if not isinstance(value, (list, tuple)):
        raise ConfigError("agent_order must be a list of agent names")
    try:
        return tuple(AgentKind(v) for v in value)
    except ValueError as exc:
        raise ConfigError(f"unknown agent kind in agent_order: {exc}") from exc


def _apply_layer(config: CliConfig, layer: Mapping[str, Any], origin: str) -> CliConfig:
    pipeline = config.pipeline
    gateway = config.gateway
    for key, value in layer.items():
        if value is None:
            continue
        if key in _SCALAR_KEYS:
            _, attr, caster = _SCALAR_KEYS[key]
            try:
                pipeline = replace(pipeline, **{attr: caster(value)})
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{origin}: bad value for {key!r}: {exc}") from exc
        elif key == "agent_order":
            pipeline = replace(pipeline, agent_order=_parse_agent_order(value))
        elif key == "runner_cmd":
            if not isinstance(value, (list, tuple)) or not all(isinstance(v, str) for v in value):
                raise ConfigError(f"{origin}: runner_cmd must be a list of strings")
            pipeline = replace(pipeline, runner_cmd=tuple(value))
        elif key == "models":
            if not isinstance(value, Mapping):
                raise ConfigError(f"{origin}: models must be a mapping")
            unknown = set(value) - set(_MODEL_KEYS)
            if unknown:
                raise ConfigError(f"{origin}: unknown model role(s) {sorted(unknown)}")
            pipeline = replace(
                pipeline, models=replace(pipeline.models, **{k: str(v) for k, v in value.items()})
            )
        elif key == "gateway":
            if not isinstance(value, Mapping):
                raise ConfigError(f"{origin}: gateway must be a mapping")
            unknown = set(value) - set(_GATEWAY_KEYS)
            if unknown:
                raise ConfigError(f"{origin}: unknown gateway key(s) {sorted(unknown)}")
            gateway = replace(gateway, **{k: str(v) for k, v in value.items()})
        elif key == "gateway.base_url":
            gateway = replace(gateway, base_url=str(value))
        else:
            raise ConfigError(f"{origin}: unknown config key {key!r}")
    return CliConfig(pipeline=pipeline, gateway=gateway)


def _env_layer(env: Mapping[str, str]) -> dict[str, Any]:
    return {target: env[var] for var, target in _ENV_KEYS.items() if var in env}


def resolve_config(
    config_path: str | Path | None = None,
    flag_overrides: Mapping[str, Any] | None = None,
    env: Mapping[str, str] | None = None,
) -> CliConfig:
    """Merge defaults <- config file <- flags <- environment."""
    env = os.environ if env is None else env
    config = CliConfig()

    if config_path is None and env.get(CONFIG_PATH_ENV):
        config_path = env[CONFIG_PATH_ENV]
    if config_path is not None:
        path = Path(config_path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            document = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(document, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        config = _apply_layer(config, document, str(path))

    if flag_overrides:
        config = _apply_layer(config, flag_overrides, "flags")

    config = _apply_layer(config, _env_layer(env), "environment")
    return config
