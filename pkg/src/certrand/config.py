"""Scenario configuration files: ``key = value`` lines, ``#`` comments.

Recognised keys are the fields of :class:`ScenarioConfig`; protocol keys
(``rounds``, ``n_qubits``, ``xeb_threshold`` ...) are the fields of
:class:`~certrand.protocol.ProtocolConfig`. ``none`` clears an optional
value. Unknown keys are an error.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import ConfigError
from .protocol import ProtocolConfig
from .vdf import DEFAULT_PRIME, VdfParams

OUT_ENV = "CERTRAND_OUT"

PROVER_KINDS = ("honest", "uniform", "replay", "colluding", "slow")
CHANNEL_MODES = ("inprocess", "stream")


@dataclass
class ScenarioConfig:
    scenario: str = "honest-session"
    run_seed: int = 0
    out_dir: str | None = None
    runs: int = 1
    # prover
    prover: str = "honest"
    epsilon: float = 0.0
    delay_ns: int = 0
    # channel
    mode: str = "inprocess"
    address: str = "127.0.0.1:7700"
    latency_ns: int = 0
    jitter_ns: int = 0
    timeout_ns: int | None = None
    # beacon / joint
    verifiers: int = 3
    pulses: int = 3
    vdf_t: int = 1024
    vdf_prime: int = DEFAULT_PRIME
    # apps
    bids: int = 10
    winners: int = 3
    dp_epsilon: float = 1.0
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)

    def validate(self) -> None:
        if self.prover not in PROVER_KINDS:
            raise ConfigError(f"prover must be one of {PROVER_KINDS}")
        if self.mode not in CHANNEL_MODES:
            raise ConfigError(f"mode must be one of {CHANNEL_MODES}")
        if self.runs < 1 or self.pulses < 1 or self.verifiers < 1:
            raise ConfigError("runs, pulses and verifiers must be >= 1")
        if not 0 <= self.epsilon <= 1:
            raise ConfigError("epsilon must lie in [0, 1]")
        if min(self.latency_ns, self.jitter_ns, self.delay_ns) < 0:
            raise ConfigError("latencies and delays must be non-negative")
        if self.winners < 0 or self.bids < 0 or self.dp_epsilon <= 0:
            raise ConfigError("invalid lottery or DP settings")
        try:
            self.vdf_params()
        except ValueError as exc:
            raise ConfigError(f"vdf: {exc}") from exc

    def vdf_params(self) -> VdfParams:
        return VdfParams(self.vdf_prime, self.vdf_t)

    def output_dir(self, override: str | None = None) -> Path:
        chosen = override or os.environ.get(OUT_ENV) or self.out_dir or os.path.join("certrand-out", self.scenario)
        return Path(chosen)


_SCENARIO_FIELDS = {f.name: f for f in fields(ScenarioConfig) if f.name != "protocol"}
_PROTOCOL_FIELDS = {f.name: f for f in fields(ProtocolConfig)}


def _coerce(name: str, annotation, raw: str):
    text = raw.strip()
    ann = str(annotation)
    if text.lower() == "none":
        if "None" in ann:
            return None
        raise ConfigError(f"{name} cannot be none")
    try:
        if ann.startswith("int"):
            return int(float(text)) if "e" in text.lower() else int(text, 0)
        if ann.startswith("float"):
            return float(eval_power(text))
        if ann.startswith("str"):
            return text
    except ValueError as exc:
        raise ConfigError(f"{name}: cannot parse {raw!r}") from exc
    raise ConfigError(f"{name}: unsupported type {ann}")


def eval_power(text: str) -> float:
    """Parse a float, also accepting ``2^-32`` style powers of two."""
    if "^" in text:
        base, _, exp = text.partition("^")
        return float(base) ** float(exp)
    return float(text)


def parse_pairs(pairs: dict[str, str], base: ScenarioConfig | None = None) -> ScenarioConfig:
    cfg = base or ScenarioConfig()
    proto: dict[str, object] = {}
    for key, raw in pairs.items():
        key = key.strip().replace("-", "_")
        if key in _SCENARIO_FIELDS:
            setattr(cfg, key, _coerce(key, _SCENARIO_FIELDS[key].type, raw))
        elif key in _PROTOCOL_FIELDS:
            proto[key] = _coerce(key, _PROTOCOL_FIELDS[key].type, raw)
        else:
            raise ConfigError(f"unknown config key {key!r}")
    if proto:
        current = {f: getattr(cfg.protocol, f) for f in _PROTOCOL_FIELDS}
        current.update(proto)
        try:
            cfg.protocol = ProtocolConfig(**current)
        except ValueError as exc:
            raise ConfigError(f"protocol: {exc}") from exc
    cfg.validate()
    return cfg


def parse_text(text: str) -> dict[str, str]:
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        pairs[key.strip()] = value.strip()
    return pairs


def load_config(path: str | Path | None, overrides: dict[str, str] | None = None, scenario: str | None = None) -> ScenarioConfig:
    pairs: dict[str, str] = {}
    if path is not None:
        try:
            pairs.update(parse_text(Path(path).read_text()))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if scenario is not None:
        pairs["scenario"] = scenario
    pairs.update(overrides or {})
    return parse_pairs(pairs)


def render_config(cfg: ScenarioConfig) -> str:
    lines = [f"{name} = {getattr(cfg, name)}" for name in _SCENARIO_FIELDS]
    lines += [f"{name} = {getattr(cfg.protocol, name)}" for name in _PROTOCOL_FIELDS]
    return "\n".join(lines) + "\n"
