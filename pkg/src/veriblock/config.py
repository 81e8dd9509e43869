"""INI configuration with one section per module and environment overrides.

Any key can be overridden with ``VERIBLOCK_<SECTION>_<KEY>``, e.g.
``VERIBLOCK_TRUST_THRESHOLD=0.6``. Unknown sections or keys are errors.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping, Optional

from .contracts import DEFAULT_REFUND_TIMEOUT, DedupParams, Network
from .errors import ConfigError
from .evidence import VerificationParams
from .ledger import DEFAULT_BLOCK_CAPACITY, DEFAULT_BLOCK_INTERVAL, Ledger
from .sim import DEFAULT_P_PASS, DEFAULT_SEED, DEFAULT_STEP, DEFAULT_TOTAL, check_step
from .trust import ALGORITHM_IDS, DEFAULT_THRESHOLD, DEFAULT_WEIGHTS, check_weights

ENV_PREFIX = "VERIBLOCK_"


def _optional_int(text: str) -> Optional[int]:
    return None if text.strip().lower() in ("none", "off", "") else int(text)


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in text.split(",") if part.strip())


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(",") if part.strip())


def _str_list(text: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in text.split(",") if part.strip())


# section -> key -> (parser, default text)
SCHEMA: dict[str, dict[str, tuple[Callable[[str], Any], str]]] = {
    "ledger": {
        "block_interval_s": (_optional_int, str(DEFAULT_BLOCK_INTERVAL)),
        "block_capacity": (int, str(DEFAULT_BLOCK_CAPACITY)),
    },
    "verification": {
        "radius_m": (float, "200"),
        "time_window_s": (float, "900"),
        "heading_tol_deg": (float, "45"),
    },
    "dedup": {
        "radius_m": (float, "200"),
        "time_window_s": (float, "900"),
    },
    "escrow": {
        "refund_timeout_s": (int, str(DEFAULT_REFUND_TIMEOUT)),
    },
    "trust": {
        "threshold": (float, str(DEFAULT_THRESHOLD)),
        "w_filtered": (float, str(DEFAULT_WEIGHTS[0])),
        "w_unfiltered": (float, str(DEFAULT_WEIGHTS[1])),
        "algorithms": (_str_list, ", ".join(ALGORITHM_IDS)),
    },
    "experiment": {
        "p_good": (_float_list, "0.5, 0.6, 0.7, 0.8"),
        "total": (int, str(DEFAULT_TOTAL)),
        "step": (int, str(DEFAULT_STEP)),
        "seeds": (_int_list, str(DEFAULT_SEED)),
        "p_pass_filter": (float, str(DEFAULT_P_PASS)),
    },
}


@dataclass(frozen=True)
class Config:
    block_interval_s: Optional[int] = DEFAULT_BLOCK_INTERVAL
    block_capacity: int = DEFAULT_BLOCK_CAPACITY
    verification: VerificationParams = VerificationParams()
    dedup: DedupParams = DedupParams()
    refund_timeout_s: int = DEFAULT_REFUND_TIMEOUT
    threshold: float = DEFAULT_THRESHOLD
    weights: tuple[float, float] = DEFAULT_WEIGHTS
    algorithms: tuple[str, ...] = ALGORITHM_IDS
    p_good: tuple[float, ...] = (0.5, 0.6, 0.7, 0.8)
    total: int = DEFAULT_TOTAL
    step: int = DEFAULT_STEP
    seeds: tuple[int, ...] = (DEFAULT_SEED,)
    p_pass_filter: float = DEFAULT_P_PASS
    source: Optional[str] = field(default=None, compare=False)

    def make_ledger(self) -> Ledger:
        return Ledger(self.block_capacity, self.block_interval_s)

    def make_network(self) -> Network:
        return Network(self.make_ledger(), self.dedup, self.refund_timeout_s)


def _validate(values: Mapping[str, Mapping[str, Any]], source: Optional[str]) -> Config:
    ledger, ver, dedup = values["ledger"], values["verification"], values["dedup"]
    trust, exp = values["trust"], values["experiment"]
    try:
        if ledger["block_capacity"] < 1:
            raise ValueError("ledger.block_capacity must be >= 1")
        if ledger["block_interval_s"] is not None and ledger["block_interval_s"] <= 0:
            raise ValueError("ledger.block_interval_s must be positive or 'none'")
        params = VerificationParams(ver["radius_m"], ver["time_window_s"], ver["heading_tol_deg"])
        dedup_params = DedupParams(dedup["radius_m"], dedup["time_window_s"])
        if values["escrow"]["refund_timeout_s"] < 0:
            raise ValueError("escrow.refund_timeout_s must be non-negative")
        if not 0.0 <= trust["threshold"] <= 1.0:
            raise ValueError("trust.threshold must be in [0, 1]")
        check_weights(trust["w_filtered"], trust["w_unfiltered"])
        if not trust["algorithms"]:
            raise ValueError("trust.algorithms is empty")
        for algorithm_id in trust["algorithms"]:
            if algorithm_id not in ALGORITHM_IDS:
                raise ValueError(f"trust.algorithms: unknown algorithm {algorithm_id!r}")
        if not exp["p_good"]:
            raise ValueError("experiment.p_good is empty")
        for p in exp["p_good"]:
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"experiment.p_good value {p} outside [0, 1]")
        if not exp["seeds"]:
            raise ValueError("experiment.seeds is empty")
        check_step(exp["total"], exp["step"])
        if not 0.0 <= exp["p_pass_filter"] <= 1.0:
            raise ValueError("experiment.p_pass_filter must be in [0, 1]")
    except (ValueError, ConfigError) as exc:
        raise ConfigError(str(exc)) from exc
    return Config(
        block_interval_s=ledger["block_interval_s"],
        block_capacity=ledger["block_capacity"],
        verification=params,
        dedup=dedup_params,
        refund_timeout_s=values["escrow"]["refund_timeout_s"],
        threshold=trust["threshold"],
        weights=(trust["w_filtered"], trust["w_unfiltered"]),
        algorithms=tuple(trust["algorithms"]),
        p_good=tuple(exp["p_good"]),
        total=exp["total"],
        step=exp["step"],
        seeds=tuple(exp["seeds"]),
        p_pass_filter=exp["p_pass_filter"],
        source=source,
    )


def _env_overrides(environ: Mapping[str, str]) -> dict[tuple[str, str], str]:
    overrides = {}
    for name, value in environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX) :].lower()
        for section, keys in SCHEMA.items():
            if rest.startswith(section + "_") and rest[len(section) + 1 :] in keys:
                overrides[(section, rest[len(section) + 1 :])] = value
                break
        else:
            raise ConfigError(f"unknown configuration override {name}")
    return overrides


def parse_config(
    text: str = "", source: Optional[str] = None, environ: Optional[Mapping[str, str]] = None
) -> Config:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source or "<config>")
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    raw: dict[str, dict[str, str]] = {s: {k: d for k, (_, d) in keys.items()} for s, keys in SCHEMA.items()}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, value in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}")
            raw[section][key] = value
    for (section, key), value in _env_overrides(os.environ if environ is None else environ).items():
        raw[section][key] = value
    values: dict[str, dict[str, Any]] = {}
    for section, keys in SCHEMA.items():
        values[section] = {}
        for key, (convert, _) in keys.items():
            try:
                values[section][key] = convert(raw[section][key])
            except ValueError as exc:
                raise ConfigError(f"bad value for {section}.{key}: {raw[section][key]!r}") from exc
    return _validate(values, source)


def load_config(path: Optional[str | Path] = None, environ: Optional[Mapping[str, str]] = None) -> Config:
    """Read ``path`` (defaults only when None). OSError propagates to the caller."""
    text = "" if path is None else Path(path).read_text()
    return parse_config(text, None if path is None else str(path), environ)


def default_config_text() -> str:
    lines = []
    for section, keys in SCHEMA.items():
        lines.append(f"[{section}]")
        lines.extend(f"{key} = {default}" for key, (_, default) in keys.items())
        lines.append("")
    return "\n".join(lines)
