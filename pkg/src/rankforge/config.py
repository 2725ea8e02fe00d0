"""Run configuration: a small TOML-subset reader and typed assembly.

The reader covers what run configs need: [section] headers, `key = value`
pairs with strings, integers, floats (inf included), booleans, and
(nested) single- or multi-line arrays.  Flags override file values at the
CLI layer.  The stdlib gains tomllib only on 3.11, so this stays
self-contained.
"""

import datetime
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .features import FeatureConfig, LossSpec
from .gbdt import GbdtParams
from .synthlab import SynthConfig, SynthLevel


def _parse_scalar(text: str, where: str):
    text = text.strip()
    if not text:
        raise ConfigError(f"{where}: empty value")
    if text.startswith('"'):
        if not text.endswith('"') or len(text) < 2:
            raise ConfigError(f"{where}: unterminated string")
        body = text[1:-1]
        return body.replace('\\"', '"').replace("\\\\", "\\")
    if text in ("true", "false"):
        return text == "true"
    if text in ("inf", "+inf"):
        return float("inf")
    if text == "-inf":
        return float("-inf")
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{where}: unreadable value {text!r}") from None


def _split_items(text: str, where: str):
    items, depth, start, in_str = [], 0, 0, False
    i = 0
    while i < len(text):
        ch = text[i]
        if in_str:
            if ch == "\\":
                i += 1
            elif ch == '"':
                in_str = False
        elif ch == '"':
            in_str = True
        elif ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
            if depth < 0:
                raise ConfigError(f"{where}: unbalanced brackets")
        elif ch == "," and depth == 0:
            items.append(text[start:i])
            start = i + 1
        i += 1
    tail = text[start:].strip()
    if tail:
        items.append(tail)
    return items


def _parse_value(text: str, where: str):
    text = text.strip()
    if text.startswith("["):
        if not text.endswith("]"):
            raise ConfigError(f"{where}: unterminated array")
        return [
            _parse_value(item, where) for item in _split_items(text[1:-1], where)
        ]
    return _parse_scalar(text, where)


def _strip_comment(line: str) -> str:
    out, in_str = [], False
    i = 0
    while i < len(line):
        ch = line[i]
        if in_str:
            if ch == "\\":
                out.append(ch)
                i += 1
                if i < len(line):
                    out.append(line[i])
                i += 1
                continue
            if ch == '"':
                in_str = False
        elif ch == '"':
            in_str = True
        elif ch == "#":
            break
        out.append(ch)
        i += 1
    return "".join(out)


def read_config_text(text: str) -> dict:
    root: dict = {}
    section = root
    pending = None  # (key, buffer, where) while an array spans lines
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        where = f"line {lineno}"
        if pending is not None:
            key, buffer, key_where = pending
            buffer += " " + line
            if buffer.count("[") == buffer.count("]"):
                section[key] = _parse_value(buffer, key_where)
                pending = None
            else:
                pending = (key, buffer, key_where)
            continue
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"{where}: malformed section header")
            name = line[1:-1].strip()
            if not name:
                raise ConfigError(f"{where}: empty section name")
            section = root
            for part in name.split("."):
                section = section.setdefault(part, {})
                if not isinstance(section, dict):
                    raise ConfigError(f"{where}: section {name!r} collides with a key")
            continue
        if "=" not in line:
            raise ConfigError(f"{where}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip().strip('"')
        value = value.strip()
        if value.startswith("[") and value.count("[") != value.count("]"):
            pending = (key, value, where)
            continue
        section[key] = _parse_value(value, where)
    if pending is not None:
        raise ConfigError(f"unterminated array for key {pending[0]!r}")
    return root


def read_config_file(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    return read_config_text(path.read_text())


def config_hash(data: dict) -> str:
    return hashlib.sha256(json.dumps(data, sort_keys=True).encode()).hexdigest()[:12]


# ---------------------------------------------------------------------------
# Typed assembly


def synth_config_from(data: dict, seed: int) -> SynthConfig:
    levels = []
    for entry in data.get("levels", []):
        if not isinstance(entry, list) or len(entry) < 2:
            raise ConfigError("synth.levels entries must be [label, skill, ...]")
        label, skill = str(entry[0]), float(entry[1])
        extra = entry[2:]
        kwargs = {}
        if len(extra) >= 1 and extra[0] is not None and extra[0] != "":
            kwargs["q_lo"] = float(extra[0])
        if len(extra) >= 2 and extra[1] is not None and extra[1] != "":
            kwargs["q_hi"] = float(extra[1])
        if len(extra) >= 3 and extra[2] is not None and extra[2] != "":
            kwargs["q_center"] = float(extra[2])
        levels.append(SynthLevel(label, skill, **kwargs))
    cfg = SynthConfig(
        groups=int(data["groups"]),
        moves_per_state=int(data["moves_per_state"]),
        plies_per_match=int(data["plies_per_match"]),
        temperature_base=float(data["temperature_base"]),
        temperature_decay=float(data["temperature_decay"]),
        levels=tuple(levels),
        player_offset_sd=float(data.get("player_offset_sd", 0.0)),
        strength_noise_sd=float(data.get("strength_noise_sd", 0.0)),
        seed=int(data.get("seed", seed)),
    )
    cfg.validate()
    return cfg


def feature_config_from(data: dict) -> FeatureConfig:
    loss = []
    for entry in data.get("loss_selected", []):
        if not isinstance(entry, list) or len(entry) != 2:
            raise ConfigError("features.loss_selected entries must be [stat, n_cut]")
        stat, cut = entry
        n_cut = None if cut in ("all", "inf", None) else int(cut)
        loss.append(LossSpec(str(stat), n_cut))
    return FeatureConfig(
        game=str(data.get("game", "synthetic")),
        policy_levels=tuple(str(x) for x in data.get("policy_levels", ())),
        loss_selected=tuple(loss),
        include_strength=bool(data.get("include_strength", True)),
        include_priors=bool(data.get("include_priors", True)),
        include_loss=bool(data.get("include_loss", True)),
    )


def gbdt_params_from(data: dict) -> GbdtParams:
    return GbdtParams(
        num_trees=int(data.get("num_trees", 100)),
        learning_rate=float(data.get("learning_rate", 0.1)),
        max_leaves=int(data.get("max_leaves", 31)),
        min_samples_leaf=int(data.get("min_samples_leaf", 20)),
        min_gain=float(data.get("min_gain", 0.0)),
        feature_fraction=float(data.get("feature_fraction", 1.0)),
        seed=int(data.get("seed", 0)),
    )


def date_window_from(value) -> tuple[datetime.date, datetime.date] | None:
    if not value:
        return None
    if not (isinstance(value, list) and len(value) == 2):
        raise ConfigError("date_window must be [start, end]")
    start = datetime.date.fromisoformat(str(value[0]))
    end = datetime.date.fromisoformat(str(value[1]))
    if end < start:
        raise ConfigError("date_window end precedes start")
    return (start, end)


@dataclass
class RunConfig:
    raw: dict
    seed: int
    synth: SynthConfig | None
    features: FeatureConfig
    train_ns: list
    train_repetitions: int
    gbdt: GbdtParams
    eval_mode: str
    eval_repetitions: int
    ablation_ns: list = field(default_factory=list)
    ablation_levels: bool = False
    train_matches_per_group: int = 200
    test_matches_per_group: int = 100

    def hash(self) -> str:
        return config_hash(self.raw)


def run_config_from(data: dict) -> RunConfig:
    seed = int(data.get("seed", 0))
    synth = synth_config_from(data["synth"], seed) if "synth" in data else None
    if "features" not in data:
        raise ConfigError("config needs a [features] section")
    features = feature_config_from(data["features"])
    training = data.get("training", {})
    evaluation = data.get("eval", {})
    ablation = data.get("ablation", {})
    return RunConfig(
        raw=data,
        seed=seed,
        synth=synth,
        features=features,
        train_ns=[int(n) for n in training.get("ns", [1, 5, 10, 15, 20])],
        train_repetitions=int(training.get("repetitions_per_group", 1000)),
        gbdt=gbdt_params_from(data.get("gbdt", {})),
        eval_mode=str(evaluation.get("mode", "random")),
        eval_repetitions=int(evaluation.get("repetitions", 500)),
        ablation_ns=[int(n) for n in ablation.get("ns", [])],
        ablation_levels=bool(ablation.get("levels", False)),
        train_matches_per_group=int(data.get("synth", {}).get("train_matches_per_group", 200)),
        test_matches_per_group=int(data.get("synth", {}).get("test_matches_per_group", 100)),
    )
