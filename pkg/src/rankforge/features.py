"""Per-data-point feature computation and the feature store.

A feature vector holds, in schema order: the arithmetic mean of per-move
strength scores, one geometric mean of move priors per policy level, and
the selected loss statistics.  Loss of a move is reported as deterioration
(value before minus value after, in the mover's perspective) so mistakes
are positive.  Chess values go through the logit transform first.

The ply cutoff for loss statistics is match-global: a move survives when
its original ply index in the match is <= the cutoff, counting both
players' plies.
"""

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .backends.base import WINRATE_EPS, BackendBank, logit
from .errors import ConfigError, DataError, SchemaMismatchError

LOSS_STATS = ("mean", "median", "std")
LOSS_SIGN = "deterioration"  # positive = mistake


@dataclass(frozen=True)
class LossSpec:
    stat: str
    n_cut: int | None  # None keeps all plies

    def __post_init__(self):
        if self.stat not in LOSS_STATS:
            raise ConfigError(f"unknown loss statistic {self.stat!r}")
        if self.n_cut is not None and self.n_cut < 1:
            raise ConfigError("n_cut must be positive")

    @property
    def feature_name(self) -> str:
        cut = "all" if self.n_cut is None else str(self.n_cut)
        return f"loss_{self.stat}_cut{cut}"


@dataclass(frozen=True)
class FeatureConfig:
    game: str
    policy_levels: tuple[str, ...] = ()
    loss_selected: tuple[LossSpec, ...] = ()
    include_strength: bool = True
    include_priors: bool = True
    include_loss: bool = True

    def __post_init__(self):
        families = (
            self.include_strength,
            self.include_priors and bool(self.policy_levels),
            self.include_loss and bool(self.loss_selected),
        )
        if not any(families):
            raise ConfigError("feature config enables no feature family")
        if self.include_priors and not self.policy_levels:
            raise ConfigError("priors enabled but no policy levels declared")
        if self.include_loss and not self.loss_selected:
            raise ConfigError("losses enabled but no loss statistics selected")

    def feature_names(self) -> list[str]:
        names = []
        if self.include_strength:
            names.append("mean_strength")
        if self.include_priors:
            names.extend(f"prior_gm_{level}" for level in self.policy_levels)
        if self.include_loss:
            names.extend(spec.feature_name for spec in self.loss_selected)
        return names

    @property
    def width(self) -> int:
        return len(self.feature_names())

    def schema_id(self) -> str:
        blob = json.dumps(
            {"game": self.game, "names": self.feature_names(), "loss_sign": LOSS_SIGN},
            sort_keys=True,
        )
        return hashlib.sha256(blob.encode()).hexdigest()[:12]

    def value_transform(self) -> str:
        return "logit" if self.game == "chess" else "identity"

    def to_dict(self) -> dict:
        return {
            "game": self.game,
            "policy_levels": list(self.policy_levels),
            "loss_selected": [[s.stat, s.n_cut] for s in self.loss_selected],
            "include_strength": self.include_strength,
            "include_priors": self.include_priors,
            "include_loss": self.include_loss,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureConfig":
        return cls(
            game=data["game"],
            policy_levels=tuple(data.get("policy_levels", ())),
            loss_selected=tuple(LossSpec(s, c) for s, c in data.get("loss_selected", ())),
            include_strength=data.get("include_strength", True),
            include_priors=data.get("include_priors", True),
            include_loss=data.get("include_loss", True),
        )


def go_default_config(policy_levels) -> FeatureConfig:
    """Strength + level priors + MeanLoss at cutoff 100 + MedLoss uncut."""
    return FeatureConfig(
        game="go",
        policy_levels=tuple(policy_levels),
        loss_selected=(LossSpec("mean", 100), LossSpec("median", None)),
    )


def chess_default_config(policy_levels) -> FeatureConfig:
    """Strength + level priors + MeanLoss and StdLoss at cutoff 50."""
    return FeatureConfig(
        game="chess",
        policy_levels=tuple(policy_levels),
        loss_selected=(LossSpec("mean", 50), LossSpec("std", 50)),
    )


@dataclass(frozen=True)
class FeatureVector:
    values: tuple[float, ...]
    schema_id: str


def mean_strength(betas) -> float:
    betas = np.asarray(betas, dtype=float)
    if betas.size == 0:
        raise DataError("mean_strength needs at least one score")
    return float(betas.mean())


def prior_geomean(priors) -> float:
    """exp(mean(log p)); priors must already be floored above zero."""
    priors = np.asarray(priors, dtype=float)
    if priors.size == 0:
        raise DataError("prior_geomean needs at least one prior")
    if (priors <= 0).any():
        raise AssertionError("prior below floor reached geometric mean")
    return float(np.exp(np.log(priors).mean()))


def move_losses(datapoint, value_backend, transform: str = "identity"):
    """Per-move deterioration for one data point.

    Returns (losses, clamp_count) where losses is a list of
    (ply_index, deterioration) and clamp_count is how many raw win rates
    needed clamping before the logit transform.
    """
    plies = [m[0] for m in datapoint.moves]
    states = [m[1] for m in datapoint.moves]
    moves = [m[2] for m in datapoint.moves]
    before = value_backend.evaluate_state_many(states)
    after = value_backend.evaluate_state_many(states, moves)
    clamps = 0
    if transform == "logit":
        clamps = int(
            ((before < WINRATE_EPS) | (before > 1 - WINRATE_EPS)).sum()
            + ((after < WINRATE_EPS) | (after > 1 - WINRATE_EPS)).sum()
        )
        before = np.array([logit(v) for v in before])
        after = np.array([logit(v) for v in after])
    elif transform != "identity":
        raise ConfigError(f"unknown value transform {transform!r}")
    # after is in the new mover's perspective; negate it back
    deterioration = before - (-after)
    return list(zip(plies, (float(d) for d in deterioration))), clamps


def loss_stats(losses, stat: str, n_cut: int | None) -> tuple[float, bool]:
    """One statistic over the losses at plies <= n_cut.

    Returns (value, empty) where empty flags that no move survived the
    cutoff and the configured sentinel 0.0 was used.
    """
    if stat not in LOSS_STATS:
        raise ConfigError(f"unknown loss statistic {stat!r}")
    kept = [loss for ply, loss in losses if n_cut is None or ply <= n_cut]
    if not kept:
        return 0.0, True
    arr = np.asarray(kept, dtype=float)
    if stat == "mean":
        return float(arr.mean()), False
    if stat == "median":
        return float(np.median(arr)), False
    return float(arr.std(ddof=0)), False


@dataclass
class DropReport:
    """Counts and names data points dropped or flagged during extraction."""

    reasons: dict = field(default_factory=dict)
    dropped: list = field(default_factory=list)
    flagged: list = field(default_factory=list)
    winrate_clamps: int = 0

    def drop(self, match_id: str, side: str, reason: str) -> None:
        self.reasons[reason] = self.reasons.get(reason, 0) + 1
        self.dropped.append({"match_id": match_id, "side": side, "reason": reason})

    def flag(self, match_id: str, side: str, reason: str) -> None:
        self.flagged.append({"match_id": match_id, "side": side, "reason": reason})

    def to_dict(self) -> dict:
        return {
            "reasons": dict(sorted(self.reasons.items())),
            "dropped": self.dropped,
            "flagged": self.flagged,
            "winrate_clamps": self.winrate_clamps,
        }


def extract_features(datapoint, bank: BackendBank, config: FeatureConfig) -> FeatureVector:
    """Schema-ordered feature vector for one data point."""
    report = DropReport()
    vector = _extract_one(datapoint, bank, config, report)
    return vector


def _extract_one(datapoint, bank, config, report) -> FeatureVector:
    if datapoint.k < 1:
        raise DataError("data point has no moves")
    states = [m[1] for m in datapoint.moves]
    moves = [m[2] for m in datapoint.moves]
    values = []
    if config.include_strength:
        betas = bank.strength.score_strength_many(states, moves)
        values.append(mean_strength(betas))
    if config.include_priors:
        for level in config.policy_levels:
            priors = bank.policy.policy_prior_many(states, moves, level)
            values.append(prior_geomean(priors))
    if config.include_loss:
        losses, clamps = move_losses(datapoint, bank.value, config.value_transform())
        report.winrate_clamps += clamps
        for spec in config.loss_selected:
            value, empty = loss_stats(losses, spec.stat, spec.n_cut)
            if empty:
                report.flag(datapoint.match_id, datapoint.side, f"empty_after_cut:{spec.feature_name}")
            values.append(value)
    if any(math.isnan(v) for v in values):
        raise DataError("NaN feature value")
    return FeatureVector(values=tuple(values), schema_id=config.schema_id())


@dataclass(frozen=True)
class StoredFeature:
    match_id: str
    player_id: str
    side: str
    group_index: int
    vector: FeatureVector


def extract_many(datapoints, bank: BackendBank, config: FeatureConfig):
    """Extract all data points; backend failures drop the data point and are
    counted in the report.  Output is sorted by (match_id, side) so it does
    not depend on input order."""
    from .errors import BackendError, BackendTimeoutError

    bank.require(
        need_strength=config.include_strength,
        need_policy=config.include_priors,
        need_value=config.include_loss,
    )
    report = DropReport()
    rows = []
    for dp in datapoints:
        try:
            vector = _extract_one(dp, bank, config, report)
        except BackendTimeoutError:
            report.drop(dp.match_id, dp.side, "backend_timeout")
            continue
        except BackendError as exc:
            report.drop(dp.match_id, dp.side, f"backend_error:{exc}")
            continue
        rows.append(
            StoredFeature(
                match_id=dp.match_id,
                player_id=dp.player_id,
                side=dp.side,
                group_index=dp.group.index,
                vector=vector,
            )
        )
    rows.sort(key=lambda r: (r.match_id, r.side))
    return rows, report


def average_features(vectors) -> FeatureVector:
    vectors = list(vectors)
    if not vectors:
        raise DataError("cannot average zero feature vectors")
    schema = vectors[0].schema_id
    if any(v.schema_id != schema for v in vectors):
        raise SchemaMismatchError("cannot average vectors with different schemas")
    stacked = np.array([v.values for v in vectors], dtype=float)
    return FeatureVector(values=tuple(float(x) for x in stacked.mean(axis=0)), schema_id=schema)


def write_feature_store(path, rows, config: FeatureConfig) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "schema_id": config.schema_id(),
        "names": config.feature_names(),
        "loss_sign": LOSS_SIGN,
        "config": config.to_dict(),
    }
    with path.open("w") as fh:
        fh.write(json.dumps({"schema": header}, sort_keys=True) + "\n")
        for row in rows:
            fh.write(
                json.dumps(
                    {
                        "match_id": row.match_id,
                        "player_id": row.player_id,
                        "side": row.side,
                        "group_index": row.group_index,
                        "schema_id": row.vector.schema_id,
                        "features": list(row.vector.values),
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def read_feature_store(path):
    path = Path(path)
    with path.open() as fh:
        first = fh.readline()
        if not first.strip():
            raise DataError(f"feature store {path} is empty")
        header = json.loads(first)["schema"]
        config = FeatureConfig.from_dict(header["config"])
        if config.schema_id() != header["schema_id"]:
            raise SchemaMismatchError("feature store header hash does not match its config")
        rows = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            if rec["schema_id"] != header["schema_id"]:
                raise SchemaMismatchError("feature store row with foreign schema id")
            rows.append(
                StoredFeature(
                    match_id=rec["match_id"],
                    player_id=rec["player_id"],
                    side=rec["side"],
                    group_index=int(rec["group_index"]),
                    vector=FeatureVector(tuple(rec["features"]), rec["schema_id"]),
                )
            )
    return config, rows
