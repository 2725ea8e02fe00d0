"""Training-set construction and rank prediction around the meta-model.

For each rank group, features of n sampled data points are averaged and
paired with the group index as the regression target.  Predictions are
rounded half away from zero and clamped into the valid group range.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, SchemaMismatchError
from .features import FeatureVector, average_features
from .gbdt import GbdtParams, TreeEnsemble, fit
from .rng import substream


@dataclass(frozen=True)
class TrainingSetSpec:
    n: int
    repetitions_per_group: int
    seed: int

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if self.repetitions_per_group < 1:
            raise ConfigError("repetitions_per_group must be >= 1")


@dataclass(frozen=True)
class RankPrediction:
    raw: float
    group_index: int


def build_training_set(pool: dict, spec: TrainingSetSpec):
    """(X, y) from a per-group pool of feature vectors.

    Per group and repetition, n distinct data points are drawn (without
    replacement within the repetition, independently across repetitions)
    and their features averaged.  Row order and sampling are fully
    determined by the spec seed via per-(group, repetition) substreams.
    """
    groups = sorted(pool)
    if not groups:
        raise ConfigError("empty training pool")
    schema = None
    rows = []
    targets = []
    for g in groups:
        vectors = list(pool[g])
        if len(vectors) < spec.n:
            raise ConfigError(
                f"group {g} has {len(vectors)} data points, fewer than n={spec.n}"
            )
        if schema is None:
            schema = vectors[0].schema_id
        stacked = np.array([v.values for v in vectors], dtype=np.float64)
        if any(v.schema_id != schema for v in vectors):
            raise SchemaMismatchError("training pool mixes feature schemas")
        for rep in range(spec.repetitions_per_group):
            gen = substream(spec.seed, "trainset", g, rep)
            idx = gen.choice(len(vectors), size=spec.n, replace=False)
            rows.append(stacked[idx].mean(axis=0))
            targets.append(float(g))
    return np.array(rows), np.array(targets)


def train_meta_model(
    pool: dict,
    spec: TrainingSetSpec,
    params: GbdtParams,
    schema_id: str,
    r_groups: int,
) -> TreeEnsemble:
    X, y = build_training_set(pool, spec)
    return fit(
        X,
        y,
        params,
        schema_id=schema_id,
        meta={"trained_n": spec.n, "r_groups": r_groups},
    )


def round_half_away(x: float) -> float:
    return math.floor(x + 0.5) if x >= 0 else math.ceil(x - 0.5)


def estimate_rank(model: TreeEnsemble, vectors, r_groups: int | None = None) -> RankPrediction:
    """Predict a rank group from n sampled data points' feature vectors."""
    vectors = list(vectors)
    avg = average_features(vectors)
    if model.schema_id and avg.schema_id != model.schema_id:
        raise SchemaMismatchError("feature schema does not match the model")
    trained_n = model.meta.get("trained_n")
    if trained_n is not None and len(vectors) != trained_n:
        raise SchemaMismatchError(
            f"model was trained for n={trained_n}, got {len(vectors)} vectors"
        )
    if r_groups is None:
        r_groups = model.meta.get("r_groups")
    if r_groups is None:
        raise ConfigError("number of rank groups unknown")
    raw = model.predict(np.asarray(avg.values))
    group = int(min(max(round_half_away(raw), 0), r_groups - 1))
    return RankPrediction(raw=raw, group_index=group)


def estimate_rank_rows(model: TreeEnsemble, rows: np.ndarray, r_groups: int) -> np.ndarray:
    """Vectorized group prediction for pre-averaged feature rows."""
    raw = model.predict_many(rows)
    rounded = np.where(raw >= 0, np.floor(raw + 0.5), np.ceil(raw - 0.5))
    return np.clip(rounded, 0, r_groups - 1).astype(int)
