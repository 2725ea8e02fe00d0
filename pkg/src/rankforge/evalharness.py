"""Evaluation protocols, metrics, ablations, and plot-data tables.

Random-sampling mode draws n data points from a whole rank group per
repetition; player-specific mode draws n from one player's own pool.
Both tally exact-group accuracy, within-one-group accuracy, and a
confusion matrix with rows = actual group, columns = predicted group.
"""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .estimator import estimate_rank_rows
from .features import FeatureConfig, FeatureVector, StoredFeature
from .rng import substream

RANDOM_MODE = "random"
PLAYER_MODE = "player"


@dataclass(frozen=True)
class EvalProtocol:
    mode: str
    n: int
    repetitions: int  # random: per group; player-specific: per player
    seed: int

    def __post_init__(self):
        if self.mode not in (RANDOM_MODE, PLAYER_MODE):
            raise ConfigError(f"unknown evaluation mode {self.mode!r}")
        if self.n < 1 or self.repetitions < 1:
            raise ConfigError("n and repetitions must be >= 1")


@dataclass
class EvaluationReport:
    accuracy: float
    accuracy_pm1: float
    confusion: np.ndarray
    per_group_accuracy: list
    total_predictions: int
    drops: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "accuracy_pm1": self.accuracy_pm1,
            "per_group_accuracy": self.per_group_accuracy,
            "total_predictions": self.total_predictions,
            "confusion": self.confusion.tolist(),
            "drops": self.drops,
            "config": self.config,
        }


def accuracy_metrics(pairs, r_groups: int):
    """(accuracy, accuracy within one group, confusion matrix) from
    (actual, predicted) index pairs."""
    confusion = np.zeros((r_groups, r_groups), dtype=np.int64)
    for actual, predicted in pairs:
        if not (0 <= actual < r_groups and 0 <= predicted < r_groups):
            raise ConfigError("group index outside [0, R)")
        confusion[actual, predicted] += 1
    total = int(confusion.sum())
    if total == 0:
        raise ConfigError("no predictions to score")
    hits = int(np.trace(confusion))
    near = hits
    for offset in (1, -1):
        near += int(np.trace(confusion, offset=offset))
    return hits / total, near / total, confusion


def _report_from_confusion(confusion, protocol, extra_config=None) -> EvaluationReport:
    total = int(confusion.sum())
    hits = int(np.trace(confusion))
    near = hits + int(np.trace(confusion, offset=1)) + int(np.trace(confusion, offset=-1))
    row_totals = confusion.sum(axis=1)
    per_group = [
        float(confusion[j, j] / row_totals[j]) if row_totals[j] else 0.0
        for j in range(confusion.shape[0])
    ]
    config = {"mode": protocol.mode, "n": protocol.n,
              "repetitions": protocol.repetitions, "seed": protocol.seed}
    config.update(extra_config or {})
    return EvaluationReport(
        accuracy=hits / total,
        accuracy_pm1=near / total,
        confusion=confusion,
        per_group_accuracy=per_group,
        total_predictions=total,
        config=config,
    )


def _as_matrix(vectors, schema_id) -> np.ndarray:
    if any(v.schema_id != schema_id for v in vectors):
        raise ConfigError("evaluation pool mixes feature schemas")
    return np.array([v.values for v in vectors], dtype=np.float64)


def run_random_sampling(testpool: dict, model, protocol: EvalProtocol) -> EvaluationReport:
    """Per group, `repetitions` draws of n data points without replacement;
    every draw yields one prediction."""
    if protocol.mode != RANDOM_MODE:
        raise ConfigError("protocol mode must be 'random'")
    r_groups = model.meta.get("r_groups") or (max(testpool) + 1)
    confusion = np.zeros((r_groups, r_groups), dtype=np.int64)
    schema = model.schema_id
    for g in sorted(testpool):
        vectors = list(testpool[g])
        if len(vectors) < protocol.n:
            raise ConfigError(f"group {g} pool smaller than n={protocol.n}")
        stacked = _as_matrix(vectors, schema or vectors[0].schema_id)
        rows = np.empty((protocol.repetitions, stacked.shape[1]))
        for rep in range(protocol.repetitions):
            gen = substream(protocol.seed, "eval-random", g, rep)
            idx = gen.choice(len(vectors), size=protocol.n, replace=False)
            rows[rep] = stacked[idx].mean(axis=0)
        predicted = estimate_rank_rows(model, rows, r_groups)
        for p in predicted:
            confusion[g, p] += 1
    return _report_from_confusion(confusion, protocol)


def run_player_specific(testpool_by_player: dict, model, protocol: EvalProtocol) -> EvaluationReport:
    """Per player, `repetitions` draws of n of that player's data points."""
    if protocol.mode != PLAYER_MODE:
        raise ConfigError("protocol mode must be 'player'")
    r_groups = model.meta.get("r_groups") or (max(testpool_by_player) + 1)
    confusion = np.zeros((r_groups, r_groups), dtype=np.int64)
    schema = model.schema_id
    excluded = []
    for g in sorted(testpool_by_player):
        for player_id in sorted(testpool_by_player[g]):
            vectors = list(testpool_by_player[g][player_id])
            if len(vectors) < protocol.n:
                excluded.append({"player_id": player_id, "group": g,
                                 "reason": "fewer_datapoints_than_n"})
                continue
            stacked = _as_matrix(vectors, schema or vectors[0].schema_id)
            rows = np.empty((protocol.repetitions, stacked.shape[1]))
            for rep in range(protocol.repetitions):
                gen = substream(protocol.seed, "eval-player", g, player_id, rep)
                idx = gen.choice(len(vectors), size=protocol.n, replace=False)
                rows[rep] = stacked[idx].mean(axis=0)
            predicted = estimate_rank_rows(model, rows, r_groups)
            for p in predicted:
                confusion[g, p] += 1
    report = _report_from_confusion(confusion, protocol)
    if excluded:
        report.drops["excluded_players"] = excluded
    return report


def flatten_player_pool(testpool_by_player: dict) -> dict:
    """Merge per-player pools into per-group pools (both protocols can then
    run on the same testing data)."""
    return {
        g: [v for player in sorted(players) for v in players[player]]
        for g, players in testpool_by_player.items()
    }


# ---------------------------------------------------------------------------
# Ablations


def project_vectors(vectors, full_config: FeatureConfig, mask_config: FeatureConfig):
    """Select the mask's feature columns out of full-schema vectors."""
    full_names = full_config.feature_names()
    positions = []
    for name in mask_config.feature_names():
        if name not in full_names:
            raise ConfigError(
                f"ablation mask needs feature {name!r} absent from the extracted store"
            )
        positions.append(full_names.index(name))
    schema = mask_config.schema_id()
    return [
        FeatureVector(tuple(v.values[p] for p in positions), schema) for v in vectors
    ]


def project_pool(pool: dict, full_config, mask_config) -> dict:
    return {g: project_vectors(vs, full_config, mask_config) for g, vs in pool.items()}


@dataclass
class AblationContext:
    full_config: FeatureConfig
    train_pool: dict
    test_pool: dict
    gbdt_params: object
    train_repetitions: int
    train_seed: int
    protocol_template: EvalProtocol
    r_groups: int


def run_ablation(masks, ns, ctx: AblationContext) -> dict:
    """Retrain and re-evaluate the meta-model per mask and n.

    Returns {(mask_name, n): EvaluationReport}.
    """
    from .estimator import TrainingSetSpec, train_meta_model

    results = {}
    for name, mask in masks:
        train = project_pool(ctx.train_pool, ctx.full_config, mask)
        test = project_pool(ctx.test_pool, ctx.full_config, mask)
        for n in ns:
            spec = TrainingSetSpec(n=n, repetitions_per_group=ctx.train_repetitions,
                                   seed=ctx.train_seed)
            model = train_meta_model(train, spec, ctx.gbdt_params,
                                     mask.schema_id(), ctx.r_groups)
            protocol = EvalProtocol(mode=RANDOM_MODE, n=n,
                                    repetitions=ctx.protocol_template.repetitions,
                                    seed=ctx.protocol_template.seed)
            report = run_random_sampling(test, model, protocol)
            report.config["mask"] = name
            results[(name, n)] = report
    return results


def family_masks(full_config: FeatureConfig):
    """The standard ablation masks: all features, then one family removed."""
    masks = [("use_all", full_config)]
    if full_config.include_strength:
        masks.append(
            ("wo_strength", FeatureConfig(
                game=full_config.game,
                policy_levels=full_config.policy_levels,
                loss_selected=full_config.loss_selected,
                include_strength=False,
                include_priors=full_config.include_priors,
                include_loss=full_config.include_loss,
            ))
        )
    if full_config.include_priors:
        masks.append(
            ("wo_prior", FeatureConfig(
                game=full_config.game,
                policy_levels=full_config.policy_levels,
                loss_selected=full_config.loss_selected,
                include_strength=full_config.include_strength,
                include_priors=False,
                include_loss=full_config.include_loss,
            ))
        )
    if full_config.include_loss:
        masks.append(
            ("wo_loss", FeatureConfig(
                game=full_config.game,
                policy_levels=full_config.policy_levels,
                loss_selected=full_config.loss_selected,
                include_strength=full_config.include_strength,
                include_priors=full_config.include_priors,
                include_loss=False,
            ))
        )
    return masks


def single_level_masks(full_config: FeatureConfig):
    """Priors-only masks: each level alone, then all levels combined."""
    base = dict(game=full_config.game, loss_selected=full_config.loss_selected,
                include_strength=False, include_loss=False, include_priors=True)
    masks = [
        (f"level_{level}_only", FeatureConfig(policy_levels=(level,), **base))
        for level in full_config.policy_levels
    ]
    masks.append(("levels_combined",
                  FeatureConfig(policy_levels=full_config.policy_levels, **base)))
    return masks


def write_ablation_csv(results: dict, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mask_names = []
    ns = []
    for name, n in results:
        if name not in mask_names:
            mask_names.append(name)
        if n not in ns:
            ns.append(n)
    ns.sort()
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["n"]
        for name in mask_names:
            header += [f"{name}_accuracy", f"{name}_accuracy_pm1"]
        writer.writerow(header)
        for n in ns:
            row = [n]
            for name in mask_names:
                report = results[(name, n)]
                row += [f"{report.accuracy:.4f}", f"{report.accuracy_pm1:.4f}"]
            writer.writerow(row)


def write_per_group_csv(results: dict, n: int, path) -> None:
    """Appendix-style table: per-group accuracy per mask at one n."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [(name, report) for (name, rn), report in results.items() if rn == n]
    if not rows:
        raise ConfigError(f"no ablation results at n={n}")
    r_groups = rows[0][1].confusion.shape[0]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["mask"] + [f"g{j}" for j in range(r_groups)] + ["overall"])
        for name, report in rows:
            writer.writerow(
                [name]
                + [f"{acc:.4f}" for acc in report.per_group_accuracy]
                + [f"{report.accuracy:.4f}"]
            )


# ---------------------------------------------------------------------------
# Plot-data tables


def prior_curve_rows(rows, config: FeatureConfig):
    """Fig-2-style table: per (group, level), the mean per-data-point prior
    geometric mean with a 95% normal-approximation interval computed on the
    log scale and exponentiated back."""
    if not config.include_priors:
        raise ConfigError("feature config has no prior columns")
    names = config.feature_names()
    out = []
    by_group: dict[int, list[StoredFeature]] = {}
    for row in rows:
        by_group.setdefault(row.group_index, []).append(row)
    for g in sorted(by_group):
        stacked = np.array([r.vector.values for r in by_group[g]], dtype=np.float64)
        for level in config.policy_levels:
            col = names.index(f"prior_gm_{level}")
            logs = np.log(stacked[:, col])
            mean_log = logs.mean()
            sem = logs.std(ddof=0) / np.sqrt(len(logs)) if len(logs) > 1 else 0.0
            out.append({
                "group": g,
                "level": level,
                "gm_mean": float(np.exp(mean_log)),
                "ci_low": float(np.exp(mean_log - 1.96 * sem)),
                "ci_high": float(np.exp(mean_log + 1.96 * sem)),
                "count": len(logs),
            })
    return out


def loss_by_ply_rows(traces):
    """Fig-3-style table from (ply, loss) pairs across many data points."""
    by_ply: dict[int, list[float]] = {}
    for ply, loss in traces:
        by_ply.setdefault(int(ply), []).append(float(loss))
    out = []
    for ply in sorted(by_ply):
        arr = np.asarray(by_ply[ply])
        out.append({
            "ply": ply,
            "mean_loss": float(arr.mean()),
            "std_loss": float(arr.std(ddof=0)),
            "count": len(arr),
        })
    return out


def boxplot_rows(rows, config: FeatureConfig, column: str, mode: str = "player",
                 sample_size: int = 20, samples: int = 100, seed: int = 0):
    """Per-group distributions of a feature column.

    mode "player": one value per player (mean over that player's data
    points).  mode "random": `samples` values per group, each the mean of
    `sample_size` randomly drawn data points.
    """
    names = config.feature_names()
    if column not in names:
        raise ConfigError(f"unknown feature column {column!r}")
    col = names.index(column)
    out = []
    by_group: dict[int, list[StoredFeature]] = {}
    for row in rows:
        by_group.setdefault(row.group_index, []).append(row)
    for g in sorted(by_group):
        group_rows = by_group[g]
        if mode == "player":
            by_player: dict[str, list[float]] = {}
            for row in group_rows:
                by_player.setdefault(row.player_id, []).append(row.vector.values[col])
            for player_id in sorted(by_player):
                out.append({
                    "group": g,
                    "subject": player_id,
                    "statistic": column,
                    "value": float(np.mean(by_player[player_id])),
                })
        elif mode == "random":
            values = np.array([r.vector.values[col] for r in group_rows])
            take = min(sample_size, len(values))
            for s in range(samples):
                gen = substream(seed, "boxplot", g, s)
                idx = gen.choice(len(values), size=take, replace=False)
                out.append({
                    "group": g,
                    "subject": f"sample{s:03d}",
                    "statistic": column,
                    "value": float(values[idx].mean()),
                })
        else:
            raise ConfigError(f"unknown boxplot mode {mode!r}")
    return out


def write_csv(path, rows, columns) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row[k] for k in columns})


def write_report(report: EvaluationReport, outdir) -> None:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "metrics.json").write_text(
        json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"
    )
    with (outdir / "confusion.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        r = report.confusion.shape[0]
        writer.writerow(["actual\\predicted"] + [f"g{j}" for j in range(r)])
        for j in range(r):
            writer.writerow([f"g{j}"] + report.confusion[j].tolist())
