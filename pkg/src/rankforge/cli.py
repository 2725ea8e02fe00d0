"""Command-line entry point: ingest, extract, train, eval, ablate, synth,
report, and the full pipeline.

Exit codes: 0 success, 1 configuration error, 2 data or backend error.
Every artifact directory gets a manifest with the config hash and seeds so
runs can be reproduced exactly.
"""

import argparse
import json
import sys
from pathlib import Path

from . import __version__, synthlab
from .backends import (
    BackendBank,
    BackendDescriptor,
    CachedBackend,
    ResponseCache,
    SyntheticBackend,
    default_cache_path,
    make_backend,
)
from .config import (
    RunConfig,
    date_window_from,
    read_config_file,
    run_config_from,
)
from .errors import BackendError, ConfigError, DataError, RankforgeError
from .estimator import TrainingSetSpec, train_meta_model
from .evalharness import (
    AblationContext,
    EvalProtocol,
    boxplot_rows,
    family_masks,
    flatten_player_pool,
    loss_by_ply_rows,
    prior_curve_rows,
    run_ablation,
    run_player_specific,
    run_random_sampling,
    single_level_masks,
    write_ablation_csv,
    write_csv,
    write_per_group_csv,
    write_report,
)
from .features import extract_many, move_losses, read_feature_store, write_feature_store
from .gbdt import GbdtParams, TreeEnsemble
from .records import (
    FilterConfig,
    filter_match,
    parse_sgf,
    rank_group_of,
    read_datapoints,
    split_sides,
    write_datapoints,
)
from .records.pgn import parse_pgn_collection


def _log(message: str) -> None:
    print(message, file=sys.stderr)


# ---------------------------------------------------------------------------
# ingest


def ingest_directory(records_dir, game: str, filter_config: FilterConfig):
    """Parse and filter every record file under a directory.

    Returns (datapoints, drop_rows).  Files are visited in sorted order so
    output never depends on directory listing order.
    """
    records_dir = Path(records_dir)
    if not records_dir.is_dir():
        raise ConfigError(f"records directory {records_dir} does not exist")
    suffix = ".sgf" if game == "go" else ".pgn"
    files = sorted(records_dir.rglob(f"*{suffix}"))
    datapoints, drops = [], []
    for path in files:
        text = path.read_text(encoding="utf-8", errors="replace")
        try:
            if game == "go":
                records = [parse_sgf(text)]
            else:
                records = parse_pgn_collection(text)
        except DataError as exc:
            drops.append({"file": path.name, "reason": f"parse_error:{exc}"})
            continue
        for i, record in enumerate(records):
            match_id = path.stem if len(records) == 1 else f"{path.stem}#{i}"
            decision = filter_match(record, filter_config)
            if not decision.accepted:
                drops.append({"file": path.name, "match_id": match_id,
                              "reason": decision.reason})
                continue
            datapoints.extend(split_sides(record, match_id, decision.group))
    return datapoints, drops


def cmd_ingest(args) -> int:
    window = None
    if args.date_window:
        window = date_window_from(list(args.date_window))
    filter_config = FilterConfig(date_window=window)
    datapoints, drops = ingest_directory(args.records_dir, args.game, filter_config)
    if not datapoints:
        _log(f"warning: no accepted matches under {args.records_dir}")
    write_datapoints(args.out, datapoints)
    if args.drops:
        Path(args.drops).parent.mkdir(parents=True, exist_ok=True)
        Path(args.drops).write_text(json.dumps(drops, indent=2, sort_keys=True) + "\n")
    _log(f"ingest: {len(datapoints)} data points, {len(drops)} drops -> {args.out}")
    return 0


# ---------------------------------------------------------------------------
# backends wiring


def _build_bank(run: RunConfig, timeout: float = 30.0) -> BackendBank:
    backends_cfg = run.raw.get("backends", {})
    features = run.features

    def external(kind: str, launch: str):
        descriptor = BackendDescriptor(
            kind=kind,
            game=features.game,
            launch=launch,
            levels=features.policy_levels if kind == "policy" else (),
        )
        backend = make_backend(descriptor, synth_config=run.synth,
                               timeout=float(backends_cfg.get("timeout", timeout)))
        cache_path = default_cache_path()
        if cache_path is not None and launch != "builtin:synthetic":
            backend = CachedBackend(backend, ResponseCache(cache_path))
        return backend

    if not backends_cfg and run.synth is not None:
        shared = SyntheticBackend(run.synth)
        return BackendBank(strength=shared, policy=shared, value=shared)
    bank = BackendBank()
    if features.include_strength:
        bank.strength = external("strength", backends_cfg["strength"])
    if features.include_priors:
        bank.policy = external("policy", backends_cfg["policy"])
    if features.include_loss:
        bank.value = external("value", backends_cfg["value"])
    return bank


def cmd_extract(args) -> int:
    run = run_config_from(read_config_file(args.config))
    datapoints = read_datapoints(args.dataset)
    bank = _build_bank(run)
    try:
        rows, report = extract_many(datapoints, bank, run.features)
    finally:
        bank.close()
    write_feature_store(args.out, rows, run.features)
    if args.drops:
        Path(args.drops).parent.mkdir(parents=True, exist_ok=True)
        Path(args.drops).write_text(
            json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
        )
    _log(f"extract: {len(rows)} rows -> {args.out} "
         f"({len(report.dropped)} dropped)")
    return 0


# ---------------------------------------------------------------------------
# train / eval


def _pool_from_store(rows):
    pool: dict = {}
    for row in rows:
        pool.setdefault(row.group_index, []).append(row.vector)
    return pool


def _player_pool_from_store(rows):
    pool: dict = {}
    for row in rows:
        pool.setdefault(row.group_index, {}).setdefault(row.player_id, []).append(row.vector)
    return pool


def cmd_train(args) -> int:
    run = run_config_from(read_config_file(args.config)) if args.config else None
    config, rows = read_feature_store(args.features)
    pool = _pool_from_store(rows)
    r_groups = max(pool) + 1
    params = run.gbdt if run else GbdtParams()
    spec = TrainingSetSpec(n=args.n, repetitions_per_group=args.repetitions, seed=args.seed)
    model = train_meta_model(pool, spec, params, config.schema_id(), r_groups)
    model.save(args.out)
    _log(f"train: n={args.n} trees={len(model.trees)} -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    model = TreeEnsemble.load(args.model)
    config, rows = read_feature_store(args.features)
    if model.schema_id and model.schema_id != config.schema_id():
        raise DataError("model and feature store schemas differ")
    protocol = EvalProtocol(mode=args.mode, n=args.n,
                            repetitions=args.repetitions, seed=args.seed)
    if args.mode == "random":
        report = run_random_sampling(_pool_from_store(rows), model, protocol)
    else:
        report = run_player_specific(_player_pool_from_store(rows), model, protocol)
    write_report(report, args.out)
    _log(f"eval: mode={args.mode} n={args.n} accuracy={report.accuracy:.4f} "
         f"accuracy_pm1={report.accuracy_pm1:.4f} -> {args.out}")
    return 0


# ---------------------------------------------------------------------------
# synth


def cmd_synth(args) -> int:
    run = run_config_from(read_config_file(args.config))
    if run.synth is None:
        raise ConfigError("config has no [synth] section")
    pool = synthlab.gen_group_pool(run.synth, args.tag, args.matches)
    datapoints = [dp for g in sorted(pool) for dp in
                  (synthlab.to_datapoint(m) for m in pool[g])]
    write_datapoints(args.out, datapoints)
    _log(f"synth: {len(datapoints)} data points -> {args.out}")
    return 0


# ---------------------------------------------------------------------------
# ablate


def cmd_ablate(args) -> int:
    run = run_config_from(read_config_file(args.config))
    train_config, train_rows = read_feature_store(args.train_features)
    test_config, test_rows = read_feature_store(args.test_features)
    if train_config.schema_id() != test_config.schema_id():
        raise DataError("train and test stores have different schemas")
    ns = run.ablation_ns or [10]
    ctx = AblationContext(
        full_config=train_config,
        train_pool=_pool_from_store(train_rows),
        test_pool=_pool_from_store(test_rows),
        gbdt_params=run.gbdt,
        train_repetitions=run.train_repetitions,
        train_seed=run.seed,
        protocol_template=EvalProtocol("random", ns[0], run.eval_repetitions, run.seed),
        r_groups=max(_pool_from_store(test_rows)) + 1,
    )
    masks = single_level_masks(train_config) if run.ablation_levels else family_masks(train_config)
    results = run_ablation(masks, ns, ctx)
    outdir = Path(args.out)
    write_ablation_csv(results, outdir / "ablation_summary.csv")
    write_per_group_csv(results, max(ns), outdir / "ablation_per_group.csv")
    for (name, n), report in results.items():
        write_report(report, outdir / f"{name}_n{n}")
    _log(f"ablate: {len(results)} runs -> {outdir}")
    return 0


# ---------------------------------------------------------------------------
# report (plot data)


def cmd_report(args) -> int:
    config, rows = read_feature_store(args.features)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    if config.include_priors:
        write_csv(outdir / "prior_curves.csv", prior_curve_rows(rows, config),
                  ["group", "level", "gm_mean", "ci_low", "ci_high", "count"])
    first = config.feature_names()[0]
    write_csv(outdir / "boxplot_player.csv",
              boxplot_rows(rows, config, first, mode="player"),
              ["group", "subject", "statistic", "value"])
    write_csv(outdir / "boxplot_random.csv",
              boxplot_rows(rows, config, first, mode="random", seed=args.seed),
              ["group", "subject", "statistic", "value"])
    if args.dataset and args.config:
        run = run_config_from(read_config_file(args.config))
        bank = _build_bank(run)
        try:
            traces = []
            for dp in read_datapoints(args.dataset):
                losses, _ = move_losses(dp, bank.value, run.features.value_transform())
                traces.extend(losses)
        finally:
            bank.close()
        write_csv(outdir / "loss_by_ply.csv", loss_by_ply_rows(traces),
                  ["ply", "mean_loss", "std_loss", "count"])
    _log(f"report: -> {outdir}")
    return 0


# ---------------------------------------------------------------------------
# pipeline


def run_pipeline(run: RunConfig, outdir) -> dict:
    """Synthetic end-to-end run: generate, extract, train per n, evaluate,
    optional ablation, plot data, manifest.  Returns the manifest."""
    if run.synth is None:
        raise ConfigError("pipeline currently needs a [synth] section")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    synth = run.synth
    train_dps = synthlab.pool_to_datapoints(
        synthlab.gen_group_pool(synth, "train", run.train_matches_per_group))
    test_dps = synthlab.pool_to_datapoints(
        synthlab.gen_group_pool(synth, "test", run.test_matches_per_group))
    write_datapoints(outdir / "train_dataset.jsonl",
                     [dp for g in sorted(train_dps) for dp in train_dps[g]])
    write_datapoints(outdir / "test_dataset.jsonl",
                     [dp for g in sorted(test_dps) for dp in test_dps[g]])

    bank = _build_bank(run)
    stage = "extract"
    try:
        pools, stores = {}, {}
        for name, dps in (("train", train_dps), ("test", test_dps)):
            flat = [dp for g in sorted(dps) for dp in dps[g]]
            rows, drop_report = extract_many(flat, bank, run.features)
            write_feature_store(outdir / f"{name}_features.jsonl", rows, run.features)
            (outdir / f"{name}_drops.json").write_text(
                json.dumps(drop_report.to_dict(), indent=2, sort_keys=True) + "\n")
            pools[name] = _pool_from_store(rows)
            stores[name] = rows

        stage = "train"
        metrics = {}
        models = {}
        for n in run.train_ns:
            spec = TrainingSetSpec(n=n, repetitions_per_group=run.train_repetitions,
                                   seed=run.seed)
            model = train_meta_model(pools["train"], spec, run.gbdt,
                                     run.features.schema_id(), synth.groups)
            model.save(outdir / f"model_n{n}.json")
            models[n] = model

        stage = "eval"
        for n in run.train_ns:
            protocol = EvalProtocol(mode="random", n=n,
                                    repetitions=run.eval_repetitions, seed=run.seed + n)
            report = run_random_sampling(pools["test"], models[n], protocol)
            write_report(report, outdir / f"eval_n{n}")
            metrics[str(n)] = {"accuracy": report.accuracy,
                               "accuracy_pm1": report.accuracy_pm1}

        stage = "ablate"
        if run.ablation_ns:
            ctx = AblationContext(
                full_config=run.features,
                train_pool=pools["train"],
                test_pool=pools["test"],
                gbdt_params=run.gbdt,
                train_repetitions=run.train_repetitions,
                train_seed=run.seed,
                protocol_template=EvalProtocol("random", run.ablation_ns[0],
                                               run.eval_repetitions, run.seed),
                r_groups=synth.groups,
            )
            masks = (single_level_masks(run.features) if run.ablation_levels
                     else family_masks(run.features))
            results = run_ablation(masks, run.ablation_ns, ctx)
            write_ablation_csv(results, outdir / "ablation" / "ablation_summary.csv")
            write_per_group_csv(results, max(run.ablation_ns),
                                outdir / "ablation" / "ablation_per_group.csv")
            metrics["ablation"] = {
                f"{name}_n{n}": report.accuracy for (name, n), report in results.items()
            }

        stage = "report"
        plotdir = outdir / "plotdata"
        if run.features.include_priors:
            write_csv(plotdir / "prior_curves.csv",
                      prior_curve_rows(stores["test"], run.features),
                      ["group", "level", "gm_mean", "ci_low", "ci_high", "count"])
        traces = []
        for g in sorted(test_dps):
            for dp in test_dps[g]:
                losses, _ = move_losses(dp, bank.value, run.features.value_transform())
                traces.extend(losses)
        write_csv(plotdir / "loss_by_ply.csv", loss_by_ply_rows(traces),
                  ["ply", "mean_loss", "std_loss", "count"])
    except RankforgeError as exc:
        raise type(exc)(f"pipeline stage {stage!r} failed: {exc}") from exc
    finally:
        bank.close()

    manifest = {
        "version": __version__,
        "config_hash": run.hash(),
        "seed": run.seed,
        "synth_config_hash": synth.config_hash(),
        "feature_schema_id": run.features.schema_id(),
        "train_ns": run.train_ns,
        "metrics": metrics,
    }
    (outdir / "metrics.json").write_text(json.dumps(metrics, indent=2, sort_keys=True) + "\n")
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def cmd_pipeline(args) -> int:
    run = run_config_from(read_config_file(args.config))
    manifest = run_pipeline(run, args.out)
    _log(f"pipeline: done, config {manifest['config_hash']} -> {args.out}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rankforge",
        description="Estimate game-player skill ranks from match records.",
    )
    parser.add_argument("--version", action="version", version=f"rankforge {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse and filter a directory of game records")
    p.add_argument("--game", choices=("go", "chess"), required=True)
    p.add_argument("--records-dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--drops")
    p.add_argument("--date-window", nargs=2, metavar=("START", "END"))
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("extract", help="compute feature vectors for a dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--drops")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train one meta-model for one n")
    p.add_argument("--config")
    p.add_argument("--features", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--repetitions", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model on a feature store")
    p.add_argument("--mode", choices=("random", "player"), default="random")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--repetitions", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate synthetic data points")
    p.add_argument("--config", required=True)
    p.add_argument("--matches", type=int, required=True, help="matches per group")
    p.add_argument("--tag", default="synth")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ablate", help="feature-family or policy-level ablations")
    p.add_argument("--config", required=True)
    p.add_argument("--train-features", required=True)
    p.add_argument("--test-features", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("report", help="emit plot-data CSV tables")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dataset")
    p.add_argument("--config")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("pipeline", help="full run from one config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        _log(f"config error: {exc}")
        return 1
    except (DataError, BackendError) as exc:
        _log(f"data error: {exc}")
        return 2
    except OSError as exc:
        _log(f"data error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
