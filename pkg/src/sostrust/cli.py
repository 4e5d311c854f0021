"""Command-line front end: seeded, reproducible experiment runs.

Four subcommands, one JSON config file each:

* ``check-metrics``  - randomized R1/R2 requirement harness over all three
  rating metrics; JSON report; exit code 2 if the smoothing metric ever
  shows a witness (it must not).
* ``eval-simtrust``  - synthetic cold-start comparison of tag-based trust
  vs. the Jaccard CF baseline; per-seed CSV reports plus a summary.
* ``run-tdg``        - grid attack scenario; per-tick CSV series plus a
  summary.
* ``run-hybrid``     - skill-routing specialization loop or an
  audience-specific rating table, per the config's "experiment" key.

Every run writes ``run_metadata.json`` (seed, config hash, wall time)
next to its outputs and refuses to overwrite existing outputs without
``--force``. ``--sweep KEY=V1,V2`` fans the run out over config variants
into per-value subdirectories, one worker process per variant.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from .metrics import MetricConfig, check_requirements, make_metric
from .simtrust import (SimTrustConfig, UserProfile, cold_start_evaluation,
                       mean_f1, write_eval_csv)
from .tdgsim import ScenarioConfig, run_scenario
from .hybrid import (SpecializationConfig, audience_rating,
                     load_tagged_ratings, specialization_run)

__all__ = ["main", "entry"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_WITNESS = 2

COMMANDS = ("check-metrics", "eval-simtrust", "run-tdg", "run-hybrid")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; route through UsageError
    # instead so usage problems uniformly exit 1.
    def error(self, message):
        raise UsageError(f"{message}\n{self.format_usage()}")


def _build_parser() -> _Parser:
    parser = _Parser(prog="sostrust",
                     description="Trust-metric experiments, reproducible from "
                                 "a seed and a JSON config.")
    sub = parser.add_subparsers(dest="command")
    for name, desc in (
        ("check-metrics", "run the R1/R2 requirement harness"),
        ("eval-simtrust", "cold-start recommender comparison"),
        ("run-tdg", "grid attack scenario"),
        ("run-hybrid", "hybrid tag+rating experiment"),
    ):
        cmd = sub.add_parser(name, help=desc)
        cmd.add_argument("--config", required=True, help="JSON config file")
        cmd.add_argument("--out", required=True, help="output directory")
        cmd.add_argument("--seed", type=int, default=None,
                         help="override the config seed")
        cmd.add_argument("--force", action="store_true",
                         help="overwrite existing outputs")
        cmd.add_argument("--sweep", default=None, metavar="KEY=V1,V2,...",
                         help="fan out over config variants")
    return parser


def _load_config(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"config file not found: {p}")
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(
            f"malformed config {p}: line {exc.lineno}, column {exc.colno}: {exc.msg}")


def _set_path(config: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = config
    for key in keys[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise UsageError(f"cannot sweep through non-object key {key!r}")
    node[keys[-1]] = value


def _parse_sweep(spec: str) -> tuple[str, list]:
    if "=" not in spec:
        raise UsageError(f"--sweep expects KEY=V1,V2,..., got {spec!r}")
    key, _, raw = spec.partition("=")
    if not key or not raw:
        raise UsageError(f"--sweep expects KEY=V1,V2,..., got {spec!r}")
    values = []
    for chunk in raw.split(","):
        try:
            values.append(json.loads(chunk))
        except json.JSONDecodeError:
            values.append(chunk)
    return key, values


def _config_hash(config: dict) -> str:
    return hashlib.sha256(
        json.dumps(config, sort_keys=True).encode("utf-8")).hexdigest()


def _prepare_out(out: str, outputs: list[str], force: bool) -> Path:
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not force:
        for name in outputs + ["run_metadata.json"]:
            existing = out_dir / name
            if existing.exists():
                raise UsageError(
                    f"output exists: {existing} (pass --force to overwrite)")
    return out_dir


def _write_metadata(out_dir: Path, command: str, config: dict, seed,
                    outputs: list[str], started: float) -> None:
    meta = {
        "command": command,
        "seed": seed,
        "config_sha256": _config_hash(config),
        "effective_config": config,
        "outputs": outputs,
        "wall_time_s": round(time.perf_counter() - started, 6),
    }
    with open(out_dir / "run_metadata.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Subcommand cores. Each takes the effective config dict and the output
# directory and returns a process exit code.
# ---------------------------------------------------------------------------


def _metric_config_from(config: dict) -> MetricConfig:
    try:
        return MetricConfig(
            alpha=config.get("alpha", 0.9),
            storage_cap=config.get("storage_cap", 100),
            initial_trust=config.get("initial_trust", 0.0),
        )
    except ValueError as exc:
        raise UsageError(str(exc))


def run_check_metrics(config: dict, out_dir: Path) -> int:
    trials = config.get("trials", 100_000)
    comparison_trials = config.get("comparison_trials", 10_000)
    if trials < 1 or comparison_trials < 1:
        raise UsageError("trials must be positive")
    seed = config.get("seed", 0)
    mcfg = _metric_config_from(config)
    max_history = config.get("max_history", 40)
    # The windowed metric can only lose ground once eviction kicks in, so
    # its search must sample histories past the cap.
    weighted_max = config.get("weighted_max_history", mcfg.storage_cap + 15)

    report: dict = {}
    witness_in_wses = False
    for name, n_trials, max_h in (
        ("wses", trials, max_history),
        ("continuous", comparison_trials, max_history),
        ("weighted", comparison_trials, weighted_max),
    ):
        metric = make_metric(name, mcfg)
        results = check_requirements(metric, n_trials, seed, max_history=max_h)
        entry = {"trials": n_trials}
        for req, rep in results.items():
            key = req.lower()
            if rep.passed:
                entry[key] = "pass"
            else:
                entry[key] = rep.witnesses[0].to_dict()
                entry[f"{key}_witness_count"] = rep.witness_count
                if name == "wses":
                    witness_in_wses = True
        report[name] = entry

    # Control: below the cap the windowed metric must be clean.
    below = check_requirements(
        make_metric("weighted", mcfg), comparison_trials, seed,
        max_history=max(mcfg.storage_cap - 1, 0))
    report["weighted"]["r2_below_cap"] = (
        "pass" if below["R2"].passed else below["R2"].witnesses[0].to_dict())

    with open(out_dir / "report.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_WITNESS if witness_in_wses else EXIT_OK


CHECK_METRICS_OUTPUTS = ["report.json"]


def run_eval_simtrust(config: dict, out_dir: Path) -> int:
    seeds = config.get("seeds")
    if seeds is None:
        base = config.get("seed", 0)
        seeds = list(range(base, base + config.get("n_seeds", 10)))
    if not seeds:
        raise UsageError("eval-simtrust needs at least one seed")
    cfg = SimTrustConfig(theta_sim=config.get("theta_sim", 0.5),
                         theta_trust=config.get("theta_trust", 0.3))
    synth_keys = ("clusters", "users_per_cluster", "items_per_cluster",
                  "tags_per_cluster", "vocab_per_cluster", "shared_vocab_size",
                  "mixing", "items_per_user", "preferred_per_user")
    synth_kwargs = {k: config[k] for k in synth_keys if k in config}
    top_n = config.get("top_n", 5)

    per_seed = []
    for seed in seeds:
        try:
            rows = cold_start_evaluation(seed, top_n=top_n, cfg=cfg, **synth_kwargs)
        except ValueError as exc:
            raise UsageError(str(exc))
        write_eval_csv(rows, out_dir / f"eval_seed{seed}.csv")
        per_seed.append({
            "seed": seed,
            "simtrust_mean_f1": mean_f1(rows, "simtrust"),
            "jaccard_cf_mean_f1": mean_f1(rows, "jaccard_cf"),
        })
    summary = {
        "per_seed": per_seed,
        "simtrust_mean_f1": sum(s["simtrust_mean_f1"] for s in per_seed) / len(per_seed),
        "jaccard_cf_mean_f1": sum(s["jaccard_cf_mean_f1"] for s in per_seed) / len(per_seed),
    }
    with open(out_dir / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_OK


def _eval_outputs(config: dict) -> list[str]:
    seeds = config.get("seeds")
    if seeds is None:
        base = config.get("seed", 0)
        seeds = list(range(base, base + config.get("n_seeds", 10)))
    return [f"eval_seed{s}.csv" for s in seeds] + ["summary.json"]


TDG_OUTPUTS = ["series.csv", "summary.json"]


def run_tdg(config: dict, out_dir: Path) -> int:
    try:
        scenario = ScenarioConfig.from_dict(config)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid scenario config: {exc}")
    result = run_scenario(scenario)
    result.write_csv(out_dir / "series.csv")
    result.write_summary_json(out_dir / "summary.json")
    return EXIT_OK


def run_hybrid(config: dict, out_dir: Path, config_dir: Path) -> int:
    experiment = config.get("experiment")
    if experiment == "specialization":
        data = {k: v for k, v in config.items() if k != "experiment"}
        try:
            spec = SpecializationConfig.from_dict(data)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"invalid specialization config: {exc}")
        result = specialization_run(spec)
        result.write_csv(out_dir / "specialization.csv")
        with open(out_dir / "summary.json", "w", encoding="utf-8") as fh:
            json.dump({"final_100_shares": result.shares_summary(last_n=100)},
                      fh, indent=2, sort_keys=True)
            fh.write("\n")
        return EXIT_OK
    if experiment == "audience":
        ratings_path = Path(config.get("ratings", ""))
        if not ratings_path.is_absolute():
            ratings_path = config_dir / ratings_path
        if not ratings_path.exists():
            raise UsageError(f"ratings file not found: {ratings_path}")
        ratings = load_tagged_ratings(ratings_path)
        viewers = config.get("viewers", {})
        if not viewers:
            raise UsageError("audience experiment needs a 'viewers' table")
        items = config.get("items") or sorted({r.item for r in ratings})
        mcfg = _metric_config_from(config)
        theta = config.get("theta_trust", 0.3)
        table = {
            name: {
                item: audience_rating(item, ratings,
                                      UserProfile(user_id=name, tags=tuple(tags)),
                                      mcfg, theta_trust=theta)
                for item in items
            }
            for name, tags in viewers.items()
        }
        with open(out_dir / "audience_trust.json", "w", encoding="utf-8") as fh:
            json.dump(table, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return EXIT_OK
    raise UsageError(
        f"unknown hybrid experiment {experiment!r}; expected "
        "'specialization' or 'audience'")


def _hybrid_outputs(config: dict) -> list[str]:
    if config.get("experiment") == "audience":
        return ["audience_trust.json"]
    return ["specialization.csv", "summary.json"]


# ---------------------------------------------------------------------------
# Dispatch and sweep fan-out.
# ---------------------------------------------------------------------------


def _planned_outputs(command: str, config: dict) -> list[str]:
    if command == "check-metrics":
        return list(CHECK_METRICS_OUTPUTS)
    if command == "eval-simtrust":
        return _eval_outputs(config)
    if command == "run-tdg":
        return list(TDG_OUTPUTS)
    return _hybrid_outputs(config)


def _run_single(command: str, config: dict, out: str, force: bool,
                config_dir: str) -> int:
    started = time.perf_counter()
    outputs = _planned_outputs(command, config)
    out_dir = _prepare_out(out, outputs, force)
    if command == "check-metrics":
        code = run_check_metrics(config, out_dir)
    elif command == "eval-simtrust":
        code = run_eval_simtrust(config, out_dir)
    elif command == "run-tdg":
        code = run_tdg(config, out_dir)
    else:
        code = run_hybrid(config, out_dir, Path(config_dir))
    _write_metadata(out_dir, command, config, config.get("seed"),
                    outputs, started)
    return code


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage())
        config = _load_config(args.config)
        if args.seed is not None:
            config["seed"] = args.seed
            # Multi-seed evaluation collapses to the single override seed.
            if args.command == "eval-simtrust" and "seeds" in config:
                config["seeds"] = [args.seed]
        config_dir = str(Path(args.config).resolve().parent)

        if args.sweep is None:
            return _run_single(args.command, config, args.out, args.force,
                               config_dir)

        key, values = _parse_sweep(args.sweep)
        jobs = []
        for value in values:
            variant = json.loads(json.dumps(config))  # deep copy
            _set_path(variant, key, value)
            sub_out = str(Path(args.out) / f"{key.replace('.', '_')}={value}")
            jobs.append((args.command, variant, sub_out, args.force, config_dir))
        workers = min(len(jobs), 4)
        codes = []
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_single, *job) for job in jobs]
            for fut in futures:
                codes.append(fut.result())
        return max(codes)
    except UsageError as exc:
        print(f"sostrust: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
