"""Command-line harness: single runs, Monte Carlo batches, paired toggles,
and offline archive analysis.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 run or data
failure.  All outputs are staged and renamed into place, so a failing
invocation never leaves partial files behind.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np
from scipy.stats import binomtest

from . import __version__, analytics, defense
from .contagion import regulator_visibility
from .scenario import (ConfigError, PRESETS, PolicySpec, ScenarioConfig,
                       build_from_seed, default_config, expand_preset,
                       load_config)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_RUN = 4

OUT_ROOT_ENV = "FIRESIM_OUT_ROOT"


def _default_out(command: str) -> Path:
    root = os.environ.get(OUT_ROOT_ENV, "firesim-out")
    return Path(root) / command


def _resolve_config(args) -> ScenarioConfig:
    if getattr(args, "config", None) and getattr(args, "preset", None):
        raise ConfigError("pass --config or --preset, not both")
    if getattr(args, "preset", None):
        cfg = expand_preset(args.preset)
    elif getattr(args, "config", None):
        cfg = load_config(args.config)
    else:
        cfg = default_config()
    seed = getattr(args, "seed", None)
    if seed is not None:
        cfg = replace(cfg, run=replace(cfg.run, seed=seed))
    return cfg


def _parse_seed_range(spec: str) -> list[int]:
    """Accept 'A..B' (inclusive) or a single integer."""
    try:
        if ".." in spec:
            lo_text, hi_text = spec.split("..", 1)
            lo, hi = int(lo_text), int(hi_text)
        else:
            lo = hi = int(spec)
    except ValueError:
        raise ConfigError(f"--seeds must be 'A..B' or an integer, got {spec!r}") from None
    if hi < lo:
        raise ConfigError(f"--seeds range {spec!r} is empty (end before start)")
    return list(range(lo, hi + 1))


def _write_json_atomic(payload: dict, out_dir: Path, name: str) -> Path:
    analytics.ensure_writable(out_dir)
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=f".{name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        target = out_dir / name
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return target


# -- run ----------------------------------------------------------------------

def cmd_run(cfg: ScenarioConfig, out_dir: Path) -> int:
    analytics.ensure_writable(out_dir)
    sim = build_from_seed(cfg, cfg.run.seed)
    sim.run(cfg.run.ticks)
    analytics.emit_report(sim, out_dir)
    outcome = analytics.run_outcome(sim)
    print(f"run seed={cfg.run.seed} ticks={cfg.run.ticks} "
          f"fire_point={outcome['fire_point']} duration={outcome['duration']} "
          f"report={out_dir}")
    return EXIT_OK


# -- batch ---------------------------------------------------------------------

def _batch_worker(task: tuple[ScenarioConfig, int]) -> tuple[int, dict | None, str | None]:
    cfg, seed = task
    try:
        sim = build_from_seed(cfg, seed)
        sim.run(cfg.run.ticks)
        return seed, analytics.run_outcome(sim), None
    except Exception as err:  # noqa: BLE001 - per-seed failures must not kill the batch
        return seed, None, f"{type(err).__name__}: {err}"


def _run_tasks(tasks: list, worker, parallelism: int) -> list:
    if parallelism <= 1 or len(tasks) <= 1:
        return [worker(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(worker, tasks))


def _mean_ci(values: list[float]) -> dict:
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    if len(arr) > 1:
        half = 1.96 * float(arr.std(ddof=1)) / math.sqrt(len(arr))
    else:
        half = 0.0
    return {"mean": mean, "ci95_low": mean - half, "ci95_high": mean + half,
            "n": len(arr)}


_AGGREGATE_KEYS = (
    "fire_point", "duration", "peak_total_posts", "peak_organic_posts",
    "total_posts", "total_organic_posts", "peak_mean_stress", "end_mean_stress",
    "final_reputation", "min_financial_value", "final_financial_value",
    "ransom_paid_total",
)


def aggregate_outcomes(outcomes: list[dict]) -> dict:
    aggregate: dict = {}
    for key in _AGGREGATE_KEYS:
        values = [o[key] for o in outcomes if o.get(key) is not None]
        if values:
            aggregate[key] = _mean_ci([float(v) for v in values])
    for key in ("ignited", "action_success", "data_exfiltrated"):
        values = [bool(o[key]) for o in outcomes]
        if values:
            aggregate[f"{key}_rate"] = sum(values) / len(values)
    labels = [o["predictable"] for o in outcomes if o.get("predictable") is not None]
    if labels:
        aggregate["predictable_fraction"] = (
            sum(1 for v in labels if v == "predictable") / len(labels))
    return aggregate


def cmd_batch(cfg: ScenarioConfig, seeds: list[int], parallelism: int,
              out_dir: Path) -> int:
    analytics.ensure_writable(out_dir)
    results = _run_tasks([(cfg, seed) for seed in seeds], _batch_worker, parallelism)
    results.sort(key=lambda item: item[0])
    outcomes = [outcome for _, outcome, err in results if err is None]
    errors = [{"seed": seed, "error": err} for seed, _, err in results if err is not None]
    payload = {
        "schema_version": 1,
        "command": "batch",
        "config": cfg.to_dict(),
        "seeds": seeds,
        "outcomes": outcomes,
        "errors": errors,
        "aggregate": aggregate_outcomes(outcomes),
    }
    path = _write_json_atomic(payload, out_dir, "batch_summary.json")
    print(f"batch seeds={seeds[0]}..{seeds[-1]} ok={len(outcomes)} "
          f"failed={len(errors)} summary={path}")
    return EXIT_RUN if errors else EXIT_OK


# -- compare --------------------------------------------------------------------

def _with_extortion(cfg: ScenarioConfig, outcome: str) -> ScenarioConfig:
    schedule = cfg.attack.action_schedule
    if not any(action == "extortion" for _, action in schedule):
        schedule = schedule + ((24, "extortion"),)
    return replace(cfg, attack=replace(
        cfg.attack, action_schedule=schedule,
        ransom=replace(cfg.attack.ransom, force_outcome=outcome)))


def _with_service(cfg: ScenarioConfig, outcome: str) -> ScenarioConfig:
    schedule = cfg.attack.action_schedule
    if not any(action == "defence_as_a_service" for _, action in schedule):
        schedule = schedule + ((24, "defence_as_a_service"),)
    return replace(cfg, attack=replace(
        cfg.attack, action_schedule=schedule,
        service=replace(cfg.attack.service, force_outcome=outcome)))


def _with_playbook(cfg: ScenarioConfig) -> ScenarioConfig:
    # Orchestrated storms can jump straight past "triggering", so the
    # reactive entries key on "peak", which every storm passes through.
    playbook = cfg.defense.playbook or (
        PolicySpec(kind="internal_training"),
        PolicySpec(kind="supporting_bots", trigger_stage="peak"),
        PolicySpec(kind="halt_product_and_review", trigger_stage="peak"),
    )
    return replace(cfg, defense=replace(cfg.defense, enabled=True, playbook=playbook))


TOGGLES = {
    "retarget_bots": (
        lambda cfg: replace(cfg, attack=replace(cfg.attack, worker_focus_enabled=True)),
        lambda cfg: replace(cfg, attack=replace(cfg.attack, worker_focus_enabled=False)),
    ),
    "defense_playbook": (
        _with_playbook,
        lambda cfg: replace(cfg, defense=replace(cfg.defense, enabled=False)),
    ),
    "ransom_paid": (
        lambda cfg: _with_extortion(cfg, "pay"),
        lambda cfg: _with_extortion(cfg, "refuse"),
    ),
    "flip_bots": (
        lambda cfg: _with_service(cfg, "pay"),
        lambda cfg: _with_service(cfg, "refuse"),
    ),
}

COMPARE_METRICS = (
    "duration_effective", "peak_total_posts", "total_organic_posts",
    "end_mean_stress", "mean_focus_visibility", "min_financial_value",
    "final_reputation", "ransom_paid_total",
)


def run_metrics(cfg: ScenarioConfig, seed: int) -> dict:
    """Scalar metrics for one paired-comparison arm."""
    sim = build_from_seed(cfg, seed)
    sim.run(cfg.run.ticks)
    outcome = analytics.run_outcome(sim)
    ticks = outcome["ticks"]
    duration = outcome["duration"]
    if duration is None:
        duration = 0 if outcome["onset"] is None else ticks - outcome["onset"]
    focus_start = None
    if sim.plan is not None:
        focus_start = next((tick for stage, tick in sim.plan.stage_entries
                            if stage == "worker_focus"), None)
    if focus_start is None:
        visibility = [regulator_visibility(sim.history, t) for t in range(ticks)]
    else:
        visibility = [regulator_visibility(sim.history, t)
                      for t in range(focus_start, ticks)]
    return {
        "duration_effective": float(duration),
        "peak_total_posts": outcome["peak_total_posts"],
        "total_organic_posts": float(outcome["total_organic_posts"]),
        "end_mean_stress": outcome["end_mean_stress"],
        "mean_focus_visibility": float(np.mean(visibility)) if visibility else 0.0,
        "min_financial_value": outcome["min_financial_value"],
        "final_reputation": outcome["final_reputation"],
        "ransom_paid_total": outcome["ransom_paid_total"],
        "ignited": outcome["ignited"],
    }


def _compare_worker(task: tuple[ScenarioConfig, ScenarioConfig, int]) -> tuple[int, dict | None, dict | None, str | None]:
    cfg_on, cfg_off, seed = task
    try:
        return seed, run_metrics(cfg_on, seed), run_metrics(cfg_off, seed), None
    except Exception as err:  # noqa: BLE001 - per-seed failures must not kill the comparison
        return seed, None, None, f"{type(err).__name__}: {err}"


def _sign_test(deltas: list[float]) -> dict:
    positive = sum(1 for d in deltas if d > 0)
    negative = sum(1 for d in deltas if d < 0)
    ties = len(deltas) - positive - negative
    result = {"positive": positive, "negative": negative, "ties": ties,
              "p_greater": None, "p_less": None}
    trials = positive + negative
    if trials > 0:
        result["p_greater"] = float(binomtest(positive, trials, alternative="greater").pvalue)
        result["p_less"] = float(binomtest(positive, trials, alternative="less").pvalue)
    return result


def compare_toggle(cfg: ScenarioConfig, toggle: str, seeds: list[int],
                   parallelism: int) -> dict:
    if toggle not in TOGGLES:
        raise ConfigError(f"unknown toggle {toggle!r}; expected one of {sorted(TOGGLES)}")
    on_fn, off_fn = TOGGLES[toggle]
    cfg_on, cfg_off = on_fn(cfg), off_fn(cfg)
    tasks = [(cfg_on, cfg_off, seed) for seed in seeds]
    results = _run_tasks(tasks, _compare_worker, parallelism)
    results.sort(key=lambda item: item[0])
    pairs = [(seed, on, off) for seed, on, off, err in results if err is None]
    errors = [{"seed": seed, "error": err} for seed, _, _, err in results if err is not None]
    deltas = {metric: [on[metric] - off[metric] for _, on, off in pairs]
              for metric in COMPARE_METRICS}
    per_seed = [
        {"seed": seed,
         "on": {k: on[k] for k in COMPARE_METRICS},
         "off": {k: off[k] for k in COMPARE_METRICS},
         "delta": {k: on[k] - off[k] for k in COMPARE_METRICS}}
        for seed, on, off in pairs]
    summary = {
        metric: {**_mean_ci(values), **_sign_test(values)}
        for metric, values in deltas.items() if values}
    return {
        "schema_version": 1,
        "command": "compare",
        "toggle": toggle,
        "config": cfg.to_dict(),
        "seeds": seeds,
        "pairs": per_seed,
        "errors": errors,
        "summary": summary,
    }


def cmd_compare(cfg: ScenarioConfig, toggle: str, seeds: list[int],
                parallelism: int, out_dir: Path) -> int:
    analytics.ensure_writable(out_dir)
    payload = compare_toggle(cfg, toggle, seeds, parallelism)
    path = _write_json_atomic(payload, out_dir, "compare_summary.json")
    print(f"compare toggle={toggle} pairs={len(payload['pairs'])} "
          f"failed={len(payload['errors'])} summary={path}")
    return EXIT_RUN if payload["errors"] else EXIT_OK


# -- analyze --------------------------------------------------------------------

def cmd_analyze(archive: Path, cfg: ScenarioConfig, out_dir: Path) -> int:
    analytics.ensure_writable(out_dir)
    result = analytics.ingest_archive(archive)
    posts = sorted(result.posts, key=lambda p: p.tick)
    an = cfg.analytics

    windows = []
    volumes: list[int] = []
    base_tick = posts[0].tick if posts else 0
    if posts:
        span = posts[-1].tick - base_tick + 1
        volumes = [0] * span
        for post in posts:
            volumes[post.tick - base_tick] += 1
        for window_id, start in enumerate(range(0, span, an.sentiment_window)):
            end = min(start + an.sentiment_window, span)
            chunk = [p for p in posts if start <= p.tick - base_tick < end]
            windows.append(analytics.aggregate_window(
                chunk, window_id, start, end,
                neutral_band=an.neutral_band, alpha=an.compound_alpha))

    verdict = None
    if posts:
        k = cfg.defense.detect_first_k
        early = posts[:k]
        shims = [_ArchiveAccount(p.author, p.author_created_tick if p.author_created_tick is not None else p.tick)
                 for p in early]
        verdict = defense.detect_artificial(shims, now=posts[-1].tick,
                                            age_threshold=cfg.defense.age_threshold,
                                            requested=k)

    forecast = None
    if len(volumes) >= 2:
        window = max(2, min(an.forecast_window, len(volumes)))
        forecast = analytics.classify_run_cascade(
            volumes, window=window, horizon=an.forecast_horizon,
            rmse_threshold=an.predictable_rmse)

    payload = {
        "schema_version": 1,
        "command": "analyze",
        "source": str(archive),
        "rows": result.total_rows,
        "duplicates": result.duplicate_count,
        "malformed": result.malformed_count,
        "posts": len(posts),
        "base_tick": base_tick if posts else None,
        "verdict": verdict.to_dict() if verdict is not None else None,
        "forecast": forecast.to_dict() if forecast is not None else None,
        "windows": [
            {"window_id": w.window_id, "start_tick": w.start_tick,
             "end_tick": w.end_tick, "post_count": w.post_count,
             "negative": w.negative, "neutral": w.neutral,
             "positive": w.positive, "compound": w.compound}
            for w in windows],
    }
    _write_json_atomic(payload, out_dir, "analysis.json")
    sentiment_text = analytics.sentiment_csv_text(windows)
    volume_lines = ["tick,posts"] + [f"{t},{v}" for t, v in enumerate(volumes)]
    _write_text_atomic(sentiment_text, out_dir, "sentiment_windows.csv")
    _write_text_atomic("\n".join(volume_lines) + "\n", out_dir, "volume.csv")
    print(f"analyze posts={len(posts)} duplicates={result.duplicate_count} "
          f"malformed={result.malformed_count} out={out_dir}")
    return EXIT_OK


class _ArchiveAccount:
    """Minimal account shim for age-based detection over archives."""

    __slots__ = ("id", "creation_tick")

    def __init__(self, account_id: int, creation_tick: int):
        self.id = account_id
        self.creation_tick = creation_tick


def _write_text_atomic(text: str, out_dir: Path, name: str) -> Path:
    fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=f".{name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        target = out_dir / name
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return target


# -- entry point ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="firesim",
        description="Agent-based simulator of organised social-media firestorms.")
    parser.add_argument("--version", action="version",
                        version=f"firesim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seeds=False, toggle=False):
        p.add_argument("--config", type=Path, default=None,
                       help="JSON scenario config (empty file = defaults)")
        p.add_argument("--preset", choices=sorted(PRESETS), default=None)
        p.add_argument("--out", type=Path, default=None,
                       help=f"output directory (default ${OUT_ROOT_ENV} or ./firesim-out)")
        if seeds:
            p.add_argument("--seeds", required=True,
                           help="seed range A..B (inclusive) or a single seed")
            p.add_argument("--parallelism", type=int, default=1)
        else:
            p.add_argument("--seed", type=int, default=None)
        if toggle:
            p.add_argument("--toggle", required=True, choices=sorted(TOGGLES))

    common(sub.add_parser("run", help="one simulation, full report"))
    common(sub.add_parser("batch", help="independent seeds, aggregate JSON"), seeds=True)
    common(sub.add_parser("compare", help="paired runs with/without a toggle"),
           seeds=True, toggle=True)
    analyze = sub.add_parser("analyze", help="offline analysis of a post archive")
    analyze.add_argument("archive", type=Path)
    analyze.add_argument("--config", type=Path, default=None)
    analyze.add_argument("--preset", choices=sorted(PRESETS), default=None)
    analyze.add_argument("--out", type=Path, default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out_dir = args.out if args.out is not None else _default_out(args.command)
    try:
        if args.command == "run":
            cfg = _resolve_config(args)
            return cmd_run(cfg, out_dir)
        if args.command == "batch":
            cfg = _resolve_config(args)
            seeds = _parse_seed_range(args.seeds)
            if args.parallelism < 1:
                raise ConfigError("--parallelism must be >= 1")
            return cmd_batch(cfg, seeds, args.parallelism, out_dir)
        if args.command == "compare":
            cfg = _resolve_config(args)
            seeds = _parse_seed_range(args.seeds)
            if args.parallelism < 1:
                raise ConfigError("--parallelism must be >= 1")
            return cmd_compare(cfg, args.toggle, seeds, args.parallelism, out_dir)
        if args.command == "analyze":
            cfg = _resolve_config(args)
            return cmd_analyze(args.archive, cfg, out_dir)
        parser.error(f"unknown command {args.command!r}")  # pragma: no cover
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except analytics.CorruptArchiveError as err:
        print(f"archive error: {err}", file=sys.stderr)
        return EXIT_RUN
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK  # pragma: no cover


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
