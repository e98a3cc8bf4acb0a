"""Acceptance gate: eleven externally-checkable properties of the simulator.

Each test prints one [PASS]/[FAIL] line outside pytest's capture so the
verdicts are readable in plain test logs, then asserts.  Tolerances are
pinned in the assertions, not configurable.
"""

import math
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import binomtest

from firesim import cli
from firesim.agents import GENERAL_STREAM, Post
from firesim.analytics import (CascadeClass, FinancialProxy, aggregate_window,
                               load_sentiment_summaries, predict_cascade,
                               update_financial_proxy)
from firesim.attack import (ActionKind, IMPACT_MATRIX, ImpactVector,
                            PlanStage, execute_action)
from firesim.scenario import (PolicySpec, build_from_seed, config_from_dict,
                              default_config, dumps_config, expand_preset)

DATA = Path(__file__).parent / "data"


@pytest.fixture
def report(capsys):
    def _report(number: int, name: str, ok: bool, detail: str) -> None:
        line = f"[{'PASS' if ok else 'FAIL'}] acceptance {number:02d} {name}: {detail}"
        with capsys.disabled():
            print(line, flush=True)
        assert ok, line
    return _report


# -- 1: follow-on action impact matrix ------------------------------------------

def test_accept_01_impact_matrix(report):
    started = time.monotonic()
    expected = {
        ActionKind.DOS: ImpactVector(False, False, True, True),
        ActionKind.PHYSICAL_ACTION: ImpactVector(False, False, True, True),
        ActionKind.HUMAN_ERROR_EXPLOIT: ImpactVector(True, True, True, True),
        ActionKind.OFFERING_HELP: ImpactVector(True, False, False, False),
        ActionKind.INSIDER_THREAT: ImpactVector(True, False, False, True),
        ActionKind.EXTORTION: ImpactVector(False, False, False, False),
        ActionKind.DEFENCE_AS_A_SERVICE: ImpactVector(False, False, False, False),
    }
    mismatches = [k.value for k in ActionKind if IMPACT_MATRIX[k] != expected[k]]
    elapsed = time.monotonic() - started
    report(1, "impact matrix", not mismatches and elapsed < 1.0,
            f"7/7 action kinds exact, {elapsed * 1000:.1f} ms")


# -- 2: byte-identical determinism ------------------------------------------------

def test_accept_02_determinism(tmp_path, report):
    started = time.monotonic()
    cfg = config_from_dict({"run": {"ticks": 200}})
    cfg_path = tmp_path / "determinism.json"
    cfg_path.write_text(dumps_config(cfg))

    run_bytes = []
    for label in ("r1", "r2"):
        out = tmp_path / label
        assert cli.main(["run", "--config", str(cfg_path), "--out", str(out)]) == 0
        run_bytes.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})

    batch_bytes = []
    for label, parallelism in (("b1", 1), ("b2", 1), ("b4", 4)):
        out = tmp_path / label
        assert cli.main(["batch", "--config", str(cfg_path), "--seeds", "0..99",
                         "--parallelism", str(parallelism), "--out", str(out)]) == 0
        batch_bytes.append((out / "batch_summary.json").read_bytes())

    elapsed = time.monotonic() - started
    ok = (run_bytes[0] == run_bytes[1]
          and batch_bytes[0] == batch_bytes[1] == batch_bytes[2]
          and elapsed < 300.0)
    report(2, "determinism",
            ok, f"run x2 and batch(100 seeds, 200 ticks) x3 incl. parallelism 4 "
                f"byte-identical in {elapsed:.1f} s")


# -- 3: fire-point counterfactual soundness -----------------------------------------

def test_accept_03_fire_point_soundness(report):
    cfg = default_config()
    threshold = cfg.contagion.fire_threshold
    window = cfg.contagion.fire_window
    violations = []
    ignitions = 0
    for seed in range(50):
        sim = build_from_seed(cfg, seed)
        sim.run(cfg.run.ticks)
        if sim.fire_point is None:
            continue
        ignitions += 1
        replay = build_from_seed(cfg, seed)
        replay.watch_fire_point = False
        replay.run_until(sim.fire_point + 1)
        fork = replay.fork_bots_dormant()
        for _ in range(window):
            fork.step()
            if fork.history.organic_posts[-1] < threshold:
                violations.append(seed)
                break
    report(3, "fire-point soundness", ignitions > 0 and not violations,
            f"{ignitions}/50 seeds ignited; dormant-bot replay held organic "
            f"volume >= {threshold} for {window} ticks with {len(violations)} violations")


# -- 4: ignition rate grows with cohort size ------------------------------------------

def test_accept_04_ignition_monotonic(report):
    big = config_from_dict({"attack": {"bots": 200}})
    small = config_from_dict({"attack": {"bots": 20}})
    wins = losses = 0
    ignited_big = ignited_small = 0
    for seed in range(100):
        sim_big = build_from_seed(big, seed)
        sim_big.run(big.run.ticks)
        sim_small = build_from_seed(small, seed)
        sim_small.run(small.run.ticks)
        b, s = sim_big.fire_point is not None, sim_small.fire_point is not None
        ignited_big += b
        ignited_small += s
        if b and not s:
            wins += 1
        elif s and not b:
            losses += 1
    discordant = wins + losses
    p_value = (binomtest(wins, discordant, alternative="greater").pvalue
               if discordant else 1.0)
    ok = ignited_big >= ignited_small and discordant > 0 and p_value < 0.05
    report(4, "ignition monotonicity", ok,
            f"200-bot rate {ignited_big}/100 vs 20-bot {ignited_small}/100; "
            f"paired sign test p={p_value:.2e} < 0.05")


# -- 5: worker-focused retargeting ------------------------------------------------------

def test_accept_05_worker_focus(report):
    on_fn, off_fn = cli.TOGGLES["retarget_bots"]
    cfg_on, cfg_off = on_fn(default_config()), off_fn(default_config())
    stress_higher = visibility_lower = 0
    n = 100
    for seed in range(n):
        on = cli.run_metrics(cfg_on, seed)
        off = cli.run_metrics(cfg_off, seed)
        stress_higher += on["end_mean_stress"] > off["end_mean_stress"]
        visibility_lower += on["mean_focus_visibility"] < off["mean_focus_visibility"]
    ok = stress_higher >= 95 and visibility_lower >= 95
    report(5, "worker focus", ok,
            f"end roster stress higher in {stress_higher}/{n}, regulator "
            f"visibility lower in {visibility_lower}/{n} (need >= 95 each)")


# -- 6: stress raises breach success --------------------------------------------------

def test_accept_06_stress_breach_coupling(report):
    cfg = default_config()
    levels = (0.1, 0.4, 0.7)
    draws, repetitions = 100, 60
    sims = []
    for _ in levels:
        sim = build_from_seed(cfg, 0)
        sim.plan.stage = PlanStage.CYBER_ATTACK
        sims.append(sim)
    ordered = 0
    for rep in range(repetitions):
        freqs = []
        for idx, (level, sim) in enumerate(zip(levels, sims)):
            sim.accounts.stress[sim.roster_ids] = level
            rng = np.random.default_rng([rep, idx])
            hits = sum(
                execute_action(ActionKind.HUMAN_ERROR_EXPLOIT, sim, rng,
                               cfg.attack).success
                for _ in range(draws))
            freqs.append(hits / draws)
        ordered += freqs[0] < freqs[1] < freqs[2]
    ok = ordered >= math.ceil(0.95 * repetitions)
    report(6, "stress-breach coupling", ok,
            f"success frequency ordered 0.1 < 0.4 < 0.7 stress in "
            f"{ordered}/{repetitions} repetitions of {draws} draws (need >= 57)")


# -- 7: sentiment window arithmetic ---------------------------------------------------

def test_accept_07_sentiment_arithmetic(report):
    rng = np.random.default_rng(2024)
    cfg = default_config().analytics
    worst_closure = 0.0
    worst_compound = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 120))
        valences = rng.uniform(-1.0, 1.0, size=n)
        posts = [Post(author=i, tick=0, topic_id="x", surface=GENERAL_STREAM,
                      valence=float(v), organic=True)
                 for i, v in enumerate(valences)]
        s = aggregate_window(posts, 0, 0, 24, neutral_band=cfg.neutral_band,
                             alpha=cfg.compound_alpha)
        neg = sum(1 for v in valences if v < -cfg.neutral_band) / n
        pos = sum(1 for v in valences if v > cfg.neutral_band) / n
        neu = 1.0 - (sum(1 for v in valences if v < -cfg.neutral_band)
                     + sum(1 for v in valences if v > cfg.neutral_band)) / n
        total = float(np.sum(valences))
        compound = total / math.sqrt(total * total + cfg.compound_alpha)
        worst_closure = max(worst_closure,
                            abs(s.negative + s.neutral + s.positive - 1.0),
                            abs(s.negative - neg), abs(s.positive - pos),
                            abs(s.neutral - neu))
        worst_compound = max(worst_compound, abs(s.compound - compound))
    fixture_rows = load_sentiment_summaries(
        (DATA / "launch_storm_monthly_sentiment.csv").read_text(),
        closure_tolerance=0.01)
    first = fixture_rows[0]
    fixture_ok = (first.negative, first.neutral, first.positive, first.compound) == \
        (0.085, 0.757, 0.150, 0.163)
    ok = worst_closure <= 1e-9 and worst_compound <= 1e-12 and fixture_ok
    report(7, "sentiment arithmetic", ok,
            f"1000 random windows: closure err {worst_closure:.2e} <= 1e-9, "
            f"compound err {worst_compound:.2e} <= 1e-12; published monthly "
            f"fixture row loads within 0.01 closure")


# -- 8: early response beats late response ----------------------------------------------

def _timed_response_config(trigger_tick: int):
    cfg = config_from_dict({"attack": {"campaign_budget": 24}})
    playbook = (PolicySpec(kind="halt_product_and_review", trigger_tick=trigger_tick),)
    return replace(cfg, defense=replace(cfg.defense, enabled=True, playbook=playbook))


def _effective_duration(cfg, seed: int) -> float:
    sim = build_from_seed(cfg, seed)
    sim.run(cfg.run.ticks)
    if sim.onset is None:
        return 0.0
    end = sim.extinguished_tick if sim.extinguished_tick is not None else cfg.run.ticks
    return float(end - sim.onset)


def test_accept_08_response_timing(report):
    early_cfg = _timed_response_config(10)
    late_cfg = _timed_response_config(50)
    early = [_effective_duration(early_cfg, seed) for seed in range(100)]
    late = [_effective_duration(late_cfg, seed) for seed in range(100)]
    mean_early, mean_late = float(np.mean(early)), float(np.mean(late))
    ok = mean_early < mean_late
    report(8, "response timing", ok,
            f"mean duration: respond@10 {mean_early:.1f} ticks < respond@50 "
            f"{mean_late:.1f} ticks over 100 paired seeds")


# -- 9: artificial-vs-organic verdict ----------------------------------------------------

def test_accept_09_detection_exactness(report):
    bot_cfg = replace(default_config(),
                      defense=replace(default_config().defense, enabled=True))
    bot_sim = build_from_seed(bot_cfg, 0)
    bot_sim.run(60)
    bot_score = bot_sim.playbook.verdict.artificial_score

    organic_cfg = expand_preset("organic_only")
    organic_cfg = replace(organic_cfg,
                          defense=replace(organic_cfg.defense, enabled=True))
    organic_sim = build_from_seed(organic_cfg, 0)
    organic_sim.run(organic_cfg.run.ticks)
    organic_score = organic_sim.playbook.verdict.artificial_score

    ok = bot_score == 1.0 and organic_score == 0.0
    report(9, "artificial detection", ok,
            f"bot-ignited early-poster score {bot_score} == 1.0; organic-only "
            f"score {organic_score} == 0.0 (exact)")


# -- 10: cascade predictability harness ----------------------------------------------------

def test_accept_10_predictability(report):
    worst = 0.0
    for g in (0.6, 0.8, 0.9):
        series = [50.0 * g ** t for t in range(24)]
        forecast = predict_cascade(series, horizon=10, window=24, rmse_threshold=0.2)
        worst = max(worst, abs(forecast.decay_rate - g))
    noise_random = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        forecast = predict_cascade(rng.uniform(5.0, 50.0, size=30), horizon=10,
                                   window=24, rmse_threshold=0.2)
        noise_random += forecast.classification is CascadeClass.RANDOM

    cfg = default_config()
    labels = []
    for seed in range(30):
        sim = build_from_seed(cfg, seed)
        sim.run(cfg.run.ticks)
        labels.append(cli.analytics.run_outcome(sim)["predictable"])
    fraction = sum(1 for v in labels if v == "predictable") / len(labels)

    ok = worst <= 1e-9 and noise_random >= 95
    report(10, "predictability harness", ok,
            f"geometric decay recovered to {worst:.1e} <= 1e-9; white noise "
            f"classified random {noise_random}/100 (need >= 95); default-scenario "
            f"predictable fraction {fraction:.2f} (reported, not asserted)")


# -- 11: two-shock financial curve -----------------------------------------------------------

def test_accept_11_financial_two_shocks(report):
    proxy = FinancialProxy(base=100.0, floor=1.0)
    release_tick, attack_tick, ticks = 100, 1700, 2400
    for t in range(ticks):
        if t == release_tick:
            update_financial_proxy(proxy, -0.2, "release", kappa=1.0, rho=5e-4)
        elif t == attack_tick:
            update_financial_proxy(proxy, -0.15, "attack", kappa=1.0, rho=5e-4)
        else:
            update_financial_proxy(proxy, 0.0, kappa=1.0, rho=5e-4)
    series = np.asarray(proxy.series)
    first_min = int(np.argmin(series[:attack_tick]))
    second_min = attack_tick + int(np.argmin(series[attack_tick:]))
    pre_shock = series[release_tick - 1]
    drop = pre_shock - series[release_tick]
    recovered = series[attack_tick - 1] - series[release_tick]
    recovery_fraction = float(recovered / drop)
    ok = (first_min == release_tick and second_min == attack_tick
          and recovery_fraction > 0.5
          and proxy.markers == [(release_tick, "release"), (attack_tick, "attack")])
    report(11, "financial two-shock shape", ok,
            f"minima at marker ticks {first_min}/{second_min}; value regained "
            f"{recovery_fraction:.2f} of the first drop before the second shock "
            f"(need > 0.5)")
