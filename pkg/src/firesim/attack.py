"""Attacker playbook: staged campaign plan and the follow-on actions.

The campaign walks a fixed six-stage plan: pick a grievance, amplify it
with bots, watch whether real users carry it, identify exposed workers,
pressure them, then strike.  A campaign that never catches returns to
topic selection (once the failed topic's discussion has died down) until
candidates run out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np

from . import defense
from .agents import BotCohort, BotMode, TargetTopic, procedure_compliance
from .socialgraph import AccountId, identify_human_targets

if TYPE_CHECKING:  # pragma: no cover
    from .contagion import Simulation
    from .scenario import AttackConfig, RansomConfig


class PlanStage(Enum):
    TOPIC_SELECTION = "topic_selection"
    LATENT_AMPLIFICATION = "latent_amplification"
    SPREAD_WATCH = "spread_watch"
    TARGET_IDENTIFICATION = "target_identification"
    WORKER_FOCUS = "worker_focus"
    CYBER_ATTACK = "cyber_attack"
    DONE = "done"
    ABORTED = "aborted"


_STAGE_ORDER = (
    PlanStage.TOPIC_SELECTION,
    PlanStage.LATENT_AMPLIFICATION,
    PlanStage.SPREAD_WATCH,
    PlanStage.TARGET_IDENTIFICATION,
    PlanStage.WORKER_FOCUS,
    PlanStage.CYBER_ATTACK,
    PlanStage.DONE,
)


def stage_index(stage: PlanStage) -> int:
    return _STAGE_ORDER.index(stage)


class ActionKind(Enum):
    DOS = "dos"
    PHYSICAL_ACTION = "physical_action"
    HUMAN_ERROR_EXPLOIT = "human_error_exploit"
    OFFERING_HELP = "offering_help"
    INSIDER_THREAT = "insider_threat"
    EXTORTION = "extortion"
    DEFENCE_AS_A_SERVICE = "defence_as_a_service"


@dataclass(frozen=True)
class ImpactVector:
    reputation: bool
    confidentiality: bool
    integrity: bool
    availability: bool


# Which security properties each action can touch. Fixed by construction;
# tests pin every row.
IMPACT_MATRIX: dict[ActionKind, ImpactVector] = {
    ActionKind.DOS: ImpactVector(False, False, True, True),
    ActionKind.PHYSICAL_ACTION: ImpactVector(False, False, True, True),
    ActionKind.HUMAN_ERROR_EXPLOIT: ImpactVector(True, True, True, True),
    ActionKind.OFFERING_HELP: ImpactVector(True, False, False, False),
    ActionKind.INSIDER_THREAT: ImpactVector(True, False, False, True),
    ActionKind.EXTORTION: ImpactVector(False, False, False, False),
    ActionKind.DEFENCE_AS_A_SERVICE: ImpactVector(False, False, False, False),
}

# Earliest plan stage at which each action makes sense.
ACTION_MIN_STAGE: dict[ActionKind, PlanStage] = {
    ActionKind.DOS: PlanStage.LATENT_AMPLIFICATION,
    ActionKind.PHYSICAL_ACTION: PlanStage.LATENT_AMPLIFICATION,
    ActionKind.EXTORTION: PlanStage.TOPIC_SELECTION,
    ActionKind.DEFENCE_AS_A_SERVICE: PlanStage.SPREAD_WATCH,
    ActionKind.OFFERING_HELP: PlanStage.WORKER_FOCUS,
    ActionKind.INSIDER_THREAT: PlanStage.WORKER_FOCUS,
    ActionKind.HUMAN_ERROR_EXPLOIT: PlanStage.CYBER_ATTACK,
}


class SequencingError(RuntimeError):
    """An action was attempted before its plan stage was reached."""


class NoTopicError(RuntimeError):
    """Every candidate topic has been tried and excluded."""


@dataclass
class ActionOutcome:
    kind: ActionKind
    tick: int
    success: bool
    probability: float
    impact: ImpactVector
    reputation_drop: float = 0.0
    downtime_ticks: int = 0
    exfiltrated: bool = False
    ransom_paid: float = 0.0

    def to_dict(self) -> dict:
        return {
            "action": self.kind.value,
            "tick": self.tick,
            "success": self.success,
            "probability": self.probability,
            "reputation_drop": self.reputation_drop,
            "downtime_ticks": self.downtime_ticks,
            "exfiltrated": self.exfiltrated,
            "ransom_paid": self.ransom_paid,
            "impact": {
                "reputation": self.impact.reputation,
                "confidentiality": self.impact.confidentiality,
                "integrity": self.impact.integrity,
                "availability": self.impact.availability,
            },
        }


@dataclass
class AttackPlan:
    """Campaign state; one stage transition at most per tick."""

    stage: PlanStage = PlanStage.TOPIC_SELECTION
    # the initial stage predates the first simulated tick
    stage_entries: list[tuple[str, int]] = field(
        default_factory=lambda: [(PlanStage.TOPIC_SELECTION.value, -1)])
    excluded_topics: list[str] = field(default_factory=list)
    targets: list[AccountId] = field(default_factory=list)
    actions: list[ActionOutcome] = field(default_factory=list)
    abandoned_at: int | None = None
    amplify_started: int | None = None
    flip_active: bool = False

    def enter(self, stage: PlanStage, tick: int) -> dict:
        self.stage = stage
        self.stage_entries.append((stage.value, tick))
        return {"tick": tick, "kind": "stage", "stage": stage.value}


def select_topic(candidates: list[TargetTopic], class_weights: dict[str, float],
                 excluded: list[str] | None = None) -> TargetTopic:
    """Most promising grievance: severity weighted by failure class.

    Deterministic; ties resolve to the lexicographically smallest topic id.
    """
    excluded = excluded or []
    pool = [t for t in candidates if t.topic_id not in excluded]
    if not pool:
        raise NoTopicError("no candidate topics left to ignite")
    return min(pool, key=lambda t: (-t.severity * class_weights.get(t.failure_class.value, 1.0),
                                    t.topic_id))


def retarget_bots(cohort: BotCohort, targets: list[AccountId], ramp: int,
                  start_tick: int) -> bool:
    """Shift the cohort's fire from the company page to worker profiles.

    Returns False (and leaves the cohort alone) when there is nothing to
    aim at.
    """
    if not targets:
        return False
    cohort.retarget_targets = tuple(int(t) for t in targets)
    cohort.retarget_start = start_tick
    cohort.retarget_ramp = int(ramp)
    return True


def flip_bots(cohort: BotCohort, fraction_per_tick: float) -> int:
    """Flip a fixed slice of the cohort from attack to support per call.

    The slice is ``ceil(fraction * cohort size)`` so any positive fraction
    finishes in at most ``ceil(1 / fraction)`` calls.  No-op on cohorts
    already fully defending.
    """
    if not 0.0 < fraction_per_tick <= 1.0:
        raise ValueError("fraction_per_tick must lie in (0, 1]")
    size = len(cohort.members)
    if cohort.mode is BotMode.DEFEND or cohort.defending >= size:
        return 0
    step = min(math.ceil(fraction_per_tick * size), size - cohort.defending)
    cohort.defending += step
    if cohort.defending >= size:
        cohort.mode = BotMode.DEFEND
        cohort.defending = size
    return step


def ransom_decision(cfg: "RansomConfig", rng: np.random.Generator) -> tuple[bool, float]:
    """Does the victim pay?  Returns (paid, probability used).

    Willingness decays exponentially with the demanded amount; the payment
    probability is willingness times the attacker's perceived reliability.
    ``force_outcome`` pins the result for scripted comparisons.
    """
    willingness = cfg.base_willingness * math.exp(-cfg.amount / cfg.amount_scale)
    p = float(np.clip(willingness * cfg.reliability, 0.0, 1.0))
    if cfg.force_outcome == "pay":
        return True, p
    if cfg.force_outcome == "refuse":
        return False, p
    return bool(rng.random() < p), p


def execute_action(kind: ActionKind, sim: "Simulation", rng: np.random.Generator,
                   cfg: "AttackConfig") -> ActionOutcome:
    """Resolve one follow-on action against the current company state."""
    plan = sim.plan
    stage = plan.stage if plan is not None else PlanStage.CYBER_ATTACK
    if stage is PlanStage.ABORTED:
        raise SequencingError("campaign aborted; no actions possible")
    if stage_index(stage) < stage_index(ACTION_MIN_STAGE[kind]):
        raise SequencingError(
            f"{kind.value} requires stage {ACTION_MIN_STAGE[kind].value}, "
            f"plan is in {stage.value}")

    company = sim.company
    impact = IMPACT_MATRIX[kind]
    outcome = ActionOutcome(kind=kind, tick=sim.tick, success=False,
                            probability=0.0, impact=impact)

    if kind is ActionKind.HUMAN_ERROR_EXPLOIT:
        members = company.roster.members
        fails = [1.0 - procedure_compliance(sim.accounts.account(i), company, sim.cfg.agents)
                 for i in members]
        p = float(np.mean(fails)) if fails else 0.0
    elif kind is ActionKind.INSIDER_THREAT:
        members = company.roster.members
        count = sum(
            1 for i in members
            if sim.accounts.stress[i] > cfg.insider_stress_min
            and sim.accounts.pride[i] < cfg.insider_pride_max)
        p = float(np.clip(cfg.insider_rate_per_candidate * count, 0.0, 1.0))
    elif kind is ActionKind.EXTORTION:
        paid, p = ransom_decision(cfg.ransom, rng)
        outcome.probability = p
        outcome.success = paid
        if paid:
            company.ransom_paid_total += cfg.ransom.amount
            outcome.ransom_paid = cfg.ransom.amount
            for cohort in sim.cohorts:
                if cohort.mode is BotMode.ATTACK:
                    cohort.mode = BotMode.DORMANT
        return outcome
    elif kind is ActionKind.DEFENCE_AS_A_SERVICE:
        paid, p = ransom_decision(cfg.service, rng)
        outcome.probability = p
        outcome.success = paid
        if paid:
            company.ransom_paid_total += cfg.service.amount
            outcome.ransom_paid = cfg.service.amount
            if plan is not None:
                plan.flip_active = True
        return outcome
    else:
        p = cfg.action_probabilities[kind.value]

    outcome.probability = p
    outcome.success = bool(rng.random() < p)
    if not outcome.success:
        return outcome

    if impact.reputation:
        drop = cfg.reputation_shocks.get(kind.value, 0.0)
        company.reputation = float(np.clip(company.reputation - drop, 0.0, 1.0))
        outcome.reputation_drop = drop
    if impact.confidentiality:
        company.data_exfiltrated = True
        outcome.exfiltrated = True
    if kind is ActionKind.OFFERING_HELP and outcome.success:
        # access is handed over voluntarily; data walks out with it
        company.data_exfiltrated = True
        outcome.exfiltrated = True
    if impact.integrity:
        company.integrity_compromised = True
    if impact.availability:
        downtime = cfg.downtime_ticks.get(kind.value, 0)
        company.downtime_remaining += downtime
        outcome.downtime_ticks = downtime
    return outcome


def advance_plan(plan: AttackPlan, sim: "Simulation", cfg: "AttackConfig",
                 tick: int) -> list[dict]:
    """One plan update for the tick just completed; at most one transition.

    Stages before the fire point never consume RNG, which keeps the
    engine's counterfactual forks aligned with offline replay.
    """
    events: list[dict] = []

    # The botnet runs its paid term from first amplification: completing the
    # plan's objectives does not silence it, only payout, flip, or abandon do.
    budget_spent = (plan.amplify_started is not None
                    and tick - plan.amplify_started >= cfg.campaign_budget)
    if budget_spent:
        retired = False
        for cohort in _attack_cohorts(sim):
            if cohort.mode is BotMode.ATTACK:
                cohort.mode = BotMode.DORMANT
                retired = True
        if retired:
            events.append({"tick": tick, "kind": "campaign_concluded"})

    if plan.stage in (PlanStage.DONE, PlanStage.ABORTED):
        if plan.flip_active:
            _flip_step(plan, sim, cfg, tick, events)
        return events

    for scheduled_tick, action_name in cfg.action_schedule:
        if scheduled_tick != tick:
            continue
        kind = ActionKind(action_name)
        try:
            outcome = execute_action(kind, sim, sim.rng, cfg)
        except SequencingError as err:
            events.append({"tick": tick, "kind": "action_skipped",
                           "action": kind.value, "reason": str(err)})
            continue
        plan.actions.append(outcome)
        sim.financial.markers.append((tick, kind.value))
        events.append({"tick": tick, "kind": "action", "action": kind.value,
                       "success": outcome.success})

    if plan.flip_active:
        _flip_step(plan, sim, cfg, tick, events)

    if budget_spent:
        done = sim.fire_point is not None
        events.append(plan.enter(PlanStage.DONE if done else PlanStage.ABORTED, tick))
        return events

    stage = plan.stage
    if stage is PlanStage.TOPIC_SELECTION:
        try:
            topic = select_topic(list(sim.topics), cfg.class_weights, plan.excluded_topics)
        except NoTopicError:
            events.append(plan.enter(PlanStage.ABORTED, tick))
            for cohort in _attack_cohorts(sim):
                cohort.mode = BotMode.DORMANT
            return events
        boost = defense.recurrence_boost(
            list(sim.cfg.company_history), topic, tick, sim.cfg.defense)
        sim.set_topic(topic, recurrence_multiplier=boost)
        for cohort in _attack_cohorts(sim):
            cohort.mode = BotMode.ATTACK
        plan.abandoned_at = None
        plan.amplify_started = tick
        events.append({"tick": tick, "kind": "topic_selected", "topic": topic.topic_id,
                       "recurrence_multiplier": boost})
        events.append(plan.enter(PlanStage.LATENT_AMPLIFICATION, tick))
        return events

    if stage in (PlanStage.LATENT_AMPLIFICATION, PlanStage.SPREAD_WATCH):
        if plan.abandoned_at is not None:
            if _topic_died(sim, cfg, tick):
                plan.excluded_topics.append(sim.topic.topic_id)
                events.append({"tick": tick, "kind": "topic_exhausted",
                               "topic": sim.topic.topic_id})
                events.append(plan.enter(PlanStage.TOPIC_SELECTION, tick))
            return events
        if stage is PlanStage.LATENT_AMPLIFICATION and sim.history.organic_posts[tick] > 0:
            events.append(plan.enter(PlanStage.SPREAD_WATCH, tick))
            return events
        if stage is PlanStage.SPREAD_WATCH and sim.fire_point is not None:
            events.append(plan.enter(PlanStage.TARGET_IDENTIFICATION, tick))
            plan.targets = identify_human_targets(
                sim.graph, sim.accounts, sim.company.roster,
                cfg.retarget_top_k, cfg.target_weights)
            events.append({"tick": tick, "kind": "targets_identified",
                           "targets": [int(i) for i in plan.targets]})
            return events
        started = plan.amplify_started if plan.amplify_started is not None else 0
        if tick - started >= cfg.spread_patience:
            plan.abandoned_at = tick
            for cohort in _attack_cohorts(sim):
                cohort.mode = BotMode.DORMANT
            events.append({"tick": tick, "kind": "amplification_abandoned",
                           "topic": sim.topic.topic_id})
        return events

    if stage is PlanStage.TARGET_IDENTIFICATION:
        if cfg.worker_focus_enabled and plan.targets:
            for cohort in _attack_cohorts(sim):
                retarget_bots(cohort, plan.targets, cfg.retarget_ramp, tick)
            events.append({"tick": tick, "kind": "retarget",
                           "ramp": cfg.retarget_ramp,
                           "targets": [int(i) for i in plan.targets]})
        events.append(plan.enter(PlanStage.WORKER_FOCUS, tick))
        return events

    if stage is PlanStage.WORKER_FOCUS:
        roster = sim.roster_ids
        mean_stress = float(sim.accounts.stress[roster].mean()) if len(roster) else 0.0
        if mean_stress >= cfg.stress_open_threshold:
            events.append(plan.enter(PlanStage.CYBER_ATTACK, tick))
        return events

    if stage is PlanStage.CYBER_ATTACK:
        kind = ActionKind(cfg.final_action)
        outcome = execute_action(kind, sim, sim.rng, cfg)
        plan.actions.append(outcome)
        sim.financial.markers.append((tick, kind.value))
        events.append({"tick": tick, "kind": "action", "action": kind.value,
                       "success": outcome.success})
        events.append(plan.enter(PlanStage.DONE, tick))
        return events

    return events


def _attack_cohorts(sim: "Simulation") -> list[BotCohort]:
    return [c for c in sim.cohorts if not c.cohort_id.startswith("defense")]


def _flip_step(plan: AttackPlan, sim: "Simulation", cfg: "AttackConfig",
               tick: int, events: list[dict]) -> None:
    # only live attack cohorts flip; dormant bots have nothing to convert
    flipped = 0
    flippable = False
    for cohort in _attack_cohorts(sim):
        if cohort.mode is not BotMode.ATTACK:
            continue
        flipped += flip_bots(cohort, cfg.flip_fraction)
        if cohort.mode is BotMode.ATTACK and cohort.defending < len(cohort.members):
            flippable = True
    if flipped:
        events.append({"tick": tick, "kind": "bots_flipped", "count": flipped})
    if not flippable:
        plan.flip_active = False


def _topic_died(sim: "Simulation", cfg: "AttackConfig", tick: int) -> bool:
    window = sim.cfg.contagion.extinguish_window
    eps = sim.cfg.contagion.extinguish_eps
    totals = sim.history.total_posts
    if len(totals) < window:
        return False
    return all(v < eps for v in totals[-window:])
