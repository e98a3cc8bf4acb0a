"""Company-side defense: detection, reactive policies, recurrence memory.

Policies live in a playbook (config) and fire on a tick or lifecycle-stage
trigger.  Proactive measures (training, partner support, the shared
account database) take effect at tick 0.  Detection scores how artificial
the early chatter looks from account creation ages, optionally enriched
by a shared database of known campaign accounts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from .agents import BotMode, TargetTopic
from .socialgraph import Account

if TYPE_CHECKING:  # pragma: no cover
    from .contagion import Simulation
    from .scenario import DefenseConfig, PolicySpec


class PolicyKind(Enum):
    SUPPORTING_BOTS = "supporting_bots"
    SCAPEGOAT = "scapegoat"
    DIALOGUE_ENGAGEMENT = "dialogue_engagement"
    DISTANCE_FROM_PARTNER = "distance_from_partner"
    APOLOGY_AND_CONTINUE = "apology_and_continue"
    HALT_PRODUCT_AND_REVIEW = "halt_product_and_review"
    INTERNAL_TRAINING = "internal_training"
    PARTNER_ASSISTANCE = "partner_assistance"
    SHARED_ACCOUNT_DATABASE = "shared_account_database"


PROACTIVE_POLICIES = frozenset({
    PolicyKind.INTERNAL_TRAINING,
    PolicyKind.PARTNER_ASSISTANCE,
    PolicyKind.SHARED_ACCOUNT_DATABASE,
})

# Reactive mitigations only work against the failure class they answer.
CLASS_MATCHED_POLICIES = {
    PolicyKind.DISTANCE_FROM_PARTNER: "social",
    PolicyKind.APOLOGY_AND_CONTINUE: "communication",
    PolicyKind.HALT_PRODUCT_AND_REVIEW: "product_service",
}

SUPPORT_COHORT_ID = "defense_support"
PARTNER_COHORT_ID = "defense_partner"


class PolicyMismatchError(ValueError):
    """A class-specific policy was applied against the wrong failure class."""


@dataclass
class FirestormVerdict:
    artificial_score: float
    flagged: list[int]
    evidence: dict[int, int]
    sample_size: int
    requested: int
    db_matched: list[int] = field(default_factory=list)
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "artificial_score": self.artificial_score,
            "flagged": list(self.flagged),
            "evidence": {str(k): v for k, v in sorted(self.evidence.items())},
            "sample_size": self.sample_size,
            "requested": self.requested,
            "db_matched": list(self.db_matched),
            "note": self.note,
        }


def detect_artificial(early_posters: Sequence[Account], now: int,
                      age_threshold: int, requested: int | None = None) -> FirestormVerdict:
    """Score how bot-like the first posters look from account age alone.

    Score is the exact fraction of early posters younger than the
    threshold at ``now``.  Short samples are used as-is with a note.
    """
    requested = len(early_posters) if requested is None else requested
    ages = {int(a.id): int(now - a.creation_tick) for a in early_posters}
    flagged = sorted(i for i, age in ages.items() if age < age_threshold)
    score = len(flagged) / len(ages) if ages else 0.0
    note = ""
    if len(ages) < requested:
        note = f"only {len(ages)} of {requested} requested early posts available"
    return FirestormVerdict(artificial_score=score, flagged=flagged, evidence=ages,
                            sample_size=len(ages), requested=requested, note=note)


_DB_HEADER = "account_id\tlast_seen_tick\tcampaign_id"


@dataclass
class AccountReputationDB:
    """Shareable record of accounts seen in earlier campaigns.

    Stored as a sorted text table so organisations can diff and merge
    their copies.
    """

    records: dict[int, tuple[int, str]] = field(default_factory=dict)

    @classmethod
    def load(cls, path: str | Path) -> "AccountReputationDB":
        records: dict[int, tuple[int, str]] = {}
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh):
                line = line.rstrip("\n")
                if not line or (line_no == 0 and line == _DB_HEADER):
                    continue
                account_id, last_seen, campaign = line.split("\t")
                records[int(account_id)] = (int(last_seen), campaign)
        return cls(records)

    def save(self, path: str | Path) -> None:
        lines = [_DB_HEADER]
        for account_id in sorted(self.records):
            last_seen, campaign = self.records[account_id]
            lines.append(f"{account_id}\t{last_seen}\t{campaign}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    def record(self, account_id: int, last_seen_tick: int, campaign_id: str) -> None:
        prev = self.records.get(int(account_id))
        if prev is None or prev[0] <= last_seen_tick:
            self.records[int(account_id)] = (int(last_seen_tick), campaign_id)

    def merge(self, other: "AccountReputationDB") -> None:
        for account_id, (last_seen, campaign) in other.records.items():
            self.record(account_id, last_seen, campaign)

    def __contains__(self, account_id: int) -> bool:
        return int(account_id) in self.records

    def __len__(self) -> int:
        return len(self.records)


def db_lookup(db: AccountReputationDB, account_ids: Iterable[int],
              verdict: FirestormVerdict) -> FirestormVerdict:
    """Enrich an age-based verdict with known-campaign matches.

    The combined score is the max of the age score and the matched
    fraction of distinct accounts, so database hits can only raise
    suspicion.
    """
    ids = sorted({int(i) for i in account_ids})
    matched = [i for i in ids if i in db]
    matched_fraction = len(matched) / len(ids) if ids else 0.0
    score = max(verdict.artificial_score, matched_fraction)
    flagged = sorted(set(verdict.flagged) | set(matched))
    return FirestormVerdict(
        artificial_score=score, flagged=flagged, evidence=dict(verdict.evidence),
        sample_size=verdict.sample_size, requested=verdict.requested,
        db_matched=matched, note=verdict.note)


@dataclass(frozen=True)
class PastFirestorm:
    """One remembered firestorm from the company's history."""

    topic_id: str
    failure_class: str
    tick: int


def recurrence_boost(company_history: Sequence[PastFirestorm],
                     candidate_topic: TargetTopic, now: int,
                     cfg: "DefenseConfig") -> float:
    """Activation multiplier from an anniversary of a related firestorm.

    Peaks at ``1 + gain`` when the most recent same-class firestorm lies
    exactly one recurrence period in the past; 1.0 with no related history.
    """
    related = [p for p in company_history
               if p.failure_class == candidate_topic.failure_class.value]
    if not related:
        return 1.0
    past = max(related, key=lambda p: p.tick)
    offset = abs(now - past.tick - cfg.recurrence_period)
    return 1.0 + cfg.recurrence_gain * math.exp(-offset / cfg.recurrence_tau)


@dataclass
class DefenseRuntime:
    """Mutable playbook state carried by one simulation run."""

    pending: list["PolicySpec"]
    applied: list[tuple[int, str]] = field(default_factory=list)
    verdict: FirestormVerdict | None = None
    db: AccountReputationDB | None = None
    startup_events: list[dict] = field(default_factory=list)
    support_active_since: dict[str, int] = field(default_factory=dict)
    support_withdrawn: set[str] = field(default_factory=set)
    posts_seen: int = 0


def build_runtime(cfg: "DefenseConfig") -> DefenseRuntime:
    runtime = DefenseRuntime(pending=list(cfg.playbook))
    wants_db = any(PolicyKind(s.kind) is PolicyKind.SHARED_ACCOUNT_DATABASE
                   for s in cfg.playbook)
    if wants_db and cfg.db_path is not None:
        try:
            runtime.db = AccountReputationDB.load(cfg.db_path)
        except OSError as err:
            runtime.startup_events.append({
                "tick": 0, "kind": "db_unavailable",
                "path": str(cfg.db_path), "reason": str(err)})
    elif wants_db:
        runtime.startup_events.append({
            "tick": 0, "kind": "db_unavailable", "path": None,
            "reason": "no db_path configured"})
    return runtime


def apply_policy(kind: PolicyKind, sim: "Simulation",
                 runtime: DefenseRuntime) -> dict:
    """Apply one policy to the running simulation; returns the event row.

    Class-specific mitigations raise PolicyMismatchError when aimed at the
    wrong failure class; the per-tick hook screens for that before calling.
    """
    cfg = sim.cfg.defense
    t = sim.tick
    event: dict = {"tick": t, "kind": "policy_applied", "policy": kind.value}

    if kind in CLASS_MATCHED_POLICIES:
        if sim.topic is None or CLASS_MATCHED_POLICIES[kind] != sim.topic.failure_class.value:
            have = "none" if sim.topic is None else sim.topic.failure_class.value
            raise PolicyMismatchError(
                f"{kind.value} answers {CLASS_MATCHED_POLICIES[kind]} failures, "
                f"topic failure class is {have}")
        factor = cfg.mitigation_factors[CLASS_MATCHED_POLICIES[kind]]
        event["severity_before"] = sim.severity
        sim.severity *= factor
        event["severity_after"] = sim.severity

    elif kind is PolicyKind.SUPPORTING_BOTS:
        cohort = next((c for c in sim.cohorts if c.cohort_id == SUPPORT_COHORT_ID), None)
        if cohort is None or not cohort.members:
            event["kind"] = "policy_no_effect"
            event["reason"] = "no prepared support cohort"
        else:
            cohort.mode = BotMode.DEFEND
            cohort.defending = len(cohort.members)
            runtime.support_active_since[cohort.cohort_id] = t
            runtime.support_withdrawn.discard(cohort.cohort_id)
            event["cohort_size"] = len(cohort.members)

    elif kind is PolicyKind.SCAPEGOAT:
        sim.activation_multiplier *= 1.0 - cfg.scapegoat_transfer
        event["transfer"] = cfg.scapegoat_transfer
        backfired = bool(sim.rng.random() < cfg.scapegoat_backfire_probability)
        event["backfired"] = backfired
        if backfired:
            sim.company.reputation = float(np.clip(
                sim.company.reputation - cfg.scapegoat_backfire_penalty, 0.0, 1.0))

    elif kind is PolicyKind.DIALOGUE_ENGAGEMENT:
        gain = int(cfg.dialogue_follower_gain)
        sim.company.page_followers += gain
        quota = int(round(cfg.dialogue_convert_fraction * gain))
        eligible = np.flatnonzero(sim.can_activate & ~sim.defender)
        quota = min(quota, len(eligible))
        converted: list[int] = []
        if quota > 0:
            picks = np.sort(sim.rng.choice(eligible, size=quota, replace=False))
            sim.defender[picks] = True
            sim.active[picks] = True
            sim.activated_ever[picks] = True
            converted = [int(i) for i in picks]
        event["follower_gain"] = gain
        event["converted"] = len(converted)

    elif kind is PolicyKind.INTERNAL_TRAINING:
        before = sim.company.security_posture
        sim.company.security_posture = float(np.clip(
            before + cfg.training_posture_boost, 0.0, 1.0))
        event["posture_before"] = before
        event["posture_after"] = sim.company.security_posture

    elif kind is PolicyKind.PARTNER_ASSISTANCE:
        cohort = next((c for c in sim.cohorts if c.cohort_id == PARTNER_COHORT_ID), None)
        if cohort is None or not cohort.members:
            event["kind"] = "policy_no_effect"
            event["reason"] = "no partner cohort configured"
        else:
            cohort.mode = BotMode.DEFEND
            cohort.defending = len(cohort.members)
            runtime.support_active_since.setdefault(cohort.cohort_id, t)
            event["cohort_size"] = len(cohort.members)

    elif kind is PolicyKind.SHARED_ACCOUNT_DATABASE:
        if runtime.db is None:
            event["kind"] = "policy_no_effect"
            event["reason"] = "database unavailable"
        else:
            event["db_records"] = len(runtime.db)

    runtime.applied.append((t, kind.value))
    return event


def run_playbook_tick(sim: "Simulation", runtime: DefenseRuntime) -> list[dict]:
    """Per-tick defense hook; returns events for the engine log."""
    cfg = sim.cfg.defense
    t = sim.tick
    events: list[dict] = []

    if runtime.startup_events:
        events.extend(runtime.startup_events)
        runtime.startup_events = []

    if t == 0:
        for spec in list(runtime.pending):
            if PolicyKind(spec.kind) in PROACTIVE_POLICIES:
                runtime.pending.remove(spec)
                events.append(apply_policy(PolicyKind(spec.kind), sim, runtime))

    _update_verdict(sim, runtime, cfg, events)

    for spec in list(runtime.pending):
        kind = PolicyKind(spec.kind)
        if not _triggered(spec, sim, t):
            continue
        if kind in CLASS_MATCHED_POLICIES:
            if sim.topic is None:
                continue
            if CLASS_MATCHED_POLICIES[kind] != sim.topic.failure_class.value:
                runtime.pending.remove(spec)
                events.append({
                    "tick": t, "kind": "policy_mismatch_skipped", "policy": kind.value,
                    "topic_class": sim.topic.failure_class.value,
                    "policy_class": CLASS_MATCHED_POLICIES[kind]})
                continue
        runtime.pending.remove(spec)
        events.append(apply_policy(kind, sim, runtime))

    _update_support_cohorts(sim, runtime, events)
    return events


def _triggered(spec: "PolicySpec", sim: "Simulation", t: int) -> bool:
    if spec.trigger_tick is not None:
        return t >= spec.trigger_tick
    if spec.trigger_stage is not None:
        return sim.tracker.stage.value == spec.trigger_stage
    return True


def _update_verdict(sim: "Simulation", runtime: DefenseRuntime,
                    cfg: "DefenseConfig", events: list[dict]) -> None:
    if runtime.verdict is not None:
        return
    if sim.tick > 0:
        runtime.posts_seen += int(sim.history.total_posts[sim.tick - 1])
    if runtime.posts_seen < cfg.detect_first_k:
        return
    authors = sim.post_log.first_authors(cfg.detect_first_k)
    accounts = [sim.accounts.account(a) for a in authors]
    verdict = detect_artificial(accounts, sim.tick, cfg.age_threshold,
                                requested=cfg.detect_first_k)
    if runtime.db is not None:
        verdict = db_lookup(runtime.db, authors, verdict)
    runtime.verdict = verdict
    events.append({"tick": sim.tick, "kind": "verdict",
                   "artificial_score": verdict.artificial_score,
                   "flagged": len(verdict.flagged),
                   "db_matched": len(verdict.db_matched)})


def _update_support_cohorts(sim: "Simulation", runtime: DefenseRuntime,
                            events: list[dict]) -> None:
    """Support posters stand down once organic chatter has died off.

    Without this, a defend cohort would keep the total volume above the
    extinguishment floor forever.  They re-arm if the topic flares again.
    """
    t = sim.tick
    window = sim.cfg.contagion.extinguish_window
    eps = sim.cfg.contagion.extinguish_eps
    organic = sim.history.organic_posts
    for cohort in sim.cohorts:
        since = runtime.support_active_since.get(cohort.cohort_id)
        if since is None:
            continue
        if cohort.cohort_id in runtime.support_withdrawn:
            if t > 0 and organic[t - 1] >= eps:
                cohort.mode = BotMode.DEFEND
                runtime.support_withdrawn.discard(cohort.cohort_id)
                runtime.support_active_since[cohort.cohort_id] = t
                events.append({"tick": t, "kind": "support_rearmed",
                               "cohort": cohort.cohort_id})
            continue
        if cohort.mode is not BotMode.DEFEND:
            continue
        if t - since < window or t < window:
            continue
        recent = organic[t - window:t]
        if all(v < eps for v in recent):
            cohort.mode = BotMode.DORMANT
            runtime.support_withdrawn.add(cohort.cohort_id)
            events.append({"tick": t, "kind": "support_withdrawn",
                           "cohort": cohort.cohort_id})


def response_timing_effect(history, response_tick: int | None, *,
                           eps: float, window: int) -> dict:
    """Summarise one run for response-timing comparisons.

    Duration runs from the first post to extinguishment (or to the end of
    the series when the volume never settles below ``eps``).
    """
    from .contagion import detect_extinguished

    totals = list(history.total_posts) if hasattr(history, "total_posts") else list(history)
    onset = next((i for i, v in enumerate(totals) if v > 0), None)
    if onset is None:
        return {"response_tick": response_tick, "onset": None,
                "extinguished_tick": None, "duration": 0,
                "peak_volume": 0.0, "peak_tick": None}
    rel = detect_extinguished(totals[onset:], eps=eps, window=window)
    extinguished = None if rel is None else onset + rel
    duration = (len(totals) - onset) if extinguished is None else extinguished - onset
    peak_tick = int(np.argmax(totals))
    return {"response_tick": response_tick, "onset": onset,
            "extinguished_tick": extinguished, "duration": duration,
            "peak_volume": float(max(totals)), "peak_tick": peak_tick}
