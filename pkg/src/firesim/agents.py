"""Behavioural rules for the simulated population.

Three account populations share one graph: organic users who react to what
they see, company staff whose stress and procedure compliance respond to
targeted pressure, and bot cohorts driven by an attack (or defense) plan.
All randomness flows through explicitly passed generators so runs replay
bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum
from typing import TYPE_CHECKING

import numpy as np

from .socialgraph import Account, AccountId, CompanyRoster

if TYPE_CHECKING:  # pragma: no cover
    from .scenario import AgentConfig


class FailureClass(Enum):
    """What kind of corporate failure a topic hangs on."""

    SOCIAL = "social"
    COMMUNICATION = "communication"
    PRODUCT_SERVICE = "product_service"


class SurfaceKind(IntEnum):
    COMPANY_PAGE = 0
    EMPLOYEE_PROFILE = 1
    GENERAL_STREAM = 2


@dataclass(frozen=True)
class Surface:
    """Where a post lands; employee profiles carry the target account."""

    kind: SurfaceKind
    target: AccountId | None = None

    def __post_init__(self):
        if self.kind is SurfaceKind.EMPLOYEE_PROFILE and self.target is None:
            raise ValueError("employee profile surface needs a target account")
        if self.kind is not SurfaceKind.EMPLOYEE_PROFILE and self.target is not None:
            raise ValueError("only employee profile surfaces carry a target")

    def as_text(self) -> str:
        if self.kind is SurfaceKind.EMPLOYEE_PROFILE:
            return f"employee_profile:{self.target}"
        return self.kind.name.lower()

    @classmethod
    def from_text(cls, text: str) -> "Surface":
        if text.startswith("employee_profile:"):
            return cls(SurfaceKind.EMPLOYEE_PROFILE, int(text.split(":", 1)[1]))
        try:
            return cls(SurfaceKind[text.upper()])
        except KeyError:
            raise ValueError(f"unknown surface {text!r}") from None


COMPANY_PAGE = Surface(SurfaceKind.COMPANY_PAGE)
GENERAL_STREAM = Surface(SurfaceKind.GENERAL_STREAM)


@dataclass(frozen=True)
class TargetTopic:
    """A grievance candidate the attacker can try to ignite."""

    topic_id: str
    failure_class: FailureClass
    severity: float
    appeal: tuple[float, float, float, float, float]

    def __post_init__(self):
        if not 0.0 <= self.severity <= 1.0:
            raise ValueError("severity must lie in [0, 1]")
        if len(self.appeal) != 5 or not all(0.0 <= a <= 1.0 for a in self.appeal):
            raise ValueError("appeal must be five components in [0, 1]")


@dataclass(frozen=True)
class Post:
    author: AccountId
    tick: int
    topic_id: str
    surface: Surface
    valence: float  # [-1, 1]
    organic: bool
    # only known for archive imports, where the export carries it
    author_created_tick: int | None = None

    def __post_init__(self):
        if not -1.0 <= self.valence <= 1.0:
            raise ValueError("valence must lie in [-1, 1]")


class BotMode(Enum):
    DORMANT = "dormant"
    ATTACK = "attack"
    DEFEND = "defend"


@dataclass
class BotCohort:
    """A block of coordinated accounts posting on schedule.

    ``defending`` counts members (taken from the front of ``members``) that
    have been flipped to supportive posting; the rest follow ``mode``.
    Retargeting linearly shifts post surfaces from the company page to the
    configured employee profiles over ``retarget_ramp`` ticks.
    """

    cohort_id: str
    members: list[AccountId]
    posting_rate: float
    creation_tick: int
    mode: BotMode = BotMode.DORMANT
    defending: int = 0
    retarget_targets: tuple[AccountId, ...] = ()
    retarget_start: int | None = None
    retarget_ramp: int = 0

    def employee_share(self, tick: int) -> float:
        """Fraction of attack posts aimed at employee profiles this tick."""
        if self.retarget_start is None or not self.retarget_targets or tick < self.retarget_start:
            return 0.0
        if self.retarget_ramp <= 0:
            return 1.0
        return min(1.0, (tick - self.retarget_start) / self.retarget_ramp)


@dataclass
class CompanyState:
    """Mutable company-side state the firestorm acts on."""

    roster: CompanyRoster
    security_posture: float
    reputation: float = 1.0
    page_followers: int = 0
    downtime_remaining: int = 0
    data_exfiltrated: bool = False
    integrity_compromised: bool = False
    ransom_paid_total: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.security_posture <= 1.0:
            raise ValueError("security_posture must lie in [0, 1]")


# -- organic reaction ------------------------------------------------------

def _logistic(x):
    return 1.0 / (1.0 + np.exp(-x))


def alignment_scores(ocean: np.ndarray, topic: TargetTopic) -> np.ndarray:
    """Mean trait-weighted appeal, one score in [0, 1] per account row."""
    appeal = np.asarray(topic.appeal, dtype=np.float64)
    return np.atleast_2d(ocean) @ appeal / len(appeal)


def susceptibility_terms(ocean: np.ndarray, topic: TargetTopic, cfg: "AgentConfig") -> np.ndarray:
    """Logistic alignment factor, before severity and class weighting."""
    return _logistic(cfg.beta * (alignment_scores(ocean, topic) - cfg.theta))


def susceptibility(account: Account, topic: TargetTopic, class_multiplier: float,
                   cfg: "AgentConfig") -> float:
    """Probability a single seen post flips this account onto the topic."""
    term = susceptibility_terms(account.ocean, topic, cfg)[0]
    return float(np.clip(term * topic.severity * class_multiplier, 0.0, 1.0))


def activation_probability(susceptibility_value, exposure) -> np.ndarray:
    """Independent per-post trials: 1 - (1 - s)^exposure."""
    s = np.clip(np.asarray(susceptibility_value, dtype=np.float64), 0.0, 1.0)
    return 1.0 - np.power(1.0 - s, np.asarray(exposure, dtype=np.float64))


def draw_organic_valence(failure_class: FailureClass, rng: np.random.Generator,
                         cfg: "AgentConfig", size: int | None = None) -> np.ndarray | float:
    """Mixture of a negative and a mildly positive uniform component.

    The negative mass is the configured base weight scaled by the failure
    class multiplier, so classes that grip harder also skew angrier.
    """
    w_neg = float(np.clip(
        cfg.base_negative_weight * cfg.class_multipliers[failure_class.value], 0.0, 1.0))
    n = 1 if size is None else size
    pick_neg = rng.random(n) < w_neg
    u = rng.random(n)
    vals = np.where(pick_neg, -1.0 + 0.8 * u, -0.2 + 0.8 * u)
    return float(vals[0]) if size is None else vals


def user_react(account: Account, exposure: int, topic: TargetTopic,
               rng: np.random.Generator, cfg: "AgentConfig",
               boost: float = 1.0, tick: int = 0) -> Post | None:
    """Roll activation for one inactive account; returns its first post.

    ``boost`` folds in recurrence and defensive multipliers on top of the
    per-post susceptibility combination.
    """
    if exposure <= 0:
        return None
    mult = cfg.class_multipliers[topic.failure_class.value]
    s = susceptibility(account, topic, mult, cfg)
    p = float(np.clip(activation_probability(s, exposure) * boost, 0.0, 1.0))
    if rng.random() >= p:
        return None
    surface = COMPANY_PAGE if rng.random() < cfg.organic_company_page_fraction else GENERAL_STREAM
    valence = draw_organic_valence(topic.failure_class, rng, cfg)
    return Post(author=account.id, tick=tick, topic_id=topic.topic_id,
                surface=surface, valence=float(valence), organic=True)


# -- bot posting -----------------------------------------------------------

def bot_emit_arrays(cohort: BotCohort, tick: int, topic: TargetTopic,
                    rng: np.random.Generator, *, noise: float):
    """Vectorised cohort emission: (authors, valences, surface kinds, targets).

    Attack members push ``-severity`` (plus bounded noise), shifting from the
    company page toward the retarget profiles once a ramp is active; flipped
    or defending members push ``+severity`` onto the company page.  Dormant
    cohorts emit nothing and consume no randomness.
    """
    empty = (np.empty(0, dtype=np.intp), np.empty(0), np.empty(0, dtype=np.int8),
             np.empty(0, dtype=np.intp))
    if cohort.mode is BotMode.DORMANT or not cohort.members:
        return empty
    counts = rng.poisson(cohort.posting_rate, size=len(cohort.members))
    total = int(counts.sum())
    if total == 0:
        return empty
    authors = np.repeat(np.asarray(cohort.members, dtype=np.intp), counts)
    if cohort.mode is BotMode.DEFEND:
        defending = np.ones(total, dtype=bool)
    else:
        defending = np.repeat(np.arange(len(cohort.members)) < cohort.defending, counts)
    wobble = noise * (2.0 * rng.random(total) - 1.0)
    valence = np.clip(np.where(defending, topic.severity, -topic.severity) + wobble,
                      -1.0, 1.0)
    surface_kind = np.full(total, SurfaceKind.COMPANY_PAGE, dtype=np.int8)
    surface_target = np.full(total, -1, dtype=np.intp)
    share = cohort.employee_share(tick)
    if share > 0.0:
        to_profile = (rng.random(total) < share) & ~defending
        picks = rng.integers(len(cohort.retarget_targets), size=total)
        surface_kind[to_profile] = SurfaceKind.EMPLOYEE_PROFILE
        chosen = np.asarray(cohort.retarget_targets, dtype=np.intp)[picks]
        surface_target[to_profile] = chosen[to_profile]
    return authors, valence, surface_kind, surface_target


def bot_emit(cohort: BotCohort, tick: int, topic: TargetTopic,
             rng: np.random.Generator, *, noise: float) -> list[Post]:
    """Posts emitted by a cohort this tick; see ``bot_emit_arrays``."""
    authors, valence, surface_kind, surface_target = bot_emit_arrays(
        cohort, tick, topic, rng, noise=noise)
    posts = []
    for k in range(len(authors)):
        if surface_kind[k] == SurfaceKind.EMPLOYEE_PROFILE:
            surface = Surface(SurfaceKind.EMPLOYEE_PROFILE, int(surface_target[k]))
        else:
            surface = COMPANY_PAGE
        posts.append(Post(author=int(authors[k]), tick=tick, topic_id=topic.topic_id,
                          surface=surface, valence=float(valence[k]), organic=False))
    return posts


# -- worker pressure -------------------------------------------------------

def saturate(x, half: float) -> np.ndarray:
    """x / (x + half): 0 at 0, half-effect at ``half``, asymptote 1."""
    x = np.asarray(x, dtype=np.float64)
    return x / (x + half)


def stress_step(stress, mentions, ambient, cfg: "AgentConfig",
                direct_gain: float | None = None) -> np.ndarray:
    """Vector stress update: decayed old stress plus saturating pressure."""
    gain = cfg.gamma_direct if direct_gain is None else direct_gain
    out = (np.asarray(stress, dtype=np.float64) * (1.0 - cfg.stress_decay)
           + gain * saturate(mentions, cfg.half_saturation)
           + cfg.gamma_ambient * saturate(ambient, cfg.half_saturation))
    return np.clip(out, 0.0, 1.0)


def update_stress(account: Account, mentions: float, ambient: float,
                  cfg: "AgentConfig") -> float:
    """New stress for one roster member; pure, does not mutate the account."""
    return float(stress_step(account.stress, mentions, ambient, cfg))


def procedure_compliance(account: Account, company: CompanyState,
                         cfg: "AgentConfig") -> float:
    """How reliably this person follows security procedure right now."""
    value = company.security_posture * (1.0 - cfg.stress_compliance_weight * account.stress)
    return float(np.clip(value, 0.0, 1.0))
