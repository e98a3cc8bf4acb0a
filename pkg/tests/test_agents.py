import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from firesim.agents import (BotCohort, BotMode, CompanyState, FailureClass,
                            TargetTopic, activation_probability,
                            alignment_scores, bot_emit, draw_organic_valence,
                            procedure_compliance, saturate, stress_step,
                            susceptibility, susceptibility_terms, update_stress,
                            user_react)
from firesim.scenario import AgentConfig
from firesim.socialgraph import Account, AccountKind, CompanyRoster


def _topic(severity=0.8, appeal=(0.5, 0.4, 0.6, 0.5, 0.7)):
    return TargetTopic("broken-product", FailureClass.PRODUCT_SERVICE, severity, appeal)


def _account(ocean, stress=0.0, pride=None):
    return Account(id=0, kind=AccountKind.REAL_USER, creation_tick=-5000,
                   ocean=np.asarray(ocean, dtype=float), pride=pride,
                   stress=stress, posting_rate=0.35)


def test_alignment_is_mean_weighted_appeal():
    topic = _topic(appeal=(1.0, 0.0, 0.0, 0.0, 0.0))
    scores = alignment_scores(np.array([[0.5, 0.9, 0.9, 0.9, 0.9]]), topic)
    assert scores[0] == pytest.approx(0.1)  # only the first trait counts, /5


def test_susceptibility_logistic_oracle():
    cfg = AgentConfig(beta=10.0, theta=0.7)
    topic = _topic(severity=0.8, appeal=(1.0, 1.0, 1.0, 1.0, 1.0))
    # alignment = mean(ocean) = 0.8 -> logistic(10 * 0.1)
    acct = _account([0.8] * 5)
    expected = 0.8 / (1.0 + math.exp(-1.0))
    assert susceptibility(acct, topic, 1.0, cfg) == pytest.approx(expected, abs=1e-12)


def test_susceptibility_clipped_to_unit():
    cfg = AgentConfig(beta=10.0, theta=0.0)
    topic = _topic(severity=1.0, appeal=(1.0,) * 5)
    acct = _account([1.0] * 5)
    assert susceptibility(acct, topic, 5.0, cfg) == 1.0


def test_activation_probability_closed_form():
    assert activation_probability(0.25, 0) == 0.0
    assert activation_probability(0.25, 1) == pytest.approx(0.25)
    assert activation_probability(0.25, 3) == pytest.approx(1 - 0.75 ** 3)
    assert activation_probability(1.0, 2) == 1.0


def test_activation_probability_monte_carlo():
    # empirical frequency of >=1 success in e independent s-trials
    rng = np.random.default_rng(0)
    s, e, n = 0.12, 4, 10_000
    hits = (rng.random((n, e)) < s).any(axis=1).mean()
    assert activation_probability(s, e) == pytest.approx(hits, abs=0.02)


def test_stress_step_oracle():
    cfg = AgentConfig(stress_decay=0.05, gamma_direct=0.3, gamma_ambient=0.01,
                      half_saturation=10.0)
    # mentions at half saturation: 0.2 * 0.95 + 0.3 * 0.5 = 0.34
    out = stress_step(0.2, mentions=10.0, ambient=0.0, cfg=cfg)
    assert out == pytest.approx(0.34, abs=1e-12)


def test_stress_step_clips_and_decays():
    cfg = AgentConfig(stress_decay=0.1, gamma_direct=0.9, gamma_ambient=0.01,
                      half_saturation=1.0)
    assert stress_step(1.0, mentions=1e9, ambient=1e9, cfg=cfg) == 1.0
    # no pressure: pure geometric decay
    assert stress_step(0.5, 0.0, 0.0, cfg) == pytest.approx(0.45)


def test_update_stress_is_pure():
    cfg = AgentConfig()
    acct = _account([0.5] * 5, stress=0.3)
    out = update_stress(acct, mentions=5.0, ambient=2.0, cfg=cfg)
    assert acct.stress == 0.3
    assert 0.0 <= out <= 1.0


def test_procedure_compliance_oracle():
    cfg = AgentConfig(stress_compliance_weight=0.6)
    roster = CompanyRoster(company_id="co")
    company = CompanyState(roster=roster, security_posture=0.9)
    calm = _account([0.5] * 5, stress=0.0, pride=0.8)
    fried = _account([0.5] * 5, stress=0.5, pride=0.8)
    assert procedure_compliance(calm, company, cfg) == pytest.approx(0.9)
    assert procedure_compliance(fried, company, cfg) == pytest.approx(0.63)


def test_saturate_shape():
    assert saturate(0.0, 10.0) == 0.0
    assert saturate(10.0, 10.0) == pytest.approx(0.5)
    assert saturate(1e12, 10.0) == pytest.approx(1.0, abs=1e-9)


def test_draw_organic_valence_bounds_and_skew():
    cfg = AgentConfig()
    rng = np.random.default_rng(3)
    vals = draw_organic_valence(FailureClass.PRODUCT_SERVICE, rng, cfg, size=20_000)
    assert np.all(vals >= -1.0) and np.all(vals <= 1.0)
    # base_negative_weight 0.7 at class multiplier 1.0: most mass negative
    assert (vals < 0).mean() > 0.6
    assert vals.mean() < -0.2


def test_user_react_needs_exposure_and_draws_once_when_skipped():
    cfg = AgentConfig()
    acct = _account([0.9] * 5)
    rng = np.random.default_rng(0)
    state = rng.bit_generator.state
    assert user_react(acct, 0, _topic(), rng, cfg) is None
    assert rng.bit_generator.state == state  # zero exposure consumes no rng


def test_user_react_activation_rate_matches_probability():
    cfg = AgentConfig(beta=10.0, theta=0.5)
    topic = _topic(severity=0.8, appeal=(0.9,) * 5)
    acct = _account([0.7] * 5)
    s = susceptibility(acct, topic, cfg.class_multipliers["product_service"], cfg)
    p = activation_probability(s, 2)
    rng = np.random.default_rng(1)
    n = 10_000
    hits = sum(user_react(acct, 2, topic, rng, cfg) is not None for _ in range(n))
    assert hits / n == pytest.approx(p, abs=0.02)


def test_user_react_post_fields():
    cfg = AgentConfig(beta=10.0, theta=0.0)
    topic = _topic(severity=1.0, appeal=(1.0,) * 5)
    acct = _account([1.0] * 5)
    rng = np.random.default_rng(2)
    post = user_react(acct, 5, topic, rng, cfg, tick=17)
    assert post is not None
    assert post.organic and post.tick == 17 and post.topic_id == topic.topic_id
    assert -1.0 <= post.valence <= 1.0


# -- bot cohorts -------------------------------------------------------------

def _cohort(n=30, mode=BotMode.ATTACK, **kw):
    return BotCohort(cohort_id="attack-0", members=list(range(100, 100 + n)),
                     posting_rate=1.0, creation_tick=-48, mode=mode, **kw)


def test_dormant_cohort_emits_nothing_and_no_rng():
    rng = np.random.default_rng(0)
    state = rng.bit_generator.state
    posts = bot_emit(_cohort(mode=BotMode.DORMANT), 3, _topic(), rng, noise=0.2)
    assert posts == []
    assert rng.bit_generator.state == state


def test_attack_cohort_pushes_negative_company_page():
    rng = np.random.default_rng(1)
    posts = bot_emit(_cohort(), 3, _topic(severity=0.8), rng, noise=0.1)
    assert len(posts) > 0
    assert all(not p.organic for p in posts)
    assert all(p.valence <= -0.7 + 1e-9 for p in posts)
    assert all(p.surface.kind.name == "COMPANY_PAGE" for p in posts)


def test_defend_cohort_pushes_positive():
    rng = np.random.default_rng(1)
    posts = bot_emit(_cohort(mode=BotMode.DEFEND), 3, _topic(severity=0.8), rng, noise=0.1)
    assert posts and all(p.valence >= 0.7 - 1e-9 for p in posts)


def test_employee_share_ramp():
    c = _cohort(retarget_targets=(7, 8), retarget_start=20, retarget_ramp=10)
    assert c.employee_share(19) == 0.0
    assert c.employee_share(20) == 0.0
    assert c.employee_share(25) == pytest.approx(0.5)
    assert c.employee_share(30) == 1.0
    assert c.employee_share(99) == 1.0


def test_retargeted_posts_move_to_employee_profiles():
    c = _cohort(n=200, retarget_targets=(7, 8, 9), retarget_start=0, retarget_ramp=0)
    rng = np.random.default_rng(5)
    posts = bot_emit(c, 1, _topic(), rng, noise=0.0)
    profiles = [p for p in posts if p.surface.kind.name == "EMPLOYEE_PROFILE"]
    assert len(profiles) == len(posts)  # share 1.0 once the ramp is over
    assert {p.surface.target for p in profiles} <= {7, 8, 9}


def test_flipped_members_defend_while_rest_attack():
    c = _cohort(n=100, defending=50)
    rng = np.random.default_rng(6)
    posts = bot_emit(c, 1, _topic(), rng, noise=0.0)
    flipped = [p for p in posts if p.author < 150]
    loyal = [p for p in posts if p.author >= 150]
    assert flipped and loyal
    assert all(p.valence > 0 for p in flipped)
    assert all(p.valence < 0 for p in loyal)


# -- properties ---------------------------------------------------------------

@given(st.floats(min_value=0.0, max_value=1.0),
       st.integers(min_value=0, max_value=50))
@settings(max_examples=100, deadline=None)
def test_activation_probability_bounds(s, e):
    p = float(activation_probability(s, e))
    assert 0.0 <= p <= 1.0
    if e > 0 and s > 0:
        assert p >= float(activation_probability(s, e - 1)) - 1e-12


@given(st.floats(min_value=0.0, max_value=1.0),
       st.floats(min_value=0.0, max_value=1e4),
       st.floats(min_value=0.0, max_value=1e4))
@settings(max_examples=100, deadline=None)
def test_stress_step_stays_in_unit_interval(s, mentions, ambient):
    cfg = AgentConfig()
    out = float(stress_step(s, mentions, ambient, cfg))
    assert 0.0 <= out <= 1.0


@given(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=5, max_size=5))
@settings(max_examples=60, deadline=None)
def test_susceptibility_monotone_in_severity(ocean):
    cfg = AgentConfig()
    acct = _account(ocean)
    lo = susceptibility(acct, _topic(severity=0.3), 1.0, cfg)
    hi = susceptibility(acct, _topic(severity=0.9), 1.0, cfg)
    assert hi >= lo - 1e-12
