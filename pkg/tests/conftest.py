import pytest

from firesim.scenario import build_from_seed, default_config


@pytest.fixture(scope="session")
def default_cfg():
    return default_config()


@pytest.fixture(scope="session")
def finished_run(default_cfg):
    """One completed default run shared by read-only tests."""
    sim = build_from_seed(default_cfg, 0)
    sim.run(default_cfg.run.ticks)
    return sim
