from __future__ import annotations

import numpy as np
import pytest

from combworks.comb import validate_comb
from combworks.linalg import marginals, vn_entropy
from combworks.scenarios import (
    SCENARIOS,
    expected_values,
    fig2b_env_state,
    gamma1,
    random_process,
    scenario,
    thermal_entropy,
)
from combworks.thermo import ThermalContext


@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_scenarios_are_valid_combs(name):
    p = scenario(name)
    assert validate_comb(p).passed
    assert p.metadata["name"] == name


def test_fig2b_environment_is_pure_with_thermal_marginals():
    ctx = ThermalContext.qubit(1.5, 0.8)
    env = fig2b_env_state(1.5, 0.8)
    assert np.trace(env @ env).real == pytest.approx(1.0, abs=1e-12)
    for m in marginals(env, (2, 2)):
        np.testing.assert_allclose(m, ctx.gibbs, atol=1e-12)
    assert vn_entropy(ctx.gibbs) == pytest.approx(thermal_entropy(1.5, 0.8), abs=1e-12)


def test_random_process_is_deterministic():
    a, b = random_process(3, 2, 2, 5), random_process(3, 2, 2, 5)
    assert np.array_equal(a.choi, b.choi)
    assert not np.allclose(a.choi, random_process(3, 2, 2, 6).choi)


def test_trivial_environment_gives_markov_process():
    from combworks.nonmarkov import nm_lower_bound
    from combworks.optimize import OptimizerConfig

    p = random_process(2, 2, 1, 3)
    assert nm_lower_bound(p, opt=OptimizerConfig(restarts=4))[0] == pytest.approx(0.0, abs=1e-9)


def test_thermal_environment_init():
    p = random_process(2, 2, 3, 1, env_init="thermal")
    assert validate_comb(p).passed


def test_expected_values_scale():
    vals = expected_values("markov-saturating", 1.0, 1.0, 3)
    assert vals["w_comb"][0] == pytest.approx(3 * np.log(1 + np.e), rel=1e-12)
    assert expected_values("fig2c", 1.0, 1.0)["w_global"][0] == pytest.approx(2 * gamma1(1.0, 1.0))


def test_errors():
    with pytest.raises(ValueError):
        scenario("nope")
    with pytest.raises(ValueError):
        scenario("fig2a", n=3)
    with pytest.raises(ValueError):
        random_process(2, 2, 2, 0, env_init="hot")
    with pytest.raises(ValueError):
        random_process(0)
