from __future__ import annotations

import math

import numpy as np
import pytest

from combworks.channels import QuantumChannel
from combworks.comb import markov_product
from combworks.linalg import vn_entropy
from combworks.optimize import OptimizerConfig
from combworks.protocols import (
    comb_work_bracket,
    gap_report,
    global_value,
    global_work,
    joint_value,
    joint_work,
    local_max_work,
    run_chain,
    sequential_work,
)
from combworks.scenarios import fig2a, fig2b, fig2c, markov_random, markov_saturating, random_process
from combworks.thermo import ThermalContext, channel_work, f_max

# E tanh(E / 2kT) at E = kT = 1
FIG2A_SEQ = 0.46211715726000974
# 2 kT S(gamma) at E = kT = 1
FIG2B_GLOBAL = 1.1644062177764358

FAST = OptimizerConfig(restarts=6)


@pytest.fixture
def ctx():
    return ThermalContext.qubit(1.0, 1.0)


def _bloch(r, theta):
    return 0.5 * np.array([[1 + r * math.cos(theta), r * math.sin(theta)],
                           [r * math.sin(theta), 1 - r * math.cos(theta)]], dtype=complex)


def test_fig2a_sequential(ctx):
    wv, r = sequential_work(fig2a(), ctx, FAST)
    assert wv.value == pytest.approx(FIG2A_SEQ, abs=1e-6)
    assert len(r) == 2


def test_fig2a_joint_against_grid(ctx):
    p = fig2a()
    wv, r = joint_work(p, ctx, FAST)
    # brute force over a 1 degree Bloch grid; the step-2 input is free, so gamma is optimal there
    best = -math.inf
    for theta in np.radians(np.arange(0, 181)):
        for rad in (0.25, 0.5, 0.75, 0.9, 1.0):
            best = max(best, joint_value(p, ctx, [_bloch(rad, theta), ctx.gibbs]))
    assert best == pytest.approx(1.0, abs=1e-6)
    assert wv.value == pytest.approx(1.0, abs=1e-3)
    assert wv.value >= best - 1e-6


def test_fig2b_values(ctx):
    p = fig2b()
    seq, _ = sequential_work(p, ctx, FAST)
    joint, _ = joint_work(p, ctx, FAST)
    glob, _ = global_work(p, ctx, FAST)
    assert seq.value == pytest.approx(0.0, abs=1e-6)
    assert joint.value == pytest.approx(0.0, abs=1e-3)
    assert glob.value == pytest.approx(FIG2B_GLOBAL, abs=1e-3)
    assert FIG2B_GLOBAL == pytest.approx(2 * vn_entropy(ctx.gibbs), abs=1e-12)


def test_fig2c_values(ctx):
    p = fig2c()
    glob, _ = global_work(p, ctx, FAST)
    g1 = ctx.gamma_min
    assert glob.value <= 2 * g1 + 1e-3
    br = comb_work_bracket(p, ctx, FAST, strategies=("feedthrough",))
    assert br.lower.value >= 1.0 - 1e-6
    assert br.strategy == "feedthrough"
    assert br.lower.value <= br.upper


def test_markov_saturating(ctx):
    p = markov_saturating(n=3)
    seq, r = sequential_work(p, ctx, FAST)
    assert seq.value == pytest.approx(3 * f_max(ctx), abs=1e-6)
    for x in r:
        np.testing.assert_allclose(x, ctx.gibbs, atol=1e-4)


def test_identical_channels_add_up(ctx):
    ch = markov_random(1, 2, 12).markov[0]
    single = channel_work(ch, ctx, FAST).value
    for k in (2, 3):
        wv, _ = sequential_work(markov_product([ch] * k), ctx, FAST)
        assert wv.value == pytest.approx(k * single, abs=1e-6)


def test_global_value_decomposes(ctx):
    rng = np.random.default_rng(2)
    from combworks.comb import global_output
    from combworks.linalg import multi_mutual_info
    from combworks.rand import random_state

    p = random_process(2, 2, 2, 9)
    for _ in range(5):
        r = [random_state(2, rng) for _ in range(2)]
        mi = multi_mutual_info(global_output(p, r), (2, 2))
        assert global_value(p, ctx, r) == pytest.approx(joint_value(p, ctx, r) + ctx.kT * mi, abs=1e-7)


def test_local_max(ctx):
    p = fig2a()
    # step 1 of fig2a returns gamma whatever goes in
    assert local_max_work(p, 1, ctx, FAST).value == pytest.approx(0.0, abs=1e-7)
    # step 2 flips the stored step-1 input
    assert local_max_work(p, 2, ctx, FAST).value == pytest.approx(f_max(ctx), abs=1e-5)
    with pytest.raises(ValueError):
        local_max_work(p, 3, ctx, FAST)


def test_markov_process_report_collapses(ctx):
    rep = gap_report(markov_random(2, 2, 4), ctx, FAST)
    assert rep.w_seq.value == pytest.approx(rep.w_joint.value, abs=1e-3)
    assert rep.w_joint.value == pytest.approx(rep.w_global.value, abs=1e-3)
    assert rep.nm.lower == pytest.approx(0.0, abs=1e-6)
    assert all(c.passed for c in rep.checks), [c for c in rep.checks if not c.passed]


@pytest.mark.parametrize("seed", [0, 1])
def test_hierarchy_on_random_process(ctx, seed):
    chain = run_chain(random_process(2, 2, 2, seed), ctx, FAST)
    seq, joint, glob = (chain[k][0].value for k in ("seq", "joint", "glob"))
    assert seq <= joint + 3e-3
    assert joint <= glob + 3e-3
    assert glob <= 2 * f_max(ctx) + 1e-9


def test_context_mismatch(ctx):
    with pytest.raises(ValueError):
        sequential_work(random_process(2, 3, 2, 0), ctx, FAST)
    with pytest.raises(ValueError):
        comb_work_bracket(fig2a(), ctx, FAST, strategies=())
