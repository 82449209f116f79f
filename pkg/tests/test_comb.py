from __future__ import annotations

import numpy as np
import pytest

from combworks.channels import QuantumChannel
from combworks.comb import (
    ControlComb,
    Dilation,
    ProcessTensor,
    apply_control_comb,
    build_from_dilation,
    conditional_channel,
    global_output,
    global_storage_comb,
    identity_feedthrough_comb,
    markov_product,
    product_input_comb,
    swap_unitary,
    validate_comb,
)
from combworks.linalg import marginals, partial_trace
from combworks.rand import random_kraus, random_state
from combworks.scenarios import fig2a, fig2b, fig2c, markov_random, random_process
from combworks.thermo import ThermalContext


def _choi_only(p: ProcessTensor) -> ProcessTensor:
    # same comb without its circuit, forcing contractions through the Choi operator
    return ProcessTensor(p.steps, p.sys_dim, p.choi)


@pytest.fixture
def rng():
    return np.random.default_rng(99)


@pytest.mark.parametrize("p", [random_process(2, 2, 2, 1), random_process(3, 2, 3, 2), markov_random(3, 2, 5)])
def test_random_combs_are_valid(p):
    rep = validate_comb(p)
    assert rep.passed, rep
    assert rep.residual < 1e-10


def test_single_step_comb_is_channel_choi(rng):
    kraus = random_kraus(2, 2, rng, 2)
    p = markov_product([QuantumChannel.from_kraus(kraus)])
    assert validate_comb(p).passed
    np.testing.assert_allclose(p.choi, QuantumChannel.from_kraus(kraus).choi)


def test_causality_violation_is_located():
    # step 1's output copies step 2's input: C = 1_{i1} (x) Phi_{o1 i2} (x) |0><0|_{o2}
    phi = np.zeros(4)
    phi[[0, 3]] = 1.0
    c = np.kron(np.kron(np.eye(2), np.outer(phi, phi)), np.diag([1.0, 0.0]))
    rep = validate_comb(ProcessTensor(2, 2, c))
    assert not rep.passed
    assert rep.failed_levels == (2,)


def test_non_unitary_dilation_rejected():
    with pytest.raises(ValueError):
        Dilation(2, np.eye(2) / 2, (np.ones((4, 4)),))


def test_dilation_and_choi_paths_agree(rng):
    for p in (random_process(2, 2, 2, 3), random_process(3, 2, 2, 4)):
        q = _choi_only(p)
        r = [random_state(2, rng) for _ in range(p.steps)]
        np.testing.assert_allclose(global_output(p, r), global_output(q, r), atol=1e-12)
        for i in range(1, p.steps + 1):
            a = conditional_channel(p, i, r[:i - 1])
            b = conditional_channel(q, i, r[:i - 1])
            assert a.choi_distance(b) < 1e-12
            assert a.is_cptp()
        links = tuple(QuantumChannel.from_kraus(random_kraus(8, 8, rng, 2)) for _ in range(p.steps - 1))
        s = ControlComb(2, (2, 2), random_state(8, rng), links, keep_ancilla=True)
        np.testing.assert_allclose(apply_control_comb(p, s), apply_control_comb(q, s), atol=1e-12)


def test_markov_fast_path_agrees(rng):
    p = markov_random(3, 2, 8)
    q = _choi_only(p)
    r = [random_state(2, rng) for _ in range(3)]
    np.testing.assert_allclose(global_output(p, r), global_output(q, r), atol=1e-12)
    s = identity_feedthrough_comb(random_state(2, rng), 3)
    np.testing.assert_allclose(apply_control_comb(p, s), apply_control_comb(q, s), atol=1e-12)


def test_global_storage_comb_reproduces_global_output(rng):
    p = random_process(3, 2, 2, 5)
    r = [random_state(2, rng) for _ in range(3)]
    out = apply_control_comb(p, global_storage_comb(r))
    np.testing.assert_allclose(out, global_output(p, r), atol=1e-12)
    out = apply_control_comb(p, global_storage_comb(r), use_dilation=False)
    np.testing.assert_allclose(out, global_output(p, r), atol=1e-12)


def test_product_input_comb_gives_last_marginal(rng):
    p = random_process(2, 2, 2, 6)
    r = [random_state(2, rng) for _ in range(2)]
    out = apply_control_comb(p, product_input_comb(r))
    np.testing.assert_allclose(out, marginals(global_output(p, r), (2, 2))[1], atol=1e-12)


def test_conditional_channel_of_markov_is_its_channel(rng):
    chans = [QuantumChannel.from_kraus(random_kraus(2, 2, rng, 2)) for _ in range(2)]
    p = markov_product(chans)
    ch = conditional_channel(_choi_only(p), 2, [random_state(2, rng)])
    assert ch.choi_distance(chans[1]) < 1e-12


def test_conditional_channel_errors():
    p = fig2a()
    with pytest.raises(ValueError):
        conditional_channel(p, 3, [])
    with pytest.raises(ValueError):
        conditional_channel(p, 2, [])


def test_fig2a_step_channels():
    ctx = ThermalContext.qubit(1.0, 1.0)
    p = fig2a()
    rng = np.random.default_rng(0)
    rho = random_state(2, rng)
    # step 1 hands back the thermal environment whatever goes in
    np.testing.assert_allclose(conditional_channel(p, 1).apply(rho), ctx.gibbs, atol=1e-12)
    # step 2 returns the flipped step-1 input
    x = np.array([[0, 1], [1, 0]])
    np.testing.assert_allclose(conditional_channel(p, 2, [rho]).apply(random_state(2, rng)), x @ rho @ x,
                               atol=1e-12)


def test_fig2b_output_is_pure_and_locally_thermal():
    ctx = ThermalContext.qubit(1.0, 1.0)
    out = global_output(fig2b(), [ctx.gibbs, ctx.gibbs])
    assert np.trace(out @ out).real == pytest.approx(1.0, abs=1e-12)
    for m in marginals(out, (2, 2)):
        np.testing.assert_allclose(m, ctx.gibbs, atol=1e-12)


def test_fig2c_feedthrough_from_ground_state():
    p = fig2c()
    s = identity_feedthrough_comb(np.diag([1.0, 0.0]), 2)
    for q in (p, _choi_only(p)):
        np.testing.assert_allclose(apply_control_comb(q, s), np.diag([0.0, 1.0]), atol=1e-12)


def test_swap_dilation_is_identity_feed():
    # a SWAP with an environment prepared in |0> outputs |0>, then the stored input
    dil = Dilation(2, np.diag([1.0, 0.0]), (swap_unitary(2), swap_unitary(2)))
    p = build_from_dilation(dil, 2, 2)
    rho = np.array([[0.3, 0.2], [0.2, 0.7]])
    out = global_output(p, [rho, np.eye(2) / 2])
    np.testing.assert_allclose(partial_trace(out, (2, 2), [1]), rho, atol=1e-12)


def test_control_comb_validation(rng):
    with pytest.raises(ValueError):
        ControlComb(2, (2,), random_state(2, rng), ())
    with pytest.raises(ValueError):
        apply_control_comb(fig2a(), identity_feedthrough_comb(np.eye(2) / 2, 3))
