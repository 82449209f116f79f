"""Named example processes and random ensembles.

Every scenario is built for a qubit system with ``H = E |1><1|`` at
temperature ``T``; ``expected`` holds the analytic reference values each
one is checked against, as functions of ``(E, T)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .channels import QuantumChannel
from .comb import (
    Dilation,
    ProcessTensor,
    _permutation_unitary,
    build_from_dilation,
    markov_product,
    swap_unitary,
)
from .rand import as_rng, random_kraus, random_state, random_unitary
from .thermo import ThermalContext, f_max, max_energy_projector

X = np.array([[0, 1], [1, 0]], dtype=complex)
I2 = np.eye(2, dtype=complex)
P0 = np.diag([1.0, 0.0]).astype(complex)
P1 = np.diag([0.0, 1.0]).astype(complex)


@dataclass(frozen=True)
class Expected:
    value: Callable[[float, float, int], float]
    kind: str  # "eq", "le" or "ge"
    provenance: str


@dataclass(frozen=True)
class Scenario:
    name: str
    builder: Callable
    expected: dict = field(default_factory=dict)
    notes: str = ""
    default_steps: int = 2
    saturates: tuple = ()


def _gamma1(E, T):
    return math.exp(-E / T) / (1 + math.exp(-E / T))


def _thermal_entropy(E, T):
    g1 = _gamma1(E, T)
    return -(1 - g1) * math.log(1 - g1) - g1 * math.log(g1)


def _fmax(E, T):
    return f_max(ThermalContext.qubit(E, T))


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def fig2a(E: float = 1.0, T: float = 1.0) -> ProcessTensor:
    """SWAP with a thermal environment qubit, then NOT on the environment and SWAP again."""
    ctx = ThermalContext.qubit(E, T)
    sw = swap_unitary(2)
    dil = Dilation(2, ctx.gibbs, (sw, sw @ np.kron(I2, X)))
    return build_from_dilation(dil, 2, 2, "fig2a")


def fig2b_env_state(E: float = 1.0, T: float = 1.0) -> np.ndarray:
    """Pure two-qubit state ``|00> + exp(-E/2T)|11>``, normalized."""
    v = np.zeros(4, dtype=complex)
    v[0] = 1.0
    v[3] = math.exp(-E / (2 * T))
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def fig2b(E: float = 1.0, T: float = 1.0) -> ProcessTensor:
    """Collisions with two environment qubits that start locally thermal but globally pure."""
    # unitaries act on (sys, e1, e2)
    sw1 = _permutation_unitary((2, 2, 2), (1, 0, 2))
    sw2 = _permutation_unitary((2, 2, 2), (2, 1, 0))
    dil = Dilation(4, fig2b_env_state(E, T), (sw1, sw2))
    return build_from_dilation(dil, 2, 2, "fig2b")


def fig2c(E: float = 1.0, T: float = 1.0) -> ProcessTensor:
    """CNOT from a thermal environment onto the system, then CNOT followed by NOT on the system."""
    ctx = ThermalContext.qubit(E, T)
    cnot = np.kron(I2, P0) + np.kron(X, P1)  # (sys, env), control on env
    dil = Dilation(2, ctx.gibbs, (cnot, np.kron(X, I2) @ cnot))
    return build_from_dilation(dil, 2, 2, "fig2c")


def markov_saturating(E: float = 1.0, T: float = 1.0, n: int = 2) -> ProcessTensor:
    """Independent channels that always output the top energy eigenstate."""
    ctx = ThermalContext.qubit(E, T)
    ch = QuantumChannel.fixed_output(max_energy_projector(ctx), 2)
    return markov_product([ch] * n, "markov-saturating")


def markov_random(n: int = 2, sys_dim: int = 2, seed=0, n_kraus: int | None = None) -> ProcessTensor:
    rng = as_rng(seed)
    chans = [QuantumChannel.from_kraus(random_kraus(sys_dim, sys_dim, rng, n_kraus)) for _ in range(n)]
    return markov_product(chans, "markov-random")


def random_process(n: int = 2, sys_dim: int = 2, env_dim: int = 2, seed=0, env_init: str = "random",
                   E: float = 1.0, T: float = 1.0) -> ProcessTensor:
    """Haar-random system-environment circuit.

    ``env_init`` is ``"random"`` (Hilbert-Schmidt random state) or
    ``"thermal"`` (Gibbs state of ``E * diag(0, 1, ..., env_dim - 1)``).
    """
    if min(n, sys_dim, env_dim) < 1:
        raise ValueError("n, sys_dim and env_dim must be positive")
    rng = as_rng(seed)
    if env_init == "thermal":
        env = ThermalContext(np.diag(E * np.arange(env_dim)).astype(complex), T).gibbs
    elif env_init == "random":
        env = random_state(env_dim, rng)
    else:
        raise ValueError(f"unknown env_init {env_init!r}")
    us = tuple(random_unitary(sys_dim * env_dim, rng) for _ in range(n))
    return build_from_dilation(Dilation(env_dim, env, us), n, sys_dim, "dilation-random")


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

SCENARIOS: dict[str, Scenario] = {
    "fig2a": Scenario(
        "fig2a", lambda E, T, n, seed: fig2a(E, T),
        {
            "w_seq": Expected(lambda E, T, n: E * math.tanh(E / (2 * T)), "eq",
                              "closed form of kT S(X(gamma)||gamma)"),
            "w_joint": Expected(lambda E, T, n: E, "eq", "invest |0><0| at step 1, extract |1><1| at step 2"),
            "d_wi": Expected(lambda E, T, n: E - E * math.tanh(E / (2 * T)), "eq", "difference of the two above"),
        },
        "sequential optimization is not optimal",
    ),
    "fig2b": Scenario(
        "fig2b", lambda E, T, n, seed: fig2b(E, T),
        {
            "w_seq": Expected(lambda E, T, n: 0.0, "eq", "both conditional channels output gamma"),
            "w_joint": Expected(lambda E, T, n: 0.0, "eq", "both conditional channels output gamma"),
            "w_global": Expected(lambda E, T, n: 2 * T * _thermal_entropy(E, T), "eq",
                                 "work of a pure state with thermal marginals"),
            "nm": Expected(lambda E, T, n: 2 * _thermal_entropy(E, T), "eq",
                           "mutual information of the output; bound of the multitime-correlation gain is tight"),
        },
        "joint optimization extracts nothing",
        saturates=("multitime_correlations",),
    ),
    "fig2c": Scenario(
        "fig2c", lambda E, T, n, seed: fig2c(E, T),
        {
            "w_global": Expected(lambda E, T, n: 2 * _gamma1(E, T) * E, "le", "convexity bound 2 gamma_1 W(X)"),
            "w_comb": Expected(lambda E, T, n: E, "ge", "identity feedthrough from |0><0|"),
        },
        "global extraction is not optimal",
    ),
    "markov-saturating": Scenario(
        "markov-saturating", lambda E, T, n, seed: markov_saturating(E, T, n),
        {
            "w_seq": Expected(lambda E, T, n: n * _fmax(E, T), "eq", "n F_max with thermal inputs"),
            "w_comb": Expected(lambda E, T, n: n * _fmax(E, T), "eq", "saturates the n F_max bound"),
        },
        "Markovian process saturating the maximum-work bound",
    ),
    "markov-random": Scenario(
        "markov-random", lambda E, T, n, seed: markov_random(n, 2, seed), {}, "random memoryless channels"),
    "dilation-random": Scenario(
        "dilation-random", lambda E, T, n, seed: random_process(n, 2, 2, seed), {}, "random qubit-environment circuit"),
}


def scenario(name: str, E: float = 1.0, T: float = 1.0, n: int | None = None, seed: int = 0) -> ProcessTensor:
    try:
        sc = SCENARIOS[name]
    except KeyError:
        raise ValueError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}") from None
    if n is not None and name.startswith("fig2") and n != 2:
        raise ValueError(f"{name} is a two-step process")
    p = sc.builder(E, T, n or sc.default_steps, seed)
    p.metadata.update(name=name, hamiltonian_diag=[0.0, float(E)], temperature=float(T))
    return p


def expected_values(name: str, E: float, T: float, n: int = 2) -> dict[str, tuple[float, str, str]]:
    """Evaluate the scenario's reference values at ``(E, T)``."""
    out = {}
    for key, ex in SCENARIOS[name].expected.items():
        out[key] = (ex.value(E, T, n), ex.kind, ex.provenance)
    return out


def thermal_entropy(E: float, T: float) -> float:
    return _thermal_entropy(E, T)


def gamma1(E: float, T: float) -> float:
    return _gamma1(E, T)
