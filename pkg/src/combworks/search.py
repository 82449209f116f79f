"""Parametrized control strategies searched by the comb and process-distance bounds.

A :class:`UnitaryLinkFamily` strategy prepares a pure state of the system
and ``m`` ancilla registers (copies of the system) and applies one unitary
on ``system (x) ancilla`` between consecutive steps. Unitary links keep the
dilation cost in closed form, and with two registers the family contains the
global storage strategies of two-step processes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .comb import ControlComb, ProcessTensor, _permutation_unitary, run_strategy
from .channels import QuantumChannel
from .optimize import OptimizerConfig, params_from_unitary, unitary_from_params


def ancilla_registers(sys_dim: int, ancilla_dim: int | None) -> tuple[int, ...]:
    """Split an ancilla of dimension ``ancilla_dim`` (default ``d**2``) into system copies."""
    if ancilla_dim is None:
        ancilla_dim = sys_dim ** 2
    if ancilla_dim < 1:
        raise ValueError("ancilla dimension must be positive")
    if ancilla_dim == 1:
        return ()
    m = round(math.log(ancilla_dim) / math.log(sys_dim)) if sys_dim > 1 else 0
    if sys_dim ** m != ancilla_dim:
        raise ValueError(f"ancilla dimension {ancilla_dim} is not a power of the system dimension {sys_dim}")
    return (sys_dim,) * m


@dataclass(frozen=True)
class UnitaryLinkFamily:
    sys_dim: int
    registers: tuple
    steps: int

    @property
    def dim(self) -> int:
        return self.sys_dim * math.prod(self.registers)

    @property
    def n_params(self) -> int:
        return 2 * self.dim + (self.steps - 1) * self.dim ** 2

    def init_state(self, x: np.ndarray) -> np.ndarray:
        D = self.dim
        v = x[:D] + 1j * x[D:2 * D]
        nrm = np.linalg.norm(v)
        if nrm < 1e-150:
            v = np.zeros(D, dtype=complex)
            v[0] = 1.0
        else:
            v = v / nrm
        return np.outer(v, v.conj())

    def unitaries(self, x: np.ndarray) -> list[np.ndarray]:
        D = self.dim
        off = 2 * D
        k = D * D
        return [unitary_from_params(x[off + j * k: off + (j + 1) * k], D) for j in range(self.steps - 1)]

    def final_state(self, p: ProcessTensor, x: np.ndarray) -> np.ndarray:
        """Joint state of the last output and all registers."""
        return run_strategy(p, self.init_state(x), [[u] for u in self.unitaries(x)], self.registers)

    def comb(self, x: np.ndarray) -> ControlComb:
        links = tuple(QuantumChannel.from_unitary(u) for u in self.unitaries(x))
        return ControlComb(self.sys_dim, self.registers, self.init_state(x), links, keep_ancilla=True)

    def params(self, init_vec: np.ndarray, unitaries) -> np.ndarray:
        v = np.asarray(init_vec, dtype=complex)
        parts = [v.real, v.imag] + [params_from_unitary(u) for u in unitaries]
        return np.concatenate(parts)

    def structured_starts(self) -> list[np.ndarray]:
        """Identity links from each basis product state, then swap-into-register links."""
        D, d = self.dim, self.sys_dim
        ident = [np.eye(D)] * (self.steps - 1)
        out = []
        for j in range(d):
            v = np.zeros(D, dtype=complex)
            v[j * (D // d)] = 1.0
            out.append(self.params(v, ident))
        m = len(self.registers)
        if m:
            # move the output into the last register, bringing that register's content in
            perm = list(range(m + 1))
            perm[0], perm[m] = perm[m], perm[0]
            sw = _permutation_unitary((d,) * (m + 1), perm)
            v = np.zeros(D, dtype=complex)
            v[0] = 1.0
            out.append(self.params(v, [sw] * (self.steps - 1)))
        return out

    def starts(self, cfg: OptimizerConfig, count: int, extra=(), salt: int = 0) -> list[np.ndarray]:
        starts = list(extra) + self.structured_starts()
        rng = cfg.rng(salt, self.dim, self.steps)
        while len(starts) < count:
            starts.append(rng.normal(size=self.n_params))
        return starts[:max(count, len(extra))]


def family_restarts(cfg: OptimizerConfig) -> int:
    """Restart budget for the high-dimensional strategy search."""
    return max(1, cfg.restarts // 16)


def family_config(cfg: OptimizerConfig) -> OptimizerConfig:
    return cfg.with_(method="L-BFGS-B", max_iters=min(cfg.max_iters, 40))
