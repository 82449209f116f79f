"""Gibbs states, distillable work of states and channels, bound prefactors.

Boltzmann's constant is fixed to 1, so ``temperature`` is ``kT`` in energy
units. Composite systems (stored outputs, ancilla registers) are treated as
copies of the system with additive Hamiltonian.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import check_density_matrix, check_hermitian, projector, rel_entropy, tensor_product, vn_entropy
from .optimize import OptimizerConfig, maximize, state_from_params, state_vector_starts

LN2 = math.log(2.0)


@dataclass(frozen=True, eq=False)
class ThermalContext:
    hamiltonian: np.ndarray
    temperature: float
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        h = check_hermitian(self.hamiltonian, name="hamiltonian")
        if not self.temperature > 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        h = 0.5 * (h + h.conj().T)
        energies, vecs = np.linalg.eigh(h)
        # shift by the ground energy before exponentiating
        boltz = np.exp(-(energies - energies[0]) / self.temperature)
        z = boltz.sum()
        probs = boltz / z
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "energies", energies)
        object.__setattr__(self, "eigenvectors", vecs)
        object.__setattr__(self, "log_z", math.log(z) - energies[0] / self.temperature)
        object.__setattr__(self, "gibbs", (vecs * probs) @ vecs.conj().T)
        object.__setattr__(self, "gamma_min", float(probs.min()))

    @classmethod
    def qubit(cls, energy: float = 1.0, temperature: float = 1.0) -> "ThermalContext":
        """Qubit with ``H = energy |1><1|``."""
        return cls(np.diag([0.0, energy]).astype(complex), temperature)

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def kT(self) -> float:
        return self.temperature

    def copies(self, dim: int) -> int:
        """Number of system copies making up a space of dimension ``dim``."""
        if self.dim == 1:
            if dim != 1:
                raise ValueError("a one-dimensional system cannot compose larger spaces")
            return 1
        k = round(math.log(dim) / math.log(self.dim))
        if self.dim ** k != dim:
            raise ValueError(f"dimension {dim} is not a power of the system dimension {self.dim}")
        return k

    def total_hamiltonian(self, k: int = 1) -> np.ndarray:
        key = ("H", k)
        if key not in self._cache:
            d = self.dim
            h = np.zeros((d ** k, d ** k), dtype=complex)
            for j in range(k):
                h += tensor_product(np.eye(d ** j), self.hamiltonian, np.eye(d ** (k - j - 1)))
            self._cache[key] = h
        return self._cache[key]

    def gibbs_power(self, k: int = 1) -> np.ndarray:
        key = ("gibbs", k)
        if key not in self._cache:
            self._cache[key] = tensor_product(*([self.gibbs] * k))
        return self._cache[key]

    def work(self, rho: np.ndarray) -> float:
        """``kT S(rho || gamma^(x)k)`` through the free-energy identity."""
        k = self.copies(rho.shape[0])
        energy = float(np.real(np.sum(rho * self.total_hamiltonian(k).T)))
        w = energy - self.kT * vn_entropy(rho) + k * self.kT * self.log_z
        return max(0.0, w)


@dataclass(frozen=True, eq=False)
class WorkValue:
    value: float
    achiever: np.ndarray | None = None
    converged: bool = True
    restarts: int = 0

    def __float__(self) -> float:
        return float(self.value)


def gibbs_state(ctx: ThermalContext, copies: int = 1) -> np.ndarray:
    return ctx.gibbs_power(copies).copy()


def distillable_work(rho, ctx: ThermalContext) -> WorkValue:
    """Asymptotic work content ``kT S(rho || gamma)``."""
    rho = check_density_matrix(rho)
    k = ctx.copies(rho.shape[0])
    return WorkValue(ctx.kT * rel_entropy(rho, ctx.gibbs_power(k)))


def free_energy_work(rho, ctx: ThermalContext) -> float:
    """``F(rho) - F(gamma)`` with ``F = tr[rho H] - kT S(rho)``."""
    k = ctx.copies(np.shape(rho)[0])
    h = ctx.total_hamiltonian(k)
    g = ctx.gibbs_power(k)
    f_rho = np.real(np.trace(rho @ h)) - ctx.kT * vn_entropy(rho)
    f_gamma = np.real(np.trace(g @ h)) - ctx.kT * vn_entropy(g)
    return float(f_rho - f_gamma)


def energy_eigenstates(ctx: ThermalContext, copies: int = 1) -> list[np.ndarray]:
    if copies == 1:
        return [np.outer(v, v.conj()) for v in ctx.eigenvectors.T]
    vecs = ctx.eigenvectors
    d = ctx.dim
    out = []
    for idx in np.ndindex(*([d] * copies)):
        v = vecs[:, idx[0]]
        for j in idx[1:]:
            v = np.kron(v, vecs[:, j])
        out.append(np.outer(v, v.conj()))
    return out


def channel_anchor_states(ctx: ThermalContext, dim: int) -> list[np.ndarray]:
    """Free state first, then energy eigenstates (all of them up to dim 4)."""
    k = ctx.copies(dim)
    anchors = [ctx.gibbs_power(k)]
    eig = energy_eigenstates(ctx, k)
    anchors += eig if len(eig) <= 4 else [eig[0], eig[-1]]
    return anchors


def channel_work(channel, ctx: ThermalContext, opt: OptimizerConfig = OptimizerConfig(),
                 anchors=(), salt: int = 0) -> WorkValue:
    """Maximum of ``W(E(rho)) - W(rho)`` over input states.

    Among inputs within ``opt.tol`` of the best value the one with the least
    input work is recorded as the achiever.
    """
    d = channel.dim_in

    def objective(p):
        rho = state_from_params(p, d)
        return ctx.work(channel.apply(rho)) - ctx.work(rho)

    seeds = [[a] for a in channel_anchor_states(ctx, d)] + [[a] for a in anchors]
    starts = state_vector_starts(d, 1, opt, seeds, salt=salt)
    res = maximize(objective, starts, opt,
                   tie_key=lambda p: ctx.work(state_from_params(p, d)), tie_tol=opt.tol)
    return WorkValue(res.value, state_from_params(res.x, d), res.converged, res.restarts_used)


def unitary_channel_work(u: np.ndarray, ctx: ThermalContext) -> WorkValue:
    """Closed form for a unitary: the top eigenvalue of ``U^dag H U - H``."""
    k = ctx.copies(u.shape[0])
    h = ctx.total_hamiltonian(k)
    m = u.conj().T @ h @ u - h
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    top = v[:, -1]
    return WorkValue(max(0.0, float(w[-1])), np.outer(top, top.conj()))


def f_max(ctx: ThermalContext) -> float:
    """Largest single-copy work content, ``kT ln(1 / gamma_min)``."""
    return ctx.kT * math.log(1.0 / ctx.gamma_min)


def max_energy_projector(ctx: ThermalContext) -> np.ndarray:
    v = ctx.eigenvectors[:, -1]
    return np.outer(v, v.conj())


def s_pi_gamma(ctx: ThermalContext) -> float:
    return math.log(1.0 / ctx.gamma_min)


def thm1_prefactor(ctx: ThermalContext, n: int) -> float:
    if n < 1:
        raise ValueError("n must be at least 1")
    return 2 ** 0.25 * (math.sqrt(2) * LN2 + s_pi_gamma(ctx)) * (n - 1)


def thm3_prefactor(ctx: ThermalContext, n: int) -> float:
    if n < 1:
        raise ValueError("n must be at least 1")
    return 2 ** 0.25 * (math.sqrt(2) * LN2 + (2 * n - 1) * s_pi_gamma(ctx))


def combined_bound(ctx: ThermalContext, n: int, nm: float) -> float:
    """Upper bound on the total non-Markovian gain for non-Markovianity ``nm``."""
    s = s_pi_gamma(ctx)
    return ctx.kT * (nm + ((3 * n - 2) * s + math.sqrt(2) * LN2 * n) * (2 * nm) ** 0.25)


def lemma_s2_bound(rho1, rho2, sigma, tau) -> tuple[float, float]:
    """Both sides of the relative-entropy continuity bound.

    ``lhs = |S(rho1||sigma) - S(rho2||sigma)|`` and
    ``rhs = 2^(1/4) (ln 2 + ln(1/sigma_min)/sqrt 2) (sqrt S(rho1||tau) + sqrt S(rho2||tau))^(1/2)``.
    """
    w = np.linalg.eigvalsh(np.asarray(sigma))
    if w.min() <= 1e-12:
        raise ValueError("sigma must be full rank")
    smin = float(w.min())
    lhs = abs(rel_entropy(rho1, sigma) - rel_entropy(rho2, sigma))
    s1, s2 = rel_entropy(rho1, tau), rel_entropy(rho2, tau)
    if math.isinf(s1) or math.isinf(s2):
        return lhs, math.inf
    pref = 2 ** 0.25 * (LN2 + math.log(1.0 / smin) / math.sqrt(2))
    return lhs, pref * math.sqrt(math.sqrt(s1) + math.sqrt(s2))


def pure_state(index: int, dim: int) -> np.ndarray:
    return projector(index, dim)
