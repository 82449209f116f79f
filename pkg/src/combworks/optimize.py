"""Multi-start local search and the parametrizations it runs over.

States are searched as ``rho = A A^dag / tr(A A^dag)`` with ``A`` a free
complex matrix; unitaries as ``exp(iK)`` with ``K`` Hermitian. Every search
is a maximization over a flat real parameter vector, restarted from a
deterministic list of starting points and merged deterministically.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .linalg import sqrtm_psd
from .rand import as_rng

# objective values below this are treated as -inf by the local search
_FLOOR = -1e300


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings for every multi-start search.

    ``tol`` is the accuracy reported alongside results (``opt_tol``);
    ``local_tol`` is the per-restart convergence tolerance on the objective.
    """

    restarts: int = 32
    max_iters: int = 2000
    seed: int = 42
    tol: float = 1e-6
    local_tol: float = 1e-9
    method: str = "L-BFGS-B"
    ancilla_dim: int | None = None

    def with_(self, **kw) -> "OptimizerConfig":
        return replace(self, **kw)

    def rng(self, *salt: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, *salt])


@dataclass(frozen=True)
class OptResult:
    x: np.ndarray
    value: float
    restart: int
    converged: bool
    restarts_used: int
    values: tuple[float, ...]


def thread_cap() -> int:
    try:
        return max(1, int(os.environ.get("COMBWORKS_THREADS", "1")))
    except ValueError:
        return 1


def pmap(fn: Callable, items: Sequence) -> list:
    """Ordered map, run on up to ``COMBWORKS_THREADS`` threads."""
    n = thread_cap()
    if n == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


def _local_search(fun: Callable[[np.ndarray], float], x0: np.ndarray, cfg: OptimizerConfig):
    def neg(x):
        v = fun(x)
        if math.isnan(v):
            return -_FLOOR
        return -min(max(v, _FLOOR), -_FLOOR)

    if x0.size == 0:
        return x0, fun(x0), True
    if cfg.method == "Nelder-Mead":
        opts = dict(maxiter=cfg.max_iters, maxfev=2 * cfg.max_iters, xatol=1e-10,
                    fatol=cfg.local_tol, adaptive=x0.size > 4)
    elif cfg.method == "L-BFGS-B":
        opts = dict(maxiter=cfg.max_iters, ftol=cfg.local_tol, gtol=1e-8)
    else:
        opts = dict(maxiter=cfg.max_iters)
    res = minimize(neg, x0, method=cfg.method, options=opts)
    x = np.asarray(res.x, dtype=float)
    val = fun(x)
    # never return worse than the starting point
    v0 = fun(x0)
    if v0 > val:
        return np.array(x0, dtype=float), v0, bool(res.success)
    return x, val, bool(res.success)


def maximize(fun: Callable[[np.ndarray], float], starts: Sequence[np.ndarray], cfg: OptimizerConfig,
             tie_key: Callable[[np.ndarray], float] | None = None, tie_tol: float = 0.0) -> OptResult:
    """Run a local search from each start and keep the best point.

    Ties (values within ``tie_tol`` of the best) go to the smallest
    ``tie_key`` when given, then to the lowest restart index.
    """
    if not starts:
        raise ValueError("maximize needs at least one starting point")
    outs = pmap(lambda x0: _local_search(fun, np.asarray(x0, dtype=float), cfg), list(starts))
    values = tuple(float(v) for _, v, _ in outs)
    best = max(values)
    cands = [k for k, v in enumerate(values) if v >= best - tie_tol]
    if tie_key is not None and len(cands) > 1:
        keys = [tie_key(outs[k][0]) for k in cands]
        lo = min(keys)
        cands = [k for k, kk in zip(cands, keys) if kk <= lo + 1e-12]
    k = cands[0]
    x, v, ok = outs[k]
    return OptResult(x=x, value=float(v), restart=k, converged=ok,
                     restarts_used=len(starts), values=values)


# ---------------------------------------------------------------------------
# parametrizations
# ---------------------------------------------------------------------------


def state_from_params(p: np.ndarray, dim: int) -> np.ndarray:
    n = dim * dim
    a = (p[:n] + 1j * p[n:2 * n]).reshape(dim, dim)
    rho = a @ a.conj().T
    tr = np.trace(rho).real
    if tr < 1e-300:
        return np.eye(dim, dtype=complex) / dim
    return rho / tr


def params_from_state(rho: np.ndarray) -> np.ndarray:
    a = sqrtm_psd(rho)
    return np.concatenate([a.real.ravel(), a.imag.ravel()])


def n_state_params(dim: int) -> int:
    return 2 * dim * dim


def states_from_params(p: np.ndarray, dim: int, count: int) -> list[np.ndarray]:
    k = n_state_params(dim)
    return [state_from_params(p[j * k:(j + 1) * k], dim) for j in range(count)]


def hermitian_from_params(p: np.ndarray, dim: int) -> np.ndarray:
    h = np.zeros((dim, dim), dtype=complex)
    iu = np.triu_indices(dim, 1)
    m = len(iu[0])
    h[np.diag_indices(dim)] = p[:dim]
    h[iu] = p[dim:dim + m] + 1j * p[dim + m:dim + 2 * m]
    return h + np.triu(h, 1).conj().T


def unitary_from_params(p: np.ndarray, dim: int) -> np.ndarray:
    w, v = np.linalg.eigh(hermitian_from_params(p, dim))
    return (v * np.exp(1j * w)) @ v.conj().T


def params_from_hermitian(h: np.ndarray) -> np.ndarray:
    iu = np.triu_indices(h.shape[0], 1)
    return np.concatenate([np.real(np.diag(h)), h[iu].real, h[iu].imag])


def params_from_unitary(u: np.ndarray) -> np.ndarray:
    """Generator of ``u`` as a parameter vector (principal logarithm)."""
    w, v = np.linalg.eig(np.asarray(u, dtype=complex))
    k = (v * np.angle(w)) @ np.linalg.inv(v)
    return params_from_hermitian(0.5 * (k + k.conj().T))


def n_unitary_params(dim: int) -> int:
    return dim * dim


def random_state_start(dim: int, rng) -> np.ndarray:
    rng = as_rng(rng)
    return rng.normal(size=n_state_params(dim))


def state_vector_starts(dim: int, count: int, cfg: OptimizerConfig, anchors: Sequence[Sequence[np.ndarray]] = (),
                        salt: int = 0) -> list[np.ndarray]:
    """Starting points for a search over ``count`` states.

    ``anchors`` are complete state vectors tried first, in order; the rest of
    the restart budget is filled with seeded random points.
    """
    starts = [np.concatenate([params_from_state(r) for r in vec]) for vec in anchors]
    rng = cfg.rng(salt, dim, count)
    for _ in range(max(0, cfg.restarts - len(starts))):
        starts.append(rng.normal(size=count * n_state_params(dim)))
    return starts


def choi_from_params(p: np.ndarray, dim_in: int, dim_out: int) -> np.ndarray:
    """Choi matrix of a channel from ``B``: ``C = B B^dag`` rescaled on the input to be trace preserving."""
    D = dim_in * dim_out
    b = (p[:D * D] + 1j * p[D * D:2 * D * D]).reshape(D, D)
    c = b @ b.conj().T
    m = np.einsum("jbkb->jk", c.reshape(dim_in, dim_out, dim_in, dim_out))
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    s = (v / np.sqrt(np.clip(w, 1e-300, None))) @ v.conj().T
    s = np.kron(s, np.eye(dim_out))
    return s @ c @ s.conj().T


def params_from_choi(choi: np.ndarray) -> np.ndarray:
    b = sqrtm_psd(choi)
    return np.concatenate([b.real.ravel(), b.imag.ravel()])


def n_channel_params(dim_in: int, dim_out: int) -> int:
    return 2 * (dim_in * dim_out) ** 2
