"""Process tensors (quantum combs), control combs and their contraction.

A :class:`ProcessTensor` over ``n`` steps of a ``d``-level system stores its
Choi operator over the spaces ``(i1, o1, i2, o2, ..., in, on)`` in that
order. Each input space carries the unnormalized maximally entangled
convention used for channels, so causality reads

    tr_{o_k} C_k = 1_{i_k} (x) C_{k-1},   tr_{o_1} C_1 = 1_{i_1}

where ``C_k`` is the comb restricted to the first ``k`` steps. When a process
comes from a system-environment circuit the circuit is kept alongside the
Choi operator and used for cheaper exact contractions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channels import QuantumChannel
from .linalg import (
    TOL_PSD,
    apply_kraus,
    apply_unitary,
    embed_operator,
    check_density_matrix,
    link_product,
    partial_trace,
    permute_subsystems,
    projector,
    tensor_product,
)

TOL_COMB = 1e-8
TOL_UNITARY = 1e-10


def max_entangled(dim: int) -> np.ndarray:
    """Unnormalized ``sum_jk |jj><kk|``."""
    v = np.eye(dim, dtype=complex).reshape(-1)
    return np.outer(v, v)


def swap_unitary(d1: int, d2: int | None = None) -> np.ndarray:
    d2 = d1 if d2 is None else d2
    u = np.zeros((d1 * d2, d1 * d2), dtype=complex)
    for a in range(d1):
        for b in range(d2):
            u[b * d1 + a, a * d2 + b] = 1.0
    return u


@dataclass(frozen=True, eq=False)
class Dilation:
    """System-environment circuit: environment state plus one unitary per step.

    Each unitary acts on ``system (x) environment`` in that order.
    """

    env_dim: int
    env_init: np.ndarray
    step_unitaries: tuple

    def __post_init__(self):
        env = check_density_matrix(self.env_init, self.env_dim, name="env_init")
        us = tuple(np.asarray(u, dtype=complex) for u in self.step_unitaries)
        for k, u in enumerate(us):
            err = float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))
            if err > TOL_UNITARY:
                raise ValueError(f"step {k + 1} unitary is not unitary (error {err:.2e})")
        object.__setattr__(self, "env_init", env)
        object.__setattr__(self, "step_unitaries", us)


@dataclass(frozen=True, eq=False)
class ProcessTensor:
    steps: int
    sys_dim: int
    choi: np.ndarray
    dilation: Dilation | None = None
    name: str = ""
    metadata: dict = field(default_factory=dict)
    markov: tuple | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        c = np.asarray(self.choi, dtype=complex)
        expect = self.sys_dim ** (2 * self.steps)
        if c.shape != (expect, expect):
            raise ValueError(f"choi shape {c.shape}, expected {(expect, expect)}")
        object.__setattr__(self, "choi", c)

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.sys_dim,) * (2 * self.steps)


@dataclass(frozen=True, eq=False)
class ControlComb:
    """Experimenter strategy: initial system-ancilla state and link channels.

    ``links[k]`` acts on ``system (x) ancilla`` between steps ``k+1`` and
    ``k+2``. The final state is the last system output, followed by the
    ancilla registers when ``keep_ancilla`` is set, then reordered by
    ``output_perm`` if given.
    """

    sys_dim: int
    ancilla_dims: tuple
    init_state: np.ndarray
    links: tuple
    keep_ancilla: bool = False
    output_perm: tuple | None = None

    def __post_init__(self):
        anc = tuple(int(a) for a in self.ancilla_dims)
        dim = self.sys_dim * math.prod(anc)
        rho = check_density_matrix(self.init_state, dim, tol=1e-9, name="init_state")
        for k, ch in enumerate(self.links):
            if ch.dim_in != dim or ch.dim_out != dim:
                raise ValueError(f"link {k + 1} acts on {ch.dim_in}->{ch.dim_out}, expected {dim}")
        object.__setattr__(self, "ancilla_dims", anc)
        object.__setattr__(self, "init_state", rho)
        object.__setattr__(self, "links", tuple(self.links))

    @property
    def ancilla_dim(self) -> int:
        return math.prod(self.ancilla_dims)

    @property
    def steps(self) -> int:
        return len(self.links) + 1


@dataclass(frozen=True)
class CombReport:
    passed: bool
    residuals: tuple[float, ...]
    psd_min: float
    hermiticity: float
    failed_levels: tuple[int, ...]

    @property
    def residual(self) -> float:
        return max(self.residuals + (max(0.0, -self.psd_min), self.hermiticity))


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------


def build_from_dilation(dil: Dilation, n: int, sys_dim: int, name: str = "") -> ProcessTensor:
    """Choi operator of the comb realized by a system-environment circuit."""
    if len(dil.step_unitaries) != n:
        raise ValueError(f"dilation has {len(dil.step_unitaries)} unitaries for {n} steps")
    for u in dil.step_unitaries:
        if u.shape[0] != sys_dim * dil.env_dim:
            raise ValueError(f"step unitary has dimension {u.shape[0]}, expected {sys_dim * dil.env_dim}")
    m = dil.env_init
    dims = [dil.env_dim]
    phi = max_entangled(sys_dim)
    for u in dil.step_unitaries:
        m = np.kron(m, phi)
        dims += [sys_dim, sys_dim]
        m = apply_unitary(m, dims, u, [len(dims) - 1, 0])
    choi = partial_trace(m, dims, range(1, len(dims)))
    return ProcessTensor(n, sys_dim, choi, dil, name)


def markov_product(channels: Sequence[QuantumChannel], name: str = "") -> ProcessTensor:
    """Memoryless process applying ``channels[k]`` at step ``k + 1``."""
    if not channels:
        raise ValueError("need at least one channel")
    d = channels[0].dim_in
    for ch in channels:
        if ch.dim_in != d or ch.dim_out != d:
            raise ValueError("all channels must map the system space to itself")
    choi = tensor_product(*(ch.choi for ch in channels))
    return ProcessTensor(len(channels), d, choi, None, name, markov=tuple(channels))


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def validate_comb(p: ProcessTensor, tol: float = TOL_COMB) -> CombReport:
    """Check positivity and the recursive causality conditions.

    ``residuals[k-1]`` is the max-entry deviation at level ``k`` (tracing the
    ``k``-th output).
    """
    d, n = p.sys_dim, p.steps
    c = p.choi
    herm = float(np.max(np.abs(c - c.conj().T)))
    psd = float(np.linalg.eigvalsh(0.5 * (c + c.conj().T))[0])
    residuals = [0.0] * n
    ck = c
    for k in range(n, 0, -1):
        dims = (d,) * (2 * k)
        r = partial_trace(ck, dims, range(2 * k - 1))
        lower = partial_trace(r, dims[:-1], range(2 * k - 2)) / d
        target = tensor_product(lower, np.eye(d))
        residuals[k - 1] = float(np.max(np.abs(r - target)))
        ck = lower
    scale = max(1.0, float(np.max(np.abs(c))))
    failed = tuple(k + 1 for k, r in enumerate(residuals) if r > tol)
    ok = not failed and herm <= tol and psd >= -TOL_PSD * scale
    return CombReport(ok, tuple(residuals), psd, herm, failed)


# ---------------------------------------------------------------------------
# contraction
# ---------------------------------------------------------------------------


def _reduce_choi(p: ProcessTensor, feed: dict, keep_outputs: Sequence[int], open_steps: Sequence[int] = ()) -> np.ndarray:
    """Contract states into inputs and trace what is not kept.

    Steps are 0-based here. ``feed`` maps step -> input state; its outputs are
    kept if listed in ``keep_outputs`` and traced otherwise. Steps in
    ``open_steps`` keep both spaces. Remaining steps are traced entirely,
    which divides by ``d`` per step for a valid comb.
    """
    d, n = p.sys_dim, p.steps
    ns = 2 * n
    t = p.choi.reshape((d,) * (2 * ns))
    rows = list(range(ns))
    cols = list(range(ns, 2 * ns))
    operands = [t, rows + cols]
    out_rows, out_cols = [], []
    scale = 1.0
    for k in range(n):
        i, o = 2 * k, 2 * k + 1
        if k in open_steps:
            out_rows += [rows[i], rows[o]]
            out_cols += [cols[i], cols[o]]
            continue
        if k in feed:
            operands += [np.asarray(feed[k]), [rows[i], cols[i]]]
            if k in keep_outputs:
                out_rows.append(rows[o])
                out_cols.append(cols[o])
            else:
                cols[o] = rows[o]
        else:
            cols[i] = rows[i]
            cols[o] = rows[o]
            scale /= d
    operands[1] = rows + cols
    res = np.einsum(*operands, out_rows + out_cols, optimize=True)
    dim = int(round(math.sqrt(res.size)))
    return scale * res.reshape(dim, dim)


def _env_after(p: ProcessTensor, prefix: Sequence[np.ndarray]) -> np.ndarray:
    dil = p.dilation
    env = dil.env_init
    d, e = p.sys_dim, dil.env_dim
    for rho, u in zip(prefix, dil.step_unitaries):
        joint = u @ np.kron(rho, env) @ u.conj().T
        env = partial_trace(joint, (d, e), [1])
    return env


def conditional_channel(p: ProcessTensor, i: int, prefix: Sequence[np.ndarray] = ()) -> QuantumChannel:
    """Channel acting at step ``i`` (1-based) given the first ``i - 1`` inputs.

    Earlier outputs are discarded and later steps ignored.
    """
    if not 1 <= i <= p.steps:
        raise ValueError(f"step {i} out of range 1..{p.steps}")
    prefix = list(prefix)[: i - 1]
    if len(prefix) != i - 1:
        raise ValueError(f"step {i} needs {i - 1} prefix states, got {len(prefix)}")
    d = p.sys_dim
    for rho in prefix:
        if np.shape(rho) != (d, d):
            raise ValueError(f"prefix states must be {d}x{d}")
    if p.markov is not None:
        return p.markov[i - 1]
    if p.dilation is not None:
        env = _env_after(p, prefix)
        e = p.dilation.env_dim
        u = p.dilation.step_unitaries[i - 1].reshape(d, e, d, e)
        w, v = np.linalg.eigh(0.5 * (env + env.conj().T))
        kraus = []
        for lam, vec in zip(w, v.T):
            if lam <= 1e-15:
                continue
            # (1 (x) <f_b|) U (1 (x) |e_a>)
            ua = np.einsum("sfta,a->sft", u, vec) * math.sqrt(lam)
            kraus += [ua[:, b, :] for b in range(e)]
        return QuantumChannel.from_kraus(kraus)
    feed = {k: prefix[k] for k in range(i - 1)}
    choi = _reduce_choi(p, feed, keep_outputs=(), open_steps=(i - 1,))
    return QuantumChannel(d, d, choi)


def global_output(p: ProcessTensor, r: Sequence[np.ndarray]) -> np.ndarray:
    """Joint state of all ``n`` outputs when ``r[k]`` is fed at step ``k + 1``."""
    n, d = p.steps, p.sys_dim
    if len(r) != n:
        raise ValueError(f"need {n} input states, got {len(r)}")
    if p.markov is not None:
        return tensor_product(*(ch.apply(rho) for ch, rho in zip(p.markov, r)))
    if p.dilation is None:
        return _reduce_choi(p, dict(enumerate(r)), keep_outputs=range(n))
    dil = p.dilation
    m = dil.env_init
    for rho, u in zip(r, _stored_unitaries(p)):
        m = np.kron(m, rho)
        m = u @ m @ u.conj().T
    e = dil.env_dim
    rest = m.shape[0] // e
    return np.trace(m.reshape(e, rest, e, rest), axis1=0, axis2=2)


def _stored_unitaries(p: ProcessTensor) -> list[np.ndarray]:
    """Step unitaries on ``(env, o_1, ..., o_{k-1}, s_k)``, built once per process."""
    cache = p._cache.setdefault("stored_unitaries", [])
    if not cache:
        d, e = p.sys_dim, p.dilation.env_dim
        for k, u in enumerate(p.dilation.step_unitaries):
            cache.append(embed_operator(u, (e,) + (d,) * (k + 1), [k + 1, 0]))
    return cache


def _self_link(m: np.ndarray, dims: Sequence[int], x: int, y: int) -> tuple[np.ndarray, tuple[int, ...]]:
    """Contract subsystem ``x`` into subsystem ``y`` of the same operator."""
    n = len(dims)
    t = m.reshape(tuple(dims) * 2)
    rows = list(range(n))
    cols = list(range(n, 2 * n))
    rows[y] = rows[x]
    cols[y] = cols[x]
    keep = [k for k in range(n) if k not in (x, y)]
    res = np.einsum(t, rows + cols, [rows[k] for k in keep] + [cols[k] for k in keep], optimize=True)
    new_dims = tuple(dims[k] for k in keep)
    dim = math.prod(new_dims)
    return res.reshape(dim, dim), new_dims


def _finish(s: ControlComb, m: np.ndarray, anc: tuple) -> np.ndarray:
    # m lives on (sys, ancilla registers...)
    dims = (s.sys_dim,) + anc
    if not s.keep_ancilla:
        return partial_trace(m, dims, [0]) if anc else m
    if s.output_perm is not None:
        m = permute_subsystems(m, dims, s.output_perm)
    return m


def run_strategy(p: ProcessTensor, init: np.ndarray, link_kraus: Sequence[Sequence[np.ndarray]],
                 anc: tuple = (), use_dilation: bool = True) -> np.ndarray:
    """Joint final state on ``(system, ancilla registers...)``.

    Low-level form of :func:`apply_control_comb` without validation:
    ``init`` lives on ``(system, ancilla...)`` and ``link_kraus[k]`` are the
    Kraus operators of the ``k``-th link channel on the same spaces.
    """
    n, d = p.steps, p.sys_dim
    na = len(anc)
    rest = math.prod(anc)
    if p.markov is not None and use_dilation:
        m = init
        eye = np.eye(rest)
        for k, ch in enumerate(p.markov):
            m = _conj_sum([np.kron(kr, eye) for kr in ch.kraus_ops()], m)
            if k < n - 1:
                m = _conj_sum(link_kraus[k], m)
        return m
    if p.dilation is not None and use_dilation:
        e = p.dilation.env_dim
        m = np.kron(init, p.dilation.env_init)
        eye = np.eye(e)
        for k, u in enumerate(_strategy_unitaries(p, tuple(anc))):
            m = u @ m @ u.conj().T
            if k < n - 1:
                m = _conj_sum([np.kron(kr, eye) for kr in link_kraus[k]], m)
        dim = d * rest
        return np.trace(m.reshape(dim, e, dim, e), axis1=1, axis2=3)
    # contraction through the Choi operator: (anc..., o1, i2, o2, ...)
    m, dims = link_product(init, (d, *anc), p.choi, p.dims, [(0, 0)])
    for k in range(n - 1):
        o = na  # current output sits right after the ancilla registers
        m, dims = apply_kraus(m, dims, link_kraus[k], [o] + list(range(na)))
        m, dims = _self_link(m, dims, o, o + 1)
    return permute_subsystems(m, dims, [na] + list(range(na)))


def _conj_sum(kraus, m: np.ndarray) -> np.ndarray:
    out = None
    for k in kraus:
        t = k @ m @ k.conj().T
        out = t if out is None else out + t
    return out


def _strategy_unitaries(p: ProcessTensor, anc: tuple) -> list[np.ndarray]:
    """Step unitaries on ``(system, ancilla registers..., env)``, built once per register layout."""
    key = ("strategy", anc)
    if key not in p._cache:
        d, e = p.sys_dim, p.dilation.env_dim
        dims = (d, *anc, e)
        p._cache[key] = [embed_operator(u, dims, [0, len(dims) - 1]) for u in p.dilation.step_unitaries]
    return p._cache[key]


def apply_control_comb(p: ProcessTensor, s: ControlComb, use_dilation: bool = True) -> np.ndarray:
    """Final state produced by running strategy ``s`` on process ``p``."""
    n, d = p.steps, p.sys_dim
    if s.sys_dim != d or s.steps != n:
        raise ValueError(f"comb for {s.steps} steps of dim {s.sys_dim} cannot act on {n} steps of dim {d}")
    m = run_strategy(p, s.init_state, [ch.kraus_ops() for ch in s.links], s.ancilla_dims, use_dilation)
    return _finish(s, m, s.ancilla_dims)


# ---------------------------------------------------------------------------
# standard strategies
# ---------------------------------------------------------------------------


def _replace_system_kraus(state: np.ndarray, d: int, rest: int) -> list[np.ndarray]:
    """Kraus operators of ``X_{s,rest} -> state (x) tr_s X``."""
    w, v = np.linalg.eigh(0.5 * (state + state.conj().T))
    out = []
    for lam, vec in zip(w, v.T):
        if lam <= 1e-15:
            continue
        for j in range(d):
            out.append(math.sqrt(lam) * np.kron(np.outer(vec, np.eye(d)[j]), np.eye(rest)))
    return out


def product_input_comb(r: Sequence[np.ndarray]) -> ControlComb:
    """Feed ``r[k]`` at each step and discard every output but the last."""
    r = [check_density_matrix(x, tol=1e-9) for x in r]
    d = r[0].shape[0]
    links = tuple(QuantumChannel.from_kraus(_replace_system_kraus(x, d, 1)) for x in r[1:])
    return ControlComb(d, (), r[0], links, keep_ancilla=False)


def global_storage_comb(r: Sequence[np.ndarray]) -> ControlComb:
    """Feed ``r[k]`` at each step and store every output in its own register.

    The final state is ordered ``(output 1, ..., output n)``.
    """
    r = [check_density_matrix(x, tol=1e-9) for x in r]
    n = len(r)
    d = r[0].shape[0]
    anc = (d,) * (n - 1)
    rest = d ** (n - 1)
    init = tensor_product(r[0], *([projector(0, d)] * (n - 1)))
    links = []
    for k in range(n - 1):
        # swap the system into register k, then re-prepare the system
        perm = list(range(n))
        perm[0], perm[k + 1] = perm[k + 1], perm[0]
        sw = _permutation_unitary((d,) * n, perm)
        links.append(QuantumChannel.from_kraus([kr @ sw for kr in _replace_system_kraus(r[k + 1], d, rest)]))
    out_perm = tuple(range(1, n)) + (0,)
    return ControlComb(d, anc, init, tuple(links), keep_ancilla=True, output_perm=out_perm)


def identity_feedthrough_comb(rho1: np.ndarray, n: int) -> ControlComb:
    """Prepare ``rho1`` once and pass every output straight into the next step."""
    rho1 = check_density_matrix(rho1, tol=1e-9)
    d = rho1.shape[0]
    return ControlComb(d, (), rho1, tuple(QuantumChannel.identity(d) for _ in range(n - 1)))


def _permutation_unitary(dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Unitary sending subsystem ``perm[j]`` to position ``j``."""
    dim = math.prod(dims)
    eye = np.eye(dim, dtype=complex).reshape(tuple(dims) + (dim,))
    return eye.transpose(list(perm) + [len(dims)]).reshape(dim, dim)
