"""Dense Hermitian linear algebra and entropic functionals.

Matrices are plain complex ``numpy`` arrays. Multipartite operators carry a
``dims`` sequence listing the subsystem dimensions in tensor order; every
subsystem routine here (partial traces, local maps, link products) works on
the reshaped ``dims + dims`` tensor rather than on explicit Kronecker
embeddings.

Entropies are in nats. A relative entropy with a support violation is
``math.inf``.
"""
from __future__ import annotations

import math
from functools import reduce
from typing import NamedTuple, Sequence

import numpy as np

TOL_HERM = 1e-10
TOL_TRACE = 1e-10
TOL_PSD = 1e-10
EIG_CLIP = 1e-12
SUPPORT_TOL = 1e-9


class Spectrum(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


# ---------------------------------------------------------------------------
# validation helpers
# ---------------------------------------------------------------------------


def check_square(m, name: str = "matrix") -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def hermiticity_error(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def check_hermitian(m, tol: float = TOL_HERM, name: str = "matrix") -> np.ndarray:
    m = check_square(m, name)
    err = hermiticity_error(m)
    if err > tol:
        raise ValueError(f"{name} is not Hermitian (max |A - A^dag| = {err:.3e})")
    return m


def check_density_matrix(rho, dim: int | None = None, tol: float = TOL_HERM, name: str = "state") -> np.ndarray:
    """Validate a density matrix and return it as a complex array.

    Raises ``ValueError`` when ``rho`` is not Hermitian, not unit trace or has
    an eigenvalue below ``-tol``.
    """
    rho = check_hermitian(rho, tol, name)
    if dim is not None and rho.shape[0] != dim:
        raise ValueError(f"{name} has dimension {rho.shape[0]}, expected {dim}")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > max(tol, TOL_TRACE):
        raise ValueError(f"{name} has trace {tr!r}, expected 1")
    lo = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if lo < -tol:
        raise ValueError(f"{name} has negative eigenvalue {lo:.3e}")
    return rho


def is_density_matrix(rho, tol: float = TOL_HERM) -> bool:
    try:
        check_density_matrix(rho, tol=tol)
    except ValueError:
        return False
    return True


def check_dims(dims: Sequence[int], size: int) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims):
        raise ValueError(f"subsystem dimensions must be positive, got {dims}")
    if math.prod(dims) != size:
        raise ValueError(f"dims {dims} multiply to {math.prod(dims)}, matrix has dimension {size}")
    return dims


# ---------------------------------------------------------------------------
# tensor structure
# ---------------------------------------------------------------------------


def tensor_product(*mats) -> np.ndarray:
    """Kronecker product of any number of matrices, in argument order."""
    if not mats:
        return np.ones((1, 1), dtype=complex)
    return reduce(np.kron, (np.asarray(m, dtype=complex) for m in mats))


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(index: int, dim: int) -> np.ndarray:
    p = np.zeros((dim, dim), dtype=complex)
    p[index, index] = 1.0
    return p


def _as_tensor(m: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    return np.asarray(m).reshape(tuple(dims) + tuple(dims))


def _as_matrix(t: np.ndarray) -> np.ndarray:
    n = t.ndim // 2
    d = math.prod(t.shape[:n])
    return t.reshape(d, d)


def partial_trace(m, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    The kept subsystems stay in their original relative order.
    """
    m = np.asarray(m)
    dims = check_dims(dims, m.shape[0])
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= n for k in keep):
        raise ValueError(f"keep indices {keep} out of range for {n} subsystems")
    rows = list(range(n))
    cols = [k + n if k in keep else k for k in range(n)]
    out = keep + [k + n for k in keep]
    t = np.einsum(_as_tensor(m, dims), rows + cols, out)
    d = math.prod(dims[k] for k in keep)
    return t.reshape(d, d)


def marginals(m, dims: Sequence[int]) -> list[np.ndarray]:
    return [partial_trace(m, dims, [k]) for k in range(len(dims))]


def permute_subsystems(m, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder subsystems so that new position ``j`` holds old subsystem ``perm[j]``."""
    m = np.asarray(m)
    dims = check_dims(dims, m.shape[0])
    n = len(dims)
    perm = list(perm)
    if sorted(perm) != list(range(n)):
        raise ValueError(f"{perm} is not a permutation of {n} subsystems")
    t = _as_tensor(m, dims).transpose(perm + [p + n for p in perm])
    return _as_matrix(t)


def apply_kraus(m, dims: Sequence[int], kraus: Sequence[np.ndarray], targets: Sequence[int],
                out_dims: Sequence[int] | None = None) -> tuple[np.ndarray, tuple[int, ...]]:
    """Apply the map X -> sum_k K X K^dag on the ``targets`` subsystems.

    Each Kraus operator acts on the targets in the listed order and maps them
    to subsystems of dimensions ``out_dims`` (same as input when omitted),
    which replace the targets in place. Returns the new matrix and dims.
    """
    m = np.asarray(m)
    dims = check_dims(dims, m.shape[0])
    n = len(dims)
    targets = [int(t) for t in targets]
    in_dims = [dims[t] for t in targets]
    out_dims = list(in_dims if out_dims is None else out_dims)
    if len(out_dims) != len(targets):
        raise ValueError("out_dims needs one entry per target")
    k_in, k_out = math.prod(in_dims), math.prod(out_dims)
    new_dims = list(dims)
    for t, d in zip(targets, out_dims):
        new_dims[t] = d
    rest = [k for k in range(n) if k not in targets]
    r = math.prod(dims[k] for k in rest)
    # bring the targets to the front: X[(targets), (rest)], [(targets), (rest)]
    order = targets + rest
    x = _as_tensor(m, dims).transpose(order + [k + n for k in order]).reshape(k_in, r, k_in, r)
    acc = np.zeros((k_out, r, r, k_out), dtype=complex)
    for K in kraus:
        K = np.asarray(K, dtype=complex)
        if K.shape != (k_out, k_in):
            raise ValueError(f"Kraus operator shape {K.shape}, expected {(k_out, k_in)}")
        acc += np.tensordot(np.tensordot(K, x, axes=(1, 0)), K.conj(), axes=(2, 1))
    front = out_dims + [dims[k] for k in rest]
    t = acc.transpose(0, 1, 3, 2).reshape(front + front)
    back = list(np.argsort(order))
    nf = len(front)
    t = t.transpose(back + [k + nf for k in back])
    return _as_matrix(t), tuple(new_dims)


def embed_operator(u: np.ndarray, dims: Sequence[int], targets: Sequence[int]) -> np.ndarray:
    """Matrix of ``u`` acting on ``targets`` (in that order) and identity elsewhere."""
    dims = tuple(int(d) for d in dims)
    n = len(dims)
    targets = [int(t) for t in targets]
    rest = [k for k in range(n) if k not in targets]
    full = np.kron(np.asarray(u, dtype=complex), np.eye(math.prod(dims[k] for k in rest)))
    order = targets + rest
    return permute_subsystems(full, [dims[k] for k in order], list(np.argsort(order)))


def apply_unitary(m, dims: Sequence[int], u: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    return apply_kraus(m, dims, [u], targets)[0]


def link_product(a, dims_a: Sequence[int], b, dims_b: Sequence[int],
                 pairs: Sequence[tuple[int, int]]) -> tuple[np.ndarray, tuple[int, ...]]:
    """Link product of two operators over the shared subsystems in ``pairs``.

    ``A * B = tr_K[(A^{T_K} (x) 1)(1 (x) B)]`` where ``K`` pairs subsystem
    ``i`` of ``a`` with subsystem ``j`` of ``b`` for each ``(i, j)``. The
    result lives on the unpaired subsystems of ``a`` followed by the unpaired
    subsystems of ``b``.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    dims_a = check_dims(dims_a, a.shape[0])
    dims_b = check_dims(dims_b, b.shape[0])
    na, nb = len(dims_a), len(dims_b)
    paired_a = {i for i, _ in pairs}
    paired_b = {j for _, j in pairs}
    for i, j in pairs:
        if dims_a[i] != dims_b[j]:
            raise ValueError(f"linked subsystems have dimensions {dims_a[i]} and {dims_b[j]}")
    a_rows = list(range(na))
    a_cols = list(range(na, 2 * na))
    base = 2 * na
    b_rows = [base + j for j in range(nb)]
    b_cols = [base + nb + j for j in range(nb)]
    for i, j in pairs:
        b_rows[j] = a_rows[i]
        b_cols[j] = a_cols[i]
    free_a = [i for i in range(na) if i not in paired_a]
    free_b = [j for j in range(nb) if j not in paired_b]
    out = ([a_rows[i] for i in free_a] + [b_rows[j] for j in free_b]
           + [a_cols[i] for i in free_a] + [b_cols[j] for j in free_b])
    t = np.einsum(_as_tensor(a, dims_a), a_rows + a_cols,
                  _as_tensor(b, dims_b), b_rows + b_cols, out, optimize=True)
    new_dims = tuple(dims_a[i] for i in free_a) + tuple(dims_b[j] for j in free_b)
    d = math.prod(new_dims)
    return t.reshape(d, d), new_dims


# ---------------------------------------------------------------------------
# spectra and entropies
# ---------------------------------------------------------------------------


def hermitian_eig(m, tol: float = TOL_HERM) -> Spectrum:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    m = check_hermitian(m, tol)
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    return Spectrum(w, v)


def _xlogx(p: np.ndarray) -> float:
    p = p[p > EIG_CLIP]
    return float(np.sum(p * np.log(p)))


def vn_entropy(rho) -> float:
    """Von Neumann entropy ``-tr[rho ln rho]`` with ``0 ln 0 = 0``."""
    rho = np.asarray(rho)
    w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    return max(0.0, -_xlogx(w))


def rel_entropy(rho, sigma) -> float:
    """Relative entropy ``tr[rho (ln rho - ln sigma)]``.

    Returns ``math.inf`` when ``rho`` puts more than ``SUPPORT_TOL`` weight
    on eigenvectors of ``sigma`` with eigenvalue at or below ``EIG_CLIP``.
    """
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape:
        raise ValueError(f"shape mismatch {rho.shape} vs {sigma.shape}")
    p = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    q, v = np.linalg.eigh(0.5 * (sigma + sigma.conj().T))
    # diagonal of rho in sigma's eigenbasis
    weights = np.real(np.einsum("ij,jk,ki->i", v.conj().T, rho, v))
    null = q <= EIG_CLIP
    if np.any(null) and np.sum(weights[null]) > SUPPORT_TOL:
        return math.inf
    cross = float(np.sum(weights[~null] * np.log(q[~null])))
    return max(0.0, _xlogx(p) - cross)


def trace_distance(a, b) -> float:
    """Trace norm ``tr|a - b|`` (ranges over [0, 2] for states)."""
    diff = np.asarray(a) - np.asarray(b)
    w = np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))
    return float(np.sum(np.abs(w)))


def multi_mutual_info(rho, dims: Sequence[int]) -> float:
    """Multipartite mutual information ``sum_i S(rho_i) - S(rho)``."""
    rho = np.asarray(rho)
    dims = check_dims(dims, rho.shape[0])
    return max(0.0, sum(vn_entropy(r) for r in marginals(rho, dims)) - vn_entropy(rho))


def sqrtm_psd(m) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (m + np.conj(m).T))
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def logm_pd(m) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (m + np.conj(m).T))
    return (v * np.log(w)) @ v.conj().T
