"""Quantum channels stored as Choi matrices.

Convention: ``C = sum_jk |j><k| (x) E(|j><k|)``, input space first, so
trace preservation reads ``tr_out C = 1_in``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .linalg import TOL_PSD, check_density_matrix, check_square, partial_trace, tensor_product

TOL_TP = 1e-8


def choi_from_kraus(kraus: Sequence[np.ndarray], dim_in: int) -> np.ndarray:
    # |v_k> = sum_j |j> (x) K_k|j>, so v_k[j, b] = K_k[b, j]
    vs = [np.asarray(k, dtype=complex).T.reshape(-1) for k in kraus]
    return sum(np.outer(v, v.conj()) for v in vs)


def kraus_from_choi(choi: np.ndarray, dim_in: int, dim_out: int, zero_eps: float = 1e-13) -> list[np.ndarray]:
    w, v = np.linalg.eigh(0.5 * (choi + choi.conj().T))
    out = []
    for lam, vec in zip(w, v.T):
        if lam > zero_eps:
            out.append(np.sqrt(lam) * vec.reshape(dim_in, dim_out).T)
    return out or [np.zeros((dim_out, dim_in), dtype=complex)]


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """CPTP map ``dim_in -> dim_out`` held as its Choi matrix."""

    dim_in: int
    dim_out: int
    choi: np.ndarray
    kraus: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        c = check_square(self.choi, "choi")
        if c.shape[0] != self.dim_in * self.dim_out:
            raise ValueError(f"choi dimension {c.shape[0]} != {self.dim_in}*{self.dim_out}")
        object.__setattr__(self, "choi", c)

    # constructors -----------------------------------------------------------

    @classmethod
    def from_kraus(cls, kraus: Sequence[np.ndarray]) -> "QuantumChannel":
        kraus = tuple(np.asarray(k, dtype=complex) for k in kraus)
        dim_out, dim_in = kraus[0].shape
        return cls(dim_in, dim_out, choi_from_kraus(kraus, dim_in), kraus)

    @classmethod
    def from_unitary(cls, u: np.ndarray) -> "QuantumChannel":
        return cls.from_kraus([u])

    @classmethod
    def identity(cls, dim: int) -> "QuantumChannel":
        return cls.from_unitary(np.eye(dim, dtype=complex))

    @classmethod
    def fixed_output(cls, state: np.ndarray, dim_in: int) -> "QuantumChannel":
        """Replacement channel ``rho -> tr(rho) * state``."""
        state = check_density_matrix(state)
        return cls(dim_in, state.shape[0], tensor_product(np.eye(dim_in), state))

    @classmethod
    def from_map(cls, fn, dim_in: int) -> "QuantumChannel":
        """Choi matrix of an arbitrary linear map given as a Python callable."""
        blocks = []
        for j in range(dim_in):
            row = []
            for k in range(dim_in):
                e = np.zeros((dim_in, dim_in), dtype=complex)
                e[j, k] = 1.0
                row.append(np.asarray(fn(e), dtype=complex))
            blocks.append(row)
        return cls(dim_in, blocks[0][0].shape[0], np.block(blocks))

    # behaviour --------------------------------------------------------------

    def kraus_ops(self) -> tuple:
        if self.kraus is None:
            object.__setattr__(self, "kraus", tuple(kraus_from_choi(self.choi, self.dim_in, self.dim_out)))
        return self.kraus

    def apply(self, rho: np.ndarray) -> np.ndarray:
        if self.kraus is not None:
            return sum(k @ rho @ k.conj().T for k in self.kraus)
        c = self.choi.reshape(self.dim_in, self.dim_out, self.dim_in, self.dim_out)
        return np.einsum("jk,jbkc->bc", rho, c)

    def then(self, other: "QuantumChannel") -> "QuantumChannel":
        """Sequential composition: ``self`` first, then ``other``."""
        if other.dim_in != self.dim_out:
            raise ValueError("dimension mismatch in composition")
        ks = [b @ a for a in self.kraus_ops() for b in other.kraus_ops()]
        return QuantumChannel.from_kraus(ks)

    def tp_residual(self) -> float:
        r = partial_trace(self.choi, (self.dim_in, self.dim_out), [0])
        return float(np.max(np.abs(r - np.eye(self.dim_in))))

    def psd_min(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.choi + self.choi.conj().T))[0])

    def is_cptp(self, tol: float = TOL_TP) -> bool:
        herm = float(np.max(np.abs(self.choi - self.choi.conj().T)))
        return herm <= tol and self.tp_residual() <= tol and self.psd_min() >= -TOL_PSD

    def choi_distance(self, other: "QuantumChannel") -> float:
        return float(np.max(np.abs(self.choi - other.choi)))
