"""Seeded random states, unitaries and channels for ensembles and property tests."""
from __future__ import annotations

import numpy as np


def as_rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def ginibre(rows: int, cols: int, rng) -> np.ndarray:
    rng = as_rng(rng)
    return (rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))) / np.sqrt(2)


def random_unitary(dim: int, rng) -> np.ndarray:
    """Haar unitary from the QR decomposition of a Ginibre matrix."""
    q, r = np.linalg.qr(ginibre(dim, dim, rng))
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_state(dim: int, rng, rank: int | None = None) -> np.ndarray:
    """Random density matrix, Hilbert-Schmidt distributed for full rank."""
    a = ginibre(dim, rank or dim, rng)
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_pure_state(dim: int, rng) -> np.ndarray:
    v = ginibre(dim, 1, rng)[:, 0]
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def random_hermitian(dim: int, rng) -> np.ndarray:
    a = ginibre(dim, dim, rng)
    return 0.5 * (a + a.conj().T)


def random_kraus(dim_in: int, dim_out: int, rng, n_kraus: int | None = None) -> list[np.ndarray]:
    """Kraus operators of a random CPTP map from a random Stinespring isometry."""
    n_kraus = n_kraus or dim_in * dim_out
    u = random_unitary(dim_out * n_kraus, rng)
    iso = u[:, :dim_in].reshape(dim_out, n_kraus, dim_in)
    return [iso[:, k, :] for k in range(n_kraus)]
