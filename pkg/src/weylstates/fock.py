"""Displacement operators on the harmonic-oscillator (Fock) basis.

A phase-space point ``x = (a, b)`` at deformation level ``h`` maps to the
per-mode amplitudes ``alpha_k = sqrt(h/2) (a_k + i b_k)``. With this choice
``Im(alpha conj(beta)) = (h/2) sigma(x, y)``, hence
``D(x) D(y) = exp(i h sigma(x, y) / 2) D(x + y)``, the Weyl product rule.

Two finite constructions are provided:

* exact compressions ``P_N D P_N`` whose entries are the matrix elements of
  the unbounded-space operator, computed with a normalized associated
  Laguerre recurrence along each diagonal (stable to ~1e-14 for N <= 1024);
* the matrix exponential of the truncated generator
  ``alpha a^dagger - conj(alpha) a`` (exactly unitary, accurate on the
  low-lying block only).
"""

from __future__ import annotations

from functools import reduce

import numpy as np
import scipy.linalg
from scipy.special import gammaln


def amplitudes(coords: np.ndarray, h: float) -> np.ndarray:
    """Per-mode amplitudes for stacked coordinates of shape (..., 2n) -> (..., n)."""
    coords = np.asarray(coords, dtype=float)
    n = coords.shape[-1] // 2
    return np.sqrt(h / 2.0) * (coords[..., :n] + 1j * coords[..., n:])


def _first_row(x: np.ndarray, N: int) -> np.ndarray:
    # f_0^{(k)} = exp(-x/2) x^{k/2} / sqrt(k!)
    k = np.arange(N)
    with np.errstate(divide="ignore"):
        logx = np.log(x)[:, None]
    logf = -x[:, None] / 2.0 - 0.5 * gammaln(k + 1)
    pos = x[:, None] > 0
    logf = logf + np.where(pos, 0.5 * k * np.where(pos, logx, 0.0), 0.0)
    f = np.exp(logf)
    f[:, 1:] = np.where(pos, f[:, 1:], 0.0)
    return f


def _laguerre_rows(alpha: np.ndarray, N: int):
    """Yield ``(n, f_n)`` where ``f_n[p, k] = |<n+k| D(alpha_p) |n>|`` up to sign."""
    x = np.abs(alpha) ** 2
    k = np.arange(N)
    xx = x[:, None]
    f_prev = np.zeros((alpha.size, N))
    f = _first_row(x, N)
    yield 0, f
    for n in range(N - 1):
        f_next = ((2 * n + k + 1 - xx) * f - np.sqrt(n * (n + k)) * f_prev) / np.sqrt(
            (n + 1) * (n + k + 1)
        )
        f_prev, f = f, f_next
        yield n + 1, f


def displacement_elements(alpha, N: int) -> np.ndarray:
    """Exact matrix elements ``<m|D(alpha_p)|n>`` for ``m, n < N``; shape (P, N, N)."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=complex)).ravel()
    P = alpha.size
    phase = np.exp(1j * np.outer(np.angle(alpha), np.arange(N)))
    L = np.empty((P, N, N))
    for n, f in _laguerre_rows(alpha, N):
        L[:, n, :] = f
    D = np.zeros((P, N, N), dtype=complex)
    for k in range(N):
        idx = np.arange(N - k)
        low = L[:, idx, k] * phase[:, k : k + 1]
        D[:, idx + k, idx] = low
        if k:
            D[:, idx, idx + k] = (-1) ** k * np.conj(low)
    return D


def single_mode_trace(rho: np.ndarray, alpha) -> np.ndarray:
    """``Tr(rho D(alpha_p))`` for a single-mode density on the first N Fock states.

    Streams the Laguerre recurrence so memory stays O(P N).
    """
    rho = np.asarray(rho, dtype=complex)
    N = rho.shape[0]
    alpha = np.atleast_1d(np.asarray(alpha, dtype=complex)).ravel()
    k = np.arange(N)
    E = np.exp(1j * np.outer(np.angle(alpha), k))
    sign = (-1.0) ** k
    out = np.zeros(alpha.size, dtype=complex)
    for n, f in _laguerre_rows(alpha, N):
        valid = n + k < N
        kk = k[valid]
        upper = np.zeros(N, dtype=complex)
        lower = np.zeros(N, dtype=complex)
        upper[valid] = rho[n, n + kk]
        lower[valid] = rho[n + kk, n]
        lower[0] = 0.0
        out += np.sum(f * (E * upper + np.conj(E) * (sign * lower)), axis=1)
    return out


def fock_trace(rho: np.ndarray, n_modes: int, alphas: np.ndarray, chunk: int = 2048) -> np.ndarray:
    """``Tr(rho D(x_p))`` for an ``n_modes``-mode density on N^n_modes Fock states.

    ``alphas`` has shape (P, n_modes).
    """
    alphas = np.asarray(alphas, dtype=complex).reshape(-1, n_modes)
    rho = np.asarray(rho, dtype=complex)
    if n_modes == 1:
        return single_mode_trace(rho, alphas[:, 0])
    N = int(round(rho.shape[0] ** (1.0 / n_modes)))
    if N**n_modes != rho.shape[0]:
        raise ValueError("density dimension is not N**n_modes")
    # rho[(i1..in),(j1..jn)] D1[j1,i1] ... Dn[jn,in]
    R = rho.reshape((N,) * (2 * n_modes))
    letters = "abcdefgh"
    rows, cols = letters[:n_modes], letters[n_modes : 2 * n_modes]
    spec = rows + cols + "".join(f",z{c}{r}" for r, c in zip(rows, cols)) + "->z"
    out = np.empty(alphas.shape[0], dtype=complex)
    for start in range(0, alphas.shape[0], chunk):
        block = alphas[start : start + chunk]
        mats = [displacement_elements(block[:, m], N) for m in range(n_modes)]
        out[start : start + chunk] = np.einsum(spec, R, *mats, optimize=True)
    return out


def compressed_displacement(coords, h: float, N: int) -> np.ndarray:
    """``P_N D(x) P_N`` on the tensor-product Fock space, dimension N^n."""
    alpha = amplitudes(np.asarray(coords, dtype=float), h)
    mats = [displacement_elements(a, N)[0] for a in alpha]
    return reduce(np.kron, mats)


def annihilation(N: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, N, dtype=float)), 1)


def truncated_displacement(coords, h: float, N: int) -> np.ndarray:
    """``expm(alpha a^dagger - conj(alpha) a)`` per mode on N Fock states, tensored."""
    alpha = amplitudes(np.asarray(coords, dtype=float), h)
    a = annihilation(N)
    mats = [scipy.linalg.expm(al * a.T - np.conj(al) * a) for al in alpha]
    return reduce(np.kron, mats)
