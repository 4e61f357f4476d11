"""Finite GNS data, truncated displacement operators and clock-shift matrices.

For a point set containing the origin, the vectors ``W(x_j) Omega`` span a
finite piece of the GNS space of a state; their inner products are the
entries of the twisted Gram matrix. Displacement operators on truncated Fock
space and the q x q clock and shift matrices give concrete finite models of
the Weyl relation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import fock
from .phase_space import PhasePoint, symplectic_form
from .state_space import CharacteristicState, FockDensity, evaluate_char, twisted_gram

RANK_TOL = 1e-10


class MissingOriginError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GnsData:
    h: float
    points: tuple[PhasePoint, ...]
    gram: np.ndarray
    eigenvalues: np.ndarray
    rank: int
    cyclic_index: int
    vector_state_residual: float
    rank_tol: float

    def as_dict(self) -> dict:
        return {
            "h": self.h,
            "points": [p.to_strings() for p in self.points],
            "gram_re": self.gram.real.tolist(),
            "gram_im": self.gram.imag.tolist(),
            "spectrum": self.eigenvalues.tolist(),
            "rank": self.rank,
            "rank_tol": self.rank_tol,
            "cyclic_index": self.cyclic_index,
            "vector_state_residual": self.vector_state_residual,
        }


def numerical_rank(eigenvalues: np.ndarray, tol: float = RANK_TOL) -> int:
    """Eigenvalues above ``tol`` relative to the largest (absolute floor ``tol``)."""
    if eigenvalues.size == 0:
        return 0
    scale = max(1.0, float(np.abs(eigenvalues).max()))
    return int(np.sum(eigenvalues > tol * scale))


def gns_gram(
    state: CharacteristicState, points: Sequence[PhasePoint], rank_tol: float = RANK_TOL
) -> GnsData:
    """Gram matrix of ``W(x_j) Omega`` and its numerical rank."""
    points = tuple(points)
    origin = PhasePoint.origin(state.n)
    if origin not in points:
        raise MissingOriginError("the point set must contain the origin (the cyclic vector)")
    G = twisted_gram(state, points)
    eig = np.linalg.eigvalsh(0.5 * (G + G.conj().T))
    i0 = points.index(origin)
    direct = np.array([evaluate_char(state, p) for p in points])
    resid = float(np.abs(G[i0] - direct).max())
    return GnsData(state.h, points, G, eig, numerical_rank(eig, rank_tol), i0, resid, rank_tol)


@dataclass(frozen=True, eq=False)
class PartialAction:
    """``W(y)`` restricted to the span of those ``W(x_j) Omega`` whose translates stay in the set.

    ``matrix[k, j]`` is the coefficient of ``W(x_k) Omega`` in ``W(y) W(x_j) Omega``.
    """

    shift: PhasePoint
    domain: tuple[int, ...]
    image: tuple[int, ...]
    matrix: np.ndarray
    isometry_residual: float

    @property
    def total(self) -> bool:
        return len(self.domain) == self.matrix.shape[0]

    def as_dict(self) -> dict:
        return {
            "shift": self.shift.to_strings(),
            "domain": list(self.domain),
            "image": list(self.image),
            "partial": not self.total,
            "isometry_residual": self.isometry_residual,
        }


def gns_action(data: GnsData, y: PhasePoint) -> PartialAction:
    """Represent ``W(y)`` on the finite span; ``W(y) W(x) = exp(i h sigma(y,x)/2) W(y+x)``."""
    index = {p: i for i, p in enumerate(data.points)}
    m = len(data.points)
    M = np.zeros((m, m), dtype=complex)
    dom, img, phases = [], [], []
    for j, x in enumerate(data.points):
        k = index.get(y + x)
        if k is None:
            continue
        ph = np.exp(0.5j * data.h * float(symplectic_form(y, x)))
        M[k, j] = ph
        dom.append(j)
        img.append(k)
        phases.append(ph)
    if dom:
        ph = np.array(phases)
        G = data.gram
        moved = np.conj(ph)[:, None] * ph[None, :] * G[np.ix_(img, img)]
        resid = float(np.abs(moved - G[np.ix_(dom, dom)]).max())
    else:
        resid = 0.0
    return PartialAction(y, tuple(dom), tuple(img), M, resid)


# ------------------------------------------------------------ displacements


def displacement_matrix(x, h: float, N: int, method: str = "expm") -> np.ndarray:
    """Displacement operator for ``x`` on N^n truncated Fock states.

    ``method="expm"`` exponentiates the truncated generator (exactly unitary);
    ``method="compression"`` returns the exact matrix elements ``P_N D P_N``.
    """
    if h <= 0:
        raise ValueError("displacement operators need h > 0")
    if N < 2:
        raise ValueError("truncation must be at least 2")
    coords = x.to_array() if isinstance(x, PhasePoint) else np.asarray(x, dtype=float)
    if method == "expm":
        return fock.truncated_displacement(coords, h, N)
    if method == "compression":
        return fock.compressed_displacement(coords, h, N)
    raise ValueError(f"unknown method {method!r}")


def _low_block(N: int, n: int, block: int) -> np.ndarray:
    """Indices of tensor basis states with every occupation number below ``block``."""
    grids = np.meshgrid(*[np.arange(N)] * n, indexing="ij")
    mask = np.all(np.stack([g.ravel() for g in grids]) < block, axis=0)
    return np.flatnonzero(mask)


@dataclass(frozen=True)
class RelationResidual:
    relation: float
    unitarity: float
    N: int
    block: int

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def relation_residual(
    x: PhasePoint, y: PhasePoint, h: float, N: int = 64, block: int | None = None, method: str = "expm"
) -> RelationResidual:
    """``||(D(x)D(y) - exp(i h sigma(x,y)/2) D(x+y)) P||`` on the low-occupation block.

    Truncation spoils the relation near the cutoff, so the residual is taken
    on states with occupation below ``block`` (default ``N // 8``); the
    unitarity residual ``||D(x) D(x)^* - I||`` is over the full space.
    """
    block = max(1, N // 8) if block is None else block
    Dx = displacement_matrix(x, h, N, method)
    Dy = displacement_matrix(y, h, N, method)
    Dxy = displacement_matrix(x + y, h, N, method)
    phase = np.exp(0.5j * h * float(symplectic_form(x, y)))
    cols = _low_block(N, x.n, block)
    R = (Dx @ Dy - phase * Dxy)[:, cols]
    rel = float(np.linalg.norm(R, 2))
    uni = float(np.linalg.norm(Dx @ Dx.conj().T - np.eye(Dx.shape[0]), 2))
    return RelationResidual(rel, uni, N, block)


def density_trace(family: FockDensity, x, h: float | None = None, N: int = 64) -> complex:
    """``Tr(rho D(x)) / Tr(rho)`` with ``rho`` zero-padded to ``N`` states per mode."""
    h = family.hbar if h is None else h
    M = family.truncation
    if N < M:
        raise ValueError("truncation smaller than the density")
    n = family.n_modes
    rho = np.zeros((N,) * (2 * n), dtype=complex)
    rho[tuple([slice(0, M)] * (2 * n))] = family.rho.reshape((M,) * (2 * n))
    rho = rho.reshape(N**n, N**n)
    D = displacement_matrix(x, h, N)
    return complex(np.trace(rho @ D) / np.trace(rho))


# ------------------------------------------------------------- clock-shift


@dataclass(frozen=True, eq=False)
class ClockShiftRep:
    p: int
    q: int
    U: np.ndarray
    V: np.ndarray

    @property
    def omega(self) -> complex:
        return np.exp(2j * np.pi * self.p / self.q)

    def relation_residual(self) -> float:
        return float(np.abs(self.U @ self.V - self.omega * self.V @ self.U).max())

    def unitarity_residual(self) -> float:
        I = np.eye(self.q)
        return float(
            max(np.abs(self.U @ self.U.conj().T - I).max(), np.abs(self.V @ self.V.conj().T - I).max())
        )

    def monomial_gram(self) -> np.ndarray:
        """Hilbert-Schmidt Gram matrix of ``U^j V^k``, 0 <= j, k < q, normalized by 1/q."""
        mons = []
        Uj = np.eye(self.q, dtype=complex)
        for _ in range(self.q):
            M = Uj.copy()
            for _ in range(self.q):
                mons.append(M.ravel())
                M = M @ self.V
            Uj = Uj @ self.U
        X = np.array(mons)
        return (X.conj() @ X.T) / self.q

    def monomial_rank(self, tol: float = RANK_TOL) -> int:
        return numerical_rank(np.linalg.eigvalsh(self.monomial_gram()), tol)

    def as_dict(self) -> dict:
        return {
            "p": self.p,
            "q": self.q,
            "U_re": self.U.real.tolist(),
            "U_im": self.U.imag.tolist(),
            "V_re": self.V.real.tolist(),
            "V_im": self.V.imag.tolist(),
            "relation_residual": self.relation_residual(),
            "unitarity_residual": self.unitarity_residual(),
            "monomial_rank": self.monomial_rank(),
        }


def clock_shift(p: int, q: int) -> ClockShiftRep:
    """Clock ``U = diag(omega^k)`` and shift ``V e_k = e_{k+1}`` with ``UV = omega VU``."""
    p, q = int(p), int(q)
    if q < 2:
        raise ValueError("modulus q must be at least 2")
    if math.gcd(p, q) != 1:
        raise ValueError(f"p={p} and q={q} are not coprime")
    k = np.arange(q)
    # exact phases at multiples of a quarter turn keep Pauli matrices real
    U = np.diag(np.exp(2j * np.pi * ((p * k) % q) / q))
    U = np.where(np.abs(U.imag) < 1e-15, U.real, U) + 0j
    V = np.roll(np.eye(q), 1, axis=0).astype(complex)
    return ClockShiftRep(p, q, U, V)
