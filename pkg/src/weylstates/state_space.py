"""States given by their characteristic functionals ``phi(x) = omega(W_h(x))``.

Each family knows how to evaluate ``phi`` at exact points (``at_points``)
and, for families that admit it, on float coordinate arrays (``values``),
which is what the quadrature in :mod:`weylstates.classical_measures` uses.

Positivity on finite combinations ``A = sum c_j W(x_j)`` unfolds to

    omega(A* A) = sum conj(c_j) c_k exp(-(i h / 2) sigma(x_j, x_k)) phi(x_k - x_j),

so a state must make the twisted Gram matrix
``M_jk = exp(-(i h / 2) sigma(x_j, x_k)) phi(x_k - x_j)`` positive
semidefinite on every finite point set.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import fock
from .phase_space import (
    DimensionError,
    PhasePoint,
    rational_rank,
    span_coefficients,
    symplectic_form,
    symplectic_matrix,
    to_rational,
)
from .weyl_algebra import LevelMismatchError, WeylElement, _check_level

REGULAR = "Regular"
NON_REGULAR = "NonRegular"
INCONCLUSIVE = "Inconclusive"

PSD_TOL = 1e-8
DENSITY_TOL = 1e-10


class DuplicatePointError(ValueError):
    pass


class MissingValueError(KeyError):
    """A tabulated state was queried outside its table."""


def _as_coords(points) -> np.ndarray:
    if isinstance(points, PhasePoint):
        return points.to_array()[None, :]
    if len(points) and isinstance(points[0], PhasePoint):
        return np.array([p.to_array() for p in points])
    return np.atleast_2d(np.asarray(points, dtype=float))


class Family:
    """Base class for characteristic-functional families on R^{2n}."""

    n: int
    #: verdict known in closed form, or None when only sampling can decide
    analytic_regularity: str | None = None

    def values(self, coords: np.ndarray) -> np.ndarray:
        """phi on a float array of shape (P, 2n)."""
        raise NotImplementedError

    def at_points(self, points: Sequence[PhasePoint]) -> np.ndarray:
        """phi on exact points; exact membership tests where the family needs them."""
        if not points:
            return np.zeros(0, dtype=complex)
        return self.values(_as_coords(points))

    def describe(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Gaussian(Family):
    """``phi(x) = exp(i m.x - x^T S x / 2)``."""

    mean: np.ndarray
    cov: np.ndarray
    analytic_regularity = REGULAR

    def __post_init__(self):
        m = np.asarray(self.mean, dtype=float).ravel()
        S = np.asarray(self.cov, dtype=float)
        if S.shape != (m.size, m.size) or m.size % 2:
            raise DimensionError(f"mean of length {m.size} and covariance {S.shape} do not match R^2n")
        if not np.allclose(S, S.T, atol=1e-12):
            raise ValueError("covariance must be symmetric")
        if np.linalg.eigvalsh(S).min() < -1e-12:
            raise ValueError("covariance must be positive semidefinite")
        object.__setattr__(self, "mean", m)
        object.__setattr__(self, "cov", S)

    @property
    def n(self) -> int:
        return self.mean.size // 2

    def values(self, coords):
        x = np.atleast_2d(np.asarray(coords, dtype=float))
        quad = np.einsum("pi,ij,pj->p", x, self.cov, x)
        return np.exp(1j * (x @ self.mean) - 0.5 * quad)

    def describe(self):
        return {"family": "gaussian", "mean": self.mean.tolist(), "cov": self.cov.tolist()}


@dataclass(frozen=True, eq=False)
class FockDensity(Family):
    """``phi(x) = Tr(rho D(x))`` for a density on the first N Fock states per mode.

    ``hbar`` is the level of the representation used for the displacement
    amplitudes; it stays attached to the family when the state is moved to
    another level (e.g. by the classical limit), so ``phi`` is preserved.
    Matrix elements are exact (no truncation of ``D``), so only rounding
    error enters.
    """

    rho: np.ndarray
    n_modes: int
    hbar: float
    analytic_regularity = REGULAR

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError("density matrix must be square")
        N = int(round(rho.shape[0] ** (1.0 / self.n_modes)))
        if N**self.n_modes != rho.shape[0] or N < 1:
            raise DimensionError(f"density dimension {rho.shape[0]} is not N**{self.n_modes}")
        if np.abs(rho - rho.conj().T).max() > DENSITY_TOL:
            raise ValueError("density matrix must be Hermitian")
        if np.linalg.eigvalsh(rho).min() < -DENSITY_TOL:
            raise ValueError("density matrix must be positive semidefinite")
        if abs(np.trace(rho) - 1.0) > DENSITY_TOL:
            raise ValueError(f"density matrix must have unit trace, got {np.trace(rho)}")
        if not 0.0 < float(self.hbar) <= 1.0:
            raise ValueError("FockDensity needs a representation level hbar in (0, 1]")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "hbar", float(self.hbar))

    @property
    def n(self) -> int:
        return self.n_modes

    @property
    def truncation(self) -> int:
        return int(round(self.rho.shape[0] ** (1.0 / self.n_modes)))

    @classmethod
    def vacuum(cls, hbar: float, N: int = 2, n_modes: int = 1) -> "FockDensity":
        return cls.number_state(0, hbar, N, n_modes)

    @classmethod
    def number_state(cls, k: int, hbar: float, N: int | None = None, n_modes: int = 1):
        N = N or k + 1
        dim = N**n_modes
        rho = np.zeros((dim, dim), dtype=complex)
        # |k, 0, ..., 0>
        rho[k * N ** (n_modes - 1), k * N ** (n_modes - 1)] = 1.0
        return cls(rho, n_modes, hbar)

    @classmethod
    def random(cls, N: int, hbar: float, rng=None, n_modes: int = 1, rank: int | None = None):
        rng = np.random.default_rng(rng)
        dim = N**n_modes
        rank = rank or dim
        G = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
        rho = G @ G.conj().T
        rho = 0.5 * (rho + rho.conj().T) / np.trace(rho).real
        return cls(rho, n_modes, hbar)

    def values(self, coords):
        alphas = fock.amplitudes(np.atleast_2d(np.asarray(coords, dtype=float)), self.hbar)
        return fock.fock_trace(self.rho, self.n_modes, alphas)

    def describe(self):
        return {
            "family": "fock",
            "n_modes": self.n_modes,
            "truncation": self.truncation,
            "hbar": self.hbar,
            "rho_re": self.rho.real.tolist(),
            "rho_im": self.rho.imag.tolist(),
        }


@dataclass(frozen=True, eq=False)
class PointMixture(Family):
    """Finitely supported measure: ``phi(x) = sum_j w_j exp(i x.y_j)``."""

    support: np.ndarray
    weights: np.ndarray
    analytic_regularity = REGULAR

    def __post_init__(self):
        Y = np.atleast_2d(np.asarray(self.support, dtype=float))
        w = np.asarray(self.weights, dtype=float).ravel()
        if Y.shape[0] != w.size or Y.shape[1] % 2:
            raise DimensionError("support and weights do not match")
        if (w < 0).any() or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1")
        object.__setattr__(self, "support", Y)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.support.shape[1] // 2

    def values(self, coords):
        x = np.atleast_2d(np.asarray(coords, dtype=float))
        return np.exp(1j * (x @ self.support.T)) @ self.weights

    def describe(self):
        return {
            "family": "point_mixture",
            "support": self.support.tolist(),
            "weights": self.weights.tolist(),
        }


@dataclass(frozen=True, eq=False)
class SubgroupCharacter(Family):
    """``phi(x) = exp(i c.x)`` on a sigma-isotropic subgroup H, zero elsewhere.

    H is the real span of ``generators`` (``integer=False``) or their integer
    span (``integer=True``). Exact points are tested exactly; float arrays
    use a relative tolerance ``membership_tol``.
    """

    generators: tuple[PhasePoint, ...]
    character: np.ndarray
    integer: bool = False
    membership_tol: float = 1e-9
    analytic_regularity = NON_REGULAR
    _basis: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        gens = tuple(g if isinstance(g, PhasePoint) else PhasePoint(g) for g in self.generators)
        if not gens:
            raise ValueError("need at least one subgroup generator")
        if len({g.dim for g in gens}) != 1:
            raise DimensionError("generators have mixed dimensions")
        if rational_rank(gens) != len(gens):
            raise ValueError("subgroup generators must be linearly independent")
        for i, u in enumerate(gens):
            for v in gens[i + 1 :]:
                if symplectic_form(u, v) != 0:
                    raise ValueError(f"subgroup is not isotropic: sigma({u}, {v}) != 0")
        c = np.asarray(self.character, dtype=float).ravel()
        if c.size != gens[0].dim:
            raise DimensionError("character vector has the wrong length")
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "character", c)
        object.__setattr__(self, "_basis", np.array([g.to_array() for g in gens]))

    @property
    def n(self) -> int:
        return self.generators[0].n

    def contains(self, x: PhasePoint) -> bool:
        coeffs = span_coefficients(self.generators, x)
        if coeffs is None:
            return False
        return not self.integer or all(k.denominator == 1 for k in coeffs)

    def at_points(self, points):
        mask = np.array([self.contains(p) for p in points], dtype=bool)
        coords = _as_coords(points)
        return np.where(mask, np.exp(1j * (coords @ self.character)), 0.0)

    def values(self, coords):
        x = np.atleast_2d(np.asarray(coords, dtype=float))
        G = self._basis
        coeffs, *_ = np.linalg.lstsq(G.T, x.T, rcond=None)
        resid = np.linalg.norm(G.T @ coeffs - x.T, axis=0)
        scale = np.maximum(1.0, np.linalg.norm(x, axis=1))
        mask = resid <= self.membership_tol * scale
        if self.integer:
            mask &= np.all(np.abs(coeffs - np.round(coeffs)) <= self.membership_tol, axis=0)
        return np.where(mask, np.exp(1j * (x @ self.character)), 0.0)

    def describe(self):
        return {
            "family": "subgroup",
            "generators": [g.to_strings() for g in self.generators],
            "character": self.character.tolist(),
            "integer": self.integer,
        }


@dataclass(frozen=True, eq=False)
class TraceState(Family):
    """``phi(0) = 1`` and ``phi(x) = 0`` otherwise."""

    n: int = 1
    analytic_regularity = NON_REGULAR

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")

    def at_points(self, points):
        return np.array([1.0 if p.is_origin() else 0.0 for p in points], dtype=complex)

    def values(self, coords):
        x = np.atleast_2d(np.asarray(coords, dtype=float))
        return np.all(x == 0.0, axis=1).astype(complex)

    def describe(self):
        return {"family": "trace", "n": self.n}


@dataclass(frozen=True, eq=False)
class Tabulated(Family):
    """Finite table ``PhasePoint -> phi``; missing negatives are filled by conjugation."""

    table: Mapping[PhasePoint, complex]
    analytic_regularity = None

    def __post_init__(self):
        table: dict[PhasePoint, complex] = {}
        for x, v in self.table.items():
            table[x if isinstance(x, PhasePoint) else PhasePoint(x)] = complex(v)
        if not table:
            raise ValueError("empty table")
        dims = {x.dim for x in table}
        if len(dims) != 1:
            raise DimensionError("table points have mixed dimensions")
        origin = PhasePoint.origin(dims.pop() // 2)
        if abs(table.get(origin, 1.0) - 1.0) > 1e-12:
            raise ValueError("tabulated phi must satisfy phi(0) = 1")
        table[origin] = 1.0 + 0.0j
        for x, v in list(table.items()):
            w = table.setdefault(-x, v.conjugate())
            if abs(w - v.conjugate()) > 1e-10:
                raise ValueError(f"phi(-x) != conj(phi(x)) at x={x}")
        object.__setattr__(self, "table", table)

    @property
    def n(self) -> int:
        return next(iter(self.table)).n

    def at_points(self, points):
        try:
            return np.array([self.table[p] for p in points], dtype=complex)
        except KeyError as err:
            raise MissingValueError(f"no tabulated value at {err.args[0]}") from None

    def values(self, coords):
        x = np.atleast_2d(np.asarray(coords, dtype=float))
        return self.at_points([PhasePoint([to_rational(v) for v in row]) for row in x])

    def describe(self):
        entries = sorted(self.table.items(), key=lambda kv: kv[0].coords)
        return {
            "family": "tabulated",
            "entries": [
                {"point": x.to_strings(), "re": v.real, "im": v.imag} for x, v in entries
            ],
        }


@dataclass(frozen=True, eq=False)
class Mixture(Family):
    """Convex combination ``sum_i w_i phi_i``."""

    components: tuple[Family, ...]
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        comps = tuple(self.components)
        if len(comps) != w.size or not comps:
            raise ValueError("need one weight per component")
        if len({c.n for c in comps}) != 1:
            raise DimensionError("mixture components have mixed dimensions")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.components[0].n

    @property
    def analytic_regularity(self):
        verdicts = [c.analytic_regularity for c, w in zip(self.components, self.weights) if w > 0]
        if NON_REGULAR in verdicts:
            return NON_REGULAR
        if all(v == REGULAR for v in verdicts):
            return REGULAR
        return None

    def values(self, coords):
        return sum(w * c.values(coords) for c, w in zip(self.components, self.weights))

    def at_points(self, points):
        return sum(w * c.at_points(points) for c, w in zip(self.components, self.weights))

    def describe(self):
        return {
            "family": "mixture",
            "weights": self.weights.tolist(),
            "components": [c.describe() for c in self.components],
        }


@dataclass(frozen=True)
class CharacteristicState:
    """A functional at level ``h`` determined by its characteristic function."""

    h: float
    family: Family

    def __post_init__(self):
        object.__setattr__(self, "h", _check_level(self.h))

    @property
    def n(self) -> int:
        return self.family.n

    def at_level(self, h: float) -> "CharacteristicState":
        return dataclasses.replace(self, h=h)

    def describe(self) -> dict:
        return {"h": self.h, **self.family.describe()}


# ---------------------------------------------------------------- operations


def evaluate_char(state: CharacteristicState, x) -> complex | np.ndarray:
    """``phi(x)`` for a PhasePoint (exact membership) or a float array of points."""
    if isinstance(x, PhasePoint):
        if x.n != state.n:
            raise DimensionError(f"point of R^{x.dim} for a state on R^{2 * state.n}")
        return complex(state.family.at_points([x])[0])
    coords = np.asarray(x, dtype=float)
    if coords.shape[-1] != 2 * state.n:
        raise DimensionError("coordinate array has the wrong trailing dimension")
    return state.family.values(coords)


def evaluate(state: CharacteristicState, A: WeylElement) -> complex:
    """``omega(sum c_x W(x)) = sum c_x phi(x)``."""
    if A.h != state.h:
        raise LevelMismatchError(f"state at h={state.h} applied to element at h={A.h}")
    if A.n != state.n:
        raise DimensionError("element and state live on different phase spaces")
    if A.is_zero():
        return 0.0 + 0.0j
    terms = A.sorted_terms()
    phi = state.family.at_points([x for x, _ in terms])
    return complex(np.dot(np.array([c for _, c in terms]), phi))


def tabulate(state: CharacteristicState, points: Sequence[PhasePoint]) -> CharacteristicState:
    """Freeze ``phi`` on ``points`` (and their negatives) into a Tabulated state."""
    pts = list(dict.fromkeys(list(points) + [-p for p in points]))
    vals = state.family.at_points(pts)
    return CharacteristicState(state.h, Tabulated(dict(zip(pts, vals))))


def twisted_gram(state: CharacteristicState, points: Sequence[PhasePoint]) -> np.ndarray:
    """``M_jk = exp(-(i h / 2) sigma(x_j, x_k)) phi(x_k - x_j)``."""
    points = list(points)
    if len(set(points)) != len(points):
        raise DuplicatePointError("points must be pairwise distinct")
    for p in points:
        if p.n != state.n:
            raise DimensionError("point dimension does not match the state")
    m = len(points)
    diffs = {}
    for j in range(m):
        for k in range(m):
            diffs.setdefault(points[k] - points[j], None)
    keys = list(diffs)
    lookup = dict(zip(keys, state.family.at_points(keys)))
    G = np.empty((m, m), dtype=complex)
    for j in range(m):
        for k in range(m):
            s = float(symplectic_form(points[j], points[k]))
            G[j, k] = np.exp(-0.5j * state.h * s) * lookup[points[k] - points[j]]
    return G


@dataclass(frozen=True, eq=False)
class BochnerCertificate:
    h: float
    points: tuple[PhasePoint, ...]
    gram: np.ndarray
    eigenvalues: np.ndarray
    tol: float
    hermitian_residual: float
    slack: float

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def verdict(self) -> str:
        return "PSD" if self.min_eigenvalue >= -self.tol else "NOT_PSD"

    @property
    def is_psd(self) -> bool:
        return self.verdict == "PSD"

    def as_dict(self) -> dict:
        return {
            "h": self.h,
            "points": [p.to_strings() for p in self.points],
            "spectrum": self.eigenvalues.tolist(),
            "min_eigenvalue": self.min_eigenvalue,
            "tol": self.tol,
            "hermitian_residual": self.hermitian_residual,
            "slack": self.slack,
            "verdict": self.verdict,
        }


def certify_gram(G: np.ndarray, h: float, points, tol: float) -> BochnerCertificate:
    herm = float(np.abs(G - G.conj().T).max()) if G.size else 0.0
    eig = np.linalg.eigvalsh(0.5 * (G + G.conj().T)) if G.size else np.zeros(0)
    slack = herm + G.shape[0] * np.finfo(float).eps * (float(np.abs(G).max()) if G.size else 0.0)
    return BochnerCertificate(h, tuple(points), G, eig, tol, herm, slack)


def bochner_certificate(
    state: CharacteristicState, points: Sequence[PhasePoint], tol: float = PSD_TOL
) -> BochnerCertificate:
    """Twisted positive-definiteness of ``phi`` on a finite point set."""
    G = twisted_gram(state, points)
    return certify_gram(G, state.h, points, tol)


def quantum_admissible(S, h: float, tol: float = 1e-10) -> bool:
    """Whether ``S + (i h / 2) J`` is positive semidefinite (Gaussian uncertainty condition)."""
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] % 2:
        raise DimensionError("covariance must be 2n x 2n")
    if not np.allclose(S, S.T, atol=1e-12):
        raise ValueError("covariance must be symmetric")
    J = symplectic_matrix(S.shape[0] // 2)
    return bool(np.linalg.eigvalsh(S + 0.5j * h * J).min() >= -tol)


def convex_combine(states: Sequence[CharacteristicState], weights) -> CharacteristicState:
    states = list(states)
    w = np.asarray(weights, dtype=float).ravel()
    if not states or len(states) != w.size:
        raise ValueError("need one weight per state")
    if (w < 0).any() or abs(w.sum() - 1.0) > 1e-12:
        raise ValueError("weights must be nonnegative and sum to 1")
    if len({s.h for s in states}) != 1:
        raise LevelMismatchError("states must share one level h")
    keep = [(s, wi) for s, wi in zip(states, w) if wi > 0]
    if len(keep) == 1:
        return keep[0][0]
    return CharacteristicState(
        states[0].h, Mixture(tuple(s.family for s, _ in keep), np.array([wi for _, wi in keep]))
    )
