"""Finite linear combinations of Weyl generators at a fixed level ``h``.

``W_h(x) W_h(y) = exp(i h sigma(x, y) / 2) W_h(x + y)``; at ``h = 0`` the
product is the pointwise product of the almost periodic functions
``W_0(x)(y) = exp(i x.y)``. Labels are exact, so like terms combine by exact
equality; only the twist phases are evaluated in floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np
import scipy.optimize
from scipy.stats import qmc

from . import fock
from .phase_space import PhasePoint, symplectic_form

PRUNE_TOL = 1e-12


class LevelMismatchError(ValueError):
    """Raised when elements (or states) at different levels ``h`` are combined."""


class NormConvergenceError(RuntimeError):
    """Truncation doubling did not converge within the dimension budget."""

    def __init__(self, message: str, estimate: "NormEstimate"):
        super().__init__(message)
        self.estimate = estimate


def _check_level(h: float) -> float:
    h = float(h)
    if not 0.0 <= h <= 1.0:
        raise ValueError(f"deformation level must lie in [0, 1], got {h}")
    return h


class WeylElement:
    """``sum_x c_x W_h(x)`` with finitely many nonzero coefficients.

    Instances are immutable; arithmetic returns new elements.
    """

    __slots__ = ("_terms", "_h", "_n", "_prune")

    def __init__(
        self,
        terms: Mapping[PhasePoint, complex] | Iterable[tuple[PhasePoint, complex]],
        h: float = 0.0,
        n: int | None = None,
        prune: float = PRUNE_TOL,
    ):
        items = terms.items() if isinstance(terms, Mapping) else terms
        combined: dict[PhasePoint, complex] = {}
        for x, c in items:
            if not isinstance(x, PhasePoint):
                x = PhasePoint(x)
            combined[x] = combined.get(x, 0.0) + complex(c)
        dims = {x.n for x in combined}
        if n is not None:
            dims.add(int(n))
        if len(dims) > 1:
            raise ValueError(f"terms have mixed phase-space dimensions {sorted(dims)}")
        if not dims:
            raise ValueError("pass n to build an element with no terms")
        self._n = dims.pop()
        self._h = _check_level(h)
        self._prune = float(prune)
        self._terms = MappingProxyType(
            {x: c for x, c in combined.items() if abs(c) >= self._prune}
        )

    @classmethod
    def generator(cls, x: PhasePoint, h: float = 0.0, coeff: complex = 1.0) -> "WeylElement":
        if not isinstance(x, PhasePoint):
            x = PhasePoint(x)
        return cls({x: coeff}, h=h)

    @classmethod
    def identity(cls, n: int, h: float = 0.0) -> "WeylElement":
        return cls({PhasePoint.origin(n): 1.0}, h=h)

    @classmethod
    def zero(cls, n: int, h: float = 0.0) -> "WeylElement":
        return cls({}, h=h, n=n)

    @property
    def terms(self) -> Mapping[PhasePoint, complex]:
        return self._terms

    @property
    def h(self) -> float:
        return self._h

    @property
    def n(self) -> int:
        return self._n

    @property
    def prune_tol(self) -> float:
        return self._prune

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms.items())

    def coefficient(self, x: PhasePoint) -> complex:
        return self._terms.get(x, 0.0 + 0.0j)

    def is_zero(self) -> bool:
        return not self._terms

    def with_level(self, h: float) -> "WeylElement":
        return WeylElement(self._terms, h=h, n=self._n, prune=self._prune)

    def _like(self, other: "WeylElement") -> None:
        if not isinstance(other, WeylElement):
            raise TypeError(f"expected WeylElement, got {type(other).__name__}")
        if other._h != self._h:
            raise LevelMismatchError(f"levels differ: h={self._h} vs h={other._h}")
        if other._n != self._n:
            raise ValueError(f"dimensions differ: n={self._n} vs n={other._n}")

    def __add__(self, other: "WeylElement") -> "WeylElement":
        self._like(other)
        merged = dict(self._terms)
        for x, c in other._terms.items():
            merged[x] = merged.get(x, 0.0) + c
        return WeylElement(merged, h=self._h, n=self._n, prune=self._prune)

    def __neg__(self) -> "WeylElement":
        return self.scale(-1.0)

    def __sub__(self, other: "WeylElement") -> "WeylElement":
        return self + (-other)

    def scale(self, c: complex) -> "WeylElement":
        c = complex(c)
        return WeylElement(
            {x: c * v for x, v in self._terms.items()}, h=self._h, n=self._n, prune=self._prune
        )

    def __mul__(self, other):
        if isinstance(other, WeylElement):
            return multiply(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def adjoint(self) -> "WeylElement":
        return adjoint(self)

    def __eq__(self, other) -> bool:
        if not isinstance(other, WeylElement):
            return NotImplemented
        return self._h == other._h and self._n == other._n and dict(self._terms) == dict(other._terms)

    __hash__ = None

    def isclose(self, other: "WeylElement", atol: float = 1e-12) -> bool:
        """Coefficient-wise comparison at absolute tolerance ``atol``."""
        if self._h != other._h or self._n != other._n:
            return False
        keys = set(self._terms) | set(other._terms)
        return all(abs(self.coefficient(k) - other.coefficient(k)) <= atol for k in keys)

    def l1_norm(self) -> float:
        """``sum |c_x|``, an upper bound for the C*-norm."""
        return float(sum(abs(c) for c in self._terms.values()))

    def sorted_terms(self) -> list[tuple[PhasePoint, complex]]:
        return sorted(self._terms.items(), key=lambda kv: kv[0].coords)

    def to_records(self) -> list[dict]:
        return [
            {"point": x.to_strings(), "re": c.real, "im": c.imag} for x, c in self.sorted_terms()
        ]

    @classmethod
    def from_records(cls, records: Iterable[Mapping], h: float = 0.0, n: int | None = None):
        terms = [
            (PhasePoint(r["point"]), complex(r.get("re", 0.0), r.get("im", 0.0))) for r in records
        ]
        return cls(terms, h=h, n=n)

    def __repr__(self) -> str:
        body = " + ".join(
            f"({c:.6g})W({', '.join(x.to_strings())})" for x, c in self.sorted_terms()
        )
        body = body or "0"
        return f"WeylElement[h={self._h}]({body})"


def twist(h: float, s: Fraction) -> complex:
    """``exp(i h s / 2)``, evaluated only at the last step."""
    if h == 0.0 or s == 0:
        return 1.0 + 0.0j
    return complex(np.exp(0.5j * h * float(s)))


def multiply(A: WeylElement, B: WeylElement) -> WeylElement:
    A._like(B)
    h = A.h
    out: dict[PhasePoint, complex] = {}
    for x, c in A.terms.items():
        for y, d in B.terms.items():
            z = x + y
            out[z] = out.get(z, 0.0) + c * d * twist(h, symplectic_form(x, y))
    return WeylElement(out, h=h, n=A.n, prune=min(A.prune_tol, B.prune_tol))


def adjoint(A: WeylElement) -> WeylElement:
    """``sum c_x W(x)  ->  sum conj(c_x) W(-x)``."""
    return WeylElement(
        {-x: complex(c).conjugate() for x, c in A.terms.items()}, h=A.h, n=A.n, prune=A.prune_tol
    )


def commutator(A: WeylElement, B: WeylElement) -> WeylElement:
    return multiply(A, B) - multiply(B, A)


def poisson_bracket(A: WeylElement, B: WeylElement) -> WeylElement:
    """Classical bracket with ``{W_0(x), W_0(y)} = -sigma(x, y) W_0(x + y)``.

    This sign makes ``(i/h)[Q_h A, Q_h B] -> Q_h {A, B}`` hold as h -> 0.
    """
    A._like(B)
    if A.h != 0.0:
        raise LevelMismatchError(f"Poisson bracket needs classical elements, got h={A.h}")
    out: dict[PhasePoint, complex] = {}
    for x, c in A.terms.items():
        for y, d in B.terms.items():
            s = symplectic_form(x, y)
            if s == 0:
                continue
            z = x + y
            out[z] = out.get(z, 0.0) - float(s) * c * d
    return WeylElement(out, h=0.0, n=A.n, prune=min(A.prune_tol, B.prune_tol))


# --------------------------------------------------------------------- norms


@dataclass(frozen=True)
class NormOptions:
    """Controls for :func:`estimate_norm`.

    ``tol`` is the doubling-convergence threshold for the truncated Fock
    estimate (h > 0) and ``grid_tol`` the one for the classical torus grid.
    With ``strict=False`` an unconverged Fock estimate is returned (flagged
    ``converged=False``) instead of raising; it is still a lower bound.
    """

    tol: float = 1e-3
    start_dim: int = 8
    max_dim: int = 2048
    grid_tol: float = 1e-10
    grid_budget: int = 1 << 22
    samples: int = 1 << 14
    polish: int = 8
    seed: int = 0
    exact_unitary: bool = True
    strict: bool = True


@dataclass(frozen=True)
class NormEstimate:
    value: float
    radius: float
    method: str
    upper_bound: float
    converged: bool = True
    resolution: int = 0

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "radius": self.radius,
            "method": self.method,
            "upper_bound": self.upper_bound,
            "converged": self.converged,
            "resolution": self.resolution,
        }


def estimate_norm(A: WeylElement, opts: NormOptions | None = None) -> NormEstimate:
    """Numerical C*-norm of ``A``.

    h = 0: supremum of the almost periodic function ``|sum c_x exp(i x.y)|``
    over one period of the (rational, hence commensurate) frequencies, by
    FFT grid maximization plus local polishing, grid doubled until stable.

    h > 0: largest singular value of the compression of ``A`` to the first
    N Fock states per mode, N doubled until the value changes by less than
    ``opts.tol``. Compressions give lower bounds that increase to the norm.
    """
    opts = opts or NormOptions()
    if A.is_zero():
        return NormEstimate(0.0, 0.0, "zero", 0.0)
    l1 = A.l1_norm()
    if len(A) == 1 and opts.exact_unitary:
        return NormEstimate(l1, 0.0, "single-generator", l1)
    if A.h == 0.0:
        return _classical_norm(A, opts, l1)
    return _fock_norm(A, opts, l1)


def _frequency_lattice(A: WeylElement):
    """Integer frequency vectors after rescaling each coordinate to period 2 pi."""
    points = [x for x, _ in A.sorted_terms()]
    coeffs = np.array([c for _, c in A.sorted_terms()], dtype=complex)
    dim = points[0].dim
    cols = []
    for i in range(dim):
        vals = [p.coords[i] for p in points]
        den = math.lcm(*(v.denominator for v in vals))
        ints = [int(v * den) for v in vals]
        g = math.gcd(*ints)
        if g == 0:
            continue
        cols.append([k // g for k in ints])
    K = np.array(cols, dtype=np.int64).T if cols else np.zeros((len(points), 0), dtype=np.int64)
    return K, coeffs


def _trig_value(theta, K, c):
    return np.exp(1j * (np.atleast_2d(theta) @ K.T)) @ c


def _polish(starts, K, c):
    Kf = K.astype(float)

    def fun(theta):
        e = np.exp(1j * (Kf @ theta)) * c
        f = e.sum()
        grad = 2.0 * np.real(np.conj(f) * (1j * Kf * e[:, None]).sum(axis=0))
        return -(abs(f) ** 2), -grad

    best = 0.0
    for t0 in starts:
        res = scipy.optimize.minimize(fun, t0, jac=True, method="BFGS", options={"gtol": 1e-13})
        best = max(best, math.sqrt(max(-res.fun, 0.0)))
    return best


def _classical_norm(A: WeylElement, opts: NormOptions, l1: float) -> NormEstimate:
    K, c = _frequency_lattice(A)
    d = K.shape[1]
    if d == 0:
        v = abs(c.sum())
        return NormEstimate(v, 0.0, "constant", l1)
    lip = float(np.sum(np.abs(c) * np.linalg.norm(K, axis=1)))
    span = np.abs(K).max(axis=0)
    M = np.array([max(8, 1 << int(math.ceil(math.log2(4 * s + 1)))) for s in span])
    if np.prod(M.astype(float)) > opts.grid_budget:
        return _sampled_norm(K, c, opts, l1, lip)
    previous = None
    while True:
        coef = np.zeros(tuple(M), dtype=complex)
        np.add.at(coef, tuple((K % M).T), c)
        vals = np.abs(np.fft.ifftn(coef) * np.prod(M))
        flat = np.argsort(vals, axis=None)[-opts.polish :]
        starts = [2 * np.pi * np.array(np.unravel_index(i, vals.shape)) / M for i in flat]
        value = max(float(vals.max()), _polish(starts, K, c))
        value = min(value, l1)
        covering = math.pi * math.sqrt(float(np.sum((1.0 / M) ** 2)))
        radius = min(lip * covering, l1 - value)
        if previous is not None and abs(value - previous) < opts.grid_tol:
            return NormEstimate(value, radius, "torus-grid", l1, True, int(np.prod(M)))
        if np.prod(2.0 * M) > opts.grid_budget:
            return NormEstimate(value, radius, "torus-grid", l1, False, int(np.prod(M)))
        previous = value
        M = 2 * M


def _sampled_norm(K, c, opts: NormOptions, l1: float, lip: float) -> NormEstimate:
    d = K.shape[1]
    sampler = qmc.Sobol(d, scramble=True, seed=opts.seed)
    m = int(math.ceil(math.log2(opts.samples)))
    theta = 2 * np.pi * sampler.random_base2(m)
    vals = np.abs(_trig_value(theta, K, c))
    starts = theta[np.argsort(vals)[-opts.polish :]]
    value = min(max(float(vals.max()), _polish(starts, K, c)), l1)
    # heuristic covering radius of the point set on the torus
    radius = min(lip * math.pi * math.sqrt(d) * (2.0 ** (-m / d)), l1 - value)
    return NormEstimate(value, radius, "torus-sampled", l1, True, 1 << m)


def truncated_matrix(A: WeylElement, N: int) -> np.ndarray:
    """Compression of ``A`` (h > 0) to the first N Fock states per mode."""
    mats = [c * fock.compressed_displacement(x.to_array(), A.h, N) for x, c in A.sorted_terms()]
    return sum(mats[1:], mats[0])


def _fock_norm(A: WeylElement, opts: NormOptions, l1: float) -> NormEstimate:
    N = opts.start_dim
    previous = None
    last = None
    while N**A.n <= opts.max_dim:
        value = float(np.linalg.norm(truncated_matrix(A, N), 2))
        if previous is not None:
            change = abs(value - previous)
            last = NormEstimate(value, change, "fock-compression", l1, change < opts.tol, N**A.n)
            if change < opts.tol:
                return last
        previous = value
        N *= 2
    if last is None:
        last = NormEstimate(previous or 0.0, float("inf"), "fock-compression", l1, False, 0)
    if not opts.strict:
        return last
    raise NormConvergenceError(
        f"truncation doubling did not reach tol={opts.tol} within max_dim={opts.max_dim}", last
    )
