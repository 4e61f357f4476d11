"""Exact phase-space geometry on R^{2n}.

Points carry exact rational coordinates ``(a, b)`` with ``a, b`` in Q^n so
that generator labels can be compared and combined without tolerance.
Floats are rationalized at the API boundary with
``Fraction.limit_denominator(MAX_DENOMINATOR)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Iterator, Sequence

import numpy as np

MAX_DENOMINATOR = 10**9


class DimensionError(ValueError):
    """Raised when phase-space objects of different dimension are combined."""


def to_rational(value) -> Fraction:
    """Convert ``value`` to an exact ``Fraction``.

    Strings such as ``"3/4"`` and integers convert exactly; floats are
    rationalized with denominator at most ``MAX_DENOMINATOR``.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, Rational):
        return Fraction(int(value.numerator), int(value.denominator))
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, (float, np.floating)):
        if not np.isfinite(value):
            raise ValueError(f"cannot rationalize non-finite value {value!r}")
        return Fraction(float(value)).limit_denominator(MAX_DENOMINATOR)
    raise TypeError(f"cannot convert {type(value).__name__} to a rational coordinate")


@dataclass(frozen=True)
class PhasePoint:
    """A point ``x = (a, b)`` of R^{2n} with exact rational coordinates."""

    coords: tuple[Fraction, ...]

    def __init__(self, coords: Iterable):
        coords = tuple(to_rational(c) for c in coords)
        if len(coords) == 0 or len(coords) % 2:
            raise DimensionError(f"phase-space points need 2n >= 2 coordinates, got {len(coords)}")
        object.__setattr__(self, "coords", coords)

    @classmethod
    def origin(cls, n: int) -> "PhasePoint":
        return cls([0] * (2 * n))

    @property
    def n(self) -> int:
        return len(self.coords) // 2

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def a(self) -> tuple[Fraction, ...]:
        return self.coords[: self.n]

    @property
    def b(self) -> tuple[Fraction, ...]:
        return self.coords[self.n :]

    def is_origin(self) -> bool:
        return all(c == 0 for c in self.coords)

    def _check(self, other: "PhasePoint") -> None:
        if not isinstance(other, PhasePoint):
            raise TypeError(f"expected PhasePoint, got {type(other).__name__}")
        if other.dim != self.dim:
            raise DimensionError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __add__(self, other: "PhasePoint") -> "PhasePoint":
        self._check(other)
        return PhasePoint(s + o for s, o in zip(self.coords, other.coords))

    def __sub__(self, other: "PhasePoint") -> "PhasePoint":
        self._check(other)
        return PhasePoint(s - o for s, o in zip(self.coords, other.coords))

    def __neg__(self) -> "PhasePoint":
        return PhasePoint(-c for c in self.coords)

    def __rmul__(self, t) -> "PhasePoint":
        return point_scale(t, self)

    def dot(self, other: "PhasePoint") -> Fraction:
        self._check(other)
        return sum((s * o for s, o in zip(self.coords, other.coords)), Fraction(0))

    def to_array(self) -> np.ndarray:
        return np.array([float(c) for c in self.coords])

    def to_strings(self) -> list[str]:
        return [str(c) for c in self.coords]

    @classmethod
    def from_strings(cls, values: Sequence) -> "PhasePoint":
        return cls(values)

    def __repr__(self) -> str:
        return f"PhasePoint({', '.join(str(c) for c in self.coords)})"


def symplectic_form(x: PhasePoint, y: PhasePoint) -> Fraction:
    """Return ``sigma((a,b),(a',b')) = a'.b - a.b'`` exactly."""
    x._check(y)
    n = x.n
    xa, xb = x.coords[:n], x.coords[n:]
    ya, yb = y.coords[:n], y.coords[n:]
    return sum((ya[i] * xb[i] - xa[i] * yb[i] for i in range(n)), Fraction(0))


def point_add(x: PhasePoint, y: PhasePoint) -> PhasePoint:
    return x + y


def point_scale(t, x: PhasePoint) -> PhasePoint:
    t = to_rational(t)
    return PhasePoint(t * c for c in x.coords)


def symplectic_matrix(n: int) -> np.ndarray:
    """Matrix ``J`` with ``sigma(x, y) = x^T J y``."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, -eye], [eye, zero]])


def symplectic_form_array(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Floating-point sigma for stacked coordinate arrays of shape (..., 2n)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.shape[-1] // 2
    return np.sum(y[..., :n] * x[..., n:] - x[..., :n] * y[..., n:], axis=-1)


@dataclass(frozen=True)
class SymplecticContext:
    """Fixed number ``n`` of degrees of freedom; phase space is R^{2n}."""

    n: int

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ValueError(f"degrees of freedom must be a positive integer, got {self.n!r}")

    @property
    def dim(self) -> int:
        return 2 * self.n

    def check(self, x: PhasePoint) -> PhasePoint:
        if x.dim != self.dim:
            raise DimensionError(f"expected a point of R^{self.dim}, got dimension {x.dim}")
        return x

    def point(self, *coords) -> PhasePoint:
        if len(coords) == 1 and not isinstance(coords[0], (int, float, str, Fraction)):
            coords = tuple(coords[0])
        return self.check(PhasePoint(coords))

    def origin(self) -> PhasePoint:
        return PhasePoint.origin(self.n)

    def basis(self, i: int) -> PhasePoint:
        coords = [0] * self.dim
        coords[i] = 1
        return PhasePoint(coords)

    def J(self) -> np.ndarray:
        return symplectic_matrix(self.n)


def _sympy_matrix(points: Sequence[PhasePoint]):
    import sympy

    return sympy.Matrix(
        [[sympy.Rational(c.numerator, c.denominator) for c in p.coords] for p in points]
    ).T


def rational_rank(points: Sequence[PhasePoint]) -> int:
    """Rank over Q of the given points viewed as column vectors."""
    if not points:
        return 0
    return _sympy_matrix(points).rank()


def span_coefficients(generators: Sequence[PhasePoint], x: PhasePoint) -> list[Fraction] | None:
    """Exact coefficients ``k`` with ``sum k_i g_i = x``, or None if ``x`` is not in the span.

    Generators must be linearly independent.
    """
    import sympy

    if not generators:
        return [] if x.is_origin() else None
    G = _sympy_matrix(generators)
    rhs = sympy.Matrix([sympy.Rational(c.numerator, c.denominator) for c in x.coords])
    try:
        sol, params = G.gauss_jordan_solve(rhs)
    except ValueError:
        return None
    if params.shape[0]:
        raise ValueError("generators are linearly dependent")
    return [Fraction(int(s.p), int(s.q)) for s in sol]


@dataclass(frozen=True)
class LatticeSubgroup:
    """Subgroup of R^{2n} generated by rationally independent points.

    With ``moduli`` the group is the finite quotient ``prod Z/m_i`` acting
    through the generators, and :meth:`elements` enumerates it.
    """

    generators: tuple[PhasePoint, ...]
    moduli: tuple[int, ...] | None = None
    _dim: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        gens = tuple(self.generators)
        if not gens:
            raise ValueError("a lattice subgroup needs at least one generator")
        dims = {g.dim for g in gens}
        if len(dims) != 1:
            raise DimensionError(f"generators have mixed dimensions {sorted(dims)}")
        if rational_rank(gens) != len(gens):
            raise ValueError("lattice generators must be linearly independent over Q")
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "_dim", dims.pop())
        if self.moduli is not None:
            moduli = tuple(int(m) for m in self.moduli)
            if len(moduli) != len(gens) or any(m < 1 for m in moduli):
                raise ValueError("need one positive modulus per generator")
            object.__setattr__(self, "moduli", moduli)

    @property
    def rank(self) -> int:
        return len(self.generators)

    @property
    def dim(self) -> int:
        return self._dim

    def element(self, ks: Sequence[int]) -> PhasePoint:
        out = PhasePoint.origin(self.dim // 2)
        for k, g in zip(ks, self.generators):
            out = out + point_scale(k, g)
        return out

    def elements(self, bound: int | None = None) -> Iterator[PhasePoint]:
        """Enumerate group elements.

        With moduli, yields ``sum k_i g_i`` for ``0 <= k_i < m_i``. Without
        moduli a ``bound`` is required and ``|k_i| <= bound`` is used.
        """
        if self.moduli is not None:
            ranges = [range(m) for m in self.moduli]
        elif bound is None:
            raise ValueError("infinite subgroup: pass a bound to enumerate")
        else:
            ranges = [range(-bound, bound + 1)] * self.rank
        for ks in itertools.product(*ranges):
            yield self.element(ks)

    def contains(self, x: PhasePoint) -> bool:
        """Exact membership of ``x`` in the integer span of the generators."""
        coeffs = span_coefficients(self.generators, x)
        return coeffs is not None and all(c.denominator == 1 for c in coeffs)

    def is_isotropic(self) -> bool:
        return all(
            symplectic_form(u, v) == 0 for u, v in itertools.combinations(self.generators, 2)
        )
