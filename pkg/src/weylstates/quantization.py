"""Quantization maps ``Q_h(W_0(x)) = W_h(x)`` and their strict-quantization defects."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .phase_space import symplectic_form
from .state_space import CharacteristicState
from .weyl_algebra import (
    LevelMismatchError,
    NormEstimate,
    NormOptions,
    WeylElement,
    commutator,
    estimate_norm,
    multiply,
    poisson_bracket,
)


class NotClassicalError(LevelMismatchError):
    """An operation expecting an h = 0 element received a quantum one."""


def _require_classical(*elements: WeylElement) -> None:
    for A in elements:
        if A.h != 0.0:
            raise NotClassicalError(f"expected a classical element (h=0), got h={A.h}")


@dataclass(frozen=True)
class FieldGrid:
    """Strictly decreasing levels in (0, 1] used to sample the field h -> Q_h."""

    h_values: tuple[float, ...]

    def __post_init__(self):
        hs = tuple(float(h) for h in self.h_values)
        if len(hs) < 4:
            raise ValueError("a field grid needs at least 4 levels")
        if any(not 0.0 < h <= 1.0 for h in hs):
            raise ValueError("grid levels must lie in (0, 1]")
        if any(a <= b for a, b in zip(hs, hs[1:])):
            raise ValueError("grid levels must be strictly decreasing")
        if math.log10(hs[0] / hs[-1]) < 2.0:
            raise ValueError("grid must span at least two decades")
        object.__setattr__(self, "h_values", hs)

    @classmethod
    def dyadic(cls, k_max: int = 8) -> "FieldGrid":
        return cls(tuple(2.0**-k for k in range(k_max + 1)))

    def __iter__(self):
        return iter(self.h_values)

    def __len__(self):
        return len(self.h_values)


def quantize(A: WeylElement, h: float) -> WeylElement:
    """Relabel a classical element at level ``h`` (the linear extension of W_0(x) -> W_h(x))."""
    _require_classical(A)
    return A.with_level(h)


def classical_limit(state: CharacteristicState) -> CharacteristicState:
    """``omega o Q_h``: the same characteristic function read at level 0."""
    return state.at_level(0.0)


def _ordered_map(fn: Callable, items: Sequence, threads: int | None):
    if not threads or threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def fit_slope(hs, defects, floor: float = 1e-300) -> tuple[float, float] | None:
    """Least-squares slope and intercept of log(defect) against log(h)."""
    hs = np.asarray(hs, dtype=float)
    d = np.asarray(defects, dtype=float)
    keep = d > floor
    if keep.sum() < 2:
        return None
    slope, intercept = np.polyfit(np.log(hs[keep]), np.log(d[keep]), 1)
    return float(slope), float(intercept)


@dataclass(frozen=True)
class RateRow:
    h: float
    defect: float
    bound: float
    radius: float
    method: str


@dataclass(frozen=True)
class RateReport:
    """Per-level defect norms with their coefficient-level bounds and the fitted log-log slope."""

    property_name: str
    rows: tuple[RateRow, ...]
    slope: float | None
    intercept: float | None = None
    notes: tuple[str, ...] = field(default=())

    def defects(self) -> np.ndarray:
        return np.array([r.defect for r in self.rows])

    def bounded(self) -> bool:
        """Every estimated defect is within its analytic bound (plus estimator radius)."""
        return all(r.defect <= r.bound + r.radius + 1e-12 for r in self.rows)

    def at(self, h: float) -> RateRow:
        for r in self.rows:
            if r.h == h:
                return r
        raise KeyError(h)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["h", "defect", "bound", "radius", "method"])
        for r in self.rows:
            writer.writerow([repr(r.h), repr(r.defect), repr(r.bound), repr(r.radius), r.method])
        return buf.getvalue()

    def as_dict(self) -> dict:
        return {
            "property": self.property_name,
            "slope": self.slope,
            "intercept": self.intercept,
            "rows": [r.__dict__ for r in self.rows],
            "notes": list(self.notes),
        }


def product_defect(A: WeylElement, B: WeylElement, h: float) -> WeylElement:
    """``Q_h(A) Q_h(B) - Q_h(AB)``."""
    return multiply(quantize(A, h), quantize(B, h)) - quantize(multiply(A, B), h)


def product_bound(A: WeylElement, B: WeylElement, h: float) -> float:
    """``sum_{j,k} |c_j d_k| |exp(i h sigma(x_j, y_k) / 2) - 1|``."""
    total = 0.0
    for x, c in A.terms.items():
        for y, d in B.terms.items():
            s = float(symplectic_form(x, y))
            total += abs(c * d) * 2.0 * abs(math.sin(h * s / 4.0))
    return total


def dirac_defect(A: WeylElement, B: WeylElement, h: float) -> WeylElement:
    """``(i/h)[Q_h(A), Q_h(B)] - Q_h({A, B})``."""
    return commutator(quantize(A, h), quantize(B, h)).scale(1j / h) - quantize(
        poisson_bracket(A, B), h
    )


def dirac_bound(A: WeylElement, B: WeylElement, h: float) -> float:
    """``sum_{j,k} |c_j d_k| |sigma - (2/h) sin(h sigma / 2)|`` with sigma = sigma(x_j, y_k)."""
    total = 0.0
    for x, c in A.terms.items():
        for y, d in B.terms.items():
            s = float(symplectic_form(x, y))
            total += abs(c * d) * abs(s - 2.0 / h * math.sin(h * s / 2.0))
    return total


def _rate_report(name, defect_fn, bound_fn, A, B, grid, opts, threads) -> RateReport:
    _require_classical(A, B)

    def row(h):
        est = estimate_norm(defect_fn(A, B, h), opts)
        return RateRow(h, est.value, bound_fn(A, B, h), est.radius, est.method)

    rows = tuple(_ordered_map(row, list(grid), threads))
    fit = fit_slope([r.h for r in rows], [r.defect for r in rows])
    notes = () if fit else ("defect vanishes on the grid; no slope fitted",)
    return RateReport(name, rows, fit[0] if fit else None, fit[1] if fit else None, notes)


def verify_product_property(
    A: WeylElement,
    B: WeylElement,
    grid: FieldGrid | None = None,
    opts: NormOptions | None = None,
    threads: int | None = None,
) -> RateReport:
    """Sample ``||Q_h(A)Q_h(B) - Q_h(AB)||`` over the grid."""
    return _rate_report(
        "product", product_defect, product_bound, A, B, grid or FieldGrid.dyadic(), opts, threads
    )


def verify_dirac_property(
    A: WeylElement,
    B: WeylElement,
    grid: FieldGrid | None = None,
    opts: NormOptions | None = None,
    threads: int | None = None,
) -> RateReport:
    """Sample ``||(i/h)[Q_h(A), Q_h(B)] - Q_h({A, B})||`` over the grid."""
    return _rate_report(
        "dirac", dirac_defect, dirac_bound, A, B, grid or FieldGrid.dyadic(), opts, threads
    )


@dataclass(frozen=True)
class ContinuityReport:
    classical: NormEstimate
    levels: tuple[float, ...]
    estimates: tuple[NormEstimate, ...]

    @property
    def values(self) -> np.ndarray:
        return np.array([e.value for e in self.estimates])

    @property
    def max_jump(self) -> float:
        seq = [self.classical.value] + list(self.values[::-1])
        return float(np.max(np.abs(np.diff(seq)))) if len(seq) > 1 else 0.0

    @property
    def gap_at_smallest(self) -> float:
        return abs(self.estimates[-1].value - self.classical.value)

    def as_dict(self) -> dict:
        return {
            "classical": self.classical.as_dict(),
            "rows": [{"h": h, **e.as_dict()} for h, e in zip(self.levels, self.estimates)],
            "max_jump": self.max_jump,
            "gap_at_smallest": self.gap_at_smallest,
        }


def verify_norm_continuity(
    A: WeylElement,
    grid: FieldGrid | Sequence[float] | None = None,
    opts: NormOptions | None = None,
    threads: int | None = None,
) -> ContinuityReport:
    """Tabulate ``||Q_h(A)||`` over the grid together with ``||A||`` at h = 0."""
    _require_classical(A)
    levels = tuple(grid or FieldGrid.dyadic())
    estimates = _ordered_map(lambda h: estimate_norm(quantize(A, h), opts), list(levels), threads)
    return ContinuityReport(estimate_norm(A, opts), levels, tuple(estimates))
