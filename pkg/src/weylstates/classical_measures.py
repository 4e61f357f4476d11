"""Regularity classification and countable-additivity diagnostics.

A classical functional with characteristic function ``phi`` captures mass

    E_mu[exp(-|y|^2 / (2 R^2))] = (R^2 / 2 pi)^n  int exp(-R^2 |t|^2 / 2) phi(t) dt

inside the Gaussian window of radius R. For a countably additive probability
measure on R^{2n} this tends to 1 as R grows; a functional whose mass sits on
the corona of the Bohr compactification captures nothing, because its
``phi`` is nonzero only on a Lebesgue-null set. The defect
``1 - max_R captured(R)`` is the numerical surrogate for that lost mass.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import qmc

from .phase_space import PhasePoint, point_scale
from .quantization import classical_limit
from .state_space import (
    INCONCLUSIVE,
    NON_REGULAR,
    REGULAR,
    CharacteristicState,
    MissingValueError,
    SubgroupCharacter,
    Tabulated,
    TraceState,
)
from .weyl_algebra import LevelMismatchError


class QuadratureBudgetError(RuntimeError):
    pass


class IllConditionedError(RuntimeError):
    def __init__(self, message: str, condition: float):
        super().__init__(message)
        self.condition = condition


# sqrt of the first primes: 1 and these shifts are linearly independent over Q,
# so shifted nodes avoid every rational subspace through the origin
_SHIFTS = tuple(math.sqrt(p) % 1.0 for p in (2, 3, 5, 7, 11, 13, 17, 19))


@dataclass(frozen=True)
class QuadratureSpec:
    """Tensor trapezoid rule on ``|t_i| <= half_width / R``.

    ``shifted=True`` offsets axis ``i`` by an irrational fraction of the
    step, so the nodes miss the null sets on which non-regular
    characteristic functions live. ``shifted=False`` gives the symmetric
    grid through the origin.
    """

    nodes: int = 129
    half_width: float = 8.0
    shifted: bool = True
    budget: int = 4_000_000
    chunk: int = 8192

    def __post_init__(self):
        if self.nodes < 5 or self.nodes % 2 == 0:
            raise ValueError("use an odd number of nodes >= 5")

    def coarse(self) -> "QuadratureSpec":
        return QuadratureSpec(
            (self.nodes - 1) // 2 + 1, self.half_width, self.shifted, self.budget, self.chunk
        )


@dataclass(frozen=True)
class MassCapture:
    value: float
    error: float
    imag: float
    step: float
    nodes: int
    radius: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _axis(spec: QuadratureSpec, R: float, i: int):
    L = spec.half_width / R
    step = 2.0 * L / (spec.nodes - 1)
    shift = _SHIFTS[i % len(_SHIFTS)] if spec.shifted else 0.0
    t = -L + (np.arange(spec.nodes) + shift) * step
    w = np.full(spec.nodes, step)
    w[0] = w[-1] = step / 2.0
    return t, w, step


def _window_integral(state: CharacteristicState, R: float, spec: QuadratureSpec) -> tuple[complex, float]:
    d = 2 * state.n
    total = spec.nodes**d
    if total > spec.budget:
        raise QuadratureBudgetError(
            f"{spec.nodes}^{d} = {total} nodes exceeds the quadrature budget {spec.budget}"
        )
    axes = [_axis(spec, R, i) for i in range(d)]
    grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
    wgrids = np.meshgrid(*[a[1] for a in axes], indexing="ij")
    T = np.stack([g.ravel() for g in grids], axis=1)
    W = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    W = W * np.exp(-0.5 * R**2 * np.sum(T**2, axis=1)) * (R**2 / (2 * np.pi)) ** state.n
    acc = 0.0 + 0.0j
    for start in range(0, T.shape[0], spec.chunk):
        sl = slice(start, start + spec.chunk)
        acc += np.dot(W[sl], state.family.values(T[sl]))
    return complex(acc), axes[0][2]


def captured_mass(
    state: CharacteristicState, R: float, quad: QuadratureSpec | None = None
) -> MassCapture:
    """Gaussian-window mass of a classical functional; error by step-halving."""
    if state.h != 0.0:
        raise LevelMismatchError("captured_mass expects a classical (h=0) functional")
    if R <= 0:
        raise ValueError("radius must be positive")
    quad = quad or QuadratureSpec()
    fine, step = _window_integral(state, R, quad)
    coarse, _ = _window_integral(state, R, quad.coarse())
    return MassCapture(
        value=fine.real,
        error=abs(fine - coarse),
        imag=fine.imag,
        step=step,
        nodes=quad.nodes,
        radius=float(R),
    )


@dataclass(frozen=True)
class MassCaptureReport:
    radii: tuple[float, ...]
    captures: tuple[MassCapture, ...]

    @property
    def captured(self) -> np.ndarray:
        return np.array([c.value for c in self.captures])

    @property
    def defect(self) -> float:
        return float(1.0 - self.captured.max())

    @property
    def max_error(self) -> float:
        return float(max(c.error for c in self.captures))

    def monotone(self, slack: float = 1e-6) -> bool:
        return bool(np.all(np.diff(self.captured) >= -slack))

    def as_dict(self) -> dict:
        return {
            "radii": list(self.radii),
            "captured": self.captured.tolist(),
            "errors": [c.error for c in self.captures],
            "defect": self.defect,
        }


def default_radii(R_max: float, count: int = 6) -> tuple[float, ...]:
    if R_max <= 1.0:
        return (float(R_max),)
    return tuple(float(r) for r in np.geomspace(1.0, R_max, count))


def mass_defect(
    state: CharacteristicState,
    R_max: float = 50.0,
    quad: QuadratureSpec | None = None,
    radii: Sequence[float] | None = None,
    threads: int | None = None,
) -> MassCaptureReport:
    """``1 - max_R captured_mass(R)`` over a ladder of radii ending at ``R_max``."""
    radii = tuple(radii) if radii is not None else default_radii(R_max)
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            caps = list(pool.map(lambda R: captured_mass(state, R, quad), radii))
    else:
        caps = [captured_mass(state, R, quad) for R in radii]
    return MassCaptureReport(radii, tuple(caps))


# ------------------------------------------------------------ point recovery


@dataclass(frozen=True)
class PointRecovery:
    weights: np.ndarray
    residual: float
    condition: float
    probes: int
    residual_tol: float

    @property
    def model_ok(self) -> bool:
        return self.residual <= self.residual_tol

    def as_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "residual": self.residual,
            "condition": self.condition,
            "probes": self.probes,
            "model_ok": self.model_ok,
        }


def default_probes(candidates: np.ndarray, count: int | None = None, seed: int = 0) -> np.ndarray:
    """Scrambled Sobol probes in a box scaled to the candidate separation."""
    m, d = candidates.shape
    if m > 1:
        diffs = candidates[:, None, :] - candidates[None, :, :]
        dist = np.linalg.norm(diffs, axis=2)[~np.eye(m, dtype=bool)]
        sep = float(dist.min())
    else:
        sep = 1.0
    T = 2.0 * np.pi / sep
    count = count or max(8 * m, 32)
    pts = qmc.Sobol(d, scramble=True, seed=seed).random_base2(int(math.ceil(math.log2(count))))
    return T * (2.0 * pts - 1.0)


def recover_point_weights(
    state: CharacteristicState,
    candidate_support,
    probes: np.ndarray | None = None,
    residual_tol: float = 1e-3,
    max_condition: float = 1e8,
) -> PointRecovery:
    """Least-squares weights ``w`` with ``sum_j w_j exp(i x_k.y_j) = phi(x_k)`` on probes.

    The residual is the root-mean-square misfit; a large value signals that
    the functional is not supported on the candidates.
    """
    if state.h != 0.0:
        raise LevelMismatchError("point recovery expects a classical (h=0) functional")
    Y = np.atleast_2d(np.asarray(candidate_support, dtype=float))
    if Y.shape[1] != 2 * state.n:
        raise ValueError("candidate dimension does not match the state")
    if len({tuple(r) for r in Y}) != Y.shape[0]:
        raise ValueError("candidate points must be pairwise distinct")
    X = default_probes(Y) if probes is None else np.atleast_2d(np.asarray(probes, dtype=float))
    if X.shape[0] < Y.shape[0]:
        raise ValueError("need at least as many probes as candidates")
    E = np.exp(1j * (X @ Y.T))
    cond = float(np.linalg.cond(E))
    if not np.isfinite(cond) or cond > max_condition:
        raise IllConditionedError(f"probe matrix condition number {cond:.3g}", cond)
    phi = state.family.values(X)
    w, *_ = np.linalg.lstsq(E, phi, rcond=None)
    resid = float(np.linalg.norm(E @ w - phi) / math.sqrt(X.shape[0]))
    return PointRecovery(w.real.copy(), resid, cond, X.shape[0], residual_tol)


# --------------------------------------------------------------- regularity


@dataclass(frozen=True)
class SampleSpec:
    """Dyadic samples ``t = 2^-k``, ``k = 0..k_max``; a gap above ``gap_tol`` on the
    last ``persist`` available samples counts as a discontinuity at t = 0."""

    k_max: int = 40
    persist: int = 6
    gap_tol: float = 1e-6


@dataclass(frozen=True)
class DirectionEvidence:
    direction: PhasePoint
    ts: tuple[float, ...]
    gaps: tuple[float, ...]
    persistent_gap: float | None

    @property
    def discontinuous(self) -> bool:
        return self.persistent_gap is not None

    def as_dict(self) -> dict:
        return {
            "direction": self.direction.to_strings(),
            "t": list(self.ts),
            "gap": list(self.gaps),
            "persistent_gap": self.persistent_gap,
        }


@dataclass(frozen=True)
class RegularityReport:
    verdict: str
    method: str
    evidence: tuple[DirectionEvidence, ...]
    sampled_verdict: str
    analytic_verdict: str | None

    @property
    def consistent(self) -> bool:
        """A closed-form Regular verdict must not meet a sampled discontinuity."""
        return not (self.analytic_verdict == REGULAR and self.sampled_verdict == NON_REGULAR)

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "method": self.method,
            "analytic_verdict": self.analytic_verdict,
            "sampled_verdict": self.sampled_verdict,
            "consistent": self.consistent,
            "evidence": [e.as_dict() for e in self.evidence],
        }


def default_directions(n: int) -> list[PhasePoint]:
    dim = 2 * n
    dirs = [PhasePoint([1 if j == i else 0 for j in range(dim)]) for i in range(dim)]
    dirs.append(PhasePoint([1] * dim))
    return dirs


def _direction_evidence(state, x: PhasePoint, spec: SampleSpec) -> DirectionEvidence:
    family = state.family
    ts = [2.0**-k for k in range(spec.k_max + 1)]
    pts = [point_scale(f"1/{2**k}", x) for k in range(spec.k_max + 1)]
    if isinstance(family, Tabulated):
        keep = [i for i, p in enumerate(pts) if p in family.table]
        ts = [ts[i] for i in keep]
        pts = [pts[i] for i in keep]
    origin = PhasePoint.origin(state.n)
    vals = family.at_points(pts + [origin]) if pts else np.array([family.at_points([origin])[0]])
    phi0 = vals[-1]
    gaps = np.abs(vals[:-1] - phi0)
    persistent = None
    if len(gaps) >= spec.persist:
        tail = gaps[-spec.persist :]
        if np.all(tail > spec.gap_tol):
            persistent = float(tail.min())
    return DirectionEvidence(x, tuple(ts), tuple(float(g) for g in gaps), persistent)


def regularity_classify(
    state: CharacteristicState,
    directions: Sequence[PhasePoint] | None = None,
    samples: SampleSpec | None = None,
    method: str = "auto",
) -> RegularityReport:
    """Classify ``t -> phi(t x)`` continuity at 0.

    Closed-form families get their known verdict; sampling alone can only
    ever return NonRegular (persistent gap) or Inconclusive. Sampled evidence
    is always collected so the two routes can be cross-checked.
    """
    if method not in ("auto", "analytic", "sampled"):
        raise ValueError(f"unknown method {method!r}")
    directions = list(directions) if directions is not None else default_directions(state.n)
    for x in directions:
        if x.is_origin():
            raise ValueError("regularity directions must be nonzero")
        if x.n != state.n:
            raise ValueError("direction dimension does not match the state")
    spec = samples or SampleSpec()
    evidence = tuple(_direction_evidence(state, x, spec) for x in directions)
    sampled = NON_REGULAR if any(e.discontinuous for e in evidence) else INCONCLUSIVE
    analytic = state.family.analytic_regularity
    if method == "sampled" or (method == "auto" and analytic is None):
        return RegularityReport(sampled, "sampled", evidence, sampled, analytic)
    if analytic is None:
        raise ValueError("no closed-form regularity verdict for this family")
    return RegularityReport(analytic, "family-analytic", evidence, sampled, analytic)


# ----------------------------------------------------------- theorem witness


@dataclass(frozen=True)
class WitnessReport:
    h: float
    regularity: RegularityReport
    mass: MassCaptureReport | None
    defect_tol: float
    verdict: str
    detail: str
    notes: tuple[str, ...] = field(default=())

    @property
    def consistent(self) -> bool:
        return self.verdict == "consistent"

    def as_dict(self) -> dict:
        return {
            "h": self.h,
            "verdict": self.verdict,
            "detail": self.detail,
            "defect_tol": self.defect_tol,
            "regularity": self.regularity.as_dict(),
            "mass": self.mass.as_dict() if self.mass else None,
            "notes": list(self.notes),
        }


def _pure_exemplar(family) -> bool:
    return isinstance(family, (TraceState, SubgroupCharacter))


def theorem_witness(
    state: CharacteristicState,
    directions: Sequence[PhasePoint] | None = None,
    R_max: float = 50.0,
    defect_tol: float = 1e-2,
    quad: QuadratureSpec | None = None,
    samples: SampleSpec | None = None,
    threads: int | None = None,
) -> WitnessReport:
    """Check that the regularity verdict agrees with the mass defect of the classical limit.

    Regular requires defect <= defect_tol. NonRegular requires a strictly
    positive defect (> defect_tol), and defect >= 1 - defect_tol for the pure
    non-regular exemplars (trace state, subgroup characters). Disagreements are
    reported, never resolved.
    """
    if state.h <= 0.0:
        raise ValueError("theorem_witness expects a quantum level h > 0")
    reg = regularity_classify(state, directions, samples)
    notes = []
    if not reg.consistent:
        notes.append("closed-form and sampled regularity verdicts disagree")
    try:
        mass = mass_defect(classical_limit(state), R_max, quad, threads=threads)
    except MissingValueError as err:
        return WitnessReport(
            state.h, reg, None, defect_tol, "inconclusive", f"mass defect unavailable: {err}", tuple(notes)
        )
    defect = mass.defect
    if reg.verdict == REGULAR:
        ok = defect <= defect_tol
        detail = f"Regular, defect {defect:.3g} {'<=' if ok else '>'} {defect_tol:g}"
    elif reg.verdict == NON_REGULAR:
        need = 1.0 - defect_tol if _pure_exemplar(state.family) else defect_tol
        ok = defect >= need if _pure_exemplar(state.family) else defect > need
        detail = f"NonRegular, defect {defect:.3g} (required {'>=' if _pure_exemplar(state.family) else '>'} {need:g})"
    else:
        return WitnessReport(state.h, reg, mass, defect_tol, "inconclusive", f"Inconclusive regularity, defect {defect:.3g}", tuple(notes))
    if not reg.consistent:
        ok = False
    return WitnessReport(
        state.h, reg, mass, defect_tol, "consistent" if ok else "inconsistent", detail, tuple(notes)
    )
