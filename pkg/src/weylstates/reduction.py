"""Quotients of finite-dimensional C*-algebras by annihilators of dual subspaces.

An algebra is a direct sum of full matrix blocks ``M_{n_1} + ... + M_{n_r}``
and an element is a list of square complex matrices. A functional is also a
list of matrices ``F_i`` acting by ``omega(A) = sum_i Tr(F_i A_i)``; its norm
is the sum of the trace norms of the ``F_i``.

Given a subspace V of the dual, the annihilator ``N(V)`` is computed as a
null space. When it is a two-sided ideal it is a sum of blocks, and the
quotient is obtained by dropping those blocks.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import cvxpy as cp
import numpy as np
import scipy.linalg

IDEAL_TOL = 1e-10
PULLBACK_TOL = 1e-12

Element = list  # list of square complex matrices, one per block


class ShapeMismatchError(ValueError):
    pass


class AnnihilatorNotIdeal(ValueError):
    """The annihilator of V is not a two-sided ideal; ``witness`` holds a violating pair."""

    def __init__(self, message: str, witness: "IdealWitness"):
        super().__init__(message)
        self.witness = witness


@dataclass(frozen=True)
class BlockAlgebra:
    block_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.block_dims)
        if not dims or any(d < 1 for d in dims):
            raise ShapeMismatchError("block dimensions must be positive integers")
        object.__setattr__(self, "block_dims", dims)

    @property
    def dim(self) -> int:
        return sum(d * d for d in self.block_dims)

    @property
    def offsets(self) -> list[int]:
        return list(np.cumsum([0] + [d * d for d in self.block_dims]))

    def check(self, A: Element) -> Element:
        if len(A) != len(self.block_dims):
            raise ShapeMismatchError(f"expected {len(self.block_dims)} blocks, got {len(A)}")
        out = []
        for a, d in zip(A, self.block_dims):
            a = np.asarray(a, dtype=complex)
            if a.shape != (d, d):
                raise ShapeMismatchError(f"block of shape {a.shape}, expected {(d, d)}")
            out.append(a)
        return out

    def zero(self) -> Element:
        return [np.zeros((d, d), dtype=complex) for d in self.block_dims]

    def identity(self) -> Element:
        return [np.eye(d, dtype=complex) for d in self.block_dims]

    def vec(self, A: Element) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.check(A)])

    def unvec(self, v: np.ndarray) -> Element:
        off = self.offsets
        return [v[off[i] : off[i + 1]].reshape(d, d) for i, d in enumerate(self.block_dims)]

    def basis(self) -> list[Element]:
        """Matrix units ``E_ab`` in each block."""
        return [self.unvec(e) for e in np.eye(self.dim, dtype=complex)]

    def block_unit_indices(self, i: int) -> range:
        off = self.offsets
        return range(off[i], off[i + 1])

    def multiply(self, A: Element, B: Element) -> Element:
        return [a @ b for a, b in zip(self.check(A), self.check(B))]

    def adjoint(self, A: Element) -> Element:
        return [a.conj().T for a in self.check(A)]

    def norm(self, A: Element) -> float:
        return max(float(np.linalg.norm(a, 2)) for a in self.check(A))

    def random_element(self, rng: np.random.Generator) -> Element:
        return [
            (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2 * d)
            for d in self.block_dims
        ]


def dual_norm(F: Element) -> float:
    """Norm of ``A -> sum Tr(F_i A_i)`` against the operator norm: sum of trace norms."""
    return float(sum(np.linalg.norm(f, "nuc") for f in F))


def pair(F: Element, A: Element) -> complex:
    return complex(sum(np.trace(f @ a) for f, a in zip(F, A)))


@dataclass(frozen=True, eq=False)
class FunctionalSubspace:
    """Span of functionals on a block algebra; the spanning set must be independent."""

    algebra: BlockAlgebra
    functionals: tuple

    def __post_init__(self):
        fs = tuple(self.algebra.check(F) for F in self.functionals)
        object.__setattr__(self, "functionals", fs)
        if fs and np.linalg.matrix_rank(self.pairing_matrix(), tol=1e-10) != len(fs):
            raise ValueError("spanning functionals are linearly dependent")

    @property
    def dim(self) -> int:
        return len(self.functionals)

    def pairing_matrix(self) -> np.ndarray:
        """Rows ``r_l`` with ``r_l . vec(A) = omega_l(A)``."""
        if not self.functionals:
            return np.zeros((0, self.algebra.dim), dtype=complex)
        return np.array([np.concatenate([f.T.ravel() for f in F]) for F in self.functionals])

    def combine(self, coeffs) -> Element:
        out = self.algebra.zero()
        for c, F in zip(coeffs, self.functionals):
            out = [o + c * f for o, f in zip(out, F)]
        return out

    @classmethod
    def block_dual(cls, alg: BlockAlgebra, blocks: int | Sequence[int]) -> "FunctionalSubspace":
        """All functionals supported on the given blocks (matrix-unit basis)."""
        blocks = [blocks] if isinstance(blocks, (int, np.integer)) else list(blocks)
        fs = []
        for i in blocks:
            for k in alg.block_unit_indices(i):
                # Tr(F A) picks A[b, a] when F = E_ab, so the transpose units span the block dual
                F = alg.unvec(np.eye(alg.dim, dtype=complex)[k])
                fs.append([f.T for f in F])
        return cls(alg, tuple(fs))

    @classmethod
    def full_dual(cls, alg: BlockAlgebra) -> "FunctionalSubspace":
        return cls.block_dual(alg, range(len(alg.block_dims)))

    @classmethod
    def zero(cls, alg: BlockAlgebra) -> "FunctionalSubspace":
        return cls(alg, ())


# ----------------------------------------------------------------- annihilator


@dataclass(frozen=True, eq=False)
class Annihilator:
    algebra: BlockAlgebra
    basis_vectors: np.ndarray  # orthonormal columns, shape (dim alg, dim N)

    @property
    def dim(self) -> int:
        return self.basis_vectors.shape[1]

    def elements(self) -> list[Element]:
        return [self.algebra.unvec(v) for v in self.basis_vectors.T]

    def distance(self, A: Element) -> float:
        """Euclidean distance of ``vec(A)`` from the span."""
        v = self.algebra.vec(A)
        Q = self.basis_vectors
        return float(np.linalg.norm(v - Q @ (Q.conj().T @ v)))

    def contains(self, A: Element, tol: float = IDEAL_TOL) -> bool:
        return self.distance(A) <= tol * max(1.0, float(np.linalg.norm(self.algebra.vec(A))))


def annihilator(alg: BlockAlgebra, V: FunctionalSubspace) -> Annihilator:
    """``N(V) = {A : omega(A) = 0 for all omega in V}`` as a null space."""
    if V.algebra != alg:
        raise ShapeMismatchError("functional subspace lives on a different algebra")
    P = V.pairing_matrix()
    if P.shape[0] == 0:
        Q = np.eye(alg.dim, dtype=complex)
    else:
        Q = scipy.linalg.null_space(P, rcond=1e-12).astype(complex)
    return Annihilator(alg, Q)


@dataclass(frozen=True, eq=False)
class IdealWitness:
    """``product`` = ``left @ right`` escapes N; ``side`` says which factor was the algebra element."""

    left: Element
    right: Element
    product: Element
    side: str
    distance: float

    def as_dict(self) -> dict:
        def enc(E):
            return [{"re": b.real.tolist(), "im": b.imag.tolist()} for b in E]

        return {
            "left": enc(self.left),
            "right": enc(self.right),
            "side": self.side,
            "distance": self.distance,
        }


@dataclass(frozen=True, eq=False)
class IdealCheck:
    is_ideal: bool
    max_residual: float
    witness: IdealWitness | None

    def __bool__(self):
        return self.is_ideal


def is_ideal(alg: BlockAlgebra, N: Annihilator, tol: float = IDEAL_TOL) -> IdealCheck:
    """Test ``BA, AB in N`` for matrix units B and a basis A of N; return the worst pair."""
    worst = 0.0
    witness = None
    for A in N.elements():
        for B in alg.basis():
            for side, (L, R) in (("left", (B, A)), ("right", (A, B))):
                P = alg.multiply(L, R)
                d = N.distance(P)
                if d > worst:
                    worst = d
                    if d > tol:
                        witness = IdealWitness(L, R, P, side, d)
    return IdealCheck(witness is None, worst, witness)


# -------------------------------------------------------------- condition (ii)


class _SupSolver:
    """``sup {|omega(A)| : omega in V, ||omega|| = 1}`` as a convex program.

    The constraint ``sum_i ||sum_l c_l F_{l,i}||_1 <= 1`` is convex in c, and
    rotating c makes the objective ``Re sum_l c_l omega_l(A)`` equal to the
    modulus at the optimum.
    """

    def __init__(self, V: FunctionalSubspace):
        self.V = V
        k = V.dim
        self.c = cp.Variable(k, complex=True)
        self.a = cp.Parameter(k, complex=True)
        blocks = []
        for i, d in enumerate(V.algebra.block_dims):
            stack = np.array([F[i] for F in V.functionals])  # (k, d, d)
            flat = stack.reshape(k, d * d)
            blocks.append(cp.normNuc(cp.reshape(flat.T @ self.c, (d, d), order="C")))
        self.problem = cp.Problem(cp.Maximize(cp.real(self.a @ self.c)), [cp.sum(cp.hstack(blocks)) <= 1])

    def __call__(self, A: Element) -> float:
        a = np.array([pair(F, A) for F in self.V.functionals])
        if not np.any(np.abs(a) > 0):
            return 0.0
        self.a.value = a
        self.problem.solve(solver=cp.CLARABEL)
        if self.c.value is None:
            raise RuntimeError(f"sup solver failed: {self.problem.status}")
        # recompute at the returned point so the value is attained by a feasible functional
        omega = self.V.combine(self.c.value)
        nrm = dual_norm(omega)
        return abs(pair(omega, A)) / nrm if nrm > 0 else 0.0


def functional_sup(V: FunctionalSubspace, A: Element) -> float:
    """``sup_{omega in V, ||omega|| = 1} |omega(A)|``."""
    if V.dim == 0:
        return 0.0
    return _SupSolver(V)(V.algebra.check(A))


@dataclass(frozen=True, eq=False)
class ConditionTrial:
    index: int
    sup_product: float
    sup_left: float
    sup_right: float
    A: Element
    B: Element

    @property
    def margin(self) -> float:
        return self.sup_product - self.sup_left * self.sup_right


@dataclass(frozen=True, eq=False)
class ConditionReport:
    trials: tuple[ConditionTrial, ...]
    seed: int
    tol: float

    @property
    def max_margin(self) -> float:
        return max(t.margin for t in self.trials)

    @property
    def violated(self) -> bool:
        return self.max_margin > self.tol

    @property
    def witness(self) -> ConditionTrial | None:
        if not self.violated:
            return None
        return max(self.trials, key=lambda t: t.margin)

    def as_dict(self) -> dict:
        out = {
            "trials": len(self.trials),
            "seed": self.seed,
            "tol": self.tol,
            "max_margin": self.max_margin,
            "violated": self.violated,
        }
        w = self.witness
        if w is not None:
            out["witness"] = {
                "trial": w.index,
                "sup_AB": w.sup_product,
                "sup_A": w.sup_left,
                "sup_B": w.sup_right,
                "A": [{"re": a.real.tolist(), "im": a.imag.tolist()} for a in w.A],
                "B": [{"re": b.real.tolist(), "im": b.imag.tolist()} for b in w.B],
            }
        return out


def check_condition_ii(
    alg: BlockAlgebra,
    V: FunctionalSubspace,
    trials: int = 32,
    seed: int = 0,
    threads: int | None = None,
    tol: float = 1e-8,
) -> ConditionReport:
    """Search random pairs for ``sup|omega(AB)| > sup|omega(A)| sup|omega(B)|``.

    Each trial draws from its own generator spawned from ``seed``, so the
    report does not depend on ``threads``. A violation is a certificate; no
    violation is only evidence.
    """
    if V.dim == 0:
        raise ValueError("condition (ii) needs a nonempty functional subspace")
    seqs = np.random.SeedSequence(seed).spawn(trials)
    local = threading.local()

    def run(i):
        solver = getattr(local, "solver", None)
        if solver is None:
            solver = local.solver = _SupSolver(V)
        rng = np.random.default_rng(seqs[i])
        A, B = alg.random_element(rng), alg.random_element(rng)
        return ConditionTrial(i, solver(alg.multiply(A, B)), solver(A), solver(B), A, B)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, range(trials)))
    else:
        results = [run(i) for i in range(trials)]
    return ConditionReport(tuple(results), seed, tol)


# -------------------------------------------------------------------- reduce


@dataclass(frozen=True, eq=False)
class Reduction:
    algebra: BlockAlgebra
    quotient: BlockAlgebra
    kept: tuple[int, ...]
    dropped: tuple[int, ...]
    pullback_residual: float
    dual_rank_ok: bool

    def apply(self, A: Element) -> Element:
        """The quotient map: keep the blocks outside the annihilator."""
        A = self.algebra.check(A)
        return [A[i] for i in self.kept]

    def pullback(self, G: Element) -> Element:
        """``omega o f`` for a functional on the quotient, as a functional on the algebra."""
        G = self.quotient.check(G)
        out = self.algebra.zero()
        for j, i in enumerate(self.kept):
            out[i] = G[j]
        return out

    def induced(self, V: FunctionalSubspace) -> FunctionalSubspace:
        """V transported to the quotient (restriction to the kept blocks)."""
        return FunctionalSubspace(self.quotient, tuple([F[i] for i in self.kept] for F in V.functionals))

    def as_dict(self) -> dict:
        return {
            "block_dims": list(self.algebra.block_dims),
            "quotient_block_dims": list(self.quotient.block_dims),
            "kept": list(self.kept),
            "dropped": list(self.dropped),
            "pullback_residual": self.pullback_residual,
            "pullback_tol": PULLBACK_TOL,
            "dual_rank_ok": self.dual_rank_ok,
        }


def reduce(alg: BlockAlgebra, V: FunctionalSubspace, tol: float = IDEAL_TOL) -> Reduction:
    """Quotient of ``alg`` by ``N(V)``; raises AnnihilatorNotIdeal with a witness pair."""
    N = annihilator(alg, V)
    check = is_ideal(alg, N, tol)
    if not check:
        raise AnnihilatorNotIdeal(
            f"annihilator is not an ideal (product escapes by {check.witness.distance:.3g})",
            check.witness,
        )
    units = np.eye(alg.dim, dtype=complex)
    dropped = tuple(
        i
        for i in range(len(alg.block_dims))
        if all(N.contains(alg.unvec(units[k]), tol) for k in alg.block_unit_indices(i))
    )
    kept = tuple(i for i in range(len(alg.block_dims)) if i not in dropped)
    if sum(alg.block_dims[i] ** 2 for i in dropped) != N.dim:
        # an ideal of a block algebra is a sum of blocks; anything else is a numerical failure
        raise RuntimeError("annihilator is an ideal but not a sum of blocks")
    if not kept:
        raise ValueError("V is zero: the quotient is the zero algebra")
    quotient = BlockAlgebra(tuple(alg.block_dims[i] for i in kept))
    red = Reduction(alg, quotient, kept, dropped, 0.0, False)
    # each spanning functional factors through f: omega = (omega restricted) o f
    resid = max(
        (max(float(np.abs(np.asarray(a) - np.asarray(b)).max()) for a, b in zip(F, red.pullback([F[i] for i in kept])))
         for F in V.functionals),
        default=0.0,
    )
    P = V.pairing_matrix()
    pulled = FunctionalSubspace.full_dual(quotient)
    Q = np.array(
        [np.concatenate([f.T.ravel() for f in red.pullback(G)]) for G in pulled.functionals]
    )
    rank_V = np.linalg.matrix_rank(P, tol=1e-10)
    dual_ok = bool(
        np.linalg.matrix_rank(np.vstack([P, Q]), tol=1e-10) == rank_V and rank_V == quotient.dim
    )
    return Reduction(alg, quotient, kept, dropped, resid, dual_ok)


def homomorphism_residual(red: Reduction, samples: int = 8, seed: int = 0) -> float:
    """Max of ``|f(AB) - f(A)f(B)|`` and ``|f(A*) - f(A)*|`` over random elements."""
    rng = np.random.default_rng(seed)
    alg, q = red.algebra, red.quotient
    worst = 0.0
    for _ in range(samples):
        A, B = alg.random_element(rng), alg.random_element(rng)
        lhs = red.apply(alg.multiply(A, B))
        rhs = q.multiply(red.apply(A), red.apply(B))
        worst = max(worst, max(float(np.abs(x - y).max()) for x, y in zip(lhs, rhs)))
        lhs = red.apply(alg.adjoint(A))
        rhs = q.adjoint(red.apply(A))
        worst = max(worst, max(float(np.abs(x - y).max()) for x, y in zip(lhs, rhs)))
    return worst
