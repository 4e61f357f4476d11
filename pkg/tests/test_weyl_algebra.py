import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weylstates.phase_space import PhasePoint, symplectic_form
from weylstates.weyl_algebra import (
    LevelMismatchError,
    NormConvergenceError,
    NormOptions,
    WeylElement,
    adjoint,
    commutator,
    estimate_norm,
    poisson_bracket,
)

W = WeylElement.generator
rationals = st.fractions(min_value=-6, max_value=6, max_denominator=6)
pts = st.lists(rationals, min_size=2, max_size=2).map(PhasePoint)
coeffs = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)
levels = st.sampled_from([0.0, 0.25, 0.5, 1.0])


def elements(h):
    return st.lists(st.tuples(pts, coeffs), min_size=1, max_size=4).map(lambda t: WeylElement(t, h=h, n=1))


def test_product_of_generators():
    P = W(PhasePoint([1, 0]), h=1.0) * W(PhasePoint([0, 1]), h=1.0)
    assert len(P) == 1
    assert cmath.isclose(P.coefficient(PhasePoint([1, 1])), cmath.exp(-0.5j), abs_tol=1e-15)


def test_commutator_of_generators():
    h = 0.5
    C = commutator(W(PhasePoint([1, 0]), h), W(PhasePoint([0, 1]), h))
    assert cmath.isclose(C.coefficient(PhasePoint([1, 1])), -2j * math.sin(h / 2), abs_tol=1e-15)


def test_classical_product_commutes():
    A, B = W(PhasePoint([1, 2])), W(PhasePoint(["1/3", -1]))
    assert A * B == B * A
    assert commutator(A, B).is_zero()


def test_poisson_bracket_sign():
    B = poisson_bracket(W(PhasePoint([1, 0])), W(PhasePoint([0, 1])))
    assert B.coefficient(PhasePoint([1, 1])) == pytest.approx(1.0)


def _as_function(A):
    def f(y):
        return sum(c * np.exp(1j * x.to_array() @ y) for x, c in A.terms.items())

    return f


@settings(max_examples=30, deadline=None)
@given(elements(0.0), elements(0.0), st.lists(st.floats(-2, 2), min_size=2, max_size=2))
def test_poisson_bracket_matches_finite_differences(A, B, y):
    # {f, g} = df/dp dg/dq - df/dq dg/dp on R^2 with y = (q, p)
    f, g = _as_function(A), _as_function(B)
    y = np.array(y)
    eps = 1e-5
    e_q, e_p = np.array([eps, 0.0]), np.array([0.0, eps])

    def d(fn, e):
        return (fn(y + e) - fn(y - e)) / (2 * eps)

    fd = d(f, e_p) * d(g, e_q) - d(f, e_q) * d(g, e_p)
    exact = _as_function(poisson_bracket(A, B))(y)
    assert abs(fd - exact) <= 1e-5 * (1 + A.l1_norm() * B.l1_norm() * 40)


def test_bracket_rejects_quantum_elements():
    with pytest.raises(LevelMismatchError):
        poisson_bracket(W(PhasePoint([1, 0]), 0.5), W(PhasePoint([0, 1]), 0.5))


def test_level_mismatch():
    with pytest.raises(LevelMismatchError):
        W(PhasePoint([1, 0]), 0.5) * W(PhasePoint([0, 1]), 0.25)
    with pytest.raises(ValueError):
        W(PhasePoint([1, 0]), 1.5)


@settings(max_examples=40, deadline=None)
@given(levels.flatmap(lambda h: st.tuples(elements(h), elements(h), elements(h))))
def test_associative(triple):
    A, B, C = triple
    assert ((A * B) * C).isclose(A * (B * C), atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(levels.flatmap(lambda h: st.tuples(elements(h), elements(h))))
def test_adjoint_reverses_products(pair):
    A, B = pair
    assert adjoint(A * B).isclose(adjoint(B) * adjoint(A), atol=1e-9)
    assert adjoint(adjoint(A)) == A


@given(levels, pts)
def test_generators_are_unitary(h, x):
    U = W(x, h)
    assert (U.adjoint() * U).isclose(WeylElement.identity(1, h), atol=1e-14)


@given(levels, pts, pts)
def test_weyl_relation_phase(h, x, y):
    P = W(x, h) * W(y, h)
    s = float(symplectic_form(x, y))
    assert abs(P.coefficient(x + y) - cmath.exp(0.5j * h * s)) <= 1e-12


def test_records_roundtrip():
    A = WeylElement([(PhasePoint(["1/2", 3]), 1 - 2j), (PhasePoint([0, 0]), 0.5)], h=0.25)
    B = WeylElement.from_records(A.to_records(), h=0.25)
    assert A == B


def test_pruning_and_zero():
    A = W(PhasePoint([1, 0]))
    assert (A - A).is_zero()
    assert WeylElement.zero(1).l1_norm() == 0.0


# ---------------------------------------------------------------- norms


def test_norm_of_single_generator_is_modulus():
    est = estimate_norm(W(PhasePoint([1, 2]), 0.5, coeff=3 - 4j))
    assert est.value == 5.0 and est.method == "single-generator"


def test_classical_norm_sum_of_two_generators():
    est = estimate_norm(W(PhasePoint([1, 0])) + W(PhasePoint([0, 1])))
    assert est.value == pytest.approx(2.0, abs=1e-10)
    assert est.value <= est.upper_bound + 1e-12


def test_classical_norm_with_cancellation():
    # |1 - exp(i t)| peaks at 2, |1 + exp(i t) + exp(2 i t)| peaks at 3
    A = WeylElement.identity(1) - W(PhasePoint(["1/2", 0]))
    assert estimate_norm(A).value == pytest.approx(2.0, abs=1e-9)
    B = WeylElement.identity(1) + W(PhasePoint([1, 0])) + W(PhasePoint([2, 0]))
    assert estimate_norm(B).value == pytest.approx(3.0, abs=1e-9)


def test_classical_norm_oracle_on_dense_grid():
    A = WeylElement([(PhasePoint([1, 0]), 1.0), (PhasePoint([0, 2]), 0.5j), (PhasePoint([1, 1]), -0.7)], h=0.0)
    t = np.linspace(0, 2 * np.pi, 801)
    Q, P = np.meshgrid(t, t, indexing="ij")
    vals = np.exp(1j * Q) + 0.5j * np.exp(2j * P) - 0.7 * np.exp(1j * (Q + P))
    brute = np.abs(vals).max()
    est = estimate_norm(A)
    assert brute - 1e-9 <= est.value <= brute + 1e-3


def test_quantum_norm_of_sum_is_two():
    A = (W(PhasePoint([1, 0])) + W(PhasePoint([0, 1]))).with_level(0.01)
    est = estimate_norm(A)
    assert est.converged and est.method == "fock-compression"
    assert abs(est.value - 2.0) <= 0.05


def test_cstar_identity_classical():
    A = WeylElement([(PhasePoint([1, 0]), 1.0), (PhasePoint([0, 1]), 0.5j)], h=0.0)
    nA = estimate_norm(A).value
    assert estimate_norm(A.adjoint() * A).value == pytest.approx(nA**2, rel=1e-8)


def test_non_convergence_is_reported():
    A = (W(PhasePoint([1, 0])) + W(PhasePoint([0, 1]))).with_level(1.0)
    with pytest.raises(NormConvergenceError) as err:
        estimate_norm(A, NormOptions(tol=1e-9, max_dim=32))
    assert not err.value.estimate.converged


def test_norm_bounds_state_values():
    # |omega(A)| <= ||A|| for the vacuum, phi(x) = exp(-h |x|^2 / 4)
    h = 0.5
    A = WeylElement([(PhasePoint([1, 0]), 1.0), (PhasePoint([0, 1]), -1.0), (PhasePoint([0, 0]), 0.3)], h=h)
    val = sum(c * math.exp(-h * float(x.dot(x)) / 4) for x, c in A.terms.items())
    assert abs(val) <= estimate_norm(A).value + 1e-9
