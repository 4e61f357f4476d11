import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weylstates.phase_space import PhasePoint
from weylstates.quantization import (
    FieldGrid,
    NotClassicalError,
    classical_limit,
    dirac_bound,
    dirac_defect,
    fit_slope,
    product_bound,
    product_defect,
    quantize,
    verify_dirac_property,
    verify_norm_continuity,
    verify_product_property,
)
from weylstates.state_space import (
    CharacteristicState,
    FockDensity,
    Gaussian,
    SubgroupCharacter,
    TraceState,
    bochner_certificate,
)
from weylstates.weyl_algebra import NormOptions, WeylElement

A = WeylElement.generator(PhasePoint([1, 0]))
B = WeylElement.generator(PhasePoint([0, 1]))


def test_quantize_relabels_level():
    Q = quantize(A + 2 * B, 0.5)
    assert Q.h == 0.5 and Q.coefficient(PhasePoint([0, 1])) == 2
    with pytest.raises(NotClassicalError):
        quantize(Q, 0.25)


def test_defect_closed_forms():
    # sigma = -1: Dirac defect 1 - 2 sin(h/2)/h, product defect |exp(-i h/2) - 1| = 2 sin(h/4)
    for h in (1.0, 0.3):
        d = dirac_defect(A, B, h)
        assert abs(d.coefficient(PhasePoint([1, 1]))) == pytest.approx(abs(1 - 2 * math.sin(h / 2) / h), abs=1e-15)
        p = product_defect(A, B, h)
        assert abs(p.coefficient(PhasePoint([1, 1]))) == pytest.approx(2 * math.sin(h / 4), abs=1e-15)
        assert dirac_bound(A, B, h) == pytest.approx(abs(1 - 2 * math.sin(h / 2) / h))
        assert product_bound(A, B, h) == pytest.approx(2 * math.sin(h / 4))


def test_anchor_values_at_h_one():
    d = verify_dirac_property(A, B)
    p = verify_product_property(A, B)
    assert d.at(1.0).defect == pytest.approx(0.0411, abs=1e-4)
    assert abs(d.at(1.0).defect - (1 - 2 * math.sin(0.5))) <= 1e-12
    assert abs(p.at(1.0).defect - 2 * math.sin(0.25)) <= 1e-12
    assert p.at(1.0).defect == pytest.approx(0.4948, abs=1e-4)


def test_rates():
    d = verify_dirac_property(A, B)
    p = verify_product_property(A, B)
    assert abs(d.slope - 2.0) <= 0.2
    assert abs(p.slope - 1.0) <= 0.1
    assert d.bounded() and p.bounded()
    assert np.all(np.diff(d.defects()) < 0)


@settings(max_examples=15, deadline=None)
@given(
    st.lists(st.tuples(st.fractions(-3, 3, max_denominator=3), st.fractions(-3, 3, max_denominator=3)), min_size=1, max_size=3),
    st.lists(st.tuples(st.fractions(-3, 3, max_denominator=3), st.fractions(-3, 3, max_denominator=3)), min_size=1, max_size=3),
)
def test_defects_respect_coefficient_bounds(xs, ys):
    X = WeylElement([(PhasePoint(list(x)), 1.0) for x in xs], h=0.0)
    Y = WeylElement([(PhasePoint(list(y)), 1.0) for y in ys], h=0.0)
    # compressions are lower bounds, so an unconverged estimate may still be checked against the bound
    grid = FieldGrid((1.0, 0.5, 0.1, 0.01))
    opts = NormOptions(max_dim=64, strict=False)
    for rep in (verify_dirac_property(X, Y, grid, opts), verify_product_property(X, Y, grid, opts)):
        assert rep.bounded()


def test_dirac_defect_vanishes_with_h():
    X = WeylElement([(PhasePoint([1, 0]), 1.0), (PhasePoint([0, 2]), -0.5j)], h=0.0)
    Y = WeylElement([(PhasePoint([1, 1]), 1.0), (PhasePoint(["1/2", 0]), 2.0)], h=0.0)
    rep = verify_dirac_property(X, Y)
    assert rep.rows[-1].defect < 1e-4
    assert abs(rep.slope - 2.0) <= 0.2


def test_commuting_elements_have_zero_defect():
    X = WeylElement.generator(PhasePoint([1, 0]))
    Y = WeylElement.generator(PhasePoint([2, 0]))
    rep = verify_dirac_property(X, Y, FieldGrid((1.0, 0.5, 0.1, 0.01)))
    assert rep.slope is None and np.all(rep.defects() == 0)


def test_field_grid_validation():
    with pytest.raises(ValueError):
        FieldGrid((1.0, 0.5, 0.1))
    with pytest.raises(ValueError):
        FieldGrid((1.0, 0.5, 0.5, 0.001))
    with pytest.raises(ValueError):
        FieldGrid((1.0, 0.5, 0.25, 0.125))
    with pytest.raises(ValueError):
        FieldGrid((2.0, 0.5, 0.1, 0.001))
    assert len(FieldGrid.dyadic()) == 9


def test_norm_continuity_at_small_h():
    rep = verify_norm_continuity(A + B, (1.0, 0.1, 0.01))
    assert rep.classical.value == pytest.approx(2.0, abs=1e-10)
    assert rep.gap_at_smallest <= 0.05
    # compressions are lower bounds for the true norm 2
    assert np.all(rep.values <= 2.0 + 1e-12)


def test_threads_do_not_change_results():
    a = verify_dirac_property(A, B, threads=1).as_dict()
    b = verify_dirac_property(A, B, threads=4).as_dict()
    assert a == b


def test_fit_slope():
    hs = np.array([1.0, 0.5, 0.25])
    assert fit_slope(hs, 3 * hs**2)[0] == pytest.approx(2.0)
    assert fit_slope(hs, np.zeros(3)) is None


def test_rate_report_csv():
    csv_text = verify_product_property(A, B).to_csv()
    lines = csv_text.strip().splitlines()
    assert lines[0] == "h,defect,bound,radius,method" and len(lines) == 10


# ------------------------------------------------------------ classical limit


def _grid(step="1/2", half=4):
    from fractions import Fraction

    s = Fraction(step)
    return [PhasePoint([i * s, j * s]) for i in range(-half, half + 1) for j in range(-half, half + 1)]


@pytest.mark.parametrize(
    "family",
    [
        Gaussian(np.zeros(2), np.eye(2)),
        Gaussian(np.array([0.5, 0.0]), np.diag([2.0, 0.5])),
        TraceState(1),
        SubgroupCharacter((PhasePoint([1, 2]),), np.array([0.3, 0.0])),
    ],
)
def test_classical_limit_positive_for_gaussian_trace_subgroup(family):
    st_ = CharacteristicState(1.0, family)
    lim = classical_limit(st_)
    assert lim.h == 0.0
    assert bochner_certificate(st_, _grid()).is_psd
    assert bochner_certificate(lim, _grid()).is_psd


def test_classical_limit_of_number_state_is_not_positive():
    # the map W_0(x) -> W_h(x) is not positive: omega o Q_h can fail Bochner
    st_ = CharacteristicState(1.0, FockDensity.number_state(1, 1.0))
    pts = _grid()
    assert bochner_certificate(st_, pts).is_psd
    cert = bochner_certificate(classical_limit(st_), pts)
    assert not cert.is_psd
    assert cert.min_eigenvalue < -1.0
