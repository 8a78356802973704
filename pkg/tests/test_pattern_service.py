# tests/test_pattern_service.py
import math

import pytest

from services.contacts_service import validate
from services.errors import (
    InvalidVariant,
    NotApplicable,
    PatternNotRepresentable,
    UnsupportedSeries,
)
from services.geometry_service import PatternVariant, SeriesId
from services.pattern_service import (
    build_config_C,
    build_pattern,
    enumerate_variants,
    exists_pattern,
    halfk_overlap,
    m_pattern,
    schematic_config,
    solve_beta,
)


def test_square_closed_form():
    assert m_pattern(SeriesId.SQUARE, 7).m == pytest.approx(1.0 / 6.0, abs=1e-15)
    assert m_pattern(SeriesId.SQUARE, 2).m == 1.0


def test_square_minus_closed_forms():
    assert abs(m_pattern(SeriesId.SQUARE_MINUS_1, 7).m - 0.168581424) < 5e-10
    assert abs(m_pattern(SeriesId.SQUARE_MINUS_2, 7).m - 0.1705406887) < 5e-11


def test_halfk_closed_form():
    assert m_pattern(SeriesId.HALF_K, 3).m == pytest.approx(5.0 / 12.0, abs=1e-14)
    assert m_pattern(SeriesId.HALF_K, 2).m == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-14)


def test_oblong_closed_form_at_k8():
    # cos(alpha) = 12/13 at k = 8
    assert m_pattern(SeriesId.OBLONG, 8).m == pytest.approx(13.0 / 96.0, abs=1e-14)


@pytest.mark.parametrize(
    "series, k",
    [
        (SeriesId.SQUARE_MINUS_1, 7),
        (SeriesId.SQUARE_MINUS_2, 7),
        (SeriesId.OBLONG, 5),
        (SeriesId.HALF_K, 5),
        (SeriesId.OBLONG_ALT, 9),
    ],
)
def test_defining_equations_hold(series, k):
    formula = m_pattern(series, k)
    assert abs(formula.residual) < 1e-13


def test_solve_beta_stays_in_range():
    for k in range(4, 13):
        beta = solve_beta(k)
        assert 0.0 < beta < math.pi / 6.0
    assert solve_beta(3) is None


def test_existence_conditions():
    assert not exists_pattern(SeriesId.OBLONG, 3)
    assert exists_pattern(SeriesId.OBLONG, 4)
    assert exists_pattern(SeriesId.HALF_K, 7)
    assert not exists_pattern(SeriesId.HALF_K, 8)
    assert "1/2" in exists_pattern(SeriesId.HALF_K, 8).reason
    assert not exists_pattern(SeriesId.SQUARE_MINUS_2, 4)
    assert not exists_pattern(SeriesId.SQUARE, 1)


def test_formula_reports_nonexistence_instead_of_raising():
    formula = m_pattern(SeriesId.HALF_K, 8)
    assert formula.exists is False
    assert formula.m > 0
    assert m_pattern(SeriesId.SQUARE, 1).m is None


def test_square_minus_3_has_no_closed_form():
    with pytest.raises(UnsupportedSeries):
        m_pattern(SeriesId.SQUARE_MINUS_3, 7)
    with pytest.raises(UnsupportedSeries):
        build_pattern(SeriesId.SQUARE_MINUS_3, 7)


def test_oblong_alt_overtakes_oblong_at_k8():
    for k in range(4, 8):
        assert m_pattern(SeriesId.OBLONG_ALT, k).m < m_pattern(SeriesId.OBLONG, k).m
    for k in range(8, 13):
        assert m_pattern(SeriesId.OBLONG_ALT, k).m > m_pattern(SeriesId.OBLONG, k).m


def test_variant_counts():
    assert len(enumerate_variants(SeriesId.SQUARE_MINUS_1, 7)) == 25
    assert len(enumerate_variants(SeriesId.SQUARE_MINUS_2, 5)) == 1
    assert len(enumerate_variants(SeriesId.SQUARE_MINUS_2, 6)) == 9
    for v in enumerate_variants(SeriesId.SQUARE_MINUS_2, 7):
        assert v.rows[1] - v.rows[0] >= 2
        assert v.cols[1] - v.cols[0] >= 2
    with pytest.raises(UnsupportedSeries):
        enumerate_variants(SeriesId.SQUARE, 4)


@pytest.mark.parametrize(
    "series, k",
    [
        (SeriesId.SQUARE, 2),
        (SeriesId.SQUARE, 5),
        (SeriesId.SQUARE_MINUS_1, 3),
        (SeriesId.SQUARE_MINUS_1, 6),
        (SeriesId.SQUARE_MINUS_2, 5),
        (SeriesId.SQUARE_MINUS_2, 7),
        (SeriesId.OBLONG, 4),
        (SeriesId.OBLONG, 6),
        (SeriesId.HALF_K, 2),
        (SeriesId.HALF_K, 7),
        (SeriesId.OBLONG_ALT, 8),
    ],
)
def test_built_pattern_matches_closed_form(series, k):
    p = build_pattern(series, k)
    assert p.n == series.n_of(k)
    assert validate(p).valid
    assert p.m == pytest.approx(m_pattern(series, k).m, abs=1e-13)


def test_every_square_minus_1_variant_realizes_the_same_m():
    expected = m_pattern(SeriesId.SQUARE_MINUS_1, 5).m
    for variant in enumerate_variants(SeriesId.SQUARE_MINUS_1, 5):
        p = build_pattern(SeriesId.SQUARE_MINUS_1, 5, variant)
        assert validate(p).valid, variant.label()
        assert p.m == pytest.approx(expected, abs=1e-13)


def test_every_square_minus_2_variant_realizes_the_same_m():
    expected = m_pattern(SeriesId.SQUARE_MINUS_2, 6).m
    for variant in enumerate_variants(SeriesId.SQUARE_MINUS_2, 6):
        p = build_pattern(SeriesId.SQUARE_MINUS_2, 6, variant)
        assert validate(p).valid, variant.label()
        assert p.m == pytest.approx(expected, abs=1e-13)


def test_build_rejects_missing_members():
    with pytest.raises(PatternNotRepresentable) as exc:
        build_pattern(SeriesId.HALF_K, 8)
    assert "1/2" in exc.value.reason
    with pytest.raises(PatternNotRepresentable):
        build_pattern(SeriesId.OBLONG, 3)


def test_build_rejects_bad_variants():
    with pytest.raises(InvalidVariant):
        build_pattern(SeriesId.SQUARE_MINUS_1, 5, PatternVariant((1,), (3,)))
    with pytest.raises(InvalidVariant):
        build_pattern(SeriesId.SQUARE_MINUS_2, 7, PatternVariant((2, 3), (2, 4)))
    with pytest.raises(InvalidVariant):
        build_pattern(SeriesId.SQUARE, 4, PatternVariant((2,), (2,)))


def test_provenance_names_the_member():
    p = build_pattern(SeriesId.SQUARE_MINUS_1, 5, PatternVariant((2,), (3,)))
    assert p.provenance.label == "square-minus-1 k=5 variant=(2,3)"
    assert build_pattern(SeriesId.SQUARE, 3).provenance.label == "square k=3 variant=-"


@pytest.mark.parametrize("k", [5, 6, 9])
def test_config_C_layout(k):
    config = build_config_C(k)
    assert config.n == k * k - 3
    assert config.max_overlap() < 1e-12
    assert config.d == pytest.approx(1.0 / (k - 1))
    assert config.centers.min() == pytest.approx(0.0)
    assert config.centers.max() == pytest.approx(1.0)


def test_config_C_needs_k5():
    with pytest.raises(PatternNotRepresentable):
        build_config_C(4)


def test_schematic_config_has_slack():
    config = schematic_config(SeriesId.SQUARE_MINUS_1, 5, slack=0.9)
    p = build_pattern(SeriesId.SQUARE_MINUS_1, 5)
    assert config.n == p.n
    assert config.d == pytest.approx(0.9 * p.m)
    assert config.max_overlap() == 0.0


def test_halfk_overlap_past_k7():
    overlap = halfk_overlap(8)
    assert 0.0 < overlap < 0.01
    assert halfk_overlap(9) > overlap


@pytest.mark.parametrize("k", range(2, 8))
def test_existing_halfk_members_do_not_overlap(k):
    assert halfk_overlap(k) == 0.0


def test_halfk_overlap_needs_two_columns():
    with pytest.raises(NotApplicable):
        halfk_overlap(1)


def test_solve_beta_agrees_with_brentq():
    from scipy.optimize import brentq

    from services.pattern_service import _beta_equation

    for k in (4, 8, 12):
        reference = brentq(lambda b: _beta_equation(k, b), 0.0, math.pi / 6.0, xtol=1e-15)
        assert solve_beta(k) == pytest.approx(reference, abs=1e-13)


@pytest.mark.parametrize(
    "series", [s for s in SeriesId if s is not SeriesId.SQUARE_MINUS_3]
)
def test_m_decreases_along_each_series(series):
    values = [
        m_pattern(series, k).m
        for k in range(2, 13)
        if exists_pattern(series, k) and m_pattern(series, k).m is not None
    ]
    assert len(values) >= 2
    assert all(a > b for a, b in zip(values, values[1:]))
