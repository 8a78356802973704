# tests/test_geometry_service.py
import numpy as np
import pytest

from services.errors import DegenerateInput
from services.geometry_service import (
    Configuration,
    Packing,
    PatternVariant,
    Provenance,
    SeriesId,
    min_pair_distance,
    normalize,
    pair_distances,
    round14,
    symmetries,
)


def _unit_pair():
    return Packing(2, 1.4142135623730951, [[0.0, 0.0], [1.0, 1.0]])


@pytest.mark.parametrize(
    "series, k, n",
    [
        (SeriesId.SQUARE, 7, 49),
        (SeriesId.SQUARE_MINUS_1, 7, 48),
        (SeriesId.SQUARE_MINUS_2, 7, 47),
        (SeriesId.SQUARE_MINUS_3, 7, 46),
        (SeriesId.OBLONG, 4, 20),
        (SeriesId.OBLONG_ALT, 8, 72),
        (SeriesId.HALF_K, 3, 10),
        (SeriesId.HALF_K, 4, 18),
    ],
)
def test_series_sizes(series, k, n):
    assert series.n_of(k) == n


def test_series_parse_accepts_aliases():
    assert SeriesId.parse("square") is SeriesId.SQUARE
    assert SeriesId.parse("K2-1") is SeriesId.SQUARE_MINUS_1
    assert SeriesId.parse("oblong_alt") is SeriesId.OBLONG_ALT
    assert SeriesId.parse("half-k") is SeriesId.HALF_K
    with pytest.raises(ValueError):
        SeriesId.parse("triangle")


def test_variant_parse_and_label():
    single = PatternVariant.parse("2,3")
    assert single == PatternVariant((2,), (3,))
    assert single.label() == "(2,3)"

    double = PatternVariant.parse("(2,4;3,5)")
    assert double == PatternVariant((2, 4), (3, 5))
    assert double.label() == "(2,4;3,5)"

    assert PatternVariant.parse(None).is_empty
    assert PatternVariant.parse("-").label() == "-"
    with pytest.raises(ValueError):
        PatternVariant.parse("1,2,3")


def test_provenance_render():
    prov = Provenance.pattern(SeriesId.SQUARE, 3, PatternVariant())
    assert prov.render() == "pattern square k=3 variant=-"
    assert Provenance.simulated(7, "abc").render() == "simulated seed=7 params=abc"


def test_normalize_maps_longest_side_onto_unit():
    transform = normalize([[2.0, 1.0], [4.0, 2.0], [3.0, 1.5]])
    mapped = transform.apply([[2.0, 1.0], [4.0, 2.0]])
    assert transform.scale == pytest.approx(0.5)
    np.testing.assert_allclose(mapped, [[0.0, 0.0], [1.0, 0.5]])


def test_normalize_rejects_coincident_points():
    with pytest.raises(DegenerateInput):
        normalize([[1.0, 1.0], [1.0, 1.0]])


def test_from_points_scales_diameter():
    p = Packing.from_points([[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]], 1.0, Provenance("pattern"))
    assert p.n == 3
    assert p.m == pytest.approx(0.5)
    assert p.spans() == (pytest.approx(1.0), pytest.approx(1.0))


def test_packing_rejects_bad_input():
    with pytest.raises(DegenerateInput):
        Packing(1, 1.0, [[0.0, 0.0]])
    with pytest.raises(DegenerateInput):
        Packing(3, 1.0, [[0.0, 0.0], [1.0, 1.0]])
    with pytest.raises(DegenerateInput):
        Packing(2, 0.0, [[0.0, 0.0], [1.0, 1.0]])


def test_packing_centers_are_read_only():
    p = _unit_pair()
    with pytest.raises(ValueError):
        p.centers[0, 0] = 0.5


def test_equals_and_digest():
    a = _unit_pair()
    b = a.with_centers([[0.0, 0.0], [1.0, 1.0]])
    assert a.equals(b)
    assert a.digest() == b.digest()
    c = a.with_centers([[0.0, 0.0], [1.0, 0.9]])
    assert not a.equals(c)
    assert a.digest() != c.digest()


def test_pair_distances_and_minimum():
    p = Packing(3, 0.5, [[0.0, 0.0], [0.5, 0.0], [1.0, 1.0]])
    gaps = pair_distances(p)
    assert [(i, j) for i, j, _ in gaps] == [(0, 1), (0, 2), (1, 2)]
    assert gaps[0][2] == pytest.approx(0.0, abs=1e-15)
    dist, i, j = min_pair_distance(p.centers)
    assert (dist, i, j) == (pytest.approx(0.5), 0, 1)


def test_symmetries_are_the_eight_square_images():
    images = symmetries([[0.1, 0.2]])
    points = {tuple(np.round(img[0], 12)) for img in images}
    assert len(images) == 8
    assert len(points) == 8
    assert (0.2, 0.1) in points
    assert (0.9, 0.8) in points


def test_configuration_overlap():
    config = Configuration(2, 0.5, [[0.0, 0.0], [0.4, 0.0]])
    assert config.max_overlap() == pytest.approx(0.2)
    assert Configuration(2, 0.0, [[0.0, 0.0], [0.0, 0.0]]).max_overlap() == 0.0


def test_round14():
    assert round14(1.0 / 3.0) == 0.33333333333333
    assert round14(0.0) == 0.0
