# services/pattern_service.py
"""
Closed-form diameters and analytic builders for the pattern series.

Builders work in diameter units (common diameter 1) and normalize at the end,
so the realized m is 1 / span of the centers.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from services.contacts_service import contact_graph
from services.errors import (
    InvalidVariant,
    NotApplicable,
    PackingError,
    PatternNotRepresentable,
    UnsupportedSeries,
)
from services.geometry_service import (
    Configuration,
    Packing,
    PatternVariant,
    Provenance,
    SeriesId,
    min_pair_distance,
)
from services.polish_service import polish

logger = logging.getLogger(__name__)

# 15 degree nesting angle of shifted rows and columns
COS15 = math.sqrt(2.0 + math.sqrt(3.0)) / 2.0
SIN15 = math.sqrt(2.0 - math.sqrt(3.0)) / 2.0
SQRT3_2 = math.sqrt(3.0) / 2.0

MIN_K = {
    SeriesId.SQUARE: 2,
    SeriesId.SQUARE_MINUS_1: 3,
    SeriesId.SQUARE_MINUS_2: 5,
    SeriesId.SQUARE_MINUS_3: 5,
    SeriesId.OBLONG: 2,
    SeriesId.OBLONG_ALT: 2,
    SeriesId.HALF_K: 2,
}


@dataclass(frozen=True)
class Existence:
    exists: bool
    reason: str

    def __bool__(self) -> bool:
        return self.exists


@dataclass(frozen=True)
class SeriesFormula:
    series: SeriesId
    k: int
    m: float | None
    angle: float | None  # alpha or beta, radians
    exists: bool
    reason: str
    residual: float = 0.0  # defining equation evaluated at the solution

    @property
    def n(self) -> int:
        return self.series.n_of(self.k)

    def to_dict(self) -> dict:
        return {
            "series": self.series.value,
            "k": self.k,
            "n": self.n,
            "m": self.m,
            "angle": self.angle,
            "exists": self.exists,
            "reason": self.reason,
            "residual": self.residual,
        }


def _oblong_cos_alpha(k: int) -> float:
    return (k * k - k + math.sqrt(2.0 * k)) / (k * k + 1)


def _halfk_alpha(k: int) -> float:
    return math.atan(k / (2.0 * (k - 1)))


def _beta_equation(k: int, beta: float) -> float:
    t = beta + math.pi / 3.0
    return k * math.cos(beta) + math.cos(t) - (k - 1) * math.sin(t) - math.sin(beta)


def _beta_derivative(k: int, beta: float) -> float:
    t = beta + math.pi / 3.0
    return -k * math.sin(beta) - math.sin(t) - (k - 1) * math.cos(t) - math.cos(beta)


def solve_beta(k: int) -> float | None:
    """
    Root of k cos b + cos(b + pi/3) = (k-1) sin(b + pi/3) + sin b in (0, pi/6).
    Bisection to a 1e-16 bracket, then two Newton steps. None when the bracket
    holds no sign change (k < 4).
    """
    lo, hi = 0.0, math.pi / 6.0
    f_lo = _beta_equation(k, lo)
    if f_lo * _beta_equation(k, hi) > 0:
        return None
    for _ in range(200):
        if hi - lo <= 1e-16:
            break
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        f_mid = _beta_equation(k, mid)
        if f_mid == 0.0:
            lo = hi = mid
            break
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    beta = 0.5 * (lo + hi)
    for _ in range(2):
        slope = _beta_derivative(k, beta)
        if slope != 0.0:
            beta -= _beta_equation(k, beta) / slope
    return beta


def exists_pattern(series: SeriesId, k: int) -> Existence:
    """Non-overlap condition of the series at k"""
    if k < 2:
        return Existence(False, "k must be at least 2")
    low = MIN_K[series]
    if k < low:
        return Existence(False, f"{series.value} needs k >= {low}")

    if series in (SeriesId.OBLONG, SeriesId.OBLONG_ALT):
        cos_a = _oblong_cos_alpha(k)
        if cos_a < SQRT3_2:
            return Existence(
                False,
                f"cos(alpha)={cos_a:.6f} < sqrt(3)/2: alternate columns would overlap",
            )
        return Existence(True, f"cos(alpha)={cos_a:.6f} >= sqrt(3)/2")

    if series is SeriesId.HALF_K:
        sin_a = math.sin(_halfk_alpha(k))
        if sin_a < 0.5:
            return Existence(
                False,
                f"sin(alpha)={sin_a:.6f} < 1/2: disks within a column would overlap",
            )
        return Existence(True, f"sin(alpha)={sin_a:.6f} >= 1/2")

    return Existence(True, f"k={k} forms the pattern")


def m_pattern(series: SeriesId, k: int) -> SeriesFormula:
    """Closed-form diameter of the k-th member; existence is reported, not raised"""
    if series is SeriesId.SQUARE_MINUS_3:
        raise UnsupportedSeries(
            "square-minus-3 has no closed form; tighten configuration C instead"
        )
    if k < 2:
        return SeriesFormula(series, k, None, None, False, "k must be at least 2")
    existence = exists_pattern(series, k)
    angle = None

    if series is SeriesId.SQUARE:
        m = 1.0 / (k - 1)
        residual = m * (k - 1) - 1.0
    elif series is SeriesId.SQUARE_MINUS_1:
        m = 1.0 / (k - 3 + 2.0 * COS15)
        residual = m * (k - 3 + math.sqrt(2.0 + math.sqrt(3.0))) - 1.0
    elif series is SeriesId.SQUARE_MINUS_2:
        m = 1.0 / (k - 5 + 4.0 * COS15)
        residual = m * (k - 5 + 2.0 * math.sqrt(2.0 + math.sqrt(3.0))) - 1.0
    elif series is SeriesId.OBLONG:
        cos_a = _oblong_cos_alpha(k)
        angle = math.acos(cos_a)
        m = 1.0 / (k * cos_a)
        residual = k * cos_a - (k - 1) - math.sin(angle)
    elif series is SeriesId.HALF_K:
        angle = _halfk_alpha(k)
        m = 1.0 / (k * math.cos(angle))
        residual = k * math.cos(angle) - 2.0 * (k - 1) * math.sin(angle)
    elif series is SeriesId.OBLONG_ALT:
        angle = solve_beta(k)
        if angle is None:
            return SeriesFormula(
                series, k, None, None, False, "no root of the column equation in (0, pi/6)"
            )
        m = 1.0 / ((k + 0.5) * math.cos(angle) - SQRT3_2 * math.sin(angle))
        residual = _beta_equation(k, angle)
    else:
        raise UnsupportedSeries(f"Unknown series {series}")

    return SeriesFormula(
        series, k, m, angle, existence.exists, existence.reason, residual
    )


def enumerate_variants(series: SeriesId, k: int) -> list[PatternVariant]:
    """Every admissible placement of the shifted rows and columns"""
    inner = range(2, k)
    if series is SeriesId.SQUARE_MINUS_1:
        return [PatternVariant((i,), (j,)) for i in inner for j in inner]
    if series is SeriesId.SQUARE_MINUS_2:
        pairs = [(a, b) for a in inner for b in inner if b >= a + 2]
        return [PatternVariant(rows, cols) for rows in pairs for cols in pairs]
    raise UnsupportedSeries(f"{series.value} has no placement variants")


def _check_variant(series: SeriesId, k: int, variant: PatternVariant) -> PatternVariant:
    if series not in (SeriesId.SQUARE_MINUS_1, SeriesId.SQUARE_MINUS_2):
        if not variant.is_empty:
            raise InvalidVariant(f"{series.value} takes no variant, got {variant.label()}")
        return variant
    if variant.is_empty:
        return enumerate_variants(series, k)[0]
    if variant not in enumerate_variants(series, k):
        raise InvalidVariant(
            f"Variant {variant.label()} is out of range for {series.value} k={k}"
        )
    return variant


def _line_coords(k: int, shifted: set[int]) -> list[float]:
    """Positions of k parallel lines; a shifted line sits cos 15 from each neighbour"""
    coords = [0.0]
    for q in range(1, k):
        step = COS15 if (q in shifted or q - 1 in shifted) else 1.0
        coords.append(coords[-1] + step)
    return coords


def _nested_grid(k: int, variant: PatternVariant) -> list[tuple[float, float]]:
    """
    Straight grid with shifted rows and columns. Row and column indices here
    count from the bottom and from the left, 0-based.
    """
    shifted_rows = sorted(k - i for i in variant.rows)
    shifted_cols = sorted(j - 1 for j in variant.cols)
    # lowest shifted row pairs with the leftmost shifted column, and so on
    hole_col = dict(zip(shifted_rows, shifted_cols))
    hole_row = dict(zip(shifted_cols, shifted_rows))
    ys = _line_coords(k, set(shifted_rows))
    xs = _line_coords(k, set(shifted_cols))

    def row_shift(r: int, q: int) -> float:
        return SIN15 if q < hole_col[r] else -SIN15

    def col_shift(q: int, r: int) -> float:
        return SIN15 if r < hole_row[q] else -SIN15

    points = []
    for r in range(k):
        for q in range(k):
            in_row, in_col = r in hole_col, q in hole_row
            if not in_row and not in_col:
                points.append((xs[q], ys[r]))
            elif in_row and not in_col:
                points.append((xs[q] + row_shift(r, q), ys[r]))
            elif in_col and not in_row:
                points.append((xs[q], ys[r] + col_shift(q, r)))
            elif hole_col[r] != q:
                points.append((xs[q] + row_shift(r, q), ys[r] + col_shift(q, r)))
    return points


def _oblong_points(k: int, cos_a: float, sin_a: float) -> list[tuple[float, float]]:
    return [
        (c * cos_a, j + (sin_a if c % 2 else 0.0))
        for c in range(k + 1)
        for j in range(k)
    ]


def _halfk_points(k: int, alpha: float) -> list[tuple[float, float]]:
    cos_a, sin_a = math.cos(alpha), math.sin(alpha)
    points = []
    for c in range(k + 1):
        count = k - 1 if c % 2 else k
        for j in range(count):
            points.append((c * cos_a, (2 * j + c % 2) * sin_a))
    return points


def _oblong_alt_points(k: int, beta: float) -> list[tuple[float, float]]:
    t = beta + math.pi / 3.0
    return [
        (c * math.cos(beta) + (j % 2) * math.cos(t), j * math.sin(t) + (c % 2) * math.sin(beta))
        for c in range(k + 1)
        for j in range(k)
    ]


def _fixed_point_check(p: Packing) -> Packing:
    try:
        return polish(p, contact_graph(p))
    except PackingError as exc:
        logger.debug("polish left %s unchanged: %s", p.provenance.label, exc)
        return p


def build_pattern(
    series: SeriesId, k: int, variant: PatternVariant | None = None
) -> Packing:
    """
    Returns:
        The normalized packing of the k-th series member
    """
    if series is SeriesId.SQUARE_MINUS_3:
        raise UnsupportedSeries(
            "square-minus-3 is built by tightening configuration C"
        )
    existence = exists_pattern(series, k)
    if not existence:
        raise PatternNotRepresentable(
            f"{series.value} k={k} does not exist", existence.reason
        )
    variant = _check_variant(series, k, variant or PatternVariant())
    formula = m_pattern(series, k)
    provenance = Provenance.pattern(series, k, variant)

    if series is SeriesId.SQUARE:
        points = [(float(a), float(b)) for b in range(k) for a in range(k)]
    elif series in (SeriesId.SQUARE_MINUS_1, SeriesId.SQUARE_MINUS_2):
        points = _nested_grid(k, variant)
    elif series is SeriesId.OBLONG:
        points = _oblong_points(k, math.cos(formula.angle), math.sin(formula.angle))
    elif series is SeriesId.HALF_K:
        points = _halfk_points(k, formula.angle)
    else:
        points = _oblong_alt_points(k, formula.angle)

    packing = Packing.from_points(np.array(points), 1.0, provenance)
    if packing.n != series.n_of(k):
        raise PackingError(
            f"{series.value} k={k} produced {packing.n} disks, expected {series.n_of(k)}"
        )
    if series in (SeriesId.SQUARE_MINUS_1, SeriesId.SQUARE_MINUS_2, SeriesId.OBLONG_ALT):
        packing = _fixed_point_check(packing)

    logger.debug(
        "built %s: n=%d m=%.15g closed form %.15g",
        provenance.label,
        packing.n,
        packing.m,
        formula.m,
    )
    return packing


def build_config_C(k: int) -> Configuration:
    """
    Starting configuration for the k^2-3 series: a (k-3)^2 straight block in the
    bottom left, three additional columns on the right and three additional rows
    on top (middle ones offset by half a diameter), and a loose corner disk.
    The corner disk and the top disk of the middle column do not touch.
    """
    if k < 5:
        raise PatternNotRepresentable(
            f"configuration C needs k >= 5, got {k}", "k must be at least 5"
        )
    block = k - 3
    points = [(float(a), float(b)) for b in range(block) for a in range(block)]
    for offset, x in enumerate((k - 3, k - 2, k - 1)):
        lift = 0.5 if offset == 1 else 0.0
        points.extend((float(x), lift + y) for y in range(k - 1))
    for offset, y in enumerate((k - 3, k - 2, k - 1)):
        if offset == 1:
            points.extend((0.5 + x, float(y)) for x in range(block - 1))
        else:
            points.extend((float(x), float(y)) for x in range(block))
    points.append((float(k - 1), float(k - 1)))

    pts = np.array(points) / (k - 1)
    return Configuration(len(pts), 1.0 / (k - 1), pts, label=f"config-C k={k}")


def schematic_config(
    series: SeriesId,
    k: int,
    variant: PatternVariant | None = None,
    slack: float = 0.9,
) -> Configuration:
    """The exact pattern with the common diameter shrunk by slack; a billiards starting point"""
    p = build_pattern(series, k, variant)
    return Configuration(p.n, p.m * slack, p.centers, label=p.provenance.label)


def halfk_ideal(k: int) -> Packing:
    """HalfK geometry extended past k = 7; overlapping there"""
    if k < 2:
        raise NotApplicable("halfk needs k >= 2")
    points = _halfk_points(k, _halfk_alpha(k))
    return Packing.from_points(
        np.array(points),
        1.0,
        Provenance("pattern", f"halfk k={k} ideal"),
    )


def halfk_overlap(k: int) -> float:
    """
    Largest pairwise overlap of the ideal HalfK geometry, as a fraction of the
    diameter. Existing members (k <= 7) overlap by 0.
    """
    if exists_pattern(SeriesId.HALF_K, k):
        return 0.0
    p = halfk_ideal(k)
    dist, _, _ = min_pair_distance(p.centers)
    return max(0.0, (p.m - dist) / p.m)
