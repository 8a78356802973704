# services/analysis_service.py
"""
Series-level analysis: pattern vs challenger thresholds, the oblong
crossover and recognition of known patterns in arbitrary packings.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from services.billiards_service import SimParams, best_of, tighten
from services.contacts_service import contact_graph, validate, well_formed_gap_check
from services.errors import MissingChallenger, PackingError, UnsupportedSeries
from services.geometry_service import (
    Packing,
    PatternVariant,
    SeriesId,
    symmetries,
)
from services.pattern_service import (
    build_config_C,
    build_pattern,
    enumerate_variants,
    exists_pattern,
    halfk_overlap,
    m_pattern,
)
from services.storage_service import BestKnownTable

logger = logging.getLogger(__name__)

BEATEN_MARGIN = 1e-10
MATCH_M_TOL = 1e-9
MATCH_POS_TOL = 1e-9


@dataclass
class ChallengerSource:
    """Best-known table, a best_of simulation budget, or both (table first)"""

    table: BestKnownTable | None = None
    params: SimParams | None = None
    seeds: list[int] = field(default_factory=list)
    workers: int = 1

    def lookup(self, n: int) -> tuple[float, str]:
        if self.table is not None:
            entry = self.table.get(n)
            if entry is not None:
                return entry.m_best, entry.source
        if self.params is not None and self.seeds:
            result = best_of(n, self.params, self.seeds, workers=self.workers)
            return result.best.m, f"best_of seeds={len(self.seeds)}"
        raise MissingChallenger(f"No challenger for n={n}: not in the table and no simulation budget")


@dataclass
class SeriesRow:
    k: int
    n: int
    exists: bool
    m_pattern: float | None
    m_challenger: float | None
    challenger_source: str
    beaten: bool
    overlap: float = 0.0

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "n": self.n,
            "exists": self.exists,
            "m_pattern": self.m_pattern,
            "m_challenger": self.m_challenger,
            "challenger_source": self.challenger_source,
            "beaten": self.beaten,
            "overlap": self.overlap,
        }


@dataclass
class SeriesReport:
    series: SeriesId
    rows: list[SeriesRow]
    n0: int | None
    n1: int | None

    def to_dict(self) -> dict:
        return {
            "series": self.series.value,
            "n0": self.n0,
            "n1": self.n1,
            "rows": [row.to_dict() for row in self.rows],
        }


@dataclass(frozen=True)
class CrossoverRow:
    k: int
    n: int
    m: float
    m_alt: float
    winner: str  # "main" or "alt"


@dataclass(frozen=True)
class SeriesMatch:
    series: SeriesId
    k: int
    variant: PatternVariant

    def to_dict(self) -> dict:
        return {"series": self.series.value, "k": self.k, "variant": self.variant.label()}


def is_beaten(m_pattern_value: float, m_challenger: float) -> bool:
    return m_challenger > m_pattern_value + BEATEN_MARGIN


def _tightened_m(k: int, params: SimParams | None, seed: int = 0) -> float:
    if params is None:
        raise UnsupportedSeries(
            "square-minus-3 needs simulation parameters to tighten configuration C"
        )
    return tighten(build_config_C(k), params, seed).m


def series_threshold(
    series: SeriesId,
    k_range,
    challenger: ChallengerSource,
    missing_ok: bool = False,
) -> SeriesReport:
    """
    Compare each member against its challenger. With missing_ok, members without
    a challenger get an empty challenger cell instead of MissingChallenger.

    Returns:
        SeriesReport with n0 = the last existing unbeaten member and n1 = the
        first beaten member after it (None when no later member is beaten)
    """
    rows: list[SeriesRow] = []
    for k in k_range:
        n = series.n_of(k)
        exists = bool(exists_pattern(series, k))
        overlap = 0.0
        if series is SeriesId.HALF_K and not exists and k >= 2:
            overlap = halfk_overlap(k)

        if series is SeriesId.SQUARE_MINUS_3:
            m_pat = _tightened_m(k, challenger.params) if exists else None
        else:
            m_pat = m_pattern(series, k).m

        if not exists:
            rows.append(SeriesRow(k, n, False, m_pat, None, "", False, overlap))
            continue
        try:
            m_ch, source = challenger.lookup(n)
        except MissingChallenger:
            if not missing_ok:
                raise
            rows.append(SeriesRow(k, n, True, m_pat, None, "missing", False, overlap))
            continue
        beaten = is_beaten(m_pat, m_ch)
        logger.debug(
            "%s k=%d n=%d pattern %.15g challenger %.15g beaten=%s",
            series.value,
            k,
            n,
            m_pat,
            m_ch,
            beaten,
        )
        rows.append(SeriesRow(k, n, True, m_pat, m_ch, source, beaten, overlap))

    n0 = n1 = None
    last = None
    for position, row in enumerate(rows):
        if row.exists and row.m_challenger is not None and not row.beaten:
            n0, last = row.n, position
    if last is not None:
        n1 = next((row.n for row in rows[last + 1 :] if row.beaten), None)
    return SeriesReport(series, rows, n0, n1)


def oblong_crossover(k_range) -> list[CrossoverRow]:
    """m of the alternating-column pattern against the zig-zag alternative"""
    table = []
    for k in k_range:
        if k < 4:
            logger.debug("oblong crossover skips k=%d (pattern needs k >= 4)", k)
            continue
        m_main = m_pattern(SeriesId.OBLONG, k).m
        m_alt = m_pattern(SeriesId.OBLONG_ALT, k).m
        winner = "alt" if m_alt > m_main else "main"
        table.append(CrossoverRow(k, SeriesId.OBLONG.n_of(k), m_main, m_alt, winner))
    return table


def _candidate_ks(series: SeriesId, n: int) -> list[int]:
    top = int(math.isqrt(n)) + 2
    return [k for k in range(2, top + 1) if series.n_of(k) == n]


def _positions_match(solid: np.ndarray, pattern: Packing) -> bool:
    for image in symmetries(pattern.centers):
        dist, _ = cKDTree(image).query(solid)
        if float(np.max(dist)) <= MATCH_POS_TOL:
            return True
    return False


def match_series(p: Packing, sim_params: SimParams | None = None) -> SeriesMatch | None:
    """
    The first series member (and variant) whose solid disks coincide with p's
    up to a symmetry of the square, or None for irregular packings.
    square-minus-3 is only tried when simulation parameters are given.
    """
    graph = contact_graph(p)
    solid_idx = [i for i in range(p.n) if i not in set(graph.rattlers)]
    solid = p.centers[solid_idx] if solid_idx else p.centers

    for series in SeriesId:
        for k in _candidate_ks(series, p.n):
            if not exists_pattern(series, k):
                continue
            if series is SeriesId.SQUARE_MINUS_3:
                if sim_params is None:
                    continue
                try:
                    pattern = tighten(build_config_C(k), sim_params, 0).packing
                except PackingError as exc:
                    logger.warning("could not tighten configuration C for k=%d: %s", k, exc)
                    continue
                if abs(pattern.m - p.m) <= MATCH_M_TOL and _positions_match(solid, pattern):
                    return SeriesMatch(series, k, PatternVariant())
                continue

            formula = m_pattern(series, k)
            if formula.m is None or abs(formula.m - p.m) > MATCH_M_TOL:
                continue
            if series in (SeriesId.SQUARE_MINUS_1, SeriesId.SQUARE_MINUS_2):
                variants = enumerate_variants(series, k)
            else:
                variants = [PatternVariant()]
            for variant in variants:
                if _positions_match(solid, build_pattern(series, k, variant)):
                    return SeriesMatch(series, k, variant)
    return None


def analysis_report(p: Packing, sim_params: SimParams | None = None) -> dict:
    """Validity, contacts, rattlers, gap check and series match of one packing"""
    validity = validate(p)
    graph = contact_graph(p)
    gaps = well_formed_gap_check(graph)
    match = match_series(p, sim_params) if validity.valid else None
    return {
        "n": p.n,
        "m": p.m,
        "provenance": p.provenance.render(),
        "valid": validity.valid,
        "max_overlap": validity.max_overlap,
        "offending_pair": validity.offending_pair,
        "messages": validity.messages,
        "disk_bonds": len(graph.disk_bonds),
        "wall_bonds": len(graph.wall_bonds),
        "overlaps": len(graph.overlaps),
        "rattlers": graph.rattlers,
        "gap_check_passed": gaps.passed,
        "strong_gap_check_passed": gaps.strong_passed,
        "near_misses": [
            {"i": i, "j": j, "gap": gap / p.m} for i, j, gap in gaps.strong_offending
        ],
        "match": match.to_dict() if match else None,
    }
