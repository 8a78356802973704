# services/contacts_service.py
"""
Contact graphs with the bond / no-bond tolerance regime, solid vs rattler
classification, the well-formed gap check and packing validation.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from config import BOND_TOL_REL, GAP_FLOOR_REL, STRONG_GAP_FLOOR_REL
from services.geometry_service import (
    OVERLAP_TOL_REL,
    SPAN_TOL,
    Packing,
    min_pair_distance,
)

logger = logging.getLogger(__name__)

WALLS = ("left", "right", "bottom", "top")
WALL_NORMALS = {
    "left": (-1.0, 0.0),
    "right": (1.0, 0.0),
    "bottom": (0.0, -1.0),
    "top": (0.0, 1.0),
}
SOLID = "solid"
RATTLER = "rattler"


@dataclass
class ContactGraph:
    n: int
    m: float
    centers: np.ndarray
    bond_tol: float
    disk_bonds: list[tuple[int, int, float]] = field(default_factory=list)
    wall_bonds: list[tuple[int, str, float]] = field(default_factory=list)
    # (i, j or wall name, gap) with bond_tol <= gap < near_band
    near_misses: list[tuple[int, int | str, float]] = field(default_factory=list)
    near_band: float = 0.0
    # (i, j or wall name, gap) with gap <= -bond_tol
    overlaps: list[tuple[int, int | str, float]] = field(default_factory=list)
    labels: list[str] = field(default_factory=list)

    @property
    def bond_count(self) -> int:
        return len(self.disk_bonds) + len(self.wall_bonds)

    @property
    def rattlers(self) -> list[int]:
        return [i for i, label in enumerate(self.labels) if label == RATTLER]

    def has_bond(self, i: int, j: int) -> bool:
        a, b = min(i, j), max(i, j)
        return any(p == a and q == b for p, q, _ in self.disk_bonds)

    def gap(self, i: int, j: int) -> float:
        d = self.centers[i] - self.centers[j]
        return float(math.hypot(d[0], d[1]) - self.m)

    def bond_keys(self) -> tuple[set, set]:
        disks = {(i, j) for i, j, _ in self.disk_bonds}
        walls = {(i, w) for i, w, _ in self.wall_bonds}
        return disks, walls

    def neighbours(self, i: int) -> list[int]:
        out = []
        for p, q, _ in self.disk_bonds:
            if p == i:
                out.append(q)
            elif q == i:
                out.append(p)
        return out


@dataclass
class GapReport:
    passed: bool
    offending: list[tuple[int, int | str, float]]
    strong_passed: bool
    strong_offending: list[tuple[int, int | str, float]]
    gap_floor: float
    strong_floor: float


@dataclass
class ValidityReport:
    valid: bool
    in_bounds: bool
    span_ok: bool
    max_overlap: float  # fraction of m
    offending_pair: tuple[int, int] | None
    messages: list[str] = field(default_factory=list)


def wall_gaps(x: float, y: float) -> dict[str, float]:
    """Center-to-wall distance minus m/2; physical walls sit m/2 outside the centers-square"""
    return {"left": x, "right": 1.0 - x, "bottom": y, "top": 1.0 - y}


def contact_graph(
    p: Packing,
    bond_tol: float | None = None,
    near_band: float | None = None,
) -> ContactGraph:
    """
    Bonds for every disk-disk or disk-wall gap with |gap| < bond_tol (default
    1e-12 m). Gaps at or below -bond_tol are overlaps and never bonds; gaps in
    [bond_tol, near_band) are kept as near misses (default band 1e-5 m).
    """
    m = p.m
    bond_tol = BOND_TOL_REL * m if bond_tol is None else bond_tol
    near_band = STRONG_GAP_FLOOR_REL * m if near_band is None else near_band
    near_band = max(near_band, bond_tol)

    graph = ContactGraph(
        n=p.n, m=m, centers=p.centers, bond_tol=bond_tol, near_band=near_band
    )

    tree = cKDTree(p.centers)
    pairs = tree.query_pairs(r=m + near_band, output_type="ndarray")
    if len(pairs):
        pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
    for i, j in pairs:
        i, j = int(i), int(j)
        _sort_gap(graph, graph.disk_bonds, (i, j, graph.gap(i, j)))

    for i, (x, y) in enumerate(p.centers):
        for wall, gap in wall_gaps(float(x), float(y)).items():
            _sort_gap(graph, graph.wall_bonds, (i, wall, gap))

    if graph.overlaps:
        worst = min(graph.overlaps, key=lambda item: item[2])
        logger.warning(
            "%d overlaps beyond the bond tolerance, worst %s-%s by %.3e",
            len(graph.overlaps),
            worst[0],
            worst[1],
            -worst[2],
        )
    graph.labels = classify_rattlers(graph)
    return graph


def _sort_gap(graph: ContactGraph, bonds: list, item: tuple) -> None:
    gap = item[2]
    if gap <= -graph.bond_tol:
        graph.overlaps.append(item)
    elif gap < graph.bond_tol:
        bonds.append(item)
    elif gap < graph.near_band:
        graph.near_misses.append(item)


def _loose(normals: list[tuple[float, float]]) -> bool:
    """Fewer than 3 contacts, or every contact normal inside one open half-plane"""
    if len(normals) < 3:
        return True
    angles = sorted(math.atan2(ny, nx) for nx, ny in normals)
    widest = angles[0] + 2.0 * math.pi - angles[-1]
    for a, b in zip(angles, angles[1:]):
        widest = max(widest, b - a)
    return widest > math.pi + 1e-12


def classify_rattlers(g: ContactGraph) -> list[str]:
    """Iterative pruning until a fixed point; pruned disks are rattlers"""
    normals: list[list[tuple[int | None, tuple[float, float]]]] = [
        [] for _ in range(g.n)
    ]
    for i, j, _ in g.disk_bonds:
        d = g.centers[j] - g.centers[i]
        normals[i].append((j, (float(d[0]), float(d[1]))))
        normals[j].append((i, (float(-d[0]), float(-d[1]))))
    for i, wall, _ in g.wall_bonds:
        normals[i].append((None, WALL_NORMALS[wall]))

    rattler = [False] * g.n
    changed = True
    while changed:
        changed = False
        for i in range(g.n):
            if rattler[i]:
                continue
            live = [v for other, v in normals[i] if other is None or not rattler[other]]
            if _loose(live):
                rattler[i] = True
                changed = True

    labels = [RATTLER if r else SOLID for r in rattler]
    logger.debug("classified %d rattlers among %d disks", sum(rattler), g.n)
    return labels


def well_formed_gap_check(g: ContactGraph, gap_floor: float | None = None) -> GapReport:
    """
    Passes iff no non-bond gap lies in [bond_tol, gap_floor). The stronger
    1e-5 m floor is reported alongside. Floors above the graph's near band are
    checked against gaps recomputed from the centers.
    """
    gap_floor = GAP_FLOOR_REL * g.m if gap_floor is None else gap_floor
    strong_floor = STRONG_GAP_FLOOR_REL * g.m
    gaps = g.near_misses
    if max(gap_floor, strong_floor) > g.near_band:
        gaps = _gaps_below(g, max(gap_floor, strong_floor))
    offending = [item for item in gaps if item[2] < gap_floor]
    strong = [item for item in gaps if item[2] < strong_floor]
    return GapReport(
        passed=not offending,
        offending=offending,
        strong_passed=not strong,
        strong_offending=strong,
        gap_floor=gap_floor,
        strong_floor=strong_floor,
    )


def _gaps_below(g: ContactGraph, ceiling: float) -> list[tuple[int, int | str, float]]:
    """Non-bond gaps in [bond_tol, ceiling), measured afresh"""
    out: list[tuple[int, int | str, float]] = []
    pairs = cKDTree(g.centers).query_pairs(r=g.m + ceiling, output_type="ndarray")
    for i, j in sorted((int(a), int(b)) for a, b in pairs):
        gap = g.gap(i, j)
        if g.bond_tol <= gap < ceiling:
            out.append((i, j, gap))
    for i, (x, y) in enumerate(g.centers):
        for wall, gap in wall_gaps(float(x), float(y)).items():
            if g.bond_tol <= gap < ceiling:
                out.append((i, wall, gap))
    return out


def validate(p: Packing) -> ValidityReport:
    """Bounds, centers-square normalization and maximum overlap"""
    messages = []
    c = p.centers
    in_bounds = bool(np.all(c >= -SPAN_TOL) and np.all(c <= 1.0 + SPAN_TOL))
    if not in_bounds:
        messages.append("centers outside the unit centers-square")

    span_x, span_y = p.spans()
    span_ok = abs(max(span_x, span_y) - 1.0) <= SPAN_TOL
    if not span_ok:
        messages.append(f"centers-square span is {max(span_x, span_y):.15g}, expected 1")

    dist, i, j = min_pair_distance(c)
    overlap = max(0.0, (p.m - dist) / p.m)
    offending = None
    if overlap > OVERLAP_TOL_REL:
        offending = (i, j)
        messages.append(f"disks {i} and {j} overlap by {overlap:.3e} of the diameter")

    valid = in_bounds and span_ok and offending is None
    return ValidityReport(valid, in_bounds, span_ok, overlap, offending, messages)
