# services/geometry_service.py
"""
Domain types and geometric primitives shared by every other service.

All coordinates live in the centers-square frame: the smallest axis-aligned
square containing the disk centers is mapped onto [0, 1]^2, and m is the disk
diameter measured in units of that square's side.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from services.errors import DegenerateInput

OVERLAP_TOL_REL = 1e-12
SPAN_TOL = 1e-9


class SeriesId(str, Enum):
    SQUARE = "square"
    SQUARE_MINUS_1 = "square-minus-1"
    SQUARE_MINUS_2 = "square-minus-2"
    SQUARE_MINUS_3 = "square-minus-3"
    OBLONG = "oblong"
    OBLONG_ALT = "oblong-alt"
    HALF_K = "halfk"

    def n_of(self, k: int) -> int:
        """Number of disks of the k-th member of the series"""
        if self is SeriesId.SQUARE:
            return k * k
        if self is SeriesId.SQUARE_MINUS_1:
            return k * k - 1
        if self is SeriesId.SQUARE_MINUS_2:
            return k * k - 2
        if self is SeriesId.SQUARE_MINUS_3:
            return k * k - 3
        if self in (SeriesId.OBLONG, SeriesId.OBLONG_ALT):
            return k * (k + 1)
        return k * k + k // 2

    @classmethod
    def parse(cls, value: str) -> "SeriesId":
        key = value.strip().lower().replace("_", "-")
        aliases = {
            "k2": cls.SQUARE,
            "k2-1": cls.SQUARE_MINUS_1,
            "k2-2": cls.SQUARE_MINUS_2,
            "k2-3": cls.SQUARE_MINUS_3,
            "squareminus1": cls.SQUARE_MINUS_1,
            "squareminus2": cls.SQUARE_MINUS_2,
            "squareminus3": cls.SQUARE_MINUS_3,
            "oblongalt": cls.OBLONG_ALT,
            "half-k": cls.HALF_K,
        }
        if key in aliases:
            return aliases[key]
        return cls(key)


@dataclass(frozen=True)
class PatternVariant:
    """Shifted-row and shifted-column insertion indices, counted from the top left, 1-based"""

    rows: tuple[int, ...] = ()
    cols: tuple[int, ...] = ()

    @property
    def is_empty(self) -> bool:
        return not self.rows and not self.cols

    def label(self) -> str:
        if self.is_empty:
            return "-"
        if len(self.rows) == 1 and len(self.cols) == 1:
            return f"({self.rows[0]},{self.cols[0]})"
        rows = ",".join(str(i) for i in self.rows)
        cols = ",".join(str(j) for j in self.cols)
        return f"({rows};{cols})"

    @classmethod
    def parse(cls, text: str | None) -> "PatternVariant":
        """Parse '2,3' (one row, one column) or '2,4;3,5' (rows;columns)"""
        if text is None or text.strip() in ("", "-"):
            return cls()
        body = text.strip().strip("()")
        if ";" in body:
            rows_part, cols_part = body.split(";", 1)
            rows = tuple(int(v) for v in rows_part.split(",") if v.strip())
            cols = tuple(int(v) for v in cols_part.split(",") if v.strip())
            return cls(rows, cols)
        values = [int(v) for v in body.split(",") if v.strip()]
        if len(values) == 2:
            return cls((values[0],), (values[1],))
        if len(values) == 4:
            return cls(tuple(values[:2]), tuple(values[2:]))
        raise ValueError(f"Cannot parse variant '{text}'")


@dataclass(frozen=True)
class Provenance:
    kind: str  # pattern | simulated | loaded
    label: str = ""

    @classmethod
    def pattern(cls, series: SeriesId, k: int, variant: PatternVariant) -> "Provenance":
        return cls("pattern", f"{series.value} k={k} variant={variant.label()}")

    @classmethod
    def simulated(cls, seed: int, params_digest: str) -> "Provenance":
        return cls("simulated", f"seed={seed} params={params_digest}")

    @classmethod
    def loaded(cls, source: str) -> "Provenance":
        return cls("loaded", source)

    def render(self) -> str:
        return f"{self.kind} {self.label}".strip()


@dataclass(frozen=True)
class FrameTransform:
    """Translate-then-scale map onto the centers-square frame"""

    offset: tuple[float, float]
    scale: float

    def apply(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return (pts - np.asarray(self.offset)) * self.scale


@dataclass(frozen=True, eq=False)
class Packing:
    n: int
    m: float
    centers: np.ndarray
    provenance: Provenance = field(default_factory=lambda: Provenance("pattern"))

    def __post_init__(self):
        centers = np.array(self.centers, dtype=float).reshape(-1, 2)
        centers.setflags(write=False)
        object.__setattr__(self, "centers", centers)
        if self.n < 2:
            raise DegenerateInput("A packing needs at least two disks")
        if centers.shape[0] != self.n:
            raise DegenerateInput(
                f"Expected {self.n} centers, got {centers.shape[0]}"
            )
        if not self.m > 0:
            raise DegenerateInput(f"Diameter ratio must be positive, got {self.m}")

    @classmethod
    def from_points(cls, points, diameter: float, provenance: Provenance) -> "Packing":
        """Normalize raw points with a common diameter into the centers-square frame"""
        transform = normalize(points)
        centers = transform.apply(points)
        return cls(len(centers), diameter * transform.scale, centers, provenance)

    def with_centers(self, centers, m: float | None = None) -> "Packing":
        return Packing(self.n, self.m if m is None else m, centers, self.provenance)

    def spans(self) -> tuple[float, float]:
        lo = self.centers.min(axis=0)
        hi = self.centers.max(axis=0)
        return float(hi[0] - lo[0]), float(hi[1] - lo[1])

    def min_distance(self) -> float:
        return float(min_pair_distance(self.centers)[0])

    def equals(self, other: "Packing", tol: float = 1e-14) -> bool:
        return (
            self.n == other.n
            and abs(self.m - other.m) <= tol
            and bool(np.all(np.abs(self.centers - other.centers) <= tol))
        )

    def digest(self) -> str:
        payload = f"{self.n}|{self.m!r}|" + ",".join(
            repr(float(v)) for v in self.centers.ravel()
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:12]


@dataclass(frozen=True, eq=False)
class Configuration:
    """
    Billiards input: centers in the centers-square frame with a common diameter d
    (same units), possibly 0. Unlike Packing nothing is assumed about jamming.
    """

    n: int
    d: float
    centers: np.ndarray
    overlap_allowed: bool = False
    label: str = ""

    def __post_init__(self):
        centers = np.array(self.centers, dtype=float).reshape(-1, 2)
        centers.setflags(write=False)
        object.__setattr__(self, "centers", centers)
        if self.n < 2 or centers.shape[0] != self.n:
            raise DegenerateInput("A configuration needs n >= 2 matching centers")
        if self.d < 0:
            raise DegenerateInput("Configuration diameter must be non-negative")

    def max_overlap(self) -> float:
        if self.d == 0:
            return 0.0
        dist, _, _ = min_pair_distance(self.centers)
        return max(0.0, (self.d - dist) / self.d)


def normalize(points) -> FrameTransform:
    """Similarity (translation + uniform scale) taking the centers-square onto [0,1]^2"""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if pts.shape[0] < 2:
        raise DegenerateInput("Normalization needs at least two centers")
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    side = float(max(hi[0] - lo[0], hi[1] - lo[1]))
    if side <= 0.0:
        raise DegenerateInput("All centers coincide")
    return FrameTransform((float(lo[0]), float(lo[1])), 1.0 / side)


def pair_distances(p: Packing) -> list[tuple[int, int, float]]:
    """Every pair (i, j), i < j, with gap = distance - m, ordered by (i, j)"""
    c = p.centers
    diff = c[:, None, :] - c[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    iu, ju = np.triu_indices(p.n, k=1)
    gaps = dist[iu, ju] - p.m
    return [(int(i), int(j), float(g)) for i, j, g in zip(iu, ju, gaps)]


def min_pair_distance(centers) -> tuple[float, int, int]:
    c = np.asarray(centers, dtype=float)
    diff = c[:, None, :] - c[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    np.fill_diagonal(dist, np.inf)
    flat = int(np.argmin(dist))
    i, j = divmod(flat, c.shape[0])
    return float(dist[i, j]), min(i, j), max(i, j)


def symmetries(centers) -> list[np.ndarray]:
    """The 8 images of the centers under the symmetry group of the unit square"""
    c = np.asarray(centers, dtype=float)
    x, y = c[:, 0], c[:, 1]
    images = []
    for a, b in ((x, y), (y, x)):
        for fx in (False, True):
            for fy in (False, True):
                images.append(
                    np.column_stack((1.0 - a if fx else a, 1.0 - b if fy else b))
                )
    return images


def round14(value: float) -> float:
    """Round to 14 significant digits, the reporting precision"""
    if value == 0 or not math.isfinite(value):
        return value
    return float(f"{value:.13e}")
