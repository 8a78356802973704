# services/storage_service.py
"""
Packing files (text format v1), the best-known-values table and CSV reports.

Packing file grammar, one record per line, fields separated by single spaces,
'#' starts a comment:

    version 1
    n <count>
    m <14 significant digits>
    provenance <free text>            (optional)
    disk <index> <x> <y>              (one per disk, index 0..n-1)
    bond <i> <j>                      (optional contact section)
    wall <i> <left|right|bottom|top>  (optional contact section)
"""
from __future__ import annotations

import csv
import io
import logging
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from services.contacts_service import WALLS, contact_graph, validate, wall_gaps
from services.errors import ContactMismatch, DegenerateInput, ParseError, ValidationError
from services.geometry_service import Packing, Provenance

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
LOAD_OVERLAP_TOL_REL = 1e-11
LOAD_BOND_TOL_REL = 1e-10
SERIES_CSV_HEADER = (
    "k",
    "n",
    "exists",
    "m_pattern",
    "m_challenger",
    "challenger_source",
    "beaten",
    "overlap",
)
CROSSOVER_CSV_HEADER = ("k", "n", "m", "m_alt", "winner")


def fmt14(value: float) -> str:
    """Positional decimal with 14 significant digits, trailing zeros kept"""
    return np.format_float_positional(
        float(value), precision=14, unique=False, fractional=False, trim="k"
    )


def write_atomic(path: str, text: str) -> None:
    """Write via a temporary file in the target directory, then rename over path"""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_packing(p: Packing, with_contacts: bool = False) -> str:
    """Deterministic text serialization, disks in index order"""
    lines = [
        "# squarepack packing file",
        f"version {FORMAT_VERSION}",
        f"n {p.n}",
        f"m {fmt14(p.m)}",
    ]
    provenance = p.provenance.render()
    if provenance:
        lines.append(f"provenance {provenance}")
    for i, (x, y) in enumerate(p.centers):
        lines.append(f"disk {i} {fmt14(x)} {fmt14(y)}")
    if with_contacts:
        graph = contact_graph(p)
        for i, j, _ in graph.disk_bonds:
            lines.append(f"bond {i} {j}")
        for i, wall, _ in graph.wall_bonds:
            lines.append(f"wall {i} {wall}")
    return "\n".join(lines) + "\n"


def _int(token: str, lineno: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"line {lineno}: expected an integer, got '{token}'")


def _float(token: str, lineno: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"line {lineno}: expected a number, got '{token}'")


def load_packing(data: str | bytes, source: str = "") -> Packing:
    """
    Parse, validate and cross-check the optional contact section.

    Returns:
        Packing with loaded provenance
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    version = n = m = None
    provenance = ""
    disks: dict[int, tuple[float, float]] = {}
    bonds: list[tuple[int, int]] = []
    walls: list[tuple[int, str]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, rest = line.partition(" ")
        fields = rest.split()
        if key == "version":
            version = _int(rest.strip(), lineno)
        elif key == "n":
            n = _int(rest.strip(), lineno)
        elif key == "m":
            m = _float(rest.strip(), lineno)
        elif key == "provenance":
            provenance = rest.strip()
        elif key == "disk":
            if len(fields) != 3:
                raise ParseError(f"line {lineno}: disk needs index, x and y")
            index = _int(fields[0], lineno)
            if index in disks:
                raise ParseError(f"line {lineno}: duplicated disk index {index}")
            disks[index] = (_float(fields[1], lineno), _float(fields[2], lineno))
        elif key == "bond":
            if len(fields) != 2:
                raise ParseError(f"line {lineno}: bond needs two disk indices")
            i, j = sorted((_int(fields[0], lineno), _int(fields[1], lineno)))
            bonds.append((i, j))
        elif key == "wall":
            if len(fields) != 2 or fields[1] not in WALLS:
                raise ParseError(f"line {lineno}: wall needs a disk index and a wall name")
            walls.append((_int(fields[0], lineno), fields[1]))
        else:
            raise ParseError(f"line {lineno}: unknown record '{key}'")

    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported or missing format version: {version}")
    if n is None or m is None:
        raise ParseError("missing n or m record")
    if sorted(disks) != list(range(n)):
        raise ParseError(f"disk indices must be exactly 0..{n - 1}")
    for i, j in bonds:
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise ParseError(f"bond {i} {j} does not name two distinct disks")
    for i, _ in walls:
        if not 0 <= i < n:
            raise ParseError(f"wall bond names unknown disk {i}")

    label = source or provenance or "unknown"
    try:
        p = Packing(n, m, [disks[i] for i in range(n)], Provenance.loaded(label))
    except DegenerateInput as exc:
        raise ValidationError(str(exc))

    report = validate(p)
    if not report.in_bounds or not report.span_ok:
        raise ValidationError("; ".join(report.messages))
    if report.max_overlap > LOAD_OVERLAP_TOL_REL:
        raise ValidationError(
            f"disks {report.offending_pair} overlap by {report.max_overlap:.3e} of the diameter"
        )

    if bonds or walls:
        _check_contacts(p, bonds, walls)
    logger.debug("loaded %d disks (m=%.15g) from %s", n, m, label)
    return p


def _check_contacts(p: Packing, bonds, walls) -> None:
    tol = LOAD_BOND_TOL_REL * p.m
    graph = contact_graph(p)
    for i, j in bonds:
        gap = graph.gap(i, j)
        if abs(gap) >= tol:
            raise ContactMismatch(f"stored bond {i}-{j} has gap {gap / p.m:.3e} m")
    for i, wall in walls:
        gap = wall_gaps(*p.centers[i])[wall]
        if abs(gap) >= tol:
            raise ContactMismatch(f"stored wall bond {i}-{wall} has gap {gap / p.m:.3e} m")
    disk_keys, wall_keys = graph.bond_keys()
    missing = (disk_keys - set(bonds)) | (wall_keys - set(walls))
    if missing:
        raise ContactMismatch(f"bonds missing from the contact section: {sorted(missing, key=str)}")


@dataclass(frozen=True)
class BestKnownEntry:
    n: int
    m_best: float
    source: str


@dataclass
class BestKnownTable:
    entries: dict[int, BestKnownEntry] = field(default_factory=dict)
    path: str = ""

    @classmethod
    def load(cls, path: str) -> "BestKnownTable":
        table = cls(path=path)
        if not os.path.exists(path):
            logger.warning("best-known table %s not found; starting empty", path)
            return table
        with open(path, newline="", encoding="utf-8") as handle:
            for lineno, row in enumerate(csv.DictReader(handle), start=2):
                try:
                    entry = BestKnownEntry(int(row["n"]), float(row["m_best"]), row["source"])
                except (KeyError, TypeError, ValueError):
                    raise ParseError(f"{path}:{lineno}: malformed best-known row")
                table.entries[entry.n] = entry
        return table

    def get(self, n: int) -> BestKnownEntry | None:
        return self.entries.get(n)

    def merge(self, n: int, m_best: float, source: str) -> bool:
        """Record m_best for n unless an equal or larger value is already known"""
        current = self.entries.get(n)
        if current is not None and current.m_best >= m_best:
            return False
        self.entries[n] = BestKnownEntry(n, m_best, source)
        logger.info("best-known m for n=%d is now %.15g (%s)", n, m_best, source)
        return True

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(("n", "m_best", "source"))
        for n in sorted(self.entries):
            entry = self.entries[n]
            writer.writerow((n, fmt14(entry.m_best), entry.source))
        return buffer.getvalue()

    def save(self, path: str | None = None) -> None:
        write_atomic(path or self.path, self.to_csv())


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return fmt14(value)
    return str(value)


def export_series_csv(report) -> str:
    """One row per k under a fixed header; LF line endings"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SERIES_CSV_HEADER)
    for row in report.rows:
        writer.writerow(
            (
                row.k,
                row.n,
                _cell(row.exists),
                _cell(row.m_pattern),
                _cell(row.m_challenger),
                row.challenger_source,
                _cell(row.beaten),
                _cell(float(row.overlap)),
            )
        )
    return buffer.getvalue()


def export_crossover_csv(rows) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CROSSOVER_CSV_HEADER)
    for row in rows:
        writer.writerow((row.k, row.n, fmt14(row.m), fmt14(row.m_alt), row.winner))
    return buffer.getvalue()
