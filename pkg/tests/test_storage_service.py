# tests/test_storage_service.py
import os

import pytest

from services.analysis_service import ChallengerSource, oblong_crossover, series_threshold
from services.errors import ContactMismatch, ParseError, ValidationError
from services.geometry_service import SeriesId
from services.pattern_service import build_pattern
from services.storage_service import (
    CROSSOVER_CSV_HEADER,
    SERIES_CSV_HEADER,
    BestKnownEntry,
    BestKnownTable,
    export_crossover_csv,
    export_series_csv,
    fmt14,
    load_packing,
    save_packing,
    write_atomic,
)

TWO_DISKS = """version 1
n 2
m 1.4142135623731
disk 0 0.0 0.0
disk 1 1.0 1.0
"""


def test_fmt14_keeps_fourteen_significant_digits():
    assert fmt14(1.0 / 6.0) == "0.16666666666667"
    assert fmt14(1.0) == "1.0000000000000"
    assert fmt14(2.0 ** 0.5) == "1.4142135623731"


def test_save_packing_layout():
    text = save_packing(build_pattern(SeriesId.SQUARE, 3))
    lines = text.splitlines()
    assert lines[0].startswith("#")
    assert lines[1:4] == ["version 1", "n 9", "m 0.50000000000000"]
    assert lines[4] == "provenance pattern square k=3 variant=-"
    assert lines[5].startswith("disk 0 ")
    assert sum(line.startswith("disk ") for line in lines) == 9
    assert text.endswith("\n")
    assert "\r" not in text


def test_save_packing_with_contacts():
    text = save_packing(build_pattern(SeriesId.SQUARE, 3), with_contacts=True)
    lines = text.splitlines()
    assert sum(line.startswith("bond ") for line in lines) == 12
    assert sum(line.startswith("wall ") for line in lines) == 12


def test_save_is_deterministic():
    p = build_pattern(SeriesId.OBLONG, 4)
    assert save_packing(p, True) == save_packing(p, True)


def test_load_saved_pattern():
    original = build_pattern(SeriesId.SQUARE_MINUS_1, 5)
    loaded = load_packing(save_packing(original, with_contacts=True), source="sm1.txt")
    assert loaded.n == original.n
    assert loaded.m == pytest.approx(original.m, rel=1e-13)
    assert loaded.provenance.render() == "loaded sm1.txt"


def test_load_minimal_file_and_bytes():
    p = load_packing(TWO_DISKS.encode())
    assert p.n == 2
    assert p.m == pytest.approx(2.0 ** 0.5)


@pytest.mark.parametrize(
    "text",
    [
        TWO_DISKS.replace("version 1\n", ""),
        TWO_DISKS + "circle 0 0.5 0.5\n",
        TWO_DISKS.replace("disk 1 1.0 1.0", "disk 0 1.0 1.0"),
        TWO_DISKS.replace("disk 1 1.0 1.0", "disk 1 1.0"),
        TWO_DISKS + "wall 0 ceiling\n",
        TWO_DISKS + "bond 0 5\n",
        TWO_DISKS.replace("m 1.4142135623731", "m wide"),
    ],
)
def test_load_rejects_malformed_files(text):
    with pytest.raises(ParseError):
        load_packing(text)


def test_load_rejects_overlap():
    with pytest.raises(ValidationError):
        load_packing(TWO_DISKS.replace("m 1.4142135623731", "m 1.5"))


def test_load_rejects_unnormalized_centers():
    with pytest.raises(ValidationError):
        load_packing(TWO_DISKS.replace("disk 1 1.0 1.0", "disk 1 0.5 0.5").replace("m 1.4142135623731", "m 0.5"))


def test_load_rejects_wrong_stored_bond():
    text = save_packing(build_pattern(SeriesId.SQUARE, 3), with_contacts=True) + "bond 0 4\n"
    with pytest.raises(ContactMismatch):
        load_packing(text)


def test_load_rejects_incomplete_contact_section():
    text = save_packing(build_pattern(SeriesId.SQUARE, 3), with_contacts=True)
    lines = text.splitlines()
    dropped = next(i for i, line in enumerate(lines) if line.startswith("bond "))
    del lines[dropped]
    with pytest.raises(ContactMismatch):
        load_packing("\n".join(lines) + "\n")


def test_best_known_table_load_and_merge(table_path):
    table = BestKnownTable.load(table_path)
    assert table.get(5).m_best == pytest.approx(0.70710678118655)
    assert table.get(99) is None
    assert not table.merge(5, 0.7, "worse")
    assert table.merge(11, 0.39820, "simulated")
    table.save()

    reloaded = BestKnownTable.load(table_path)
    assert reloaded.get(11) == BestKnownEntry(11, 0.39820, "simulated")
    assert reloaded.to_csv().splitlines()[0] == "n,m_best,source"


def test_missing_table_starts_empty(tmp_path):
    table = BestKnownTable.load(str(tmp_path / "absent.csv"))
    assert table.entries == {}


def test_write_atomic_replaces_file(tmp_path):
    path = tmp_path / "out" / "report.csv"
    write_atomic(str(path), "a\n")
    write_atomic(str(path), "b\n")
    assert path.read_text() == "b\n"
    assert os.listdir(path.parent) == ["report.csv"]


def test_series_csv():
    table = BestKnownTable(
        entries={
            n: BestKnownEntry(n, m, "fixture")
            for n, m in {4: 1.0, 9: 0.5, 16: 1 / 3, 25: 0.25, 36: 0.2, 49: 0.1675, 64: 0.145}.items()
        }
    )
    report = series_threshold(SeriesId.SQUARE, range(2, 9), ChallengerSource(table=table))
    lines = export_series_csv(report).split("\n")
    assert lines[0] == ",".join(SERIES_CSV_HEADER)
    assert lines[-1] == ""
    row7 = lines[6].split(",")
    assert row7[:3] == ["7", "49", "true"]
    assert row7[3] == "0.16666666666667"
    assert row7[6] == "true"
    assert lines[1].split(",")[6] == "false"


def test_series_csv_for_empty_range():
    report = series_threshold(SeriesId.SQUARE, [], ChallengerSource())
    assert export_series_csv(report) == ",".join(SERIES_CSV_HEADER) + "\n"


def test_crossover_csv():
    text = export_crossover_csv(oblong_crossover(range(4, 9)))
    lines = text.splitlines()
    assert lines[0] == ",".join(CROSSOVER_CSV_HEADER)
    assert lines[-1].split(",")[0] == "8"
    assert lines[-1].endswith(",alt")
    assert lines[1].endswith(",main")
