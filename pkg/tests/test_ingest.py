import io

import numpy as np
import pytest

from ftnet.ingest import (
    HEADER, CommodityFilter, IngestError, IngestReport, RecordTable, TradeRecord,
    filter_records, iter_records, parse_records, read_table, write_records, write_table,
)

HEAD = ",".join(HEADER) + "\n"


def csv_text(*rows):
    return HEAD + "".join(r + "\n" for r in rows)


def test_tiny_fixture_parses():
    recs, rep = parse_records(io.StringIO(csv_text(
        "0,1000,cu,A,B,1,500", "1,1001,cu,B,C,2,501")))
    assert rep.accepted == 2 and rep.malformed == 0
    assert recs[0] == TradeRecord(0, 1000, "cu", "A", "B", 1, 500)
    assert [r.seq for r in recs] == [0, 1]


def test_self_match_and_malformed_counted():
    src = csv_text(
        "0,1,cu,A,A,1,5",      # self-match
        "1,1,cu,A,B,0,5",      # zero volume
        "2,1,cu,A,B,1",        # short row
        "3,x,cu,A,B,1,5",      # bad timestamp
        "4,1,cu,,B,1,5",       # empty buyer
        "5,1,cu,A,B,1,5",
    )
    recs, rep = parse_records(io.StringIO(src))
    assert len(recs) == 1
    assert (rep.accepted, rep.malformed, rep.self_match_dropped) == (1, 4, 1)
    assert rep.total == 6
    assert recs[0].seq == 0


def test_bad_header_is_fatal():
    with pytest.raises(IngestError):
        list(iter_records(io.StringIO("a,b,c\n0,1,cu,A,B,1,5\n")))


def test_missing_file_is_fatal(tmp_path):
    with pytest.raises(IngestError):
        parse_records(tmp_path / "absent.csv")


def test_byte_stream_left_open():
    raw = io.BytesIO(csv_text("0,1,cu,A,B,1,5").encode())
    recs, _ = parse_records(raw)
    assert len(recs) == 1
    assert not raw.closed


def test_invalid_utf8_is_fatal():
    raw = io.BytesIO(HEAD.encode() + b"0,1,cu,\xff\xfe,B,1,5\n")
    with pytest.raises(IngestError):
        parse_records(raw)


def test_blank_lines_skipped():
    recs, rep = parse_records(io.StringIO(csv_text("", "0,1,cu,A,B,1,5", "")))
    assert len(recs) == 1 and rep.malformed == 0


@pytest.mark.parametrize("text,symbols", [
    ("metal", {"cu", "al", "zn", "au"}),
    ("rubber", {"ru"}),
    ("oil", {"fu"}),
    ("cu, ru", {"cu", "ru"}),
])
def test_filter_parse(text, symbols):
    assert CommodityFilter.parse(text).symbols == symbols


def test_filter_modes():
    recs = [TradeRecord(i, i, c, "A", "B", 1, 1) for i, c in enumerate(["cu", "ru", "fu", "al"])]
    assert [r.commodity for r in filter_records(recs, CommodityFilter("metal"))] == ["cu", "al"]
    assert len(filter_records(recs, CommodityFilter())) == 4
    assert filter_records(recs, CommodityFilter("custom", {"xx"})) == []
    with pytest.raises(ValueError):
        CommodityFilter("custom")
    with pytest.raises(ValueError):
        CommodityFilter("gold")


def test_write_then_read_round_trip(tmp_path):
    recs = [TradeRecord(i, 10 * i, "cu", f"P{i}", f"Q{i % 3}", 1 + i % 2, 100 + i) for i in range(20)]
    path = tmp_path / "t.csv"
    assert write_records(recs, path) == 20
    back, rep = parse_records(path)
    assert back == recs and rep.accepted == 20


def test_table_matches_record_parse(tmp_path):
    src = csv_text("0,5,cu,A,B,1,5", "1,6,ru,C,A,2,6", "2,7,cu,B,B,1,5", "3,8,cu,D,C,1,7")
    rep_a, rep_b = IngestReport(), IngestReport()
    recs = list(iter_records(io.StringIO(src), rep_a))
    tab = read_table(io.StringIO(src), report=rep_b)
    assert rep_a == rep_b
    assert list(tab.records()) == recs
    # codes follow first appearance, buyer before seller
    assert list(tab.names) == ["A", "B", "C", "D"]


def test_table_filter():
    src = csv_text("0,5,cu,A,B,1,5", "1,6,ru,C,A,2,6")
    tab = read_table(io.StringIO(src), CommodityFilter("rubber"))
    assert len(tab) == 1 and set(tab.name_of(tab.buyer)) == {"C"}


def test_write_table_round_trip():
    tab = RecordTable(np.array([1, 2, 3]), np.array([0, 1, 2]), np.array([1, 2, 0]),
                      np.array(["x", "y", "z"], dtype=object),
                      np.array(["cu"] * 3, dtype=object), np.array([1, 1, 2]), np.array([9, 9, 9]))
    buf = io.StringIO()
    assert write_table(tab, buf) == 3
    buf.seek(0)
    recs, _ = parse_records(buf)
    assert recs == list(tab.records())


def test_from_records_slice_keeps_names():
    recs = [TradeRecord(i, i, "cu", f"a{i}", f"b{i}", 1, 1) for i in range(5)]
    tab = RecordTable.from_records(recs)
    part = tab[2:4]
    assert list(part.records())[0].buyer == "a2"
    assert len(part) == 2
