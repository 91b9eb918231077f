"""Reading, validating and filtering matched-trade record streams.

The on-disk format is a headed CSV::

    seq,timestamp_ms,commodity,buyer,seller,volume,price

Rows are validated one at a time, so parsing a file never holds more than
the current row (plus whatever the caller keeps).
"""
from __future__ import annotations

import io
import json
import os
from dataclasses import asdict, dataclass, field
from typing import IO, Iterable, Iterator, Sequence

import numpy as np

HEADER = ("seq", "timestamp_ms", "commodity", "buyer", "seller", "volume", "price")

# exchange-classification groups used by the bundled filters
COMMODITY_GROUPS = {
    "metal": frozenset({"cu", "al", "zn", "au"}),
    "rubber": frozenset({"ru"}),
    "oil": frozenset({"fu"}),
}


class IngestError(Exception):
    """The source could not be read at all (missing file, bad header)."""


@dataclass(frozen=True, slots=True)
class TradeRecord:
    seq: int
    timestamp: int
    commodity: str
    buyer: str
    seller: str
    volume: int
    price: int


@dataclass
class IngestReport:
    accepted: int = 0
    malformed: int = 0
    self_match_dropped: int = 0

    @property
    def total(self) -> int:
        return self.accepted + self.malformed + self.self_match_dropped

    def to_json(self) -> str:
        return json.dumps(asdict(self))


@dataclass(frozen=True)
class CommodityFilter:
    mode: str = "all"
    symbols: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.mode not in ("all", "custom", *COMMODITY_GROUPS):
            raise ValueError(f"unknown filter mode {self.mode!r}")
        if self.mode == "custom" and not self.symbols:
            raise ValueError("custom filter needs at least one symbol")
        if self.mode in COMMODITY_GROUPS and not self.symbols:
            object.__setattr__(self, "symbols", COMMODITY_GROUPS[self.mode])
        object.__setattr__(self, "symbols", frozenset(self.symbols))

    @classmethod
    def parse(cls, text: str) -> "CommodityFilter":
        """``all``, a group name, or a comma list of symbols (custom)."""
        text = text.strip()
        if text in ("all", *COMMODITY_GROUPS):
            return cls(text)
        return cls("custom", frozenset(s.strip() for s in text.split(",") if s.strip()))

    def accepts(self, commodity: str) -> bool:
        return self.mode == "all" or commodity in self.symbols


def _open_text(source) -> IO[str]:
    if isinstance(source, (str, os.PathLike)):
        try:
            return open(source, "r", encoding="utf-8", newline="")
        except OSError as exc:
            raise IngestError(f"cannot open {source}: {exc}") from exc
    if isinstance(source, (io.RawIOBase, io.BufferedIOBase)) or "b" in getattr(source, "mode", ""):
        return io.TextIOWrapper(source, encoding="utf-8", newline="")
    return source


def _parse_row(line: str):
    parts = line.rstrip("\r\n").split(",")
    if len(parts) != 7:
        return None
    seq_s, ts_s, commodity, buyer, seller, vol_s, px_s = parts
    if not (commodity and buyer and seller):
        return None
    try:
        seq, ts, volume, price = int(seq_s), int(ts_s), int(vol_s), int(px_s)
    except ValueError:
        return None
    if volume < 1 or price < 1:
        return None
    return seq, ts, commodity, buyer, seller, volume, price


def _rows(source, report: IngestReport):
    """Validated ``(ts, commodity, buyer, seller, volume, price)`` tuples."""
    fh = _open_text(source)
    try:
        try:
            header = fh.readline()
        except (OSError, UnicodeDecodeError) as exc:
            raise IngestError(f"unreadable source: {exc}") from exc
        if tuple(h.strip() for h in header.rstrip("\r\n").split(",")) != HEADER:
            raise IngestError(f"bad header: {header.strip()!r}")
        lines = iter(fh)
        while True:
            try:
                line = next(lines)
            except StopIteration:
                break
            except (OSError, UnicodeDecodeError) as exc:
                raise IngestError(f"unreadable source: {exc}") from exc
            if not line.strip():
                continue
            row = _parse_row(line)
            if row is None:
                report.malformed += 1
                continue
            if row[3] == row[4]:
                report.self_match_dropped += 1
                continue
            report.accepted += 1
            yield row[1:]
    finally:
        if isinstance(source, (str, os.PathLike)):
            fh.close()
        elif isinstance(fh, io.TextIOWrapper) and fh is not source:
            fh.detach()


def iter_records(source, report: IngestReport | None = None) -> Iterator[TradeRecord]:
    """Stream validated records from ``source`` (path, text or byte stream).

    Records get ``seq`` 0..n-1 in file order regardless of the file's own
    seq column. Malformed rows and self-matches are counted in ``report``
    and skipped.
    """
    if report is None:
        report = IngestReport()
    for seq, row in enumerate(_rows(source, report)):
        yield TradeRecord(seq, *row)


def parse_records(source) -> tuple[list[TradeRecord], IngestReport]:
    report = IngestReport()
    records = list(iter_records(source, report))
    return records, report


def filter_records(records: Iterable[TradeRecord], f: CommodityFilter) -> list[TradeRecord]:
    if f.mode == "all":
        return list(records)
    return [r for r in records if r.commodity in f.symbols]


def write_records(records: Iterable[TradeRecord], dest) -> int:
    """Write records in the ingest CSV format; returns the row count."""
    close = False
    if isinstance(dest, (str, os.PathLike)):
        dest = open(dest, "w", encoding="utf-8", newline="")
        close = True
    try:
        dest.write(",".join(HEADER) + "\n")
        n = 0
        for r in records:
            dest.write(f"{r.seq},{r.timestamp},{r.commodity},{r.buyer},{r.seller},{r.volume},{r.price}\n")
            n += 1
        return n
    finally:
        if close:
            dest.close()


@dataclass
class RecordTable:
    """Columnar view of a record stream for bulk network construction.

    ``buyer`` and ``seller`` are integer participant codes; ``names[code]``
    is the participant ID string. With ``names`` None the code itself,
    rendered as a decimal string, is the ID.
    """

    timestamp: np.ndarray
    buyer: np.ndarray
    seller: np.ndarray
    names: np.ndarray | None = None
    commodity: np.ndarray | None = None
    volume: np.ndarray | None = None
    price: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.buyer)

    def __getitem__(self, key) -> "RecordTable":
        def take(a):
            return None if a is None else a[key]
        return RecordTable(take(self.timestamp), take(self.buyer), take(self.seller), self.names,
                           take(self.commodity), take(self.volume), take(self.price))

    def name_of(self, codes) -> np.ndarray:
        codes = np.asarray(codes)
        if self.names is None:
            return codes.astype(str).astype(object)
        return np.asarray(self.names, dtype=object)[codes]

    @classmethod
    def from_records(cls, records: Sequence[TradeRecord]) -> "RecordTable":
        n = len(records)
        ids = np.array([r.buyer for r in records] + [r.seller for r in records], dtype=object)
        if n:
            names, codes = np.unique(ids.astype(str), return_inverse=True)
            codes = codes.ravel().astype(np.int64)
        else:
            names, codes = np.empty(0, dtype=str), np.empty(0, dtype=np.int64)
        return cls(
            timestamp=np.fromiter((r.timestamp for r in records), np.int64, n),
            buyer=codes[:n],
            seller=codes[n:],
            names=names.astype(object),
            commodity=np.array([r.commodity for r in records], dtype=object),
            volume=np.fromiter((r.volume for r in records), np.int64, n),
            price=np.fromiter((r.price for r in records), np.int64, n),
        )

    def records(self) -> Iterator[TradeRecord]:
        buyers, sellers = self.name_of(self.buyer), self.name_of(self.seller)
        for i in range(len(self)):
            yield TradeRecord(
                i, int(self.timestamp[i]),
                "" if self.commodity is None else str(self.commodity[i]),
                buyers[i], sellers[i],
                1 if self.volume is None else int(self.volume[i]),
                1 if self.price is None else int(self.price[i]),
            )


def as_table(records) -> RecordTable:
    if isinstance(records, RecordTable):
        return records
    return RecordTable.from_records(list(records))


def read_table(source, filt: CommodityFilter | None = None,
               report: IngestReport | None = None) -> RecordTable:
    """Columnar load of a record file, skipping per-record objects.

    Participant codes follow first appearance (buyer before seller), and
    rows rejected by ``filt`` are dropped after validation, so the report
    counts match :func:`parse_records` on the same source.
    """
    if report is None:
        report = IngestReport()
    codes: dict[str, int] = {}
    ts, com, buy, sell, vol, px = [], [], [], [], [], []
    for t, c, b, s, v, p in _rows(source, report):
        if filt is not None and not filt.accepts(c):
            continue
        ts.append(t)
        com.append(c)
        buy.append(codes.setdefault(b, len(codes)))
        sell.append(codes.setdefault(s, len(codes)))
        vol.append(v)
        px.append(p)
    names = np.empty(len(codes), dtype=object)
    names[:] = list(codes)
    return RecordTable(
        timestamp=np.array(ts, dtype=np.int64),
        buyer=np.array(buy, dtype=np.int64),
        seller=np.array(sell, dtype=np.int64),
        names=names,
        commodity=np.array(com, dtype=object),
        volume=np.array(vol, dtype=np.int64),
        price=np.array(px, dtype=np.int64),
    )


def write_table(table: RecordTable, dest) -> int:
    """Write a table in the ingest CSV format; seq is the row position."""
    n = len(table)
    buyers, sellers = table.name_of(table.buyer), table.name_of(table.seller)
    com = [""] * n if table.commodity is None else table.commodity
    vol = np.ones(n, np.int64) if table.volume is None else table.volume
    px = np.ones(n, np.int64) if table.price is None else table.price
    rows = zip(range(n), table.timestamp.tolist(), com, buyers, sellers, vol.tolist(), px.tolist())
    close = isinstance(dest, (str, os.PathLike))
    fh = open(dest, "w", encoding="utf-8", newline="") if close else dest
    try:
        fh.write(",".join(HEADER) + "\n")
        fh.writelines(f"{a},{b},{c},{d},{e},{f},{g}\n" for a, b, c, d, e, f, g in rows)
    finally:
        if close:
            fh.close()
    return n
