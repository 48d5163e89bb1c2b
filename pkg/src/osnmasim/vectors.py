"""Test-vector file handling.

The native schema is a comma-separated file with a header row
``wn,tow,prn,page_index,page_hex``: one row per page, fifteen rows per
(wn, tow, prn) group, pages as 30 lowercase hex bytes.  Files coming from
other tools are adapted through a small JSON mapping that renames columns
and fixes the page-index base.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

from .gst import Gst
from .pages import PAGE_BYTES, SLOTS_PER_SUBFRAME, Subframe, decode_page

HEADER = ["wn", "tow", "prn", "page_index", "page_hex"]


class SchemaError(ValueError):
    """Malformed vector file; carries the offending row and column."""

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        where = f" (row {row}" + (f", column {column!r})" if column else ")") \
            if row is not None else ""
        super().__init__(f"{message}{where}")


class CrcError(ValueError):
    """Pages whose checksum does not verify."""

    def __init__(self, pages):
        self.pages = pages
        super().__init__(f"{len(pages)} page(s) fail CRC: {pages[:5]}")


@dataclass
class TestVectorSet:
    """Ordered page rows, grouped 15 to a subframe."""

    __test__ = False            # "Test" prefix is domain naming, not pytest's

    rows: list = field(default_factory=list)   # (wn, tow, prn, page_index, hex)

    def add_subframe(self, sf: Subframe) -> None:
        from .pages import encode_page
        for idx, page in enumerate(sf.pages, start=1):
            if page is None:
                raise ValueError("vector sets store intact pages only")
            self.rows.append((sf.gst.wn, sf.gst.tow, sf.prn, idx,
                              encode_page(page).hex()))

    def save(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(HEADER)
            writer.writerows(self.rows)

    @classmethod
    def load(cls, path, mapping_path=None) -> "TestVectorSet":
        columns = {name: name for name in HEADER}
        index_base = 1
        if mapping_path is not None:
            with open(mapping_path) as fh:
                mapping = json.load(fh)
            columns.update(mapping.get("columns", {}))
            index_base = mapping.get("page_index_base", 1)
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise SchemaError("empty file")
            missing = [columns[c] for c in HEADER
                       if columns[c] not in reader.fieldnames]
            if missing:
                raise SchemaError(f"missing columns {missing}")
            rows = []
            for lineno, row in enumerate(reader, start=2):
                rows.append(cls._parse_row(row, columns, index_base, lineno))
        vectors = cls(rows=rows)
        vectors.validate()
        return vectors

    @staticmethod
    def _parse_row(row, columns, index_base, lineno):
        out = []
        for name in ("wn", "tow", "prn", "page_index"):
            raw = row.get(columns[name])
            if raw is None:
                raise SchemaError("missing value", row=lineno, column=name)
            try:
                out.append(int(raw))
            except ValueError:
                raise SchemaError(f"not an integer: {raw!r}",
                                  row=lineno, column=name) from None
        out[3] = out[3] - index_base + 1
        page_hex = (row.get(columns["page_hex"]) or "").strip().lower()
        if len(page_hex) != 2 * PAGE_BYTES:
            raise SchemaError(f"page_hex must be {2 * PAGE_BYTES} hex chars",
                              row=lineno, column="page_hex")
        try:
            bytes.fromhex(page_hex)
        except ValueError:
            raise SchemaError("page_hex is not hex",
                              row=lineno, column="page_hex") from None
        return (*out, page_hex)

    def validate(self) -> None:
        """Schema and CRC validation over all rows."""
        groups: dict = {}
        for wn, tow, prn, idx, page_hex in self.rows:
            if not 1 <= idx <= SLOTS_PER_SUBFRAME:
                raise SchemaError(f"page_index {idx} out of range")
            key = (wn, tow, prn)
            seen = groups.setdefault(key, set())
            if idx in seen:
                raise SchemaError(f"duplicate page {idx} in {key}")
            seen.add(idx)
        bad = [key for key, seen in groups.items()
               if len(seen) != SLOTS_PER_SUBFRAME]
        if bad:
            raise SchemaError(f"incomplete subframes: {sorted(bad)[:5]}")
        failed = [(wn, tow, prn, idx)
                  for wn, tow, prn, idx, page_hex in self.rows
                  if decode_page(bytes.fromhex(page_hex)) is None]
        if failed:
            raise CrcError(failed)

    def subframes(self) -> dict:
        """Decode into per-satellite subframe lists ordered by GST."""
        grouped: dict = {}
        for wn, tow, prn, idx, page_hex in self.rows:
            grouped.setdefault((prn, Gst(wn, tow)), {})[idx] = \
                decode_page(bytes.fromhex(page_hex))
        out: dict = {}
        for (prn, gst) in sorted(grouped, key=lambda k: (k[0], k[1].total_seconds())):
            pages = grouped[(prn, gst)]
            sf = Subframe(gst=gst, prn=prn,
                          pages=tuple(pages[i] for i in range(1, 16)))
            out.setdefault(prn, []).append(sf)
        return out

    @classmethod
    def from_subframes(cls, subframes_by_prn: dict) -> "TestVectorSet":
        vectors = cls()
        for prn in sorted(subframes_by_prn):
            for sf in subframes_by_prn[prn]:
                vectors.add_subframe(sf)
        return vectors
