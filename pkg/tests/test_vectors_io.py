import csv
import json

import pytest

from osnmasim.vectors import CrcError, SchemaError, TestVectorSet

# an intact capture page, CRC-consistent, usable as a drop-in page 13
REFERENCE_PAGE = "054bc11429a07f9fc009c6875d2a80aaaab21d69f9a18e29635cf8ec0100"


def test_save_load_round_trip(small_bundle, tmp_path):
    path = tmp_path / "vectors.csv"
    small_bundle.vectors.save(path)
    loaded = TestVectorSet.load(path)
    assert loaded.rows == small_bundle.vectors.rows


def test_subframes_round_trip(small_bundle):
    rebuilt = TestVectorSet.from_subframes(small_bundle.vectors.subframes())
    assert sorted(rebuilt.rows) == sorted(small_bundle.vectors.rows)


def test_truncated_file_schema_error(small_bundle, tmp_path):
    path = tmp_path / "vectors.csv"
    small_bundle.vectors.save(path)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:8]) + "\n")
    with pytest.raises(SchemaError):
        TestVectorSet.load(path)


def test_bad_hex_schema_error(small_bundle, tmp_path):
    path = tmp_path / "vectors.csv"
    small_bundle.vectors.save(path)
    text = path.read_text().splitlines()
    wn, tow, prn, idx, page_hex = text[1].split(",")
    text[1] = ",".join([wn, tow, prn, idx, "zz" + page_hex[2:]])
    path.write_text("\n".join(text) + "\n")
    with pytest.raises(SchemaError) as err:
        TestVectorSet.load(path)
    assert err.value.row == 2
    assert err.value.column == "page_hex"


def test_corrupted_page_crc_error(small_bundle, tmp_path):
    path = tmp_path / "vectors.csv"
    small_bundle.vectors.save(path)
    text = path.read_text().splitlines()
    wn, tow, prn, idx, page_hex = text[3].split(",")
    flipped = f"{int(page_hex[10], 16) ^ 8:x}"
    text[3] = ",".join([wn, tow, prn, idx,
                        page_hex[:10] + flipped + page_hex[11:]])
    path.write_text("\n".join(text) + "\n")
    with pytest.raises(CrcError) as err:
        TestVectorSet.load(path)
    assert (int(wn), int(tow), int(prn), int(idx)) in err.value.pages


def test_reference_page_loads_crc_valid(small_bundle, tmp_path):
    """A vector file embedding the intact reference page validates."""
    rows = [r for r in small_bundle.vectors.rows if r[2] == 1][:15]
    rows = [r if r[3] != 13 else (r[0], r[1], r[2], 13, REFERENCE_PAGE)
            for r in rows]
    path = tmp_path / "embed.csv"
    TestVectorSet(rows=rows).save(path)
    loaded = TestVectorSet.load(path)
    assert loaded.rows[12][4] == REFERENCE_PAGE


def test_missing_column_schema_error(tmp_path):
    path = tmp_path / "foreign.csv"
    path.write_text("week,second,sat,idx,hex\n")
    with pytest.raises(SchemaError):
        TestVectorSet.load(path)


def test_foreign_format_adapter(small_bundle, tmp_path):
    """Column renames and a zero-based page index map through the
    documented adapter file."""
    native = tmp_path / "native.csv"
    small_bundle.vectors.save(native)
    foreign = tmp_path / "foreign.csv"
    with open(native) as src, open(foreign, "w", newline="") as dst:
        reader = csv.reader(src)
        writer = csv.writer(dst)
        next(reader)
        writer.writerow(["WEEK", "TOW_S", "SVID", "PAGE0", "HEXDATA"])
        for wn, tow, prn, idx, page_hex in reader:
            writer.writerow([wn, tow, prn, int(idx) - 1, page_hex])
    mapping = tmp_path / "mapping.json"
    mapping.write_text(json.dumps({
        "columns": {"wn": "WEEK", "tow": "TOW_S", "prn": "SVID",
                    "page_index": "PAGE0", "page_hex": "HEXDATA"},
        "page_index_base": 0,
    }))
    loaded = TestVectorSet.load(foreign, mapping_path=mapping)
    assert loaded.rows == small_bundle.vectors.rows


def test_duplicate_page_rejected(small_bundle, tmp_path):
    rows = list(small_bundle.vectors.rows)
    rows.append(rows[0])
    with pytest.raises(SchemaError):
        TestVectorSet(rows=rows).validate()
