"""Field map over the 1920-bit navigation-data blob of one subframe.

The blob is the page-by-page concatenation of the 112-bit and 16-bit data
portions (15 x 128 bits).  Offsets below are bit positions in the blob;
page p (0-based) occupies bits [128*p, 128*p + 128).

Blob schema:

    6..17      week number (12 bits)
    18..37     time of week, seconds (20 bits)
    38..45     transmitting satellite PRN (8 bits)
    128..271   satellite ECEF position, 3 x signed 48-bit millimetres
    272..303   clock-correction range bias, signed 32-bit millimetres
    1542..1582 ionospheric block at the page-13 position: an 11-bit leading
               coefficient in 0.1 m units plus 30 flag/extension bits

The ionospheric range correction is a deliberately simple linear map
(coefficient * 0.1 m); it stands in for the broadcast ionospheric model,
whose fidelity is out of scope.
"""

from __future__ import annotations

from dataclasses import dataclass

from .gst import Gst
from .pages import (
    EVEN_DATA,
    HKROOT,
    MACK,
    ODD_DATA,
    PageContent,
    SLOTS_PER_SUBFRAME,
    Subframe,
    getbitu,
    seal_page,
    setbitu,
)

NAV_BLOB_BYTES = 240
NAV_BLOB_BITS = 1920
PAGE_DATA_BITS = 128

WN_POS, WN_BITS = 6, 12
TOW_POS, TOW_BITS = 18, 20
PRN_POS, PRN_BITS = 38, 8
EPH_POS, EPH_AXIS_BITS = 128, 48          # x, y, z consecutive
CLOCK_POS, CLOCK_BITS = 272, 32
IONO_A0_POS, IONO_A0_BITS = 12 * PAGE_DATA_BITS + 6, 11
IONO_BLOCK_POS, IONO_BLOCK_BITS = IONO_A0_POS, 41

IONO_A0_UNIT_M = 0.1
MM_PER_M = 1000


@dataclass(frozen=True)
class NavFields:
    wn: int
    tow: int
    prn: int
    sat_ecef_m: tuple                 # (x, y, z) metres
    clock_bias_m: float               # additive range bias
    iono_a0: int                      # raw 11-bit coefficient

    @property
    def gst(self) -> Gst:
        return Gst(self.wn, self.tow)

    @property
    def iono_bias_m(self) -> float:
        return self.iono_a0 * IONO_A0_UNIT_M

    @property
    def range_bias_m(self) -> float:
        return self.clock_bias_m + self.iono_bias_m


def _set_signed(buf: bytearray, pos: int, bits: int, value: int) -> None:
    if not -(1 << (bits - 1)) <= value < (1 << (bits - 1)):
        raise ValueError(f"value {value} does not fit {bits} signed bits")
    setbitu(buf, pos, bits, value & ((1 << bits) - 1))


def _get_signed(buf: bytes, pos: int, bits: int) -> int:
    raw = getbitu(buf, pos, bits)
    if raw >= 1 << (bits - 1):
        raw -= 1 << bits
    return raw


def build_nav_data(wn: int, tow: int, prn: int, sat_ecef_m,
                   clock_bias_m: float = 0.0, iono_a0: int = 0) -> bytes:
    """Assemble a subframe navigation blob from field values.

    Positions and biases are quantized to millimetres on encoding.
    """
    buf = bytearray(NAV_BLOB_BYTES)
    setbitu(buf, WN_POS, WN_BITS, wn)
    setbitu(buf, TOW_POS, TOW_BITS, tow)
    setbitu(buf, PRN_POS, PRN_BITS, prn)
    for axis, coord in enumerate(sat_ecef_m):
        _set_signed(buf, EPH_POS + axis * EPH_AXIS_BITS, EPH_AXIS_BITS,
                    round(coord * MM_PER_M))
    _set_signed(buf, CLOCK_POS, CLOCK_BITS, round(clock_bias_m * MM_PER_M))
    setbitu(buf, IONO_A0_POS, IONO_A0_BITS, iono_a0)
    return bytes(buf)


def parse_nav_data(blob: bytes) -> NavFields:
    if len(blob) != NAV_BLOB_BYTES:
        raise ValueError(f"nav blob must be {NAV_BLOB_BYTES} bytes")
    ecef = tuple(
        _get_signed(blob, EPH_POS + axis * EPH_AXIS_BITS, EPH_AXIS_BITS) / MM_PER_M
        for axis in range(3)
    )
    return NavFields(
        wn=getbitu(blob, WN_POS, WN_BITS),
        tow=getbitu(blob, TOW_POS, TOW_BITS),
        prn=getbitu(blob, PRN_POS, PRN_BITS),
        sat_ecef_m=ecef,
        clock_bias_m=_get_signed(blob, CLOCK_POS, CLOCK_BITS) / MM_PER_M,
        iono_a0=getbitu(blob, IONO_A0_POS, IONO_A0_BITS),
    )


def subframe_nav_data(sf: Subframe) -> bytes:
    """Concatenate the data portions of a complete subframe."""
    parts = []
    for page in sf.pages:
        if page is None:
            raise ValueError("nav data undefined over destroyed pages")
        parts.append(((page.even_data << ODD_DATA[1]) | page.odd_data)
                     .to_bytes(PAGE_DATA_BITS // 8, "big"))
    return b"".join(parts)


def build_subframe(gst: Gst, prn: int, nav_blob: bytes, hkroot: bytes,
                   mack_blob: bytes) -> Subframe:
    """Distribute a nav blob plus OSNMA material over 15 sealed pages."""
    if len(hkroot) != SLOTS_PER_SUBFRAME:
        raise ValueError("hkroot must supply one byte per page")
    if len(mack_blob) != 4 * SLOTS_PER_SUBFRAME:
        raise ValueError("mack blob must supply four bytes per page")
    if len(nav_blob) != NAV_BLOB_BYTES:
        raise ValueError(f"nav blob must be {NAV_BLOB_BYTES} bytes")
    pages = []
    for p in range(SLOTS_PER_SUBFRAME):
        chunk = getbitu(nav_blob, p * PAGE_DATA_BITS, PAGE_DATA_BITS)
        page = PageContent(
            even_data=chunk >> ODD_DATA[1],
            odd_data=chunk & ((1 << ODD_DATA[1]) - 1),
            hkroot=hkroot[p],
            mack=int.from_bytes(mack_blob[4 * p:4 * p + 4], "big"),
        )
        pages.append(seal_page(page))
    return Subframe(gst=gst, prn=prn, pages=tuple(pages))


def replace_nav(sf: Subframe, nav_blob: bytes) -> Subframe:
    """Rebuild a subframe around new nav data, preserving HKROOT and MACK.

    Every page is resealed, so the result passes CRC checks bit for bit.
    """
    from .pages import extract_osnma
    hkroot, mack_blob = extract_osnma(sf)
    return build_subframe(sf.gst, sf.prn, nav_blob, hkroot, mack_blob)


def replace_mack(sf: Subframe, mack_blob: bytes) -> Subframe:
    """Rebuild a subframe around a new 480-bit MACK blob."""
    from .pages import extract_osnma
    hkroot, _ = extract_osnma(sf)
    return build_subframe(sf.gst, sf.prn, subframe_nav_data(sf), hkroot, mack_blob)


def peek_gst_from_page(raw: bytes) -> Gst | None:
    """Read the GST word out of a raw first-of-subframe page.

    The word sits in the first data portion, so the blob offsets shift by
    the two framing bits.  Returns None when the field is not a valid GST.
    """
    wn = getbitu(raw, EVEN_DATA[0] + WN_POS, WN_BITS)
    tow = getbitu(raw, EVEN_DATA[0] + TOW_POS, TOW_BITS)
    try:
        return Gst(wn, tow)
    except ValueError:
        return None
