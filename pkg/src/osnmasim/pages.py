"""Bit-exact codec for 240-bit E1-B I/NAV pages and round-by-round
subframe assembly.

Page layout (all positions are absolute bit offsets, MSB first):

    even half (bits 0..119):
        0       even/odd flag, 0
        1       page type, 0
        2..113  data portion 1 (112 bits)
        114..119 tail (6 bits)
    odd half (bits 120..239):
        120      even/odd flag, 1
        121      page type, 0
        122..137 data portion 2 (16 bits)
        138..145 HKROOT portion (8 bits)
        146..177 MACK portion (32 bits)
        178..201 reserved framing (24 bits)
        202..225 CRC-24Q (24 bits)
        226..239 trailing fill (14 bits)

The CRC protects everything transmitted before it except the even tail:
even bits 0..113 followed by odd bits 0..81 (196 bits).  This region was
calibrated against known-good reference pages; both intact reference pages
self-verify under it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

from .gst import Gst

PAGE_BITS = 240
PAGE_BYTES = 30
PAGE_MS = 2000
SLOTS_PER_SUBFRAME = 15
SUBFRAME_MS = PAGE_MS * SLOTS_PER_SUBFRAME

CRC24Q_POLY = 0x1864CFB

# field geometry: (bit position, bit width)
EVEN_DATA = (2, 112)
EVEN_TAIL = (114, 6)
ODD_DATA = (122, 16)
HKROOT = (138, 8)
MACK = (146, 32)
RESERVED = (178, 24)
CRC = (202, 24)
FILL = (226, 14)

# CRC-protected region: even bits 0..113 then odd bits 120..201
_PROTECTED_EVEN_BITS = 114
_PROTECTED_ODD_BITS = 82
_PROTECTED_BITS = _PROTECTED_EVEN_BITS + _PROTECTED_ODD_BITS


class LengthError(ValueError):
    """Raw page input is not exactly 240 bits."""


class FieldWidthError(ValueError):
    """A page field does not fit its allotted bit width."""


class IncompleteError(ValueError):
    """A subframe with destroyed pages cannot supply OSNMA material."""


def _build_crc_table() -> list:
    table = []
    for byte in range(256):
        crc = byte << 16
        for _ in range(8):
            crc <<= 1
            if crc & 0x1000000:
                crc ^= CRC24Q_POLY
        table.append(crc & 0xFFFFFF)
    return table


_CRC_TABLE = _build_crc_table()


def crc24q(data: bytes, nbits: int | None = None) -> int:
    """CRC-24Q over the leading nbits of data, MSB first.

    nbits may end inside the final byte; remaining bits of that byte are
    ignored.  Zero initial value, no final xor.
    """
    if nbits is None:
        nbits = 8 * len(data)
    nbytes, rem = divmod(nbits, 8)
    crc = 0
    for byte in data[:nbytes]:
        crc = ((crc << 8) & 0xFFFFFF) ^ _CRC_TABLE[(crc >> 16) ^ byte]
    if rem:
        byte = data[nbytes]
        for k in range(rem):
            bit = (byte >> (7 - k)) & 1
            top = (crc >> 23) & 1
            crc = (crc << 1) & 0xFFFFFF
            if top ^ bit:
                crc ^= CRC24Q_POLY & 0xFFFFFF
    return crc


def getbitu(buf: bytes, pos: int, length: int) -> int:
    """Read an unsigned big-endian bit field."""
    val = 0
    for i in range(pos, pos + length):
        val = (val << 1) | ((buf[i >> 3] >> (7 - (i & 7))) & 1)
    return val


def setbitu(buf: bytearray, pos: int, length: int, value: int) -> None:
    """Write an unsigned big-endian bit field in place."""
    for i in range(length):
        p = pos + i
        mask = 0x80 >> (p & 7)
        if (value >> (length - 1 - i)) & 1:
            buf[p >> 3] |= mask
        else:
            buf[p >> 3] &= 0xFF ^ mask


def flip_page_bit(raw: bytes, bit: int) -> bytes:
    """Return the page with one bit inverted."""
    buf = bytearray(raw)
    buf[bit >> 3] ^= 0x80 >> (bit & 7)
    return bytes(buf)


@dataclass(frozen=True)
class PageContent:
    even_data: int          # 112-bit navigation-data portion
    odd_data: int           # 16-bit navigation-data portion
    hkroot: int             # 8-bit root-key transport byte
    mack: int               # 32-bit tag/key transport word
    crc: int = 0            # 24-bit checksum as carried in the page
    reserved: int = 0       # 24 framing bits between MACK and CRC
    fill: int = 0           # 14 trailing framing bits


_WIDTHS = (
    ("even_data", 112),
    ("odd_data", 16),
    ("hkroot", 8),
    ("mack", 32),
    ("crc", 24),
    ("reserved", 24),
    ("fill", 14),
)


def _check_widths(page: PageContent) -> None:
    for name, width in _WIDTHS:
        value = getattr(page, name)
        if not 0 <= value < (1 << width):
            raise FieldWidthError(f"{name} does not fit in {width} bits: {value:#x}")


def encode_page(page: PageContent) -> bytes:
    """Serialize a page to its 240-bit transmission form."""
    _check_widths(page)
    buf = bytearray(PAGE_BYTES)
    # even/odd flags and nominal page type
    setbitu(buf, 0, 2, 0b00)
    setbitu(buf, 120, 2, 0b10)
    setbitu(buf, *EVEN_DATA, page.even_data)
    setbitu(buf, *ODD_DATA, page.odd_data)
    setbitu(buf, *HKROOT, page.hkroot)
    setbitu(buf, *MACK, page.mack)
    setbitu(buf, *RESERVED, page.reserved)
    setbitu(buf, *CRC, page.crc)
    setbitu(buf, *FILL, page.fill)
    return bytes(buf)


def _raw_crc(raw: bytes) -> int:
    region = (getbitu(raw, 0, _PROTECTED_EVEN_BITS) << _PROTECTED_ODD_BITS) \
        | getbitu(raw, 120, _PROTECTED_ODD_BITS)
    # left-align into whole bytes for the table-driven CRC
    padded = region << (8 - _PROTECTED_BITS % 8)
    return crc24q(padded.to_bytes((_PROTECTED_BITS + 7) // 8, "big"), _PROTECTED_BITS)


def compute_crc(page: PageContent) -> int:
    """CRC-24Q over the page's protected region."""
    return _raw_crc(encode_page(page))


def seal_page(page: PageContent) -> PageContent:
    """Return the page with its CRC field recomputed."""
    return replace(page, crc=compute_crc(page))


def reseal_raw(raw: bytes) -> bytes:
    """Recompute and replace the CRC field of a raw 240-bit page."""
    if len(raw) != PAGE_BYTES:
        raise LengthError(f"expected {PAGE_BYTES} bytes, got {len(raw)}")
    buf = bytearray(raw)
    setbitu(buf, *CRC, _raw_crc(raw))
    return bytes(buf)


def decode_page(raw: bytes) -> PageContent | None:
    """Parse a raw page; None marks a destroyed page.

    A page is destroyed when its CRC does not verify or its framing flags
    (even/odd, page type) are inconsistent -- both model bit errors or
    jamming at the message level.
    """
    if len(raw) != PAGE_BYTES:
        raise LengthError(f"expected {PAGE_BYTES} bytes, got {len(raw)}")
    if getbitu(raw, 0, 2) != 0b00 or getbitu(raw, 120, 2) != 0b10:
        return None
    crc_field = getbitu(raw, *CRC)
    if _raw_crc(raw) != crc_field:
        return None
    return PageContent(
        even_data=getbitu(raw, *EVEN_DATA),
        odd_data=getbitu(raw, *ODD_DATA),
        hkroot=getbitu(raw, *HKROOT),
        mack=getbitu(raw, *MACK),
        crc=crc_field,
        reserved=getbitu(raw, *RESERVED),
        fill=getbitu(raw, *FILL),
    )


class Source(Enum):
    AUTHENTIC = "authentic"
    ADVERSARY = "adversary"


@dataclass(frozen=True)
class PageEvent:
    """A page arriving at the receiver antenna: wall time, origin, bits."""

    t_ms: int
    prn: int
    source: Source
    raw: bytes


@dataclass(frozen=True)
class Subframe:
    """Fifteen 2-second page slots stamped with the GST of the round.

    Each slot holds a PageContent or None for a destroyed page.  The
    subframe is produced even when slots are destroyed; OSNMA material is
    only extractable from complete subframes.
    """

    gst: Gst
    prn: int
    pages: tuple

    def __post_init__(self):
        if len(self.pages) != SLOTS_PER_SUBFRAME:
            raise ValueError(f"subframe needs {SLOTS_PER_SUBFRAME} slots")

    @property
    def complete(self) -> bool:
        return all(p is not None for p in self.pages)

    @property
    def destroyed_slots(self) -> tuple:
        return tuple(i for i, p in enumerate(self.pages) if p is None)


def assemble_round(events, gst: Gst, prn: int,
                   window_start_ms: int | None = None) -> Subframe:
    """Assemble one 30-second round of page events into a subframe.

    Slot j covers [start + 2000*j, start + 2000*(j+1)) ms.  A source owns a
    slot only with a single event aligned to the slot start (a full 2 s of
    coverage); when streams overlap, an adversary page that fully covers the
    slot captures it, any partial overlap destroys the slot.  Empty slots
    are destroyed.
    """
    w0 = gst.total_millis() if window_start_ms is None else window_start_ms
    relevant = [e for e in events if e.prn == prn]
    slots = []
    for j in range(SLOTS_PER_SUBFRAME):
        s0 = w0 + PAGE_MS * j
        s1 = s0 + PAGE_MS
        adv = [e for e in relevant
               if e.source is Source.ADVERSARY and e.t_ms < s1 and e.t_ms + PAGE_MS > s0]
        auth = [e for e in relevant
                if e.source is Source.AUTHENTIC and e.t_ms < s1 and e.t_ms + PAGE_MS > s0]
        page = None
        if adv:
            if len(adv) == 1 and adv[0].t_ms == s0:
                page = decode_page(adv[0].raw)
        elif auth:
            if len(auth) == 1 and auth[0].t_ms == s0:
                page = decode_page(auth[0].raw)
        slots.append(page)
    return Subframe(gst=gst, prn=prn, pages=tuple(slots))


def extract_osnma(sf: Subframe) -> tuple:
    """Concatenate the per-page HKROOT and MACK portions of a subframe.

    Returns (hkroot, mack) as 15 and 60 bytes.  Broken rounds carry no
    usable OSNMA material and raise IncompleteError.
    """
    if not sf.complete:
        raise IncompleteError(f"destroyed slots: {sf.destroyed_slots}")
    hkroot = bytes(p.hkroot for p in sf.pages)
    mack = b"".join(p.mack.to_bytes(4, "big") for p in sf.pages)
    return hkroot, mack
