"""Authentication-message assembly, tag computation and truncation, and
packing of tags plus the disclosed chain key into the 480-bit MACK blob.

Tags are truncated HMAC-SHA-256 values over a message that binds the
navigation-data segment to the transmitting satellite, the authenticating
satellite and the GST of the subframe carrying the tag.  The blob packs
tags from bit 0, 40 bits each, crossing the 32-bit page-portion boundary:
a tag's first 32 bits land in one page's MACK portion and its last 8 bits
in the next page's.
"""

from __future__ import annotations

import hashlib
import hmac

from .gst import Gst
from .tesla import TeslaKey

MACK_BITS = 480
MACK_BYTES = MACK_BITS // 8
KEY_BITS = 128
TAG_REGION_BITS = MACK_BITS - KEY_BITS      # 352
TAG_BITS_DEFAULT = 40
MAX_TAGS = TAG_REGION_BITS // TAG_BITS_DEFAULT


class CapacityError(ValueError):
    """Tags exceed the 352-bit region in front of the chain key."""


def build_auth_message(prn_d: int, prn_a: int, gst_sf: Gst, seg_index: int,
                       segment: bytes) -> bytes:
    """Concatenate tag-message fields in transmission order.

    Layout: prn_d(8) | prn_a(8) | wn(12) tow(20) | seg_index(8) | segment.
    The header is 56 bits, so the result is whole bytes whenever the
    segment is.
    """
    if not segment:
        raise ValueError("segment must be non-empty")
    head = (prn_d & 0xFF) << 48 | (prn_a & 0xFF) << 40 \
        | (gst_sf.wn & 0xFFF) << 28 | (gst_sf.tow & 0xFFFFF) << 8 \
        | (seg_index & 0xFF)
    return head.to_bytes(7, "big") + segment


def compute_tag(key: bytes, message: bytes, tag_bits: int = TAG_BITS_DEFAULT) -> bytes:
    """HMAC-SHA-256 truncated to the leading tag_bits."""
    if tag_bits % 8 or not 0 < tag_bits <= 256:
        raise ValueError("tag length must be a multiple of 8 bits, <= 256")
    return hmac.new(key, message, hashlib.sha256).digest()[:tag_bits // 8]


def pack_mack(tags, key: bytes, tag_bits: int = TAG_BITS_DEFAULT) -> bytes:
    """Pack tags and the disclosed key into a 480-bit blob.

    Tags occupy consecutive bit positions from bit 0; the unused remainder
    of the tag region is zero fill; the key occupies the final 128 bits.
    """
    total_tag_bits = tag_bits * len(tags)
    if total_tag_bits > TAG_REGION_BITS:
        raise CapacityError(
            f"{len(tags)} tags of {tag_bits} bits exceed {TAG_REGION_BITS} bits")
    if len(key) * 8 != KEY_BITS:
        raise ValueError("chain key must be 128 bits")
    region = 0
    for tag in tags:
        if len(tag) * 8 != tag_bits:
            raise ValueError("tag width does not match tag_bits")
        region = (region << tag_bits) | int.from_bytes(tag, "big")
    region <<= TAG_REGION_BITS - total_tag_bits
    blob = (region << KEY_BITS) | int.from_bytes(key, "big")
    return blob.to_bytes(MACK_BYTES, "big")


def unpack_mack(blob: bytes, n_tags: int,
                tag_bits: int = TAG_BITS_DEFAULT) -> tuple:
    """Inverse of pack_mack for a known tag geometry."""
    if len(blob) != MACK_BYTES:
        raise ValueError(f"MACK blob must be {MACK_BYTES} bytes")
    if n_tags * tag_bits > TAG_REGION_BITS:
        raise CapacityError("geometry exceeds the tag region")
    value = int.from_bytes(blob, "big")
    key = (value & ((1 << KEY_BITS) - 1)).to_bytes(KEY_BITS // 8, "big")
    region = value >> KEY_BITS
    tags = []
    for i in range(n_tags):
        shift = TAG_REGION_BITS - (i + 1) * tag_bits
        tags.append(((region >> shift) & ((1 << tag_bits) - 1))
                    .to_bytes(tag_bits // 8, "big"))
    return tags, key


def split_segments(nav_data: bytes, seg_count: int) -> list:
    """Split nav data into equal byte segments, zero-padding the last."""
    if seg_count < 1:
        raise ValueError("need at least one segment")
    seg_len = -(-len(nav_data) // seg_count)
    padded = nav_data + bytes(seg_len * seg_count - len(nav_data))
    return [padded[i * seg_len:(i + 1) * seg_len] for i in range(seg_count)]


def generate_subframe_tags(nav_data: bytes, key: TeslaKey, prn_d: int,
                           prn_a: int, gst_sf: Gst, seg_count: int,
                           tag_bits: int = TAG_BITS_DEFAULT) -> list:
    """One tag per nav-data segment, all under the same chain key."""
    return [
        compute_tag(key.bits,
                    build_auth_message(prn_d, prn_a, gst_sf, i + 1, seg),
                    tag_bits)
        for i, seg in enumerate(split_segments(nav_data, seg_count))
    ]


def verify_tags(nav_data: bytes, received, key: TeslaKey, prn_d: int,
                prn_a: int, gst_sf: Gst, seg_count: int,
                tag_bits: int = TAG_BITS_DEFAULT) -> list:
    """Recompute tags locally and compare element-wise.

    The key must already have been verified against the chain; an
    all-True result marks the nav data authentic for prn_d.
    """
    local = generate_subframe_tags(nav_data, key, prn_d, prn_a, gst_sf,
                                   seg_count, tag_bits)
    return [hmac.compare_digest(a, b) for a, b in zip(local, received)]
