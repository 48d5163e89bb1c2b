"""One-way key chain generation and verification, root-key message
construction and signing, and the HKROOT block transport.

Chain keys are 128 bits; each key is the truncated SHA-256 of its
successor, and every key is bound to the GST of the subframe slot that
discloses it.  A received key is verified by hashing it back to a trusted
key; the required number of hash steps follows from the GST difference
divided by the 30-second slot duration, which is what defeats reuse of a
stale key in a later slot.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import ec
from cryptography.hazmat.primitives.asymmetric.utils import (
    decode_dss_signature,
    encode_dss_signature,
)

from .gst import Gst, SUBFRAME_SECONDS

KEY_BYTES = 16
NMA_HEADER = 0x52

# root-key message field widths in bits
_MSG_WIDTHS = (8, 8, 12, 20, 128)
ROOT_MESSAGE_BYTES = sum(_MSG_WIDTHS) // 8
SIGNATURE_BYTES = 64

# HKROOT transport: [NMA header, block index, 13 payload bytes] per subframe
DSM_PAYLOAD_BYTES = 13
DSM_BODY_BYTES = 1 + ROOT_MESSAGE_BYTES + SIGNATURE_BYTES
DSM_BLOCKS = math.ceil(DSM_BODY_BYTES / DSM_PAYLOAD_BYTES)


class GstOrderError(ValueError):
    """Candidate key is not newer than the trusted key (stale disclosure)."""


class AlignmentError(ValueError):
    """GST difference is not a whole number of subframe slots."""


class FieldWidthError(ValueError):
    """A root-message field does not fit its allotted width."""


class MalformedKeyError(ValueError):
    """Signing-key material could not be used."""


def truncate_hash(data: bytes) -> bytes:
    """SHA-256 truncated to the 128-bit chain key size."""
    return hashlib.sha256(data).digest()[:KEY_BYTES]


@dataclass(frozen=True)
class TeslaKey:
    bits: bytes
    gst: Gst

    def __post_init__(self):
        if len(self.bits) != KEY_BYTES:
            raise ValueError(f"chain keys are {KEY_BYTES} bytes")


def derive_prev_key(key: TeslaKey) -> TeslaKey:
    """Walk one step towards the root: hash the key, step the slot back."""
    return TeslaKey(truncate_hash(key.bits),
                    key.gst.add_seconds(-SUBFRAME_SECONDS))


@dataclass(frozen=True)
class TeslaChain:
    """A generated chain, ordered root first.

    keys[0] is the root (disclosed first), keys[n] the seed.  Key i belongs
    to the slot at gst0 + 30*i.
    """

    keys: tuple
    gst0: Gst
    delta_t: int = SUBFRAME_SECONDS

    @classmethod
    def generate(cls, seed: bytes, n: int, gst0: Gst) -> "TeslaChain":
        if n < 1:
            raise ValueError("chain needs at least one hash step")
        if len(seed) != KEY_BYTES:
            raise ValueError(f"seed must be {KEY_BYTES} bytes")
        bits = [seed]
        for _ in range(n):
            bits.append(truncate_hash(bits[-1]))
        bits.reverse()
        keys = tuple(
            TeslaKey(b, gst0.add_seconds(SUBFRAME_SECONDS * i))
            for i, b in enumerate(bits)
        )
        return cls(keys=keys, gst0=gst0)

    @property
    def seed(self) -> TeslaKey:
        return self.keys[-1]

    @property
    def root(self) -> TeslaKey:
        return self.keys[0]

    @property
    def n(self) -> int:
        return len(self.keys) - 1

    def key_at(self, index: int) -> TeslaKey:
        return self.keys[index]

    def key_for_gst(self, gst: Gst) -> TeslaKey:
        offset = gst.total_seconds() - self.gst0.total_seconds()
        index, rem = divmod(offset, self.delta_t)
        if rem or not 0 <= index <= self.n:
            raise ValueError(f"no chain slot at {gst}")
        return self.keys[index]


def generate_chain(seed: bytes, n: int, gst0: Gst) -> TeslaChain:
    return TeslaChain.generate(seed, n, gst0)


def verify_key(candidate: TeslaKey, trusted: TeslaKey) -> int | None:
    """Verify a disclosed key against a trusted one.

    Returns the number of hash steps walked on success, None when the walk
    does not land on the trusted key.  A candidate whose slot is not newer
    than the trusted key is stale and raises GstOrderError; a slot gap that
    is not a multiple of the slot duration raises AlignmentError.
    """
    diff = candidate.gst.total_seconds() - trusted.gst.total_seconds()
    if diff <= 0:
        raise GstOrderError("candidate key is not newer than trusted key")
    steps, rem = divmod(diff, SUBFRAME_SECONDS)
    if rem:
        raise AlignmentError(f"GST gap {diff}s is not slot-aligned")
    bits = candidate.bits
    for _ in range(steps):
        bits = truncate_hash(bits)
    return steps if bits == trusted.bits else None


@dataclass(frozen=True)
class RootKeyMessage:
    """The signed root-key announcement carried over HKROOT."""

    nma_header: int
    mf: int
    wnk: int
    towk: int
    kroot: bytes
    signature: bytes = b""

    @property
    def gst(self) -> Gst:
        return Gst(self.wnk, self.towk)

    @property
    def root_key(self) -> TeslaKey:
        return TeslaKey(self.kroot, self.gst)


def build_root_message(nma_header: int, mf: int, wnk: int, towk: int,
                       kroot: bytes) -> bytes:
    """Pack header, MAC-function id, root slot time and root key bits."""
    fields = (nma_header, mf, wnk, towk, int.from_bytes(kroot, "big"))
    if len(kroot) != KEY_BYTES:
        raise FieldWidthError(f"kroot must be {KEY_BYTES} bytes")
    value = 0
    for width, field in zip(_MSG_WIDTHS, fields):
        if not 0 <= field < (1 << width):
            raise FieldWidthError(f"field {field:#x} does not fit {width} bits")
        value = (value << width) | field
    return value.to_bytes(ROOT_MESSAGE_BYTES, "big")


def parse_root_message(data: bytes, signature: bytes = b"") -> RootKeyMessage:
    if len(data) != ROOT_MESSAGE_BYTES:
        raise ValueError(f"root message must be {ROOT_MESSAGE_BYTES} bytes")
    value = int.from_bytes(data, "big")
    fields = []
    for width in reversed(_MSG_WIDTHS):
        fields.append(value & ((1 << width) - 1))
        value >>= width
    kroot_int, towk, wnk, mf, nma_header = fields
    return RootKeyMessage(nma_header=nma_header, mf=mf, wnk=wnk, towk=towk,
                          kroot=kroot_int.to_bytes(KEY_BYTES, "big"),
                          signature=signature)


# group order of P-256, for reducing integer seeds to valid secrets
_P256_ORDER = 0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551


def generate_keypair(seed: int):
    """Derive a P-256 keypair from an integer seed (reproducible runs)."""
    secret = seed % (_P256_ORDER - 1) + 1
    private = ec.derive_private_key(secret, ec.SECP256R1())
    return private, private.public_key()


def sign_root(message: bytes, private_key) -> bytes:
    """Deterministic ECDSA P-256 over SHA-256, fixed-width r||s form."""
    try:
        der = private_key.sign(
            message, ec.ECDSA(hashes.SHA256(), deterministic_signing=True))
    except AttributeError as exc:
        raise MalformedKeyError(str(exc)) from exc
    r, s = decode_dss_signature(der)
    return r.to_bytes(32, "big") + s.to_bytes(32, "big")


def verify_root(message: bytes, signature: bytes, public_key) -> bool:
    if len(signature) != SIGNATURE_BYTES:
        return False
    r = int.from_bytes(signature[:32], "big")
    s = int.from_bytes(signature[32:], "big")
    try:
        der = encode_dss_signature(r, s)
        public_key.verify(der, message, ec.ECDSA(hashes.SHA256()))
        return True
    except (InvalidSignature, ValueError):
        return False


def public_key_pem(public_key) -> str:
    return public_key.public_bytes(
        serialization.Encoding.PEM,
        serialization.PublicFormat.SubjectPublicKeyInfo).decode()


def load_public_key_pem(pem: str):
    try:
        return serialization.load_pem_public_key(pem.encode())
    except ValueError as exc:
        raise MalformedKeyError(str(exc)) from exc


def dsm_hkroot_blocks(msg: RootKeyMessage) -> list:
    """Serialize a signed root message into per-subframe HKROOT strings.

    Each subframe's 15 HKROOT bytes are [NMA header, block index, payload].
    The first payload byte of block 0 carries the total block count, so a
    receiver can join a repeating cycle at any point.
    """
    if len(msg.signature) != SIGNATURE_BYTES:
        raise ValueError("root message must be signed before transport")
    body = build_root_message(msg.nma_header, msg.mf, msg.wnk, msg.towk,
                              msg.kroot) + msg.signature
    payload = bytes([DSM_BLOCKS]) + body
    payload += bytes(DSM_BLOCKS * DSM_PAYLOAD_BYTES - len(payload))
    return [
        bytes([NMA_HEADER, idx])
        + payload[idx * DSM_PAYLOAD_BYTES:(idx + 1) * DSM_PAYLOAD_BYTES]
        for idx in range(DSM_BLOCKS)
    ]


class DsmAccumulator:
    """Collects HKROOT blocks until a complete root message assembles."""

    def __init__(self):
        self.blocks = {}

    def feed(self, hkroot: bytes) -> RootKeyMessage | None:
        """Offer one subframe's HKROOT bytes; returns the parsed root
        message once every block has been seen (unverified)."""
        if len(hkroot) != 15 or hkroot[0] != NMA_HEADER:
            return None
        idx = hkroot[1]
        if idx >= DSM_BLOCKS:
            return None
        self.blocks[idx] = hkroot[2:]
        if len(self.blocks) < DSM_BLOCKS:
            return None
        payload = b"".join(self.blocks[i] for i in range(DSM_BLOCKS))
        if payload[0] != DSM_BLOCKS:
            return None
        body = payload[1:1 + ROOT_MESSAGE_BYTES + SIGNATURE_BYTES]
        return parse_root_message(body[:ROOT_MESSAGE_BYTES],
                                  body[ROOT_MESSAGE_BYTES:])

    def reset(self) -> None:
        self.blocks.clear()
