import hashlib
import random

import pytest

from osnmasim.gst import Gst
from osnmasim.tesla import (
    AlignmentError,
    DsmAccumulator,
    FieldWidthError,
    GstOrderError,
    RootKeyMessage,
    TeslaChain,
    TeslaKey,
    build_root_message,
    derive_prev_key,
    dsm_hkroot_blocks,
    generate_chain,
    generate_keypair,
    load_public_key_pem,
    parse_root_message,
    public_key_pem,
    sign_root,
    verify_key,
    verify_root,
)

GST0 = Gst(1200, 86400)

# the disclosed chain key from the reference capture and its one-step
# predecessor, computed with an independent SHA-256 tool
REFERENCE_KEY = bytes.fromhex("aca75fbc1c6e40a397ca7ee7ee908870")
REFERENCE_PREV = bytes.fromhex("414e8a2219dda24b0c23ea34ccce04bb")


def test_single_step_chain():
    seed = bytes(range(16))
    chain = generate_chain(seed, 1, GST0)
    assert chain.keys[1].bits == seed
    assert chain.keys[0].bits == hashlib.sha256(seed).digest()[:16]


def test_chain_matches_independent_walk():
    rng = random.Random(5)
    seed = rng.randbytes(16)
    chain = generate_chain(seed, 100, GST0)
    bits = seed
    for _ in range(100):
        bits = hashlib.sha256(bits).digest()[:16]
    assert chain.root.bits == bits


def test_distinct_seeds_distinct_roots():
    a = generate_chain(bytes(16), 10, GST0)
    b = generate_chain(bytes(15) + b"\x01", 10, GST0)
    assert a.root.bits != b.root.bits


def test_chain_slot_gsts():
    chain = generate_chain(bytes(16), 5, GST0)
    for i, key in enumerate(chain.keys):
        assert key.gst.total_seconds() == GST0.total_seconds() + 30 * i


def test_derive_prev_key_definitional():
    chain = generate_chain(b"\xab" * 16, 20, GST0)
    for i in range(20):
        derived = derive_prev_key(chain.keys[i + 1])
        assert derived == chain.keys[i]


def test_derive_prev_key_reference_vector():
    key = TeslaKey(REFERENCE_KEY, Gst(1251, 277260))
    prev = derive_prev_key(key)
    assert prev.bits == REFERENCE_PREV
    assert prev.gst == Gst(1251, 277230)


def test_verify_adjacent_key():
    chain = generate_chain(b"\x01" * 16, 10, GST0)
    assert verify_key(chain.keys[4], chain.keys[3]) == 1


def test_verify_seven_steps():
    chain = generate_chain(b"\x02" * 16, 10, GST0)
    lv = 2
    assert verify_key(chain.keys[lv + 7], chain.keys[lv]) == 7


def test_verify_counts_match_brute_force_walk():
    chain = generate_chain(b"\x03" * 16, 40, GST0)
    for j in range(0, 40, 7):
        for i in range(j + 1, 41, 5):
            # oracle: count hash applications until the trusted bits appear
            bits, steps = chain.keys[i].bits, 0
            while bits != chain.keys[j].bits and steps <= 41:
                bits = hashlib.sha256(bits).digest()[:16]
                steps += 1
            assert verify_key(chain.keys[i], chain.keys[j]) == steps == i - j


def test_stale_key_raises_order_error():
    chain = generate_chain(b"\x04" * 16, 5, GST0)
    with pytest.raises(GstOrderError):
        verify_key(chain.keys[2], chain.keys[3])
    with pytest.raises(GstOrderError):
        verify_key(chain.keys[2], chain.keys[2])


def test_misaligned_gst_raises():
    chain = generate_chain(b"\x05" * 16, 5, GST0)
    shifted = TeslaKey(chain.keys[3].bits, chain.keys[3].gst.add_seconds(7))
    with pytest.raises(AlignmentError):
        verify_key(shifted, chain.keys[1])


def test_slot_shift_flips_verdict():
    """An authentic key presented in the wrong slot fails: the hash count
    no longer lands on the trusted key."""
    chain = generate_chain(b"\x06" * 16, 10, GST0)
    good = chain.keys[5]
    assert verify_key(good, chain.keys[2]) == 3
    late = TeslaKey(good.bits, good.gst.add_seconds(30))
    early = TeslaKey(good.bits, good.gst.add_seconds(-30))
    assert verify_key(late, chain.keys[2]) is None
    assert verify_key(early, chain.keys[2]) is None


def test_random_keys_rejected():
    chain = generate_chain(b"\x07" * 16, 20, GST0)
    rng = random.Random(99)
    accepted = sum(
        verify_key(TeslaKey(rng.randbytes(16), chain.keys[9].gst),
                   chain.keys[4]) is not None
        for _ in range(200)
    )
    assert accepted == 0


def test_build_root_message_layout():
    m = build_root_message(0, 0, 0, 0, bytes(16))
    assert m == bytes(22)
    m = build_root_message(0x52, 1, 1251, 277170, b"\xff" * 16)
    assert len(m) == 22
    assert m[0] == 0x52
    # determinism
    assert m == build_root_message(0x52, 1, 1251, 277170, b"\xff" * 16)


def test_root_message_towk_confined():
    base = build_root_message(0x52, 1, 1251, 0, bytes(16))
    other = build_root_message(0x52, 1, 1251, 0xFFFFF, bytes(16))
    diff = int.from_bytes(base, "big") ^ int.from_bytes(other, "big")
    # towk occupies bits 28..47 from the top of the 176-bit message
    assert diff == 0xFFFFF << 128


def test_root_message_width_checks():
    with pytest.raises(FieldWidthError):
        build_root_message(0x152, 0, 0, 0, bytes(16))
    with pytest.raises(FieldWidthError):
        build_root_message(0x52, 0, 5000, 0, bytes(16))
    with pytest.raises(FieldWidthError):
        build_root_message(0x52, 0, 0, 0, bytes(17))


def test_parse_root_message_round_trip():
    m = build_root_message(0x52, 3, 1251, 277170, b"\x11" * 16)
    msg = parse_root_message(m, b"\x00" * 64)
    assert (msg.nma_header, msg.mf, msg.wnk, msg.towk) == (0x52, 3, 1251, 277170)
    assert msg.kroot == b"\x11" * 16


def test_sign_verify_round_trip():
    sk, pk = generate_keypair(42)
    m = build_root_message(0x52, 0, 100, 30, bytes(16))
    sig = sign_root(m, sk)
    assert len(sig) == 64
    assert verify_root(m, sig, pk)


def test_tampered_message_fails():
    sk, pk = generate_keypair(42)
    m = build_root_message(0x52, 0, 100, 30, bytes(16))
    sig = sign_root(m, sk)
    bad = bytes([m[0] ^ 1]) + m[1:]
    assert not verify_root(bad, sig, pk)


def test_unrelated_public_key_fails():
    sk, _ = generate_keypair(42)
    _, other = generate_keypair(43)
    m = build_root_message(0x52, 0, 100, 30, bytes(16))
    assert not verify_root(m, sign_root(m, sk), other)


def test_signature_deterministic():
    sk, _ = generate_keypair(7)
    m = b"fixed message"
    assert sign_root(m, sk) == sign_root(m, sk)


def test_pem_round_trip():
    _, pk = generate_keypair(5)
    pem = public_key_pem(pk)
    again = load_public_key_pem(pem)
    assert public_key_pem(again) == pem


def _signed_root():
    sk, pk = generate_keypair(12)
    chain = generate_chain(b"\x21" * 16, 8, GST0)
    body = build_root_message(0x52, 0, GST0.wn, GST0.tow, chain.root.bits)
    msg = RootKeyMessage(nma_header=0x52, mf=0, wnk=GST0.wn, towk=GST0.tow,
                         kroot=chain.root.bits, signature=sign_root(body, sk))
    return msg, pk


def test_dsm_blocks_round_trip():
    msg, pk = _signed_root()
    blocks = dsm_hkroot_blocks(msg)
    assert all(len(b) == 15 and b[0] == 0x52 for b in blocks)
    acc = DsmAccumulator()
    out = None
    for b in blocks:
        out = acc.feed(b)
    assert out is not None
    assert out.kroot == msg.kroot
    assert out.signature == msg.signature
    body = build_root_message(out.nma_header, out.mf, out.wnk, out.towk,
                              out.kroot)
    assert verify_root(body, out.signature, pk)


def test_dsm_blocks_any_join_point():
    msg, _ = _signed_root()
    blocks = dsm_hkroot_blocks(msg)
    acc = DsmAccumulator()
    out = None
    for i in range(3, 3 + len(blocks)):
        out = acc.feed(blocks[i % len(blocks)])
    assert out is not None and out.kroot == msg.kroot


def test_dsm_rejects_misaligned_header():
    msg, _ = _signed_root()
    blocks = dsm_hkroot_blocks(msg)
    acc = DsmAccumulator()
    shifted = blocks[0][1:] + b"\x00"
    assert acc.feed(shifted) is None
    assert not acc.blocks
