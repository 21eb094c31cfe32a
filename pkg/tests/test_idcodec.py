import hashlib
import os
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contentverify.errors import CapacityError, FramingError, QrDecodeError, UncorrectableError
from contentverify.idcodec import (
    FRAME_LEN,
    QrConfig,
    _rs,
    cleanup_extracted,
    derive_content_id,
    is_content_id,
    module_votes,
    otsu_threshold,
    qr_decode,
    qr_render,
    qr_side,
    qr_version_for,
    rs_frame_decode,
    rs_frame_encode,
)

import oracles

content_ids = st.binary(min_size=8, max_size=8).map(bytes.hex)


def test_sha256_oracle_matches_published_vectors():
    assert oracles.sha256(b"abc").hex() == (
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    )
    assert oracles.sha256(b"").hex() == (
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    )
    long = b"abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq"
    assert oracles.sha256(long).hex() == (
        "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1"
    )


def test_content_id_reference_vector():
    expected = oracles.sha256(b"abc" + struct.pack("<q", 0) + bytes(8))[:8].hex()
    assert derive_content_id(b"abc", "", 0, bytes(8)) == expected


@given(st.binary(min_size=1, max_size=64), st.text(max_size=10), st.integers(-(2**63), 2**63 - 1))
@settings(max_examples=50)
def test_content_id_matches_oracle(data, who, when):
    nonce = b"\x01" * 8
    expected = oracles.sha256(data + who.encode() + struct.pack("<q", when) + nonce)[:8].hex()
    got = derive_content_id(data, who, when, nonce)
    assert got == expected and is_content_id(got)
    assert derive_content_id(data, who, when, nonce) == got


def test_content_id_input_checks():
    with pytest.raises(ValueError):
        derive_content_id(b"", "a", 0, bytes(8))
    with pytest.raises(ValueError):
        derive_content_id(b"x", "a", 0, bytes(7))


def test_content_ids_do_not_collide():
    ids = {derive_content_id(b"image", "@who", 1700000000, os.urandom(8)) for _ in range(100_000)}
    assert len(ids) == 100_000


def test_is_content_id():
    assert is_content_id("0123456789abcdef")
    assert not is_content_id("0123456789ABCDEF")
    assert not is_content_id("0123456789abcde")
    assert not is_content_id(b"0123456789abcdef")


@given(content_ids)
def test_frame_layout_and_parity(cid):
    frame = rs_frame_encode(cid)
    assert len(frame) == FRAME_LEN == 28
    assert frame[:18] == f"<{cid}>".encode()
    # a valid systematic codeword has all-zero syndromes at 2^0 .. 2^9
    assert oracles.rs_syndromes(frame, 10) == [0] * 10
    assert rs_frame_encode(cid) == frame
    assert rs_frame_decode(frame) == cid


@given(content_ids, st.data())
def test_frame_corrects_up_to_five_errors(cid, data):
    frame = bytearray(rs_frame_encode(cid))
    count = data.draw(st.integers(0, 5))
    positions = data.draw(st.lists(st.integers(0, 27), min_size=count, max_size=count, unique=True))
    for p in positions:
        frame[p] ^= data.draw(st.integers(1, 255))
    assert rs_frame_decode(bytes(frame)) == cid


@given(content_ids, st.data())
@settings(max_examples=200)
def test_frame_never_returns_wrong_id(cid, data):
    frame = bytearray(rs_frame_encode(cid))
    count = data.draw(st.integers(6, 10))
    positions = data.draw(st.lists(st.integers(0, 27), min_size=count, max_size=count, unique=True))
    for p in positions:
        frame[p] ^= data.draw(st.integers(1, 255))
    try:
        assert rs_frame_decode(bytes(frame)) == cid
    except (UncorrectableError, FramingError):
        pass


def test_frame_errors():
    with pytest.raises(FramingError):
        rs_frame_decode(bytes(27))
    bad = bytes(_rs.encode(b"[0123456789abcdef]"))
    with pytest.raises(FramingError):
        rs_frame_decode(bad)
    upper = bytes(_rs.encode(b"<0123456789ABCDEF>"))
    with pytest.raises(FramingError):
        rs_frame_decode(upper)
    with pytest.raises(ValueError):
        rs_frame_encode("xyz")


def test_qr_version_and_side():
    payload = rs_frame_encode("0123456789abcdef")
    assert qr_version_for(payload) == 3
    img = qr_render(payload)
    assert img.version == 3 and img.modules == 29
    assert img.shape == (370, 370) == (qr_side(3, QrConfig()),) * 2
    assert set(np.unique(img.pixels)) == {0, 255}


def test_small_payloads_use_smaller_versions():
    assert qr_version_for(bytes(11)) == 1
    assert qr_version_for(bytes(20)) == 2
    assert qr_version_for(bytes(21)) == 3


def test_qr_capacity_error():
    with pytest.raises(CapacityError):
        qr_render(bytes(2000))


def test_qr_config_validation():
    with pytest.raises(ValueError):
        QrConfig(box_size=0)
    with pytest.raises(ValueError):
        QrConfig(border=3)
    with pytest.raises(ValueError):
        QrConfig(ecc_level="L")


@given(content_ids, st.integers(2, 10))
@settings(max_examples=40, deadline=None)
def test_qr_round_trip_every_box_size(cid, box):
    payload = rs_frame_encode(cid)
    assert qr_decode(qr_render(payload, QrConfig(box_size=box)).pixels) == payload


def test_blank_image_does_not_decode():
    with pytest.raises(QrDecodeError):
        qr_decode(np.full((370, 370), 255, dtype=np.uint8))
    with pytest.raises(QrDecodeError):
        qr_decode(np.full((370, 370), 255, dtype=np.uint8), module_size=10, version=3)


def salt_and_pepper(img, fraction, rng):
    noisy = img.copy()
    hit = rng.random(img.shape) < fraction
    noisy[hit] = np.where(rng.random(hit.sum()) < 0.5, 0, 255)
    return noisy


def test_salt_and_pepper_survives_cleanup():
    rng = np.random.default_rng(4)
    for _ in range(5):
        payload = rs_frame_encode(rng.bytes(8).hex())
        qr = qr_render(payload)
        noisy = salt_and_pepper(qr.pixels, 0.05, rng)
        assert qr_decode(cleanup_extracted(noisy)) == payload


def test_otsu_shift_invariance():
    qr = qr_render(rs_frame_encode("00112233445566aa")).pixels
    dim = np.where(qr == 0, 40, 200).astype(np.uint8)
    bright = dim + 50
    np.testing.assert_array_equal(cleanup_extracted(bright), cleanup_extracted(dim))
    np.testing.assert_array_equal(cleanup_extracted(dim), cleanup_extracted(qr))


def test_clean_symbol_unchanged():
    qr = qr_render(rs_frame_encode("00112233445566aa"), QrConfig(box_size=10)).pixels
    np.testing.assert_array_equal(module_votes(cleanup_extracted(qr), 10), module_votes(qr, 10))


def test_otsu_threshold():
    assert otsu_threshold(np.full((4, 4), 9, dtype=np.uint8)) is None
    two = np.array([[10, 10, 200, 200]], dtype=np.uint8)
    t = otsu_threshold(two)
    assert 10 <= t < 200


def test_flat_cleanup_is_all_light():
    for v in (0, 77, 255):
        assert np.all(cleanup_extracted(np.full((30, 30), v, dtype=np.uint8)) == 255)


noisy_planes = st.tuples(st.integers(1, 48), st.integers(1, 48), st.integers(0, 2**32 - 1), st.booleans()).map(
    lambda t: (
        np.random.default_rng(t[2]).integers(0, 256, (t[0], t[1]), dtype=np.uint8)
        if t[3]
        else np.where(np.random.default_rng(t[2]).random((t[0], t[1])) < 0.5, 0, 255).astype(np.uint8)
    )
)


@given(noisy_planes)
@settings(max_examples=300)
def test_cleanup_bilevel_and_idempotent(img):
    once = cleanup_extracted(img)
    assert set(np.unique(once)) <= {0, 255}
    np.testing.assert_array_equal(cleanup_extracted(once), once)


def test_python_hashlib_agrees_with_oracle():
    data = os.urandom(200)
    assert hashlib.sha256(data).digest() == oracles.sha256(data)
