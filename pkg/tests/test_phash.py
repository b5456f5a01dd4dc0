import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from fakerank.phash import (PerceptualHash, bilinear_resize, group_by_hash,
                            hamming, phash, phash_file)

from conftest import FIXTURES

# frozen reference values, computed once by an independent implementation
# (scalar bilinear resample + direct double-sum orthonormal DCT-II)
FROZEN = {
    "img_checker8.png": "0055005500550055",
    "photo.png": "6a4095ad15be0cee",
    "photo.jpg": "6a409dad11bc0eee",
    "black.png": "0000000000000000",
}


@pytest.mark.parametrize("name,expected", sorted(FROZEN.items()))
def test_frozen_fixture_hashes(name, expected):
    assert phash_file(FIXTURES / name).hex == expected


def test_all_black_is_all_zero_bits():
    img = np.zeros((64, 64), dtype=np.uint8)
    assert phash(img).bits == 0


def test_uniform_nonzero_is_all_zero_bits():
    # constant image: every AC coefficient is 0, strict median rule keeps 0
    img = np.full((40, 52), 173, dtype=np.uint8)
    assert phash(img).bits == 0


def test_deterministic_on_identical_pixels():
    rng = np.random.default_rng(5)
    img = rng.integers(0, 256, size=(50, 70, 3), dtype=np.uint8)
    assert phash(img).bits == phash(img.copy()).bits


def test_photo_hashed_twice_identical():
    a = phash_file(FIXTURES / "photo.png")
    b = phash_file(FIXTURES / "photo.png")
    assert a == b


def test_empty_image_rejected():
    with pytest.raises(ValueError, match="empty image"):
        phash(np.zeros((0, 0)))


def test_accepts_rgb_and_grayscale_and_pil():
    rgb = np.zeros((16, 16, 3), dtype=np.uint8)
    gray = np.zeros((16, 16), dtype=np.uint8)
    assert phash(rgb) == phash(gray)
    assert phash(Image.fromarray(rgb)) == phash(rgb)


@pytest.mark.parametrize("name", ["photo.png", "img_checker8.png"])
def test_downscale_stability(name):
    with Image.open(FIXTURES / name) as img:
        arr = np.asarray(img.convert("RGB"))
    full = phash(arr)
    h, w = arr.shape[:2]
    from fakerank.phash import integer_luma
    half = bilinear_resize(integer_luma(arr).astype(np.float64), w // 2, h // 2)
    assert hamming(full, phash(half)) <= 10


def test_hex_round_trip():
    h = PerceptualHash(0xDEADBEEF12345678)
    assert PerceptualHash.from_hex(h.hex) == h
    with pytest.raises(ValueError):
        PerceptualHash.from_hex("zz")


def test_hamming_trivial_cases():
    assert hamming(0x0, 0x0) == 0
    assert hamming(0x0, 0xFFFFFFFFFFFFFFFF) == 64
    assert hamming(0xF0, 0x0F) == 8  # hand popcount of 0xFF


@given(st.integers(0, 2**64 - 1), st.integers(0, 2**64 - 1),
       st.integers(0, 2**64 - 1))
@settings(max_examples=200, deadline=None)
def test_hamming_is_a_metric(a, b, c):
    assert hamming(a, b) == hamming(b, a)
    assert hamming(a, a) == 0
    assert 0 <= hamming(a, b) <= 64
    assert hamming(a, c) <= hamming(a, b) + hamming(b, c)


def test_group_exact_partition():
    groups = group_by_hash({"r1": 0xA, "r2": 0xA, "r3": 0xB})
    assert groups == {f"{0xA:016x}": ["r1", "r2"], f"{0xB:016x}": ["r3"]}


def test_group_near_zero_equals_exact():
    rng = np.random.default_rng(11)
    hashes = {f"r{i}": int(rng.integers(0, 2**63)) for i in range(40)}
    assert (group_by_hash(hashes, mode="near", distance=0)
            == group_by_hash(hashes, mode="exact"))


def test_group_near_transitive_closure():
    # pairwise distances: (h1,h2)=3, (h2,h3)=3, (h1,h3)=6
    h1 = 0b0
    h2 = 0b111
    h3 = 0b111111
    assert hamming(h1, h2) == 3 and hamming(h2, h3) == 3 and hamming(h1, h3) == 6
    groups = group_by_hash({"a": h1, "b": h2, "c": h3}, mode="near", distance=3)
    assert len(groups) == 1
    canonical, members = next(iter(groups.items()))
    assert canonical == f"{h1:016x}"  # lexicographically smallest member
    assert sorted(members) == ["a", "b", "c"]


def test_grouping_is_a_partition():
    rng = np.random.default_rng(3)
    hashes = {f"r{i}": int(rng.integers(0, 2**64, dtype=np.uint64))
              for i in range(60)}
    for mode, d in (("exact", 0), ("near", 6)):
        groups = group_by_hash(hashes, mode=mode, distance=d)
        all_members = [rid for rids in groups.values() for rid in rids]
        assert sorted(all_members) == sorted(hashes)  # disjoint and covering
