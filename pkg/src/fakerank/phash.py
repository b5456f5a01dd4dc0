"""DCT perceptual hashing and hash-based grouping of share records.

The hash recipe is fixed for reproducibility: integer luma grayscale,
bilinear resize to 32x32, orthonormal 2-D DCT-II, top-left 8x8 block,
median of the 63 AC coefficients, bit set iff coefficient > median
(strictly), DC bit always 0. Coefficients are rounded to 1e-9 before the
median comparison so that FFT-based and direct DCT evaluations of the
same image cannot disagree on knife-edge ties.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Literal, Mapping

import numpy as np
import scipy.fft

__all__ = ["PerceptualHash", "phash", "phash_file", "hamming", "group_by_hash"]

HASH_BITS = 64

# fixed luma weights (ITU-R BT.601, scaled by 1000 for integer arithmetic)
_LUMA_R, _LUMA_G, _LUMA_B = 299, 587, 114

# quantization step applied to DCT coefficients before the median rule
_COEFF_QUANTUM = 1e-9


@dataclass(frozen=True)
class PerceptualHash:
    """64-bit perceptual fingerprint of an image."""

    bits: int

    def __post_init__(self):
        if not 0 <= self.bits < 1 << HASH_BITS:
            raise ValueError(f"hash out of 64-bit range: {self.bits:#x}")

    @property
    def hex(self) -> str:
        return f"{self.bits:016x}"

    @classmethod
    def from_hex(cls, text: str) -> "PerceptualHash":
        text = text.strip().lower()
        if len(text) != 16:
            raise ValueError(f"expected 16 hex chars, got {text!r}")
        return cls(int(text, 16))

    def __str__(self) -> str:
        return self.hex


def integer_luma(rgb: np.ndarray) -> np.ndarray:
    """Grayscale via integer luma: (299*R + 587*G + 114*B) // 1000."""
    r = rgb[..., 0].astype(np.int64)
    g = rgb[..., 1].astype(np.int64)
    b = rgb[..., 2].astype(np.int64)
    return (_LUMA_R * r + _LUMA_G * g + _LUMA_B * b) // 1000


def bilinear_resize(gray: np.ndarray, width: int, height: int) -> np.ndarray:
    """Bilinear resample using the pixel-center convention.

    Destination pixel (x, y) samples source coordinate
    ((x + 0.5) * W / width - 0.5, (y + 0.5) * H / height - 0.5), clamped
    to the image, and interpolates the four surrounding pixels.
    """
    src = np.asarray(gray, dtype=np.float64)
    h, w = src.shape
    xs = (np.arange(width) + 0.5) * (w / width) - 0.5
    ys = (np.arange(height) + 0.5) * (h / height) - 0.5
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xs - x0
    fy = ys - y0

    top = src[y0][:, x0] * (1.0 - fx) + src[y0][:, x1] * fx
    bot = src[y1][:, x0] * (1.0 - fx) + src[y1][:, x1] * fx
    return top * (1.0 - fy[:, None]) + bot * fy[:, None]


def _to_gray(pixels) -> np.ndarray:
    arr = np.asarray(pixels)
    if arr.ndim == 3:
        if arr.shape[2] < 3:
            arr = arr[:, :, 0]
        else:
            arr = integer_luma(arr[:, :, :3])
    elif arr.ndim != 2:
        raise ValueError(f"expected HxW or HxWxC pixels, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError("empty image")
    return arr.astype(np.float64)


def phash(pixels) -> PerceptualHash:
    """Hash a grayscale or RGB pixel array (or PIL image).

    Deterministic: identical pixels always map to the same hash.
    """
    if hasattr(pixels, "convert"):  # PIL image
        pixels = np.asarray(pixels.convert("RGB"))
    gray = _to_gray(pixels)
    small = bilinear_resize(gray, 32, 32)
    coeffs = scipy.fft.dct(scipy.fft.dct(small, type=2, norm="ortho", axis=0),
                           type=2, norm="ortho", axis=1)
    block = coeffs[:8, :8].ravel()
    block = np.round(block / _COEFF_QUANTUM) * _COEFF_QUANTUM
    median = float(np.median(block[1:]))  # AC terms only
    bits = 0
    for i in range(1, 64):  # DC bit stays 0
        if block[i] > median:
            bits |= 1 << (HASH_BITS - 1 - i)
    return PerceptualHash(bits)


def phash_file(path: str | Path) -> PerceptualHash:
    from PIL import Image

    with Image.open(path) as img:
        return phash(img)


def hamming(a: PerceptualHash | int, b: PerceptualHash | int) -> int:
    """Number of differing bits between two 64-bit hashes."""
    abits = a.bits if isinstance(a, PerceptualHash) else int(a)
    bbits = b.bits if isinstance(b, PerceptualHash) else int(b)
    return (abits ^ bbits).bit_count()


def group_by_hash(
    hashes: Mapping[str, int] | Iterable[tuple[str, int]],
    mode: Literal["exact", "near"] = "exact",
    distance: int = 4,
) -> dict[str, list[str]]:
    """Group record ids by hash, exactly or by single-linkage within `distance`.

    Returns canonical-hash hex -> member record ids (insertion order).
    The canonical hash of a group is its lexicographically smallest
    member hash. near-mode linkage is transitive: records chain into one
    group whenever consecutive pairwise distances stay within bound.
    """
    items = list(hashes.items()) if isinstance(hashes, Mapping) else list(hashes)
    if mode == "exact" or (mode == "near" and distance == 0):
        groups: dict[int, list[str]] = {}
        for rid, bits in items:
            groups.setdefault(int(bits), []).append(rid)
        return {f"{bits:016x}": rids for bits, rids in sorted(groups.items())}
    if mode != "near":
        raise ValueError(f"unknown grouping mode: {mode!r}")
    if distance < 0 or distance > HASH_BITS:
        raise ValueError(f"distance must be in [0, {HASH_BITS}]: {distance}")

    # union-find over distinct hash values; records with equal hashes
    # collapse first so the pairwise pass is over unique values only
    by_bits: dict[int, list[str]] = {}
    for rid, bits in items:
        by_bits.setdefault(int(bits), []).append(rid)
    uniq = sorted(by_bits)
    parent = list(range(len(uniq)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(uniq)):
        for j in range(i + 1, len(uniq)):
            if (uniq[i] ^ uniq[j]).bit_count() <= distance:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)

    groups_near: dict[int, list[str]] = {}
    for i, bits in enumerate(uniq):
        root = uniq[find(i)]
        groups_near.setdefault(root, []).extend(by_bits[bits])
    return {f"{bits:016x}": rids for bits, rids in sorted(groups_near.items())}
