"""Pure-python (numpy) split-search kernel.

Fallback for the compiled extension in _split_kernel.pyx; both expose the
same contract and must pick identical splits: accumulations run in the
same left-to-right order over the same presorted row ids, and the first
position attaining the maximal gain wins (features ascending, split
positions ascending).
"""
from __future__ import annotations

import numpy as np

# splits need gain >= 0 (to within fp slack): structure-neutral zero-gain
# cuts are allowed so symmetric interactions (XOR-like) stay learnable at
# depth 2, while harmful splits (ridge term makes them strictly negative)
# never fire
GAIN_EPS = 1e-12


def backend_name() -> str:
    return "python"


def best_split(xt: np.ndarray, sidx: np.ndarray, g: np.ndarray,
               h: np.ndarray, min_leaf: int, lam: float):
    """Best axis-aligned split for one node.

    xt: (F, N) feature matrix, transposed; sidx: (F, M) row ids of the
    node, sorted per feature by that feature's value; g, h: per-row
    gradient and hessian. Returns (feature, position, gain, threshold)
    with feature == -1 when no split has non-negative gain. Position p
    sends sorted slots [0..p] left; threshold is the first value going
    right and the split rule is x < threshold.
    """
    f, m = sidx.shape
    if m < 2 * min_leaf or m < 2:
        return -1, -1, 0.0, 0.0

    rows = np.arange(f)[:, None]
    sv = xt[rows, sidx]
    gcum = np.cumsum(g[sidx], axis=1)
    hcum = np.cumsum(h[sidx], axis=1)
    gtot = gcum[:, -1:]
    htot = hcum[:, -1:]
    gl = gcum[:, :-1]
    hl = hcum[:, :-1]
    gr = gtot - gl
    hr = htot - hl

    parent = gtot * gtot / (htot + lam)
    gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent)

    positions = np.arange(m - 1)
    valid = (positions + 1 >= min_leaf) & (m - positions - 1 >= min_leaf)
    valid = valid[None, :] & (sv[:, :-1] != sv[:, 1:])
    gain = np.where(valid, gain, -np.inf)

    flat = int(np.argmax(gain))
    feat, pos = divmod(flat, m - 1)
    best = gain[feat, pos]
    if not np.isfinite(best) or best <= -GAIN_EPS:
        return -1, -1, 0.0, 0.0
    return int(feat), int(pos), float(best), float(sv[feat, pos + 1])


def partition(sidx: np.ndarray, left_mask: np.ndarray, m_left: int):
    """Split per-feature sorted row ids by a row membership mask.

    Row order inside each side is preserved, so children stay presorted.
    """
    f = sidx.shape[0]
    sel = left_mask[sidx]
    left = sidx[sel].reshape(f, m_left)
    right = sidx[~sel].reshape(f, sidx.shape[1] - m_left)
    return np.ascontiguousarray(left), np.ascontiguousarray(right)
