"""Sliding-window maxima in O(N).

``sliding_max`` is the vectorised block algorithm (van Herk / Gil-Werman):
prefix maxima and suffix maxima inside blocks of length ``w`` combine into the
maximum of any length-``w`` window with one comparison. ``sliding_max_deque``
is the classic monotone-deque scan, kept as a reference implementation.
"""

from collections import deque

import numpy as np


def sliding_max(x, w: int) -> np.ndarray:
    """``out[i] = max(x[i : i + w])`` for ``i = 0 .. len(x) - w``."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if w < 1:
        raise ValueError("window must be >= 1")
    if w > n:
        return np.empty(0)
    if w == 1:
        return x.copy()
    n_blocks = -(-n // w)
    padded = np.full(n_blocks * w, -np.inf)
    padded[:n] = x
    blocks = padded.reshape(n_blocks, w)
    prefix = np.maximum.accumulate(blocks, axis=1).ravel()
    suffix = np.maximum.accumulate(blocks[:, ::-1], axis=1)[:, ::-1].ravel()
    i = np.arange(n - w + 1)
    return np.maximum(suffix[i], prefix[i + w - 1])


def sliding_max_deque(x, w: int) -> np.ndarray:
    """Same contract as :func:`sliding_max`, one pass with a decreasing deque of indices."""
    x = list(map(float, x))
    if w < 1:
        raise ValueError("window must be >= 1")
    out = []
    dq: deque = deque()
    for i, v in enumerate(x):
        while dq and x[dq[-1]] <= v:
            dq.pop()
        dq.append(i)
        if dq[0] <= i - w:
            dq.popleft()
        if i >= w - 1:
            out.append(x[dq[0]])
    return np.array(out)
