"""Pure-numpy implementations of the streaming hot paths.

The sliding-bin update is expressed as a vectorized cumulative sum over the
incoming chunk; it performs the exact same floating-point additions in the
same order as the per-sample recursion, so both backends produce identical
ring contents.
"""
from __future__ import annotations

import numpy as np

NAME = "numpy"


def push_chunk(x_ring, acc, w_ring, mu, pushed, chunk):
    """Ingest ``chunk`` into the sliding-spectrum state, returning the new
    total sample count.

    ``x_ring``   last N raw samples (modular layout, index = sample % N)
    ``acc``      K+2 modulated bin accumulators (bins -1..K)
    ``w_ring``   ring of Hanning-windowed bin vectors, one per sample position
    ``mu``       modulation table, mu[j, i] = exp(-2j*pi*(j-1)*i/N)
    ``pushed``   samples ingested before this call
    """
    n = x_ring.shape[0]
    kp2 = acc.shape[0]
    cap = w_ring.shape[0]
    length = chunk.shape[0]
    if length == 0:
        return pushed

    offsets = pushed + np.arange(length)
    idx_n = offsets % n
    if length >= n:
        departing = np.concatenate((x_ring[idx_n[:n]], chunk[: length - n]))
    else:
        departing = x_ring[idx_n].copy()
    delta = chunk - departing

    # Running modulated sums: acc_i = acc_0 + cumsum(delta * mu) per bin.
    series = acc[:, None] + np.cumsum(delta[None, :] * mu[:, idx_n], axis=1)
    acc[:] = series[:, -1]

    # Demodulate to window-relative indexing (window ends at each position).
    rect = series * np.conj(mu[:, (idx_n + 1) % n])
    windowed = 0.5 * rect[1 : kp2 - 1] - 0.25 * (rect[0 : kp2 - 2] + rect[2:kp2])

    keep = min(length, cap)
    w_ring[(offsets[-keep:]) % cap] = windowed[:, -keep:].T

    if length >= n:
        x_ring[idx_n[-n:]] = chunk[-n:]
    else:
        x_ring[idx_n] = chunk
    return pushed + length
