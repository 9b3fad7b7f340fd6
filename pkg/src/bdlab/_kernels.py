"""Compiled inner loops.  All arrays live on the padded grid of a box."""
import numba
import numpy as np


@numba.njit(cache=True)
def deposit_sequence(padded, pad_index, offsets, sites):
    """Apply the update at each box flat index in ``sites``, in order."""
    for s in sites:
        i = pad_index[s]
        m = padded[i] + 1
        for off in offsets:
            v = padded[i + off]
            if v > m:
                m = v
        padded[i] = m


@numba.njit(cache=True)
def run_probed(n_pad, pad_index, offsets, counts, sites, probes):
    """Batch of independent runs from the zero field (pinned-zero halo).

    ``counts[r, g]`` is the number of deposits replica ``r`` makes in time
    slice ``g``; the deposit sites of all replicas are concatenated in
    ``sites``.  Returns heights at ``probes`` after every slice, shape
    ``(R, G, len(probes))``.
    """
    R, G = counts.shape
    out = np.zeros((R, G, probes.shape[0]), dtype=np.int64)
    h = np.zeros(n_pad, dtype=np.int64)
    pos = 0
    for r in range(R):
        h[:] = 0
        for g in range(G):
            for _ in range(counts[r, g]):
                i = pad_index[sites[pos]]
                pos += 1
                m = h[i] + 1
                for off in offsets:
                    v = h[i + off]
                    if v > m:
                        m = v
                h[i] = m
            for k in range(probes.shape[0]):
                out[r, g, k] = h[probes[k]]
    return out


@numba.njit(cache=True)
def explore_backward(event_pad, root_pad, offsets, in_box, n_pad):
    """Backward influence-set exploration over a time-sorted event list.

    Scanning events from latest to earliest, the first event found at a
    current member is exactly the next step of the recursion.  Returns
    the membership mask on the padded grid and the indices (into the
    event list) of the events that drove each step, latest first.
    """
    member = np.zeros(n_pad, dtype=np.bool_)
    member[root_pad] = True
    steps = np.empty(event_pad.shape[0], dtype=np.int64)
    k = 0
    for e in range(event_pad.shape[0] - 1, -1, -1):
        y = event_pad[e]
        if member[y]:
            steps[k] = e
            k += 1
            for off in offsets:
                member[y + off] = True
    escaped = False
    for i in range(n_pad):
        if member[i] and not in_box[i]:
            escaped = True
            break
    return member, steps[:k], escaped


@numba.njit(cache=True)
def deposit_batch(n_pad, pad_index, offsets, sites):
    """Independent zero-start runs, one per row of ``sites``; final box heights."""
    R, K = sites.shape
    B = pad_index.shape[0]
    out = np.empty((R, B), dtype=np.int64)
    h = np.zeros(n_pad, dtype=np.int64)
    for r in range(R):
        h[:] = 0
        for k in range(K):
            i = pad_index[sites[r, k]]
            m = h[i] + 1
            for off in offsets:
                v = h[i + off]
                if v > m:
                    m = v
            h[i] = m
        for b in range(B):
            out[r, b] = h[pad_index[b]]
    return out
