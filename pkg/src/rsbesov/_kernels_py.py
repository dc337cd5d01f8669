"""Pure numpy implementations of the hot loops.  Used when the compiled
extension is unavailable, and as the reference in backend-agreement tests."""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def gather_correlate(c, g, starts):
    """out[r, p] = sum_t g[t] * c[r, starts[p] + t]."""
    c = np.ascontiguousarray(c, dtype=float)
    g = np.ascontiguousarray(g, dtype=float)
    starts = np.asarray(starts, dtype=np.int64)
    if starts.size == 0:
        return np.zeros((c.shape[0], 0))
    win = sliding_window_view(c, len(g), axis=1)
    return win[:, starts, :] @ g


def increment_norms(Y, P, Q, offsets, base, weights, bounds, p, use_max):
    """Per-offset, per-sector weighted L^p sums of transported increments.

    v(x, o) = P[x+o] @ (Y[x+o] - Q[o] @ Y[x]) (P, Q omitted when None).
    Returns out[o, l] = sum_x w_x |v_l|^p, or max_x |v_l| when use_max,
    where v_l is the slice bounds[l]:bounds[l+1] and |.| the Euclidean norm.
    """
    Y = np.asarray(Y, dtype=float)
    base = np.asarray(base, dtype=np.int64)
    weights = np.asarray(weights, dtype=float)
    nl = len(bounds) - 1
    out = np.zeros((len(offsets), nl))
    y0 = Y[base]
    for j, o in enumerate(offsets):
        y1 = Y[base + o]
        diff = y1 - (y0 if Q is None else y0 @ np.asarray(Q[j]).T)
        if P is not None:
            diff = np.einsum("xij,xj->xi", P[base + o], diff)
        for l in range(nl):
            nrm = np.sqrt(np.sum(diff[:, bounds[l]:bounds[l + 1]] ** 2, axis=1))
            if use_max:
                out[j, l] = np.max(np.where(weights > 0, nrm, 0.0)) if nrm.size else 0.0
            else:
                out[j, l] = np.sum(weights * nrm ** p)
    return out
