"""Pure-NumPy implementations of the weight kernels in ``crm._speedups``.

Used when the compiled extension is unavailable (or forced via
``CRM_BACKEND=python``). Reductions use NumPy's pairwise summation, so values
may differ from the compiled path in the last few ulps; all callers compare
at tolerances far above that.
"""

import numpy as np


def sqexp_weights(windows, target, bandwidth, width, norm):
    diff = (target[None, :] - windows) / bandwidth
    sq = np.einsum("ij,ij->i", diff, diff)
    return norm * np.exp(-sq / (2.0 * width * width))


def epanechnikov_weights(windows, target, bandwidth, width):
    u = (target[None, :] - windows) / (bandwidth * width)
    factors = np.clip(1.0 - u * u, 0.0, None) * (0.75 / width)
    return np.prod(factors, axis=1)


def stratified_weights(xs, ys, tx, ty, inv_w2):
    n, d, _ = xs.shape
    # (n, d, d) squared distances between window points and target points
    diff = xs[:, :, None, :] - tx[None, None, :, :]
    sq = np.einsum("nabq,nabq->nab", diff, diff)
    base = np.exp(-sq * inv_w2)

    out = np.zeros(n)
    for sign in (1.0, -1.0):
        win_mask = ys > 0 if sign > 0 else ys <= 0
        tgt_mask = ty > 0 if sign > 0 else ty <= 0
        t_cnt = int(tgt_mask.sum())
        if t_cnt == 0:
            continue
        w_cnt = win_mask.sum(axis=1)
        pair = base * win_mask[:, :, None] * tgt_mask[None, None, :]
        sums = pair.sum(axis=(1, 2))
        ok = w_cnt > 0
        out[ok] += sums[ok] / (2.0 * w_cnt[ok] * t_cnt)
    return out
