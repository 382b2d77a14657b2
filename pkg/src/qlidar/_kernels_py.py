"""Pure numpy trial kernel, used when the compiled extension is unavailable."""

import numpy as np

from .streams import GOLDEN, derive_array, mix64_array

_INV_2_53 = 1.0 / 9007199254740992.0
# caps the (runs x 2*n_c) working arrays
_CHUNK_ELEMENTS = 1 << 22


def simulate_counts(cdf_good, cdf_bad, cell_key, runs, n_c, s_eff):
    """Per-trial iteration counts for ``runs`` trials of ``n_c`` iterations.

    Returns an ``int64`` array of shape ``(runs, 4)`` whose columns count the
    iterations with (good bin tagged, bad bin not), (bad tagged, good not),
    good tagged, and bad tagged. A bin is tagged when its sampled count is at
    least ``s_eff``.
    """
    cdf_good = np.ascontiguousarray(cdf_good, dtype=np.float64)
    cdf_bad = np.ascontiguousarray(cdf_bad, dtype=np.float64)
    out = np.zeros((runs, 4), dtype=np.int64)
    steps = np.arange(1, 2 * n_c + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        offsets = steps * np.uint64(GOLDEN)
    chunk = max(1, _CHUNK_ELEMENTS // (2 * n_c))
    for start in range(0, runs, chunk):
        stop = min(runs, start + chunk)
        keys = derive_array(cell_key, np.arange(start, stop))
        with np.errstate(over="ignore"):
            state = keys[:, None] + offsets[None, :]
        u = (mix64_array(state) >> np.uint64(11)).astype(np.float64) * _INV_2_53
        m_good = np.minimum(np.searchsorted(cdf_good, u[:, 0::2], side="right"), cdf_good.size - 1)
        m_bad = np.minimum(np.searchsorted(cdf_bad, u[:, 1::2], side="right"), cdf_bad.size - 1)
        b1 = m_good >= s_eff
        b2 = m_bad >= s_eff
        out[start:stop, 0] = np.count_nonzero(b1 & ~b2, axis=1)
        out[start:stop, 1] = np.count_nonzero(b2 & ~b1, axis=1)
        out[start:stop, 2] = np.count_nonzero(b1, axis=1)
        out[start:stop, 3] = np.count_nonzero(b2, axis=1)
    return out
