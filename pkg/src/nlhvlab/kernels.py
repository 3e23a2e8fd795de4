"""Inner loops of the hidden-variable Monte Carlo.

Every kernel exists twice: a vectorized numpy version and a loop version
compiled by numba. Callers go through the module-level names, which point at
the compiled loop unless numba is unavailable or disabled (see ``_accel``).
Random numbers are always drawn by the caller, so both paths consume the same
inputs and return the same integer tallies.
"""
import numpy as np

from ._accel import HAVE_NUMBA, njit

# slack on the validity inequalities; dot products of unit vectors carry ~1e-16 error
VALID_TOL = 1e-12


def outcome_counts_numpy(ua, vb, ab, lam):
    """Tally outcomes of the hidden-variable model for a block of draws.

    ``ua``, ``vb`` and ``lam`` have shape (m, n): row r holds n draws measured
    with the r-th setting pair, whose overlap a.b is ``ab[r]``. Bob's +1
    interval is the printed one, slid back inside [0, 1] at fixed width when
    it overhangs (this keeps his Malus average intact).

    Returns four int64 arrays of length m: number of A=+1, number of B=+1,
    number of AB=+1, and number of draws outside the validity region.
    """
    ab = np.asarray(ab, dtype=np.float64)[:, None]
    lam_a = 0.5 * (1.0 + ua)
    x1 = 0.25 * (1.0 + ua - vb + ab)
    width = 0.5 * (1.0 + vb)
    lo = np.minimum(np.maximum(x1, 0.0), 1.0 - width)
    hi = lo + width
    a_plus = lam <= lam_a
    b_plus = (lo <= lam) & (lam <= hi)
    invalid = ~((np.abs(ab + ua) <= 1.0 - vb + VALID_TOL)
                & (np.abs(ab - ua) <= 1.0 + vb + VALID_TOL))
    return (a_plus.sum(axis=1, dtype=np.int64),
            b_plus.sum(axis=1, dtype=np.int64),
            (a_plus == b_plus).sum(axis=1, dtype=np.int64),
            invalid.sum(axis=1, dtype=np.int64))


def _outcome_counts_loop(ua, vb, ab, lam):
    m, n = ua.shape
    n_a = np.zeros(m, dtype=np.int64)
    n_b = np.zeros(m, dtype=np.int64)
    n_ab = np.zeros(m, dtype=np.int64)
    n_bad = np.zeros(m, dtype=np.int64)
    for r in range(m):
        c = ab[r]
        ka = kb = kab = kbad = 0
        for i in range(n):
            p = ua[r, i]
            q = vb[r, i]
            t = lam[r, i]
            x1 = 0.25 * (1.0 + p - q + c)
            width = 0.5 * (1.0 + q)
            lo = min(max(x1, 0.0), 1.0 - width)
            a_plus = t <= 0.5 * (1.0 + p)
            b_plus = (lo <= t) & (t <= lo + width)
            # counters as integer adds keep the loop free of unpredictable branches
            ka += a_plus
            kb += b_plus
            kab += a_plus == b_plus
            kbad += (abs(c + p) > 1.0 - q + VALID_TOL) | (abs(c - p) > 1.0 + q + VALID_TOL)
        n_a[r] = ka
        n_b[r] = kb
        n_ab[r] = kab
        n_bad[r] = kbad
    return n_a, n_b, n_ab, n_bad


def exact_mean_product_numpy(ua, vb, ab):
    """Lambda-average of A*B, integrated exactly over the piecewise outcomes.

    Broadcasts over its arguments. Uses the same interval placement as
    ``outcome_counts``; inside the validity region the result is -a.b.
    """
    lam_a = 0.5 * (1.0 + ua)
    x1 = 0.25 * (1.0 + ua - vb + ab)
    width = 0.5 * (1.0 + vb)
    lo = np.minimum(np.maximum(x1, 0.0), 1.0 - width)
    hi = lo + width
    overlap = np.maximum(0.0, np.minimum(lam_a, hi) - lo)
    # P(A != B) = |[0, lam_a] xor [lo, hi]|
    return 1.0 - 2.0 * (lam_a + width - 2.0 * overlap)


if HAVE_NUMBA:
    _outcome_counts_jit = njit(cache=True, nogil=True)(_outcome_counts_loop)

    def outcome_counts(ua, vb, ab, lam):
        return _outcome_counts_jit(np.ascontiguousarray(ua, dtype=np.float64),
                                   np.ascontiguousarray(vb, dtype=np.float64),
                                   np.ascontiguousarray(ab, dtype=np.float64),
                                   np.ascontiguousarray(lam, dtype=np.float64))
else:
    outcome_counts = outcome_counts_numpy

outcome_counts.__doc__ = outcome_counts_numpy.__doc__
exact_mean_product = exact_mean_product_numpy
