"""Quantum predictions for the polarization singlet with isotropic visibility loss."""
import numpy as np


def _check_visibility(vis):
    if not 0.0 <= vis <= 1.0:
        raise ValueError(f"visibility must lie in [0, 1], got {vis}")


def singlet_correlation(a, b):
    return -float(np.dot(np.asarray(a, dtype=float), np.asarray(b, dtype=float)))


def visibility_correlation(a, b, vis):
    _check_visibility(vis)
    return vis * singlet_correlation(a, b)


def joint_probability(i, j, a, b, vis):
    """P(A=i, B=j) = (1 - i j V a.b)/4 for outcomes i, j in {+1, -1}.

    Marginals are 1/2 whatever the settings and the outcome-weighted sum
    reproduces -V a.b.
    """
    if i not in (1, -1) or j not in (1, -1):
        raise ValueError("outcomes must be +1 or -1")
    _check_visibility(vis)
    ab = float(np.dot(np.asarray(a, dtype=float), np.asarray(b, dtype=float)))
    return 0.25 * (1.0 - i * j * vis * ab)


def cell_probabilities(a, b, vis):
    """Probabilities of the (++, +-, -+, --) cells, in that order."""
    return np.array([joint_probability(i, j, a, b, vis) for i, j in ((1, 1), (1, -1), (-1, 1), (-1, -1))])
