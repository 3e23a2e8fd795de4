from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class CorrelationEstimate:
    value: float
    std_error: float
    total_counts: int

    def __post_init__(self):
        if abs(self.value) > 1.0 + 1e-12:
            raise ValueError(f"correlation {self.value} outside [-1, 1]")
        if self.std_error < 0:
            raise ValueError("standard error must be nonnegative")

    def to_dict(self):
        return asdict(self)


def estimate_from_products(n_plus, n_per_row):
    """Combine per-row counts of AB=+1 into one correlation estimate.

    Rows are strata of equal size (one setting pair each); the estimate is the
    mean of the row means and its error adds the binomial row variances.
    """
    n_plus = np.asarray(n_plus, dtype=np.int64)
    rows = n_plus.size
    means = (2.0 * n_plus - n_per_row) / n_per_row
    value = float(means.mean())
    var = float(np.sum(1.0 - means**2)) / (n_per_row * rows**2)
    return CorrelationEstimate(value, float(np.sqrt(max(var, 0.0))), int(rows * n_per_row))
