import math

import numpy as np


def rmse(pred, target) -> float:
    pred, target = np.asarray(pred, dtype=np.float64), np.asarray(target, dtype=np.float64)
    return float(np.sqrt(np.mean((pred - target) ** 2)))


def r2_score(pred, target) -> float:
    """
    1 - SS_res / SS_tot over all entries. NaN when the target is constant.
    """
    pred, target = np.asarray(pred, dtype=np.float64), np.asarray(target, dtype=np.float64)
    ss_res = float(np.sum((target - pred) ** 2))
    ss_tot = float(np.sum((target - target.mean()) ** 2))
    if ss_tot == 0.0:
        return math.nan
    return 1.0 - ss_res / ss_tot


def relative_reduction(reference: float, candidate: float) -> float:
    """(1 - candidate / reference) in percent."""
    if reference == 0.0:
        return 0.0
    return (1.0 - candidate / reference) * 100.0
