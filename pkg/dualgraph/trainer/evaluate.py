from dataclasses import dataclass, field
from typing import Optional

import bittensor as bt
import numpy as np

from dualgraph.data.types import CaseTrajectory, NormStats
from dualgraph.exceptions import EmptySplitError
from dualgraph.mesh.hexahedron import centre_node
from dualgraph.model.batch import PreparedCase, iterate_batches
from dualgraph.model.surrogate import Surrogate
from dualgraph.model.types import RolloutMode, RolloutResult
from dualgraph.trainer.train import prepare_cases
from dualgraph.trainer.types import ChannelMetrics, Metrics
from dualgraph.utils.maths import r2_score, rmse

CHANNEL_UNITS = {"u": "mm", "s": "MPa", "peeq": "", "rf2": "kN"}

CURVE_HEADER = [
    "case_id",
    "frame",
    "alpha",
    "deflection_true",
    "deflection_pred",
    "rf2_true",
    "rf2_pred",
]
FRAME_ERROR_HEADER = ["frame", "u_rmse", "s_rmse", "peeq_rmse", "rf2_rmse"]


@dataclass
class EvaluationReport:
    metrics: Metrics
    results: list[RolloutResult]
    curves: list[list] = field(default_factory=list)
    frame_errors: list[list] = field(default_factory=list)


def _targets(prepared: PreparedCase, channel: str) -> np.ndarray:
    return getattr(prepared, channel)


def compute_metrics(
    results: list[RolloutResult], prepared: list[PreparedCase], stats: NormStats
) -> Metrics:
    """
    RMSE and R^2 over every frame, point and component of all cases. Physical
    RMSE is the normalized RMSE times the channel std.
    """
    if not results:
        raise EmptySplitError("no cases to evaluate")
    channels = {}
    for channel in ("u", "s", "peeq", "rf2"):
        pred = np.concatenate([getattr(r, channel).ravel() for r in results])
        target = np.concatenate([_targets(p, channel).ravel() for p in prepared])
        error = rmse(pred, target)
        channels[channel] = ChannelMetrics(
            rmse=error,
            r2=r2_score(pred, target),
            rmse_phys=error * stats.std(channel),
            unit=CHANNEL_UNITS[channel],
        )
    seconds = [r.seconds for r in results if r.seconds is not None]
    return Metrics(
        **channels,
        n_cases=len(results),
        mean_rollout_seconds=float(np.mean(seconds)) if seconds else None,
    )


def force_deflection_rows(result: RolloutResult, prepared: PreparedCase) -> list[list]:
    """Midspan deflection (downward positive) against RF2 for every frame."""
    case = prepared.case
    mid = centre_node(case.coords)
    rows = []
    for t in range(result.n_frames):
        rows.append(
            [
                case.case_id,
                t,
                float(prepared.alpha[t]),
                float(-case.u[t, mid, 1]),
                float(-result.u_phys[t, mid, 1]),
                float(case.rf2[t]),
                float(result.rf2_phys[t]),
            ]
        )
    return rows


def frame_error_rows(results: list[RolloutResult], prepared: list[PreparedCase]) -> list[list]:
    """Normalized RMSE per frame and channel, pooled over cases."""
    rows = []
    for t in range(results[0].n_frames):
        row = [t]
        for channel in ("u", "s", "peeq", "rf2"):
            pred = np.concatenate([np.ravel(getattr(r, channel)[t]) for r in results])
            target = np.concatenate([np.ravel(_targets(p, channel)[t]) for p in prepared])
            row.append(rmse(pred, target))
        rows.append(row)
    return rows


def evaluate(
    model: Surrogate,
    cases: list[CaseTrajectory],
    batch_size: int = 8,
    mode: RolloutMode = RolloutMode.free,
    prepared: Optional[list[PreparedCase]] = None,
) -> EvaluationReport:
    """
    Rolls out every case with the model's stored statistics and scores it.
    """
    if prepared is None:
        prepared = prepare_cases(cases, model.stats, model.config.lambda_max_mode)
    if not prepared:
        raise EmptySplitError("no cases to evaluate")

    results = []
    for batch in iterate_batches(prepared, batch_size):
        results.extend(model.predict(batch, mode))

    metrics = compute_metrics(results, prepared, model.stats)
    curves = [row for r, p in zip(results, prepared) for row in force_deflection_rows(r, p)]
    bt.logging.info(
        f"Evaluated {len(results)} cases: "
        + ", ".join(f"{k} RMSE {c.rmse_phys:.4g}{c.unit}" for k, c in metrics.channels().items())
    )
    return EvaluationReport(
        metrics=metrics,
        results=results,
        curves=curves,
        frame_errors=frame_error_rows(results, prepared),
    )
