from typing import Optional, Sequence

import bittensor as bt
import numpy as np

from dualgraph.data.types import CaseTrajectory
from dualgraph.model.types import ModelKind
from dualgraph.trainer.evaluate import evaluate
from dualgraph.trainer.train import train
from dualgraph.trainer.types import AblationRow, AblationSummary, TrainConfig
from dualgraph.utils.maths import relative_reduction

ABLATION_HEADER = [
    "seed",
    "model",
    "stress_rmse",
    "peeq_rmse",
    "stress_rmse_norm",
    "peeq_rmse_norm",
    "parameters",
]


def ablate(
    train_cases: list[CaseTrajectory],
    val_cases: list[CaseTrajectory],
    test_cases: list[CaseTrajectory],
    config: TrainConfig,
    seeds: Sequence[int] = (0, 1, 2),
    kinds: tuple[ModelKind, ModelKind] = (ModelKind.dual, ModelKind.baseline),
    out_dir: Optional[str] = None,
) -> AblationSummary:
    """
    Trains both model kinds on the same split with the same config and seeds and
    compares element-level stress and PEEQ RMSE on the test cases. Reductions
    are (1 - first / second) in percent, median over seeds.
    """
    rows = []
    stress_by_seed, peeq_by_seed = [], []
    for seed in seeds:
        scores = []
        for i, kind in enumerate(kinds):
            cfg = config.model_copy(update={"seed": int(seed), "kind": kind})
            run_dir = f"{out_dir}/{kind.value}_{i}_seed{seed}" if out_dir else None
            result = train(train_cases, val_cases, cfg, out_dir=run_dir)
            metrics = evaluate(result.model, test_cases, cfg.batch_size).metrics
            row = AblationRow(
                seed=int(seed),
                kind=kind,
                stress_rmse=metrics.s.rmse,
                peeq_rmse=metrics.peeq.rmse,
                stress_rmse_phys=metrics.s.rmse_phys,
                peeq_rmse_phys=metrics.peeq.rmse_phys,
                parameters=result.model.params.count(),
            )
            rows.append(row)
            scores.append(row)
        candidate, reference = scores
        stress_by_seed.append(relative_reduction(reference.stress_rmse_phys, candidate.stress_rmse_phys))
        peeq_by_seed.append(relative_reduction(reference.peeq_rmse_phys, candidate.peeq_rmse_phys))
        bt.logging.info(
            f"Seed {seed}: stress reduction {stress_by_seed[-1]:.2f}%, PEEQ reduction {peeq_by_seed[-1]:.2f}%"
        )

    return AblationSummary(
        rows=rows,
        stress_reduction_pct=float(np.median(stress_by_seed)),
        peeq_reduction_pct=float(np.median(peeq_by_seed)),
        stress_reduction_by_seed=stress_by_seed,
        peeq_reduction_by_seed=peeq_by_seed,
    )


def ablation_rows(summary: AblationSummary) -> list[list]:
    return [
        [
            r.seed,
            r.kind.value,
            r.stress_rmse_phys,
            r.peeq_rmse_phys,
            r.stress_rmse,
            r.peeq_rmse,
            r.parameters,
        ]
        for r in summary.rows
    ]
