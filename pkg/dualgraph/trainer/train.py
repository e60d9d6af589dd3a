import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import bittensor as bt
import numpy as np

from dualgraph.autodiff.optim import (
    adam_step,
    clip_global_norm,
    init_optimizer_state,
    plateau_step,
)
from dualgraph.autodiff.tape import Tape, backward, no_grad
from dualgraph.data.case_store import compute_norm_stats
from dualgraph.data.types import CaseTrajectory, NormStats
from dualgraph.exceptions import DivergenceError, EmptySplitError
from dualgraph.model.batch import Batch, PreparedCase, iterate_batches, prepare_case
from dualgraph.model.surrogate import Surrogate, build_model
from dualgraph.trainer.checkpoint import save_checkpoint
from dualgraph.trainer.loss import multitask_loss
from dualgraph.trainer.types import EpochRecord, LossWeights, TrainConfig, TrainHistory


@dataclass
class TrainResult:
    model: Surrogate
    history: TrainHistory
    stats: NormStats
    seconds: float


def prepare_cases(
    cases: list[CaseTrajectory], stats: NormStats, lambda_max_mode: str = "fixed"
) -> list[PreparedCase]:
    return [prepare_case(c, stats, lambda_max_mode) for c in cases]


def batch_loss(model: Surrogate, batch: Batch, weights: LossWeights) -> float:
    with no_grad():
        trace = model.rollout(batch)
        loss, _ = multitask_loss(trace, batch, weights)
    return loss.item()


def validation_loss(
    model: Surrogate,
    prepared: list[PreparedCase],
    weights: LossWeights,
    batch_size: int = 8,
    workers: int = 1,
) -> float:
    """
    Case-weighted mean loss over free rollouts without gradients. Batches may be
    evaluated on several threads; the reduction order is fixed.
    """
    if not prepared:
        raise EmptySplitError("validation split is empty")
    batches = list(iterate_batches(prepared, batch_size))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            losses = list(pool.map(lambda b: batch_loss(model, b, weights), batches))
    else:
        losses = [batch_loss(model, b, weights) for b in batches]

    total = sum(loss * b.n_cases for loss, b in zip(losses, batches))
    return total / len(prepared)


def _snapshot(model: Surrogate) -> dict[str, np.ndarray]:
    return {name: t.value.copy() for name, t in model.params.items()}


def train(
    train_cases: list[CaseTrajectory],
    val_cases: list[CaseTrajectory],
    config: TrainConfig,
    out_dir: Optional[str] = None,
    wandb_logger=None,
) -> TrainResult:
    """
    Backprop-through-rollout training with model selection on validation loss.

    Normalization statistics come from the training cases only. When `out_dir`
    is given the best checkpoint is written to `out_dir/checkpoint` whenever the
    validation loss improves.
    """
    if not train_cases:
        raise EmptySplitError("training split is empty")
    if not val_cases:
        raise EmptySplitError("validation split is empty")

    start = time.perf_counter()
    stats = compute_norm_stats(train_cases)
    prep_train = prepare_cases(train_cases, stats, config.lambda_max_mode)
    prep_val = prepare_cases(val_cases, stats, config.lambda_max_mode)

    model = build_model(config.model_config_for(), stats)
    params = model.params.as_dict()
    opt = init_optimizer_state(
        params,
        lr=config.lr,
        patience=config.plateau_patience,
        factor=config.plateau_factor,
    )
    rng = np.random.default_rng(config.seed)
    history = TrainHistory()
    best_values = _snapshot(model)
    checkpoint_dir = os.path.join(out_dir, "checkpoint") if out_dir else None

    bt.logging.info(
        f"Training {model.kind.value} model ({model.params.count()} parameters) on "
        f"{len(prep_train)} cases, validating on {len(prep_val)}"
    )

    for epoch in range(config.epochs):
        order = rng.permutation(len(prep_train))
        total, seen, grad_norm = 0.0, 0, 0.0
        for b, batch in enumerate(iterate_batches(prep_train, config.batch_size, order)):
            try:
                with Tape() as tape:
                    trace = model.rollout(batch)
                    loss, terms = multitask_loss(trace, batch, config.weights)
                if not math.isfinite(loss.item()):
                    raise DivergenceError("non-finite training loss")
                grads = backward(tape, loss, params)
                grads, grad_norm = clip_global_norm(grads, config.clip)
                adam_step(params, grads, opt)
            except DivergenceError as e:
                raise e.with_context(epoch=epoch, batch=b)
            total += loss.item() * batch.n_cases
            seen += batch.n_cases
            bt.logging.trace(f"epoch {epoch} batch {b}: loss {loss.item():.6g} {terms}")

        train_loss = total / seen
        val_loss = validation_loss(
            model, prep_val, config.weights, config.batch_size, config.val_workers
        )
        if not math.isfinite(val_loss):
            raise DivergenceError("non-finite validation loss", epoch=epoch)
        lr_used = opt.lr
        plateau_step(opt, val_loss)

        record = EpochRecord(
            epoch=epoch, train_loss=train_loss, val_loss=val_loss, lr=lr_used, grad_norm=grad_norm
        )
        history.records.append(record)
        improved = val_loss < history.best_val_loss
        if improved:
            history.best_val_loss = val_loss
            history.best_epoch = epoch
            best_values = _snapshot(model)
            if checkpoint_dir:
                save_checkpoint(checkpoint_dir, model, config, epoch, val_loss)

        bt.logging.info(
            f"Epoch {epoch}: train {train_loss:.6g}, val {val_loss:.6g}, lr {lr_used:.3g}"
            + (" (best)" if improved else "")
        )
        if wandb_logger is not None:
            wandb_logger.log(record.model_dump())

    model.params.load(best_values)
    seconds = time.perf_counter() - start
    bt.logging.success(
        f"Training finished in {seconds:.1f}s, best val loss {history.best_val_loss:.6g} at epoch {history.best_epoch}"
    )
    return TrainResult(model=model, history=history, stats=stats, seconds=seconds)


def history_rows(history: TrainHistory) -> list[list]:
    return [[r.epoch, r.train_loss, r.val_loss, r.lr] for r in history.records]


HISTORY_HEADER = ["epoch", "train_loss", "val_loss", "lr"]
