import json
import os
from typing import Optional

import bittensor as bt
from pydantic import BaseModel, Field, ValidationError

import dualgraph
from dualgraph.data.blobs import read_blob, write_blob
from dualgraph.data.types import BlobEntry, NormStats
from dualgraph.exceptions import CaseFormatError, MissingBlobError, StatsMismatchError
from dualgraph.model.surrogate import Surrogate, build_model
from dualgraph.model.types import ModelConfig
from dualgraph.trainer.types import LossWeights, TrainConfig

CHECKPOINT_NAME = "checkpoint.json"
CHECKPOINT_SCHEMA_VERSION = 1


class CheckpointManifest(BaseModel):
    schema_version: int = CHECKPOINT_SCHEMA_VERSION
    engine_version: str = dualgraph.__version__
    model: ModelConfig
    train: TrainConfig
    config_hash: str
    seed: int
    loss_weights: LossWeights
    norm_stats: NormStats
    shapes: dict[str, list[int]]
    parameter_counts: dict[str, int]
    best_epoch: int = -1
    best_val_loss: Optional[float] = None
    blobs: list[BlobEntry] = Field(default_factory=list)


def save_checkpoint(
    path: str,
    model: Surrogate,
    train_config: TrainConfig,
    best_epoch: int = -1,
    best_val_loss: Optional[float] = None,
) -> CheckpointManifest:
    """
    Writes the parameters as raw blobs next to a JSON manifest holding shapes,
    seed, config hash and the normalization statistics.
    """
    os.makedirs(path, exist_ok=True)
    blobs = [write_blob(path, name, tensor.value) for name, tensor in model.params.items()]
    manifest = CheckpointManifest(
        model=model.config,
        train=train_config,
        config_hash=train_config.config_hash(),
        seed=train_config.seed,
        loss_weights=train_config.weights,
        norm_stats=model.stats,
        shapes=model.params.shapes(),
        parameter_counts=model.count_parameters(),
        best_epoch=best_epoch,
        best_val_loss=best_val_loss,
        blobs=blobs,
    )
    with open(os.path.join(path, CHECKPOINT_NAME), "w") as f:
        f.write(manifest.model_dump_json(indent=2))
    bt.logging.debug(f"Saved checkpoint (epoch {best_epoch}) to {path}")
    return manifest


def read_checkpoint_manifest(path: str) -> CheckpointManifest:
    manifest_path = os.path.join(path, CHECKPOINT_NAME)
    if not os.path.exists(manifest_path):
        raise MissingBlobError("missing checkpoint", path=manifest_path)
    try:
        with open(manifest_path, "r") as f:
            return CheckpointManifest.model_validate(json.load(f))
    except (ValidationError, json.JSONDecodeError) as e:
        raise CaseFormatError(f"invalid checkpoint manifest: {e}", path=manifest_path)


def load_checkpoint(path: str) -> tuple[Surrogate, CheckpointManifest]:
    manifest = read_checkpoint_manifest(path)
    model = build_model(manifest.model, manifest.norm_stats)
    if model.params.shapes() != manifest.shapes:
        raise CaseFormatError("checkpoint shapes do not match the model config", path=path)
    values = {entry.name: read_blob(path, entry) for entry in manifest.blobs}
    try:
        model.params.load(values)
    except (KeyError, ValueError) as e:
        raise CaseFormatError(f"checkpoint parameters do not match: {e}", path=path)
    bt.logging.info(
        f"Loaded {manifest.model.kind.value} checkpoint from {path} (best epoch {manifest.best_epoch})"
    )
    return model, manifest


def check_stats(stats: NormStats, expected: NormStats, tol: float = 1e-9):
    """Cases must be normalized with the statistics stored in the checkpoint."""
    if set(stats.channels) != set(expected.channels):
        raise StatsMismatchError(
            f"channels {sorted(stats.channels)} differ from checkpoint {sorted(expected.channels)}"
        )
    for name, channel in stats.channels.items():
        ref = expected.channels[name]
        scale = max(1.0, abs(ref.mean), ref.std)
        if abs(channel.mean - ref.mean) > tol * scale or abs(channel.std - ref.std) > tol * scale:
            raise StatsMismatchError(f"statistics for '{name}' differ from the checkpoint")
