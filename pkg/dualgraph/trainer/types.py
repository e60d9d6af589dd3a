import hashlib
import math
from typing import Optional

from pydantic import BaseModel, Field

from dualgraph.model.types import ModelConfig, ModelKind


class LossWeights(BaseModel):
    """Multi-task weights. Tunable defaults, not fitted values."""

    stress: float = Field(default=1.0, ge=0.0)
    rf2: float = Field(default=1.0, ge=0.0)
    peeq: float = Field(default=1.0, ge=0.0)
    laplacian: float = Field(default=0.01, ge=0.0)


class TrainConfig(BaseModel):
    epochs: int = Field(default=1000, ge=1)
    batch_size: int = Field(default=8, ge=1, description="cases per batch")
    lr: float = Field(default=3e-3, gt=0.0)
    clip: float = Field(default=0.5, gt=0.0, description="global gradient-norm limit")
    cheb_order: int = Field(default=2, ge=0)
    hidden: int = Field(default=256, ge=1)
    mlp_hidden: int = Field(default=256, ge=1)
    seed: int = 0
    weights: LossWeights = Field(default_factory=LossWeights)
    stress_feedback: bool = False
    split_ratios: tuple[float, float, float] = (0.7, 0.15, 0.15)
    kind: ModelKind = ModelKind.dual
    lambda_max_mode: str = Field(default="fixed", pattern="^(fixed|power)$")
    plateau_patience: int = Field(default=3, ge=0)
    plateau_factor: float = Field(default=0.5, gt=0.0, lt=1.0)
    val_workers: int = Field(default=1, ge=1, description="threads for validation rollouts")

    def model_config_for(self, kind: Optional[ModelKind] = None) -> ModelConfig:
        return ModelConfig(
            kind=kind or self.kind,
            hidden=self.hidden,
            cheb_order=self.cheb_order,
            mlp_hidden=self.mlp_hidden,
            stress_feedback=self.stress_feedback,
            lambda_max_mode=self.lambda_max_mode,
            seed=self.seed,
        )

    def config_hash(self) -> str:
        return hashlib.sha256(self.model_dump_json().encode("utf-8")).hexdigest()


class ChannelMetrics(BaseModel):
    rmse: float = Field(..., ge=0.0)
    r2: float
    rmse_phys: float = Field(..., ge=0.0)
    unit: str = ""


class Metrics(BaseModel):
    """RMSE and R^2 per output over all frames, points and components."""

    u: ChannelMetrics
    s: ChannelMetrics
    peeq: ChannelMetrics
    rf2: ChannelMetrics
    n_cases: int
    mean_rollout_seconds: Optional[float] = None

    def channels(self) -> dict[str, ChannelMetrics]:
        return {"u": self.u, "s": self.s, "peeq": self.peeq, "rf2": self.rf2}


class EpochRecord(BaseModel):
    epoch: int
    train_loss: float
    val_loss: float
    lr: float
    grad_norm: float = 0.0


class TrainHistory(BaseModel):
    records: list[EpochRecord] = Field(default_factory=list)
    best_epoch: int = -1
    best_val_loss: float = math.inf

    def train_losses(self) -> list[float]:
        return [r.train_loss for r in self.records]

    def val_losses(self) -> list[float]:
        return [r.val_loss for r in self.records]


class AblationRow(BaseModel):
    seed: int
    kind: ModelKind
    stress_rmse: float
    peeq_rmse: float
    stress_rmse_phys: float
    peeq_rmse_phys: float
    parameters: int


class AblationSummary(BaseModel):
    rows: list[AblationRow]
    stress_reduction_pct: float
    peeq_reduction_pct: float
    stress_reduction_by_seed: list[float]
    peeq_reduction_by_seed: list[float]
