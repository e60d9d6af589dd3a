from .types import (
    LossWeights,
    TrainConfig,
    ChannelMetrics,
    Metrics,
    EpochRecord,
    TrainHistory,
    AblationRow,
    AblationSummary,
)
from .loss import multitask_loss, laplacian_reg, laplacian_energy
from .checkpoint import save_checkpoint, load_checkpoint, read_checkpoint_manifest, check_stats
from .train import train, validation_loss, prepare_cases, TrainResult
from .evaluate import evaluate, compute_metrics, EvaluationReport
from .ablation import ablate
