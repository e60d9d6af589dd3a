from .types import ModelConfig, ModelKind, RolloutMode, RolloutResult, RolloutTrace, FEATURE_COLUMNS
from .params import ParamStore
from .layers import GConvGRUCell, MLP, gconv_gru_step
from .batch import PreparedCase, Batch, prepare_case, make_batch, iterate_batches
from .features import assemble_features
from .surrogate import (
    Surrogate,
    DualGraphSurrogate,
    SingleGraphBaseline,
    baseline_forward,
    build_model,
)
