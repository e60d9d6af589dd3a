from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field

from dualgraph.autodiff.tensor import Tensor

# feature columns: coords(3) | displacement(3) | increment(3) | alpha(1) | load indicator(1) | [stress feedback(1)]
FEATURE_COLUMNS = {
    "coords": slice(0, 3),
    "displacement": slice(3, 6),
    "increment": slice(6, 9),
    "alpha": slice(9, 10),
    "indicator": slice(10, 11),
    "stress_feedback": slice(11, 12),
}
BASE_FEATURES = 11


class ModelKind(str, Enum):
    dual = "dual"
    baseline = "baseline"


class RolloutMode(str, Enum):
    free = "free"
    teacher = "teacher"


class ModelConfig(BaseModel):
    kind: ModelKind = ModelKind.dual
    hidden: int = Field(default=256, ge=1, description="GConvGRU hidden size")
    cheb_order: int = Field(default=2, ge=0, description="Chebyshev filter order K")
    mlp_hidden: int = Field(default=256, ge=1, description="hidden width of the decoder heads")
    stress_feedback: bool = Field(
        default=False, description="feed back nodal averages of the previous stress prediction"
    )
    lambda_max_mode: str = Field(default="fixed", pattern="^(fixed|power)$")
    seed: int = 0

    @property
    def n_features(self) -> int:
        return BASE_FEATURES + int(self.stress_feedback)


@dataclass
class RolloutTrace:
    """
    Per-frame differentiable outputs of one rollout over a (merged) batch, in
    normalized space: u [N x 3], s and peeq [E x 1], rf2 [C x 1].
    """

    u: list[Tensor] = field(default_factory=list)
    s: list[Tensor] = field(default_factory=list)
    peeq: list[Tensor] = field(default_factory=list)
    rf2: list[Tensor] = field(default_factory=list)
    # nodal stress/PEEQ proxies of the single-graph model
    s_node: list[Tensor] = field(default_factory=list)
    peeq_node: list[Tensor] = field(default_factory=list)

    @property
    def n_frames(self) -> int:
        return len(self.u)


@dataclass
class RolloutResult:
    """
    Trajectory of one case. Normalized arrays plus their physical-unit copies.
    """

    case_id: str
    u: np.ndarray
    s: np.ndarray
    peeq: np.ndarray
    rf2: np.ndarray
    u_phys: np.ndarray
    s_phys: np.ndarray
    peeq_phys: np.ndarray
    rf2_phys: np.ndarray
    seconds: Optional[float] = None

    @property
    def n_frames(self) -> int:
        return int(self.u.shape[0])
