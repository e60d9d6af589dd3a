from .tensor import Tensor
from .tape import Tape, no_grad, backward, active_tape
from . import ops
from .optim import (
    OptimizerState,
    init_optimizer_state,
    clip_global_norm,
    global_norm,
    adam_step,
    plateau_step,
)
from .gradcheck import check_gradients, finite_difference_gradients, relative_error
