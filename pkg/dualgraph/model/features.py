from typing import Optional

import numpy as np

from dualgraph.autodiff import ops
from dualgraph.autodiff.tensor import Tensor
from dualgraph.exceptions import InvalidInputError
from dualgraph.model.batch import Batch


def assemble_features(
    batch: Batch,
    t: int,
    prev_u: Optional[Tensor] = None,
    prev2_u: Optional[Tensor] = None,
    prev_s: Optional[Tensor] = None,
    u_shift: float = 0.0,
    s_shift: float = 0.0,
    stress_feedback: bool = False,
) -> Tensor:
    """
    Node features X_t [N x 11] or [N x 12] with columns coords(3),
    displacement(3), increment(3), alpha(1), load indicator(1) and optionally
    stress feedback(1).

    History tensors are normalized predictions; the shifts convert them back to
    std-scaled physical values so the undeformed state maps to exact zeros.

    Args:
        prev_u: displacement at t-1, [N x 3]
        prev2_u: displacement at t-2, [N x 3]
        prev_s: element stress at t-1, [E x 1]
    """
    if not 0 <= t < batch.n_frames:
        raise InvalidInputError(f"frame {t} outside [0, {batch.n_frames})")
    n = batch.coords.shape[0]

    if t == 0 or prev_u is None:
        displacement = Tensor(np.zeros((n, 3)))
    else:
        displacement = ops.add(prev_u, u_shift)
    if t < 2 or prev_u is None or prev2_u is None:
        increment = Tensor(np.zeros((n, 3)))
    else:
        increment = ops.sub(prev_u, prev2_u)

    columns = [batch.coords, displacement, increment, batch.alpha[t], batch.indicator]
    if stress_feedback:
        if t == 0 or prev_s is None:
            columns.append(Tensor(np.zeros((n, 1))))
        else:
            columns.append(
                ops.sparse_dense_matmul(
                    batch.graph.incidence.element_to_node_matrix, ops.add(prev_s, s_shift)
                )
            )
    return ops.concat_columns(columns)
