"""
Gradient audits: every differentiable primitive and the full training loss
against central finite differences.
"""

from typing import Callable

import numpy as np

from dualgraph.autodiff import ops
from dualgraph.autodiff.gradcheck import check_gradients
from dualgraph.autodiff.tensor import Tensor
from dualgraph.data.case_store import compute_norm_stats
from dualgraph.mesh.graph import build_dual_graph
from dualgraph.mesh.hexahedron import structured_hex_grid
from dualgraph.model.batch import make_batch, prepare_case
from dualgraph.model.surrogate import build_model
from dualgraph.model.types import ModelConfig, ModelKind
from dualgraph.synth.generator import single_hex_case
from dualgraph.trainer.loss import multitask_loss
from dualgraph.trainer.types import LossWeights


def _param(rng, *shape, name="x", offset=0.0) -> Tensor:
    value = rng.normal(size=shape)
    if offset:
        value = value + np.sign(value) * offset
    return Tensor(value, requires_grad=True, name=name)


def primitive_cases(seed: int = 0) -> dict[str, tuple[Callable[[], Tensor], dict[str, Tensor]]]:
    """
    Scalar test functions per primitive. Each output is contracted with a fixed
    random matrix so every entry of the gradient is exercised.
    """
    rng = np.random.default_rng(seed)
    coords, connectivity = structured_hex_grid(2, 1, 1)
    dual = build_dual_graph(connectivity, coords.shape[0])
    laplacian = dual.node_laplacian.matrix
    n = dual.n_nodes

    def contract(shape):
        direction = rng.normal(size=shape)
        return lambda out: ops.sum_all(ops.mul(out, direction))

    a, b = _param(rng, 4, 3, name="a"), _param(rng, 4, 3, name="b")
    row = _param(rng, 1, 3, name="row")
    w = _param(rng, 3, 5, name="w")
    bias = _param(rng, 1, 5, name="bias")
    kinked = _param(rng, 4, 3, name="kinked", offset=0.1)
    x_n = _param(rng, n, 3, name="x_n")
    cheb_w = _param(rng, 3, 3, 2, name="cheb_w")
    segment = np.array([0, 1, 1, 0])
    index = np.array([0, 2, 2, 3, 1])
    row_weights = rng.uniform(0.5, 1.5, size=4)
    target = rng.normal(size=(4, 3))

    c43, c45, c53 = contract((4, 3)), contract((4, 5)), contract((5, 3))
    c_n3, c_n2, c23 = contract((n, 3)), contract((n, 2)), contract((2, 3))
    c46 = contract((4, 6))

    return {
        "add": (lambda: c43(ops.add(a, row)), {"a": a, "row": row}),
        "sub": (lambda: c43(ops.sub(a, b)), {"a": a, "b": b}),
        "mul": (lambda: c43(ops.mul(a, b)), {"a": a, "b": b}),
        "scale": (lambda: c43(ops.scale(a, -1.7)), {"a": a}),
        "matmul": (lambda: c45(ops.matmul(a, w)), {"a": a, "w": w}),
        "linear": (lambda: c45(ops.linear(a, w, bias)), {"a": a, "w": w, "bias": bias}),
        "sparse_dense_matmul": (
            lambda: c_n3(ops.sparse_dense_matmul(laplacian, x_n)),
            {"x_n": x_n},
        ),
        "sigmoid": (lambda: c43(ops.sigmoid(a)), {"a": a}),
        "tanh": (lambda: c43(ops.tanh(a)), {"a": a}),
        "relu": (lambda: c43(ops.relu(kinked)), {"kinked": kinked}),
        "softplus": (lambda: c43(ops.softplus(a)), {"a": a}),
        "concat_columns": (lambda: c46(ops.concat_columns([a, b])), {"a": a, "b": b}),
        "row_gather": (lambda: c53(ops.row_gather(a, index)), {"a": a}),
        "scatter_mean": (lambda: c23(ops.scatter_mean(a, segment, 2)), {"a": a}),
        "mean_all": (lambda: ops.mean_all(ops.mul(a, b)), {"a": a, "b": b}),
        "mse": (lambda: ops.mse(a, target), {"a": a}),
        "weighted_sse": (lambda: ops.weighted_sse(a, b, row_weights), {"a": a, "b": b}),
        "cheb_conv": (
            lambda: c_n2(ops.cheb_conv(laplacian, x_n, cheb_w)),
            {"x_n": x_n, "cheb_w": cheb_w},
        ),
    }


def primitive_audit(seed: int = 0, h: float = 1e-6) -> dict[str, float]:
    """Worst relative error per primitive."""
    return {
        name: max(check_gradients(fn, params, h).values())
        for name, (fn, params) in primitive_cases(seed).items()
    }


def model_audit(
    kind: ModelKind = ModelKind.dual,
    hidden: int = 8,
    frames: int = 3,
    seed: int = 0,
    h: float = 1e-6,
) -> dict[str, float]:
    """
    Relative error per parameter of the full loss (free rollout with stress
    feedback, all loss terms) on a single hexahedron.
    """
    case = single_hex_case(frames, seed)
    stats = compute_norm_stats([case])
    config = ModelConfig(
        kind=kind, hidden=hidden, mlp_hidden=hidden, stress_feedback=True, seed=seed
    )
    model = build_model(config, stats)
    batch = make_batch([prepare_case(case, stats)])
    weights = LossWeights(laplacian=0.01)

    def loss_fn() -> Tensor:
        loss, _ = multitask_loss(model.rollout(batch), batch, weights)
        return loss

    return check_gradients(loss_fn, model.params.as_dict(), h)
