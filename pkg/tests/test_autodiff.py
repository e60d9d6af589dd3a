import logging
import threading

import numpy as np
import pytest
import scipy.sparse as sp

from dualgraph.autodiff import (
    Tape,
    Tensor,
    active_tape,
    adam_step,
    backward,
    clip_global_norm,
    init_optimizer_state,
    no_grad,
    ops,
    plateau_step,
)
from dualgraph.exceptions import DivergenceError, NonScalarLossError, ShapeError
from dualgraph.trainer.audit import primitive_audit
from tests.utils.misc import compare_lists

logger = logging.getLogger(__name__)


def test_primitive_gradients():
    errors = primitive_audit(seed=0)
    for name, error in errors.items():
        logger.info(f"{name}: {error:.3e}")
    assert len(errors) >= 18
    assert max(errors.values()) < 1e-6


def test_primitive_gradients_other_seed():
    assert max(primitive_audit(seed=3).values()) < 1e-6


def test_reused_input_accumulates():
    x = Tensor(np.array([[1.0, -2.0, 3.0]]), requires_grad=True)
    with Tape() as tape:
        loss = ops.sum_all(ops.mul(x, x))
    grads = backward(tape, loss, {"x": x})
    assert compare_lists(grads["x"].ravel().tolist(), [2.0, -4.0, 6.0])


def test_unreached_parameter_gets_zeros():
    x = Tensor(np.ones((2, 2)), requires_grad=True)
    unused = Tensor(np.ones((3,)), requires_grad=True)
    with Tape() as tape:
        loss = ops.mean_all(x)
    grads = backward(tape, loss, {"x": x, "unused": unused})
    assert np.all(grads["unused"] == 0.0)
    assert np.allclose(grads["x"], 0.25)


def test_no_grad_records_nothing():
    x = Tensor(np.ones((2, 2)), requires_grad=True)
    with Tape() as tape:
        with no_grad():
            y = ops.tanh(x)
        assert active_tape() is tape
    assert len(tape) == 0
    assert not y.requires_grad
    assert active_tape() is None


def test_tape_order_is_execution_order():
    x = Tensor(np.ones((2, 2)), requires_grad=True)
    with Tape() as tape:
        ops.mean_all(ops.sigmoid(ops.scale(x, 2.0)))
    assert tape.ops() == ["scale", "sigmoid", "mean_all"]


def test_non_scalar_loss():
    x = Tensor(np.ones((2, 2)), requires_grad=True)
    with Tape() as tape:
        y = ops.tanh(x)
    with pytest.raises(NonScalarLossError):
        backward(tape, y, {"x": x})


def test_shape_errors():
    with pytest.raises(ShapeError):
        ops.matmul(np.ones((2, 3)), np.ones((2, 3)))
    with pytest.raises(ShapeError):
        ops.add(np.ones((2, 3)), np.ones((3, 2)))
    with pytest.raises(ShapeError):
        ops.concat_columns([np.ones((2, 1)), np.ones((3, 1))])


def test_tapes_are_per_thread():
    x = Tensor(np.ones((2, 2)), requires_grad=True)
    seen = {}

    def worker():
        seen["tape"] = active_tape()
        ops.tanh(x)

    with Tape() as tape:
        thread = threading.Thread(target=worker)
        thread.start()
        thread.join()
    assert seen["tape"] is None
    assert len(tape) == 0


def test_cheb_conv_matches_dense_recurrence():
    rng = np.random.default_rng(0)
    dense = rng.normal(size=(5, 5))
    dense = 0.2 * (dense + dense.T)
    x = rng.normal(size=(5, 3))
    w = rng.normal(size=(4, 3, 2))

    t = [np.eye(5), dense]
    t.append(2.0 * dense @ t[1] - t[0])
    t.append(2.0 * dense @ t[2] - t[1])
    expected = sum(t[k] @ x @ w[k] for k in range(4))

    out = ops.cheb_conv(sp.csr_matrix(dense), x, w)
    assert np.allclose(out.value, expected, atol=1e-12)


def test_clip_global_norm():
    grads = {"a": np.array([3.0]), "b": np.array([4.0])}
    clipped, norm = clip_global_norm(grads, max_norm=0.5)
    assert norm == 5.0
    assert abs(np.sqrt(clipped["a"] ** 2 + clipped["b"] ** 2)[0] - 0.5) < 1e-12
    assert abs(clipped["a"][0] / clipped["b"][0] - 0.75) < 1e-12

    small = {"a": np.array([0.1])}
    unchanged, _ = clip_global_norm(small, max_norm=0.5)
    assert unchanged["a"][0] == 0.1

    with pytest.raises(DivergenceError):
        clip_global_norm({"a": np.array([np.nan])})


def test_adam_first_step():
    p = Tensor(np.array([1.0, -1.0, 0.5]), requires_grad=True)
    params = {"p": p}
    state = init_optimizer_state(params, lr=3e-3)
    adam_step(params, {"p": np.array([0.2, -0.7, 1e-3])}, state)
    # bias-corrected first step moves every entry by about lr against its gradient sign
    assert np.allclose(p.value, [1.0 - 3e-3, -1.0 + 3e-3, 0.5 - 3e-3], atol=1e-7)
    assert state.step == 1


def test_adam_minimizes_quadratic():
    target = np.array([[1.5, -2.0], [0.25, 3.0]])
    w = Tensor(np.zeros((2, 2)), requires_grad=True)
    params = {"w": w}
    state = init_optimizer_state(params, lr=0.05)
    for _ in range(500):
        with Tape() as tape:
            loss = ops.mse(w, target)
        adam_step(params, backward(tape, loss, params), state)
    assert np.abs(w.value - target).max() < 5e-2


def test_plateau_scheduler():
    p = {"p": Tensor(np.zeros(1), requires_grad=True)}
    state = init_optimizer_state(p, lr=1.0, patience=3, factor=0.5)
    lrs = [plateau_step(state, loss) for loss in [1.0, 1.0, 1.0, 1.0, 1.0, 0.5, 0.5]]
    logger.info(f"learning rates: {lrs}")
    assert compare_lists(lrs, [1.0, 1.0, 1.0, 1.0, 0.5, 0.5, 0.5])
    assert state.lr_reductions == 1
    assert state.best_val_loss == 0.5
