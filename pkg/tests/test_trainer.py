import logging
import math
import os

import numpy as np
import pytest

from dualgraph.autodiff.tape import no_grad
from dualgraph.autodiff.tensor import Tensor
from dualgraph.data.case_store import compute_norm_stats
from dualgraph.exceptions import (
    DivergenceError,
    EmptySplitError,
    MissingBlobError,
    StatsMismatchError,
)
from dualgraph.mesh.graph import build_dual_graph
from dualgraph.model import ModelKind, RolloutTrace, build_model, make_batch, prepare_case
from dualgraph.trainer import (
    LossWeights,
    check_stats,
    evaluate,
    laplacian_energy,
    laplacian_reg,
    load_checkpoint,
    multitask_loss,
    read_checkpoint_manifest,
    train,
    validation_loss,
)
from dualgraph.trainer.ablation import ablate, ablation_rows
from dualgraph.trainer.audit import model_audit
from dualgraph.utils.maths import r2_score, relative_reduction, rmse
from tests.utils.cases import beam_cases, small_model_config, small_train_config
from tests.utils.meshes import grid

logger = logging.getLogger(__name__)


def split_beams(frames=3):
    cases = beam_cases(frames=frames)
    return cases[:2], cases[2:3], cases[3:]


def target_trace(batch):
    """Rollout trace that reproduces the batch targets exactly."""
    return RolloutTrace(
        u=[Tensor(batch.u[t]) for t in range(batch.n_frames)],
        s=[Tensor(batch.s[t]) for t in range(batch.n_frames)],
        peeq=[Tensor(batch.peeq[t]) for t in range(batch.n_frames)],
        rf2=[Tensor(batch.rf2[t]) for t in range(batch.n_frames)],
    )


def test_metric_examples():
    assert abs(rmse([1.0, 2.0], [1.0, 4.0]) - math.sqrt(2.0)) < 1e-15
    assert rmse(np.ones(5), np.ones(5)) == 0.0
    assert abs(r2_score([1.0, 2.0, 4.0], [1.0, 2.0, 3.0]) - 0.5) < 1e-15
    assert r2_score([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 1.0
    assert r2_score([2.0, 2.0, 2.0], [1.0, 2.0, 3.0]) == 0.0
    assert math.isnan(r2_score([1.0, 2.0], [3.0, 3.0]))
    assert abs(relative_reduction(10.0, 6.0) - 40.0) < 1e-12
    assert relative_reduction(0.0, 1.0) == 0.0


def test_laplacian_energy_single_hex():
    rw = build_dual_graph(grid(1, 1, 1)[1]).node_rw_laplacian
    spike = np.zeros((8, 1))
    spike[0] = 1.0
    # the spiked node keeps 1, each of its three neighbours sees -1/3
    assert abs(laplacian_energy(spike, rw) - 4.0 / 3.0) < 1e-14
    assert laplacian_energy(np.full((8, 3), 2.5), rw) < 1e-28


def test_laplacian_reg_is_frame_mean():
    rw = build_dual_graph(grid(2, 1, 1)[1]).node_rw_laplacian
    rng = np.random.default_rng(0)
    frames = [rng.normal(size=(12, 3)) for _ in range(3)]
    expected = sum(laplacian_energy(u, rw) for u in frames) / (3 * 12)
    assert abs(laplacian_reg(frames, rw).item() - expected) < 1e-13


def test_linear_field_is_harmonic_inside():
    coords, conn = grid(4, 1, 1)
    rw = build_dual_graph(conn).node_rw_laplacian
    residual = rw @ coords[:, :1]
    interior = (coords[:, 0] > 0) & (coords[:, 0] < 4)
    assert np.abs(residual[interior]).max() < 1e-14
    assert np.abs(residual[~interior]).max() > 0.1


def test_loss_of_exact_prediction():
    cases = beam_cases(frames=3)[:2]
    stats = compute_norm_stats(cases)
    batch = make_batch([prepare_case(c, stats) for c in cases])
    loss, terms = multitask_loss(target_trace(batch), batch, LossWeights())
    logger.info(f"terms: {terms}")
    for name in ("u", "s", "peeq", "rf2"):
        assert terms[name] == 0.0
    # only the smoothness penalty of the true field is left
    assert terms["laplacian"] > 0.0
    assert abs(loss.item() - 0.01 * terms["laplacian"]) < 1e-15

    _, terms = multitask_loss(target_trace(batch), batch, LossWeights(laplacian=0.0))
    assert "laplacian" not in terms


def test_loss_weights_combine_terms():
    cases = beam_cases(frames=3)[:2]
    stats = compute_norm_stats(cases)
    batch = make_batch([prepare_case(c, stats) for c in cases])
    model = build_model(small_model_config(), stats)
    weights = LossWeights(stress=2.0, rf2=0.5, peeq=3.0, laplacian=0.1)
    with no_grad():
        loss, terms = multitask_loss(model.rollout(batch), batch, weights)
    expected = (
        terms["u"]
        + 2.0 * terms["s"]
        + 0.5 * terms["rf2"]
        + 3.0 * terms["peeq"]
        + 0.1 * terms["laplacian"]
    )
    assert abs(loss.item() - expected) < 1e-12 * max(1.0, expected)


def test_merged_loss_is_mean_of_case_losses():
    cases = beam_cases(frames=3)[:3]
    stats = compute_norm_stats(cases)
    prepared = [prepare_case(c, stats) for c in cases]
    for kind in (ModelKind.dual, ModelKind.baseline):
        model = build_model(small_model_config(kind, stress_feedback=True), stats)
        with no_grad():
            merged = make_batch(prepared)
            merged_loss, _ = multitask_loss(model.rollout(merged), merged, LossWeights())
            singles = []
            for p in prepared:
                batch = make_batch([p])
                loss, _ = multitask_loss(model.rollout(batch), batch, LossWeights())
                singles.append(loss.item())
        logger.info(f"{kind.value}: merged {merged_loss.item():.6g}, per case {singles}")
        assert abs(merged_loss.item() - np.mean(singles)) < 1e-10


@pytest.mark.parametrize("kind", [ModelKind.dual, ModelKind.baseline])
def test_full_loss_gradients(kind):
    errors = model_audit(kind)
    worst = max(errors, key=errors.get)
    logger.info(f"{kind.value}: worst parameter {worst} with error {errors[worst]:.3e}")
    assert errors[worst] < 1e-4


def test_training_is_deterministic():
    train_cases, val_cases, _ = split_beams()
    config = small_train_config()
    a = train(train_cases, val_cases, config)
    b = train(train_cases, val_cases, config)
    assert a.history.train_losses() == b.history.train_losses()
    assert a.history.val_losses() == b.history.val_losses()
    for name, tensor in a.model.params.items():
        assert np.array_equal(tensor.value, b.model.params[name].value)


def test_training_history(tmp_path):
    train_cases, val_cases, _ = split_beams()
    result = train(train_cases, val_cases, small_train_config(epochs=3), out_dir=str(tmp_path))
    history = result.history
    logger.info(f"history: {history.model_dump()}")

    assert [r.epoch for r in history.records] == [0, 1, 2]
    assert all(math.isfinite(r.train_loss) and math.isfinite(r.val_loss) for r in history.records)
    assert history.best_val_loss == min(history.val_losses())
    assert history.records[history.best_epoch].val_loss == history.best_val_loss
    assert os.path.exists(tmp_path / "checkpoint" / "checkpoint.json")


def test_training_needs_cases():
    train_cases, val_cases, _ = split_beams()
    with pytest.raises(EmptySplitError):
        train([], val_cases, small_train_config())
    with pytest.raises(EmptySplitError):
        train(train_cases, [], small_train_config())


def test_checkpoint_round_trip(tmp_path):
    train_cases, val_cases, test_cases = split_beams()
    result = train(train_cases, val_cases, small_train_config(), out_dir=str(tmp_path))
    model, manifest = load_checkpoint(str(tmp_path / "checkpoint"))

    assert manifest.best_epoch == result.history.best_epoch
    assert manifest.seed == 0
    assert manifest.parameter_counts == result.model.count_parameters()
    assert manifest.config_hash == small_train_config().config_hash()
    check_stats(result.stats, model.stats)

    batch = make_batch([prepare_case(c, model.stats) for c in test_cases])
    (expected,) = result.model.predict(batch)
    (loaded,) = model.predict(batch)
    assert np.array_equal(expected.u, loaded.u)
    assert np.array_equal(expected.rf2, loaded.rf2)


def test_missing_checkpoint(tmp_path):
    with pytest.raises(MissingBlobError) as info:
        read_checkpoint_manifest(str(tmp_path / "nowhere"))
    assert "nowhere" in info.value.path
    with pytest.raises(MissingBlobError):
        load_checkpoint(str(tmp_path))


def test_stats_mismatch():
    cases = beam_cases(frames=3)
    stats = compute_norm_stats(cases[:2])
    check_stats(stats, compute_norm_stats(cases[:2]))
    with pytest.raises(StatsMismatchError):
        check_stats(compute_norm_stats(cases[2:]), stats)


def test_parallel_validation_matches_serial():
    cases = beam_cases(frames=3)
    stats = compute_norm_stats(cases[:2])
    prepared = [prepare_case(c, stats) for c in cases]
    model = build_model(small_model_config(), stats)
    serial = validation_loss(model, prepared, LossWeights(), batch_size=1, workers=1)
    threaded = validation_loss(model, prepared, LossWeights(), batch_size=1, workers=2)
    merged = validation_loss(model, prepared, LossWeights(), batch_size=4)
    logger.info(f"serial {serial}, threaded {threaded}, merged {merged}")
    assert serial == threaded
    assert abs(serial - merged) < 1e-10

    with pytest.raises(EmptySplitError):
        validation_loss(model, [], LossWeights())


def test_evaluate_report():
    train_cases, val_cases, test_cases = split_beams()
    result = train(train_cases, val_cases, small_train_config(epochs=1))
    report = evaluate(result.model, test_cases)
    metrics = report.metrics
    logger.info(f"metrics: {metrics.model_dump()}")

    assert metrics.n_cases == 1
    for name, channel in metrics.channels().items():
        assert math.isfinite(channel.rmse)
        assert abs(channel.rmse_phys - channel.rmse * result.stats.std(name)) < 1e-12
    assert metrics.s.unit == "MPa"
    assert len(report.curves) == 3
    assert len(report.frame_errors) == 3
    # frame 0 is the known undeformed state
    assert max(report.frame_errors[0][1:]) < 1e-9


def test_divergence_context():
    error = DivergenceError("non-finite activation", frame=3)
    assert "frame=3" in str(error)
    wrapped = error.with_context(epoch=1, batch=0)
    assert (wrapped.epoch, wrapped.batch, wrapped.frame) == (1, 0, 3)
    assert "epoch=1" in str(wrapped) and "frame=3" in str(wrapped)
    assert wrapped.exit_code == 4


def test_ablation_single_seed():
    train_cases, val_cases, test_cases = split_beams()
    summary = ablate(train_cases, val_cases, test_cases, small_train_config(epochs=1), seeds=(0,))
    rows = ablation_rows(summary)
    logger.info(f"ablation rows: {rows}")

    assert [r.kind for r in summary.rows] == [ModelKind.dual, ModelKind.baseline]
    dual, baseline = summary.rows
    assert dual.parameters > baseline.parameters
    expected = relative_reduction(baseline.stress_rmse_phys, dual.stress_rmse_phys)
    assert abs(summary.stress_reduction_pct - expected) < 1e-12
    assert summary.peeq_reduction_by_seed == [summary.peeq_reduction_pct]
    assert len(rows) == 2
