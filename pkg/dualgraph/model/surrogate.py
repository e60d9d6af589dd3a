import time
from typing import Optional

import bittensor as bt
import numpy as np

from dualgraph.autodiff import ops
from dualgraph.autodiff.tape import no_grad
from dualgraph.autodiff.tensor import Tensor
from dualgraph.data.case_store import invert_norm
from dualgraph.data.types import NormStats
from dualgraph.exceptions import DivergenceError, InvalidInputError
from dualgraph.model.batch import Batch
from dualgraph.model.features import assemble_features
from dualgraph.model.layers import MLP, GConvGRUCell
from dualgraph.model.params import ParamStore
from dualgraph.model.types import (
    ModelConfig,
    ModelKind,
    RolloutMode,
    RolloutResult,
    RolloutTrace,
)
from dualgraph.projection.projection import aggregate_node_hidden


class Surrogate:
    """
    Shared rollout machinery. Subclasses build their parameters in `_build` and
    implement one recurrent step plus the output decoders.
    """

    kind: ModelKind

    def __init__(self, config: ModelConfig, stats: NormStats):
        self.config = config
        self.stats = stats
        self.params = ParamStore(config.seed)
        self._build()
        # normalized value of a physical zero is -mean/std
        self.u_shift = stats.mean("u") / stats.std("u")
        self.s_shift = stats.mean("s") / stats.std("s")
        self.peeq_shift = stats.mean("peeq") / stats.std("peeq")
        self.rf2_shift = stats.mean("rf2") / stats.std("rf2")

    def _build(self):
        raise NotImplementedError

    def init_state(self, batch: Batch) -> dict[str, Tensor]:
        raise NotImplementedError

    def step(self, state: dict[str, Tensor], x: Tensor, batch: Batch) -> dict[str, Tensor]:
        raise NotImplementedError

    def decode(self, state: dict[str, Tensor], batch: Batch) -> dict[str, Tensor]:
        raise NotImplementedError

    def count_parameters(self) -> dict[str, int]:
        counts = self.params.count_by_block()
        counts["total"] = self.params.count()
        return counts

    def initial_outputs(self, batch: Batch) -> dict[str, Tensor]:
        """The undeformed state in normalized space."""
        n, e, c = batch.graph.n_nodes, batch.graph.n_elems, batch.n_cases
        return {
            "u": Tensor(np.full((n, 3), -self.u_shift)),
            "s": Tensor(np.full((e, 1), -self.s_shift)),
            "peeq": Tensor(np.full((e, 1), -self.peeq_shift)),
            "rf2": Tensor(np.full((c, 1), -self.rf2_shift)),
            "s_node": Tensor(np.full((n, 1), -self.s_shift)),
            "peeq_node": Tensor(np.full((n, 1), -self.peeq_shift)),
        }

    def _nonnegative_peeq(self, raw: Tensor) -> Tensor:
        # softplus keeps the physical value >= 0
        return ops.add(ops.softplus(raw), -self.peeq_shift)

    def rollout(self, batch: Batch, mode: RolloutMode = RolloutMode.free) -> RolloutTrace:
        """
        Runs all frames. Free mode feeds each frame's predictions into the next
        frame's features; teacher mode feeds the ground truth instead and is a
        diagnostic only. Frame 0 is the known undeformed state.
        """
        mode = RolloutMode(mode)
        trace = RolloutTrace()
        state = self.init_state(batch)
        for t in range(batch.n_frames):
            if mode == RolloutMode.teacher:
                prev_u = Tensor(batch.u[t - 1]) if t >= 1 else None
                prev2_u = Tensor(batch.u[t - 2]) if t >= 2 else None
                prev_s = Tensor(batch.s[t - 1]) if t >= 1 else None
            else:
                prev_u = trace.u[t - 1] if t >= 1 else None
                prev2_u = trace.u[t - 2] if t >= 2 else None
                prev_s = trace.s[t - 1] if t >= 1 else None

            x = assemble_features(
                batch,
                t,
                prev_u,
                prev2_u,
                prev_s,
                u_shift=self.u_shift,
                s_shift=self.s_shift,
                stress_feedback=self.config.stress_feedback,
            )
            try:
                state = self.step(state, x, batch)
                out = self.initial_outputs(batch) if t == 0 else self.decode(state, batch)
            except DivergenceError as e:
                raise e.with_context(frame=t)

            trace.u.append(out["u"])
            trace.s.append(out["s"])
            trace.peeq.append(out["peeq"])
            trace.rf2.append(out["rf2"])
            if "s_node" in out and self.kind == ModelKind.baseline:
                trace.s_node.append(out["s_node"])
                trace.peeq_node.append(out["peeq_node"])
        return trace

    def to_results(self, trace: RolloutTrace, batch: Batch) -> list[RolloutResult]:
        u = np.stack([t.value for t in trace.u])
        s = np.stack([t.value[:, 0] for t in trace.s])
        peeq = np.stack([t.value[:, 0] for t in trace.peeq])
        rf2 = np.stack([t.value[:, 0] for t in trace.rf2])

        results = []
        nodes, elems = batch.graph.node_offsets, batch.graph.elem_offsets
        for i, prepared in enumerate(batch.cases):
            u_i = u[:, nodes[i] : nodes[i + 1]]
            s_i = s[:, elems[i] : elems[i + 1]]
            p_i = peeq[:, elems[i] : elems[i + 1]]
            r_i = rf2[:, i]
            results.append(
                RolloutResult(
                    case_id=prepared.case.case_id,
                    u=u_i,
                    s=s_i,
                    peeq=p_i,
                    rf2=r_i,
                    u_phys=invert_norm(u_i, self.stats, "u"),
                    s_phys=invert_norm(s_i, self.stats, "s"),
                    peeq_phys=invert_norm(p_i, self.stats, "peeq"),
                    rf2_phys=invert_norm(r_i, self.stats, "rf2"),
                )
            )
        return results

    def predict(self, batch: Batch, mode: RolloutMode = RolloutMode.free) -> list[RolloutResult]:
        """Gradient-free rollout split back into per-case results."""
        start = time.perf_counter()
        with no_grad():
            trace = self.rollout(batch, mode)
        seconds = time.perf_counter() - start
        results = self.to_results(trace, batch)
        for r in results:
            r.seconds = seconds / len(results)
        bt.logging.trace(f"Rollout of {batch.n_cases} case(s) took {seconds:.3f}s")
        return results


class DualGraphSurrogate(Surrogate):
    """
    Node branch on the mesh-edge graph decodes displacements; element branch on
    the face-adjacency graph, driven by node hidden states averaged per element,
    decodes stress and PEEQ. RF2 comes from mean-pooled element states.
    """

    kind = ModelKind.dual

    def _build(self):
        c, p = self.config, self.params
        self.node_cell = GConvGRUCell.create(p, "node_cell", c.n_features, c.hidden, c.cheb_order)
        self.elem_cell = GConvGRUCell.create(p, "elem_cell", c.hidden, c.hidden, c.cheb_order)
        self.mlp_u = MLP.create(p, "mlp_u", c.hidden, c.mlp_hidden, 3)
        self.mlp_s = MLP.create(p, "mlp_s", c.hidden, c.mlp_hidden, 1)
        self.mlp_p = MLP.create(p, "mlp_p", c.hidden, c.mlp_hidden, 1)
        self.mlp_rf2 = MLP.create(p, "mlp_rf2", c.hidden, c.mlp_hidden, 1)

    def init_state(self, batch: Batch) -> dict[str, Tensor]:
        return {
            "h_n": Tensor(np.zeros((batch.graph.n_nodes, self.config.hidden))),
            "h_e": Tensor(np.zeros((batch.graph.n_elems, self.config.hidden))),
        }

    def node_branch_step(self, x: Tensor, h_n: Tensor, batch: Batch) -> Tensor:
        return self.node_cell.step(self.params, batch.graph.node_laplacian.matrix, x, h_n)

    def element_branch_step(self, h_n: Tensor, h_e: Tensor, batch: Batch) -> Tensor:
        z_e = aggregate_node_hidden(h_n, batch.graph.incidence)
        return self.elem_cell.step(self.params, batch.graph.element_laplacian.matrix, z_e, h_e)

    def step(self, state, x, batch):
        h_n = self.node_branch_step(x, state["h_n"], batch)
        h_e = self.element_branch_step(h_n, state["h_e"], batch)
        return {"h_n": h_n, "h_e": h_e}

    def predict_rf2(self, h_e: Tensor, batch: Batch) -> Tensor:
        pooled = ops.scatter_mean(h_e, batch.graph.elem_case, batch.n_cases)
        return self.mlp_rf2(self.params, pooled)

    def decode(self, state, batch):
        h_n, h_e = state["h_n"], state["h_e"]
        return {
            "u": self.mlp_u(self.params, h_n),
            "s": self.mlp_s(self.params, h_e),
            "peeq": self._nonnegative_peeq(self.mlp_p(self.params, h_e)),
            "rf2": self.predict_rf2(h_e, batch),
        }


class SingleGraphBaseline(Surrogate):
    """
    Node branch only. Stress and PEEQ are decoded as nodal proxies and mapped to
    elements by corner averaging; RF2 comes from mean-pooled node states.
    """

    kind = ModelKind.baseline

    def _build(self):
        c, p = self.config, self.params
        self.node_cell = GConvGRUCell.create(p, "node_cell", c.n_features, c.hidden, c.cheb_order)
        self.mlp_u = MLP.create(p, "mlp_u", c.hidden, c.mlp_hidden, 3)
        self.mlp_s = MLP.create(p, "mlp_s_node", c.hidden, c.mlp_hidden, 1)
        self.mlp_p = MLP.create(p, "mlp_p_node", c.hidden, c.mlp_hidden, 1)
        self.mlp_rf2 = MLP.create(p, "mlp_rf2", c.hidden, c.mlp_hidden, 1)

    def init_state(self, batch: Batch) -> dict[str, Tensor]:
        return {"h_n": Tensor(np.zeros((batch.graph.n_nodes, self.config.hidden)))}

    def step(self, state, x, batch):
        matrix = batch.graph.node_laplacian.matrix
        return {"h_n": self.node_cell.step(self.params, matrix, x, state["h_n"])}

    def decode(self, state, batch):
        h_n = state["h_n"]
        to_elements = batch.graph.incidence.node_to_element_matrix
        s_node = self.mlp_s(self.params, h_n)
        peeq_node = self._nonnegative_peeq(self.mlp_p(self.params, h_n))
        pooled = ops.scatter_mean(h_n, batch.graph.node_case, batch.n_cases)
        return {
            "u": self.mlp_u(self.params, h_n),
            "s": ops.sparse_dense_matmul(to_elements, s_node),
            "peeq": ops.sparse_dense_matmul(to_elements, peeq_node),
            "rf2": self.mlp_rf2(self.params, pooled),
            "s_node": s_node,
            "peeq_node": peeq_node,
        }


def baseline_forward(model: SingleGraphBaseline, batch: Batch) -> RolloutTrace:
    return model.rollout(batch, RolloutMode.free)


def build_model(config: ModelConfig, stats: NormStats) -> Surrogate:
    kind = ModelKind(config.kind)
    if kind == ModelKind.dual:
        model = DualGraphSurrogate(config, stats)
    elif kind == ModelKind.baseline:
        model = SingleGraphBaseline(config, stats)
    else:
        raise InvalidInputError(f"unknown model kind '{config.kind}'")
    bt.logging.debug(f"Built {kind.value} model with {model.params.count()} parameters")
    return model
