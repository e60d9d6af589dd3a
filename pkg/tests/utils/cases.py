from typing import Sequence

import numpy as np

from dualgraph.data.types import CaseTrajectory
from dualgraph.mesh.hexahedron import structured_hex_grid
from dualgraph.model.types import ModelConfig, ModelKind
from dualgraph.synth.generator import generate_case
from dualgraph.synth.types import BeamSpec, MeshScale
from dualgraph.trainer.types import LossWeights, TrainConfig

BEAM_OFFSETS = [(0, 0), (-50, 25), (100, -100), (25, 50), (-150, 150), (75, 0)]


def toy_case(nx: int = 2, ny: int = 1, nz: int = 1, frames: int = 4, seed: int = 0) -> CaseTrajectory:
    """
    Valid case on a unit grid with smooth random fields that start from the
    undeformed state.
    """
    rng = np.random.default_rng(seed)
    coords, connectivity = structured_hex_grid(nx, ny, nz)
    n, e = coords.shape[0], connectivity.shape[0]
    progress = np.linspace(0.0, 1.0, frames)
    top = np.flatnonzero(np.abs(coords[:, 1] - coords[:, 1].max()) < 1e-9)
    return CaseTrajectory(
        coords=coords,
        connectivity=connectivity,
        u=progress[:, None, None] * rng.normal(size=(n, 3))[None],
        s=np.outer(progress, rng.uniform(1.0, 2.0, size=e)) * 10.0,
        peeq=np.outer(progress**2, rng.uniform(0.0, 1.0, size=e)) * 1e-3,
        rf2=progress * 5.0,
        frame_times=progress,
        load_nodes=top.astype(np.int64),
        load_positions=(0.5 * nx, 0.5 * nx),
        case_id=f"toy_{nx}x{ny}x{nz}_{seed}",
    )


def beam_cases(
    offsets: Sequence[tuple[int, int]] = BEAM_OFFSETS[:4],
    frames: int = 5,
    mesh_scale: MeshScale = MeshScale.tiny,
) -> list[CaseTrajectory]:
    spec = BeamSpec()
    return [generate_case(spec, pair, frames, mesh_scale) for pair in offsets]


def small_model_config(kind: ModelKind = ModelKind.dual, hidden: int = 8, **kwargs) -> ModelConfig:
    return ModelConfig(kind=kind, hidden=hidden, mlp_hidden=hidden, **kwargs)


def small_train_config(**kwargs) -> TrainConfig:
    values = dict(
        epochs=2,
        batch_size=2,
        hidden=8,
        mlp_hidden=8,
        seed=0,
        weights=LossWeights(),
    )
    values.update(kwargs)
    return TrainConfig(**values)
