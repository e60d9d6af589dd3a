import os
from typing import Optional, Sequence

import bittensor as bt
import numpy as np
from tabulate import tabulate

from dualgraph.data.case_store import save_campaign_index, save_case
from dualgraph.data.types import CampaignEntry, CampaignIndex, CaseTrajectory
from dualgraph.exceptions import InvalidInputError
from dualgraph.mesh.hexahedron import centre_node, structured_hex_grid
from dualgraph.synth.beam import (
    bending_moment,
    check_load_positions,
    check_reactions,
    deflection_shape,
    force_at,
)
from dualgraph.synth.types import (
    MESH_DIVISIONS,
    BeamSpec,
    CampaignSpec,
    GeneratorConstants,
    MeshScale,
)

CASES_DIR = "cases"


def beam_mesh(spec: BeamSpec, mesh_scale: MeshScale = MeshScale.tiny):
    nx, ny, nz = MESH_DIVISIONS[MeshScale(mesh_scale)]
    dx, dy, dz = spec.length / nx, spec.depth / ny, spec.width / nz
    coords, connectivity = structured_hex_grid(nx, ny, nz, dx, dy, dz)
    return coords, connectivity, (dx, dy, dz)


def case_id_for(offsets: Sequence[int]) -> str:
    return f"case_{int(offsets[0]):+04d}_{int(offsets[1]):+04d}"


def load_nodes_for(spec: BeamSpec, coords: np.ndarray, positions, dx: float) -> np.ndarray:
    """Top-surface nodes under the two block footprints."""
    reach = max(0.5 * spec.block_width, 0.5 * dx) + 1e-9
    top = np.abs(coords[:, 1] - spec.depth) < 1e-9
    under = np.zeros(coords.shape[0], dtype=bool)
    for p in positions:
        under |= np.abs(coords[:, 0] - p) <= reach
    return np.flatnonzero(top & under).astype(np.int64)


def element_fields(
    spec: BeamSpec,
    constants: GeneratorConstants,
    centroids: np.ndarray,
    positions,
    spacing,
    forces: np.ndarray,
):
    """
    Equivalent stress and PEEQ per frame from bending plus bearing stress under
    the blocks.

    Returns:
        (stress [T x E], peeq [T x E]) in MPa and strain units
    """
    dx, dy, _ = spacing
    lever = centroids[:, 1] - spec.neutral_axis
    bend_unit = bending_moment(spec, positions, centroids[:, 0]) * lever / spec.inertia

    eta = (spec.depth - centroids[:, 1]) / (dy * constants.contact_depth)
    contact_unit = np.zeros(centroids.shape[0])
    for p in positions:
        xi = (centroids[:, 0] - p) / (dx * constants.contact_spread)
        contact_unit += 0.5 * constants.contact_coefficient * np.exp(-0.5 * (xi**2 + eta**2))

    bend = np.abs(forces[:, None] * bend_unit[None, :])
    # cracked concrete below the neutral axis
    bend = np.where(lever[None, :] < 0.0, np.minimum(bend, constants.tensile_strength), bend)
    elastic = bend + forces[:, None] * contact_unit[None, :]

    excess = np.maximum(0.0, elastic - constants.yield_stress)
    stress = np.where(
        excess > 0.0,
        constants.yield_stress + constants.hardening * excess,
        elastic,
    )
    peeq = np.maximum.accumulate(constants.kappa * excess, axis=0)
    return stress, peeq


def generate_case(
    spec: BeamSpec,
    offsets: Sequence[int],
    frames: int = 21,
    mesh_scale: MeshScale = MeshScale.tiny,
    constants: Optional[GeneratorConstants] = None,
) -> CaseTrajectory:
    constants = constants or GeneratorConstants()
    if frames < 2:
        raise InvalidInputError(f"a case needs at least two frames, got {frames}")
    positions = tuple(
        float(base + off) for base, off in zip(spec.baseline_positions, offsets)
    )
    check_load_positions(spec, positions)

    coords, connectivity, spacing = beam_mesh(spec, mesh_scale)
    progress = np.linspace(0.0, 1.0, frames)
    deflection = progress * spec.ultimate_deflection
    forces = force_at(spec, deflection)
    check_reactions(spec, positions, forces)

    w, dw = deflection_shape(spec, positions, coords[:, 0])
    mid = centre_node(coords)
    scale = deflection / w[mid]
    u = np.zeros((frames, coords.shape[0], 3))
    u[:, :, 0] = scale[:, None] * ((coords[:, 1] - spec.neutral_axis) * dw)[None, :]
    u[:, :, 1] = -scale[:, None] * w[None, :]

    centroids = coords[connectivity].mean(axis=1)
    stress, peeq = element_fields(spec, constants, centroids, positions, spacing, forces)

    return CaseTrajectory(
        coords=coords,
        connectivity=connectivity,
        u=u,
        s=stress,
        peeq=peeq,
        rf2=forces,
        frame_times=progress,
        load_nodes=load_nodes_for(spec, coords, positions, spacing[0]),
        load_positions=positions,
        case_id=case_id_for(offsets),
        meta={
            "offsets": [int(o) for o in offsets],
            "mesh_scale": MeshScale(mesh_scale).value,
            "generator": "closed-form beam",
        },
    )


def sample_offset_pairs(campaign: CampaignSpec) -> list[tuple[int, int]]:
    if campaign.offsets is not None:
        pairs = [tuple(int(o) for o in pair) for pair in campaign.offsets]
        if len(set(pairs)) != len(pairs):
            raise InvalidInputError("campaign lists duplicate offset pairs")
        return pairs

    candidates = campaign.candidate_pairs()
    if campaign.count >= len(candidates):
        return candidates
    rng = np.random.default_rng(campaign.seed)
    chosen = np.sort(rng.choice(len(candidates), size=campaign.count, replace=False))
    return [candidates[i] for i in chosen]


def generate_campaign(
    spec: BeamSpec,
    campaign: CampaignSpec,
    out_dir: str,
    mesh_scale: MeshScale = MeshScale.tiny,
    constants: Optional[GeneratorConstants] = None,
) -> CampaignIndex:
    constants = constants or GeneratorConstants()
    pairs = sample_offset_pairs(campaign)
    os.makedirs(out_dir, exist_ok=True)

    entries = []
    for i, pair in enumerate(pairs):
        case = generate_case(spec, pair, campaign.frames, mesh_scale, constants)
        case_dir = os.path.join(CASES_DIR, case.case_id)
        save_case(case, os.path.join(out_dir, case_dir))
        entries.append(
            CampaignEntry(case_dir=case_dir, offsets=pair, load_positions=case.load_positions)
        )
        bt.logging.debug(f"Generated case {i + 1}/{len(pairs)}: {case.case_id}")

    index = CampaignIndex(
        beam=spec.model_dump(mode="json"),
        campaign={
            **campaign.model_dump(mode="json"),
            "offsets": [list(p) for p in pairs],
            "constants": constants.model_dump(mode="json"),
        },
        mesh_scale=MeshScale(mesh_scale).value,
        cases=entries,
    )
    save_campaign_index(index, out_dir)
    bt.logging.success(f"Wrote {len(entries)} cases to {out_dir}")
    return index


def campaign_table(index: CampaignIndex) -> str:
    rows = [
        [i, e.case_dir, e.offsets[0], e.offsets[1], e.load_positions[0], e.load_positions[1]]
        for i, e in enumerate(index.cases)
    ]
    return tabulate(
        rows,
        headers=["#", "case", "offset 1", "offset 2", "block 1 [mm]", "block 2 [mm]"],
        tablefmt="grid",
    )


def single_hex_case(frames: int = 3, seed: int = 0) -> CaseTrajectory:
    """
    Smallest valid case: one unit hexahedron with smooth random fields. Used for
    gradient audits.
    """
    rng = np.random.default_rng(seed)
    coords, connectivity = structured_hex_grid(1, 1, 1)
    progress = np.linspace(0.0, 1.0, frames)
    direction = rng.normal(size=(coords.shape[0], 3))
    u = progress[:, None, None] * direction[None, :, :]
    s = np.outer(progress, [1.0 + rng.uniform()]) * 10.0
    peeq = np.outer(progress**2, [1e-3])
    return CaseTrajectory(
        coords=coords,
        connectivity=connectivity,
        u=u,
        s=s,
        peeq=peeq,
        rf2=progress * 5.0,
        frame_times=progress,
        load_nodes=np.array([4, 5], dtype=np.int64),
        load_positions=(0.5, 0.5),
        case_id="single_hex",
        meta={"generator": "single hexahedron"},
    )
