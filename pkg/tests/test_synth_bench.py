import logging

import numpy as np
import pytest
from pydantic import ValidationError

from dualgraph.data.case_store import check_case, load_campaign_cases
from dualgraph.exceptions import InvalidInputError
from dualgraph.mesh.hexahedron import centre_node
from dualgraph.synth import (
    BeamSpec,
    CampaignSpec,
    GeneratorConstants,
    MeshScale,
    campaign_table,
    force_at,
    generate_campaign,
    generate_case,
    localization_fraction,
    sample_offset_pairs,
    single_hex_case,
    support_reactions,
)
from tests.utils.misc import compare_lists

logger = logging.getLogger(__name__)


def mirror_index(points: np.ndarray, length: float) -> np.ndarray:
    """Index of the point mirrored about the midspan plane, for every point."""
    mirrored = points.copy()
    mirrored[:, 0] = length - mirrored[:, 0]
    d = np.sum((points[None, :, :] - mirrored[:, None, :]) ** 2, axis=2)
    index = np.argmin(d, axis=1)
    assert np.all(d[np.arange(points.shape[0]), index] < 1e-12)
    return index


def test_final_frame_matches_test_curve():
    spec = BeamSpec()
    case = generate_case(spec, (0, 0), frames=21)
    mid = centre_node(case.coords)
    logger.info(f"final force {case.rf2[-1]} kN, midspan deflection {-case.u[-1, mid, 1]} mm")
    assert abs(case.rf2[-1] - 102.0) < 1e-12
    assert abs(-case.u[-1, mid, 1] - 33.4) < 1e-9
    # the yield point lies on the force law
    assert abs(force_at(spec, 10.02) - 85.0) < 1e-12


def test_first_frame_is_undeformed():
    case = generate_case(BeamSpec(), (25, -50), frames=5)
    assert np.all(case.u[0] == 0.0)
    assert np.all(case.peeq[0] == 0.0)
    assert case.rf2[0] == 0.0
    check_case(case)


def test_fields_grow_with_load():
    case = generate_case(BeamSpec(), (-100, 75), frames=8)
    assert np.all(np.diff(case.rf2) > 0)
    assert np.all(np.diff(case.peeq, axis=0) >= 0)
    assert case.peeq.min() >= 0.0
    assert case.peeq[-1].max() > 0.0
    mid = centre_node(case.coords)
    assert np.all(np.diff(-case.u[:, mid, 1]) > 0)


def test_reactions_balance_applied_force():
    spec = BeamSpec()
    forces = force_at(spec, np.linspace(0.0, spec.ultimate_deflection, 11))
    for offsets in ((0, 0), (-200, 200), (150, -25)):
        positions = (950.0 + offsets[0], 1750.0 + offsets[1])
        left, right = support_reactions(spec, positions, forces)
        assert np.abs(left + right - forces).max() < 1e-12
        assert np.all(left >= 0.0) and np.all(right >= 0.0)

    # symmetric loading splits the force evenly
    left, right = support_reactions(spec, (950.0, 1750.0), 102.0)
    assert abs(left - 51.0) < 1e-12 and abs(right - 51.0) < 1e-12


def test_symmetric_offsets_give_mirrored_fields():
    spec = BeamSpec()
    case = generate_case(spec, (50, -50), frames=4)
    nodes = mirror_index(case.coords, spec.length)
    elems = mirror_index(case.coords[case.connectivity].mean(axis=1), spec.length)

    assert np.allclose(case.s[:, elems], case.s, rtol=1e-9, atol=1e-9)
    assert np.allclose(case.peeq[:, elems], case.peeq, rtol=1e-9, atol=1e-12)
    assert np.allclose(case.u[:, nodes, 1], case.u[:, :, 1], atol=1e-9)
    # axial displacement flips sign under the mirror
    assert np.allclose(case.u[:, nodes, 0], -case.u[:, :, 0], atol=1e-9)


def test_peaks_are_localized():
    case = generate_case(BeamSpec(), (0, 0), frames=3, mesh_scale=MeshScale.full)
    for name in ("s", "peeq"):
        share = localization_fraction(getattr(case, name)[-1])
        logger.info(f"{name}: {share:.3%} of elements above half the peak")
        assert 0.0 < share < 0.2
    assert localization_fraction(np.zeros(4)) == 0.0
    assert localization_fraction(np.array([0.0, 1.0, 0.2, 0.6])) == 0.5


def test_stress_is_capped_at_yield():
    constants = GeneratorConstants()
    assert constants.hardening == 0.0
    case = generate_case(BeamSpec(), (0, 0), frames=21)
    logger.info(f"yield {constants.yield_stress}, max stress {case.s.max()}")
    assert case.s.max() <= constants.yield_stress
    # the cap is reached, and PEEQ appears only where it is
    capped = case.s[-1] == constants.yield_stress
    assert capped.any()
    assert np.all(case.peeq[-1][~capped] == 0.0)
    assert np.all(case.peeq[-1][capped] > 0.0)

    hardened = generate_case(BeamSpec(), (0, 0), frames=5, constants=GeneratorConstants(hardening=0.5))
    assert hardened.s.max() > constants.yield_stress
    assert np.array_equal(hardened.peeq, generate_case(BeamSpec(), (0, 0), frames=5).peeq)


def test_generation_is_deterministic():
    a = generate_case(BeamSpec(), (75, 0), frames=4)
    b = generate_case(BeamSpec(), (75, 0), frames=4)
    for name in ("coords", "connectivity", "u", "s", "peeq", "rf2", "load_nodes"):
        assert np.array_equal(getattr(a, name), getattr(b, name)), name
    assert a.case_id == b.case_id == "case_+075_+000"


def test_load_nodes_sit_on_top_surface():
    spec = BeamSpec()
    case = generate_case(spec, (-50, 100), frames=2)
    top = case.coords[case.load_nodes]
    assert np.all(np.abs(top[:, 1] - spec.depth) < 1e-9)
    near = [np.abs(top[:, 0] - p).min() for p in case.load_positions]
    assert max(near) <= 0.5 * spec.block_width


def test_load_positions_are_checked():
    with pytest.raises(InvalidInputError):
        generate_case(BeamSpec(), (-900, 0), frames=2)
    with pytest.raises(InvalidInputError):
        generate_case(BeamSpec(), (400, -400), frames=2)
    with pytest.raises(InvalidInputError):
        generate_case(BeamSpec(), (0, 0), frames=1)


def test_offset_sampling():
    campaign = CampaignSpec(count=6, seed=3)
    pairs = sample_offset_pairs(campaign)
    logger.info(f"sampled offsets: {pairs}")
    assert pairs == sample_offset_pairs(CampaignSpec(count=6, seed=3))
    assert len(set(pairs)) == 6
    assert all(p in campaign.candidate_pairs() for p in pairs)

    everything = sample_offset_pairs(CampaignSpec(count=1000))
    assert len(everything) == 17 * 17

    explicit = CampaignSpec(offsets=[(0, 0), (25, -25)])
    assert sample_offset_pairs(explicit) == [(0, 0), (25, -25)]
    with pytest.raises(InvalidInputError):
        sample_offset_pairs(CampaignSpec(offsets=[(0, 0), (0, 0)]))
    with pytest.raises(ValidationError):
        CampaignSpec(offsets=[(10, 0)])
    with pytest.raises(ValidationError):
        CampaignSpec(offsets=[(225, 0)])


def test_campaign_round_trip(tmp_path):
    campaign = CampaignSpec(offsets=[(0, 0), (25, -25)], frames=3)
    index = generate_campaign(BeamSpec(), campaign, str(tmp_path))
    table = campaign_table(index)
    logger.info(f"\n{table}")
    assert "case_+025_-025" in table

    loaded_index, cases = load_campaign_cases(str(tmp_path))
    assert [c.case_id for c in cases] == ["case_+000_+000", "case_+025_-025"]
    assert loaded_index.mesh_scale == "tiny"
    expected = generate_case(BeamSpec(), (25, -25), frames=3)
    assert np.array_equal(cases[1].s, expected.s)
    assert compare_lists(list(cases[1].load_positions), [975.0, 1725.0])


def test_single_hex_case_is_valid():
    case = single_hex_case(frames=4, seed=2)
    check_case(case)
    assert case.n_nodes == 8 and case.n_elems == 1


def test_campaign_is_byte_identical(tmp_path):
    campaign = CampaignSpec(count=3, seed=11, frames=3)
    dirs = [tmp_path / "a", tmp_path / "b"]
    for d in dirs:
        generate_campaign(BeamSpec(), campaign, str(d))

    def files(root):
        return sorted(p.relative_to(root) for p in root.rglob("*") if p.is_file())

    assert files(dirs[0]) == files(dirs[1])
    for rel in files(dirs[0]):
        assert (dirs[0] / rel).read_bytes() == (dirs[1] / rel).read_bytes(), rel
