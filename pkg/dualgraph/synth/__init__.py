from .types import BeamSpec, CampaignSpec, GeneratorConstants, MeshScale, MESH_DIVISIONS
from .beam import (
    force_at,
    support_reactions,
    check_reactions,
    bending_moment,
    deflection_shape,
    localization_fraction,
)
from .generator import (
    beam_mesh,
    generate_case,
    generate_campaign,
    sample_offset_pairs,
    campaign_table,
    single_hex_case,
)
