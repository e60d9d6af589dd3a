from .types import CaseTrajectory, NormStats, ChannelStats, SplitAssignment, CampaignIndex
from .case_store import (
    save_case,
    load_case,
    check_case,
    compute_alpha,
    compute_norm_stats,
    apply_norm,
    invert_norm,
    split_cases,
    load_campaign_index,
    save_campaign_index,
    load_campaign_cases,
)
