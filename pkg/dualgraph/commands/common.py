import bittensor as bt

from dualgraph.data.case_store import load_campaign_cases, split_cases
from dualgraph.data.types import CampaignIndex, CaseTrajectory, SplitAssignment
from dualgraph.exceptions import InvalidInputError


def parse_int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise InvalidInputError(f"expected comma separated integers, got '{text}'")


def parse_float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise InvalidInputError(f"expected comma separated numbers, got '{text}'")


def load_split_campaign(
    path: str, ratios=(0.7, 0.15, 0.15), seed: int = 0
) -> tuple[CampaignIndex, list[CaseTrajectory], SplitAssignment]:
    """
    Loads all cases of a campaign and its split. Campaigns without a stored split
    are split on the fly with `ratios` and `seed`.
    """
    if not path:
        raise InvalidInputError("--data.campaign is required")
    index, cases = load_campaign_cases(path)
    split = index.split
    if split is None:
        split = split_cases(len(cases), ratios, seed)
        bt.logging.info(f"Campaign has no stored split, using seed {seed}")
    elif split.n_cases != len(cases):
        raise InvalidInputError(
            f"stored split covers {split.n_cases} cases, campaign has {len(cases)}", path=path
        )
    return index, cases, split


def select(cases: list, indices: list[int]) -> list:
    return [cases[i] for i in indices]
