import json
import os
from typing import Iterable, Sequence

import bittensor as bt
import numpy as np
from pydantic import ValidationError

from dualgraph.data.blobs import read_blob, write_blob
from dualgraph.data.types import (
    NORM_CHANNELS,
    CampaignIndex,
    CaseManifest,
    CaseTrajectory,
    ChannelStats,
    NormStats,
    SplitAssignment,
)
from dualgraph.exceptions import (
    CaseFormatError,
    CaseInvariantError,
    ChannelMismatchError,
    ConnectivityRangeError,
    EmptySplitError,
    InvalidInputError,
    MissingBlobError,
    NonMonotoneTimesError,
    ShapeMismatchError,
)

MANIFEST_NAME = "manifest.json"
CAMPAIGN_INDEX_NAME = "campaign.json"

PEEQ_TOLERANCE = 1e-9
STD_FLOOR = 1e-12

# blob name -> wire dtype
CASE_BLOBS = {
    "coords": "f64",
    "connectivity": "u32",
    "u": "f64",
    "s": "f64",
    "peeq": "f64",
    "rf2": "f64",
    "frame_times": "f64",
}


def _expected_shapes(n_nodes: int, n_elems: int, n_frames: int) -> dict[str, tuple]:
    return {
        "coords": (n_nodes, 3),
        "connectivity": (n_elems, 8),
        "u": (n_frames, n_nodes, 3),
        "s": (n_frames, n_elems),
        "peeq": (n_frames, n_elems),
        "rf2": (n_frames,),
        "frame_times": (n_frames,),
    }


def check_case(case: CaseTrajectory):
    """
    Validates every case invariant, raising the matching diagnostic on the first
    violation.
    """
    n, e, t = case.n_nodes, case.n_elems, case.n_frames

    if case.coords.ndim != 2 or case.coords.shape[1] != 3:
        raise ShapeMismatchError(f"coords must be [N x 3], got {case.coords.shape}")
    if case.connectivity.ndim != 2 or case.connectivity.shape[1] != 8:
        raise ShapeMismatchError(
            f"connectivity must be [E x 8], got {case.connectivity.shape}"
        )
    for name, shape in _expected_shapes(n, e, t).items():
        if tuple(getattr(case, name).shape) != shape:
            raise ShapeMismatchError(
                f"{name} has shape {getattr(case, name).shape}, expected {shape}"
            )

    if n < 8 or e < 1 or t < 2:
        raise CaseInvariantError(f"case too small: N={n}, E={e}, T={t}")

    if case.connectivity.min() < 0 or case.connectivity.max() >= n:
        raise ConnectivityRangeError(
            f"connectivity indices must lie in [0, {n}), got [{case.connectivity.min()}, {case.connectivity.max()}]"
        )

    if np.any(np.diff(case.frame_times) <= 0):
        raise NonMonotoneTimesError("frame_times must be strictly increasing")

    for name in ("coords", "u", "s", "peeq", "rf2", "frame_times"):
        if not np.all(np.isfinite(getattr(case, name))):
            raise CaseInvariantError(f"{name} contains non-finite values")

    if np.any(case.u[0] != 0) or np.any(case.peeq[0] != 0) or case.rf2[0] != 0:
        raise CaseInvariantError("first frame must be the undeformed state")

    if np.any(case.peeq < -PEEQ_TOLERANCE):
        raise CaseInvariantError("peeq must be nonnegative")
    if np.any(np.diff(case.peeq, axis=0) < -PEEQ_TOLERANCE):
        raise CaseInvariantError("peeq must be nondecreasing in time")

    load_nodes = np.asarray(case.load_nodes)
    if load_nodes.size == 0:
        raise CaseInvariantError("load_nodes must be nonempty")
    if load_nodes.min() < 0 or load_nodes.max() >= n:
        raise ConnectivityRangeError("load_nodes must lie in [0, N)")


def save_case(case: CaseTrajectory, path: str):
    check_case(case)
    os.makedirs(path, exist_ok=True)

    entries = [
        write_blob(path, name, getattr(case, name), dtype)
        for name, dtype in CASE_BLOBS.items()
    ]
    manifest = CaseManifest(
        n_nodes=case.n_nodes,
        n_elems=case.n_elems,
        n_frames=case.n_frames,
        blobs=entries,
        load_positions=tuple(float(x) for x in case.load_positions),
        load_nodes=[int(i) for i in np.asarray(case.load_nodes)],
        case_id=case.case_id,
        meta=case.meta,
    )
    with open(os.path.join(path, MANIFEST_NAME), "w") as f:
        f.write(manifest.model_dump_json(indent=2))

    bt.logging.trace(f"Saved case '{case.case_id}' to {path}")


def read_manifest(path: str) -> CaseManifest:
    manifest_path = os.path.join(path, MANIFEST_NAME)
    if not os.path.exists(manifest_path):
        raise MissingBlobError("missing case manifest", path=manifest_path)
    try:
        with open(manifest_path, "r") as f:
            return CaseManifest.model_validate_json(f.read())
    except ValidationError as e:
        raise CaseFormatError(f"invalid case manifest: {e}", path=manifest_path)


def load_case(path: str) -> CaseTrajectory:
    manifest = read_manifest(path)
    shapes = _expected_shapes(manifest.n_nodes, manifest.n_elems, manifest.n_frames)

    arrays = {}
    for name, dtype in CASE_BLOBS.items():
        entry = manifest.blob(name)
        if entry is None:
            raise MissingBlobError(f"manifest lists no blob '{name}'", path=path)
        if tuple(entry.shape) != shapes[name]:
            raise ShapeMismatchError(
                f"blob '{name}' has shape {tuple(entry.shape)} but the manifest header implies {shapes[name]}",
                path=path,
            )
        if entry.dtype != dtype:
            raise CaseFormatError(
                f"blob '{name}' must be stored as {dtype}, got {entry.dtype}", path=path
            )
        arrays[name] = read_blob(path, entry)

    case = CaseTrajectory(
        **arrays,
        load_nodes=np.asarray(manifest.load_nodes, dtype=np.int64),
        load_positions=manifest.load_positions,
        case_id=manifest.case_id,
        meta=manifest.meta,
    )
    try:
        check_case(case)
    except CaseFormatError as e:
        e.path = e.path or path
        raise
    return case


def compute_alpha(frame_times: Sequence[float]) -> np.ndarray:
    """
    Maps frame times linearly onto normalized loading progress in [0, 1].
    """
    times = np.asarray(frame_times, dtype=np.float64)
    if times.ndim != 1 or times.shape[0] < 2:
        raise InvalidInputError("at least two frame times are required")
    span = times[-1] - times[0]
    if span <= 0:
        raise InvalidInputError("frame times span zero time")
    if np.any(np.diff(times) <= 0):
        raise InvalidInputError("frame times must be strictly increasing")
    return (times - times[0]) / span


def _channel_values(case: CaseTrajectory, channel: str) -> np.ndarray:
    return np.asarray(getattr(case, channel), dtype=np.float64).ravel()


def compute_norm_stats(train_cases: Iterable[CaseTrajectory]) -> NormStats:
    train_cases = list(train_cases)
    if not train_cases:
        raise EmptySplitError("cannot compute normalization stats without training cases")

    channels = {}
    for channel in NORM_CHANNELS:
        values = np.concatenate([_channel_values(c, channel) for c in train_cases])
        mean = float(values.mean())
        std = float(values.std())
        if std < STD_FLOOR:
            std = 1.0
        channels[channel] = ChannelStats(mean=mean, std=std)

    bt.logging.debug(
        "Norm stats: "
        + ", ".join(f"{k}=({v.mean:.4g}, {v.std:.4g})" for k, v in channels.items())
    )
    return NormStats(channels=channels)


def _channel(stats: NormStats, channel: str) -> ChannelStats:
    if channel not in stats.channels:
        raise ChannelMismatchError(
            f"no statistics for channel '{channel}', have {sorted(stats.channels)}"
        )
    return stats.channels[channel]


def apply_norm(x, stats: NormStats, channel: str) -> np.ndarray:
    c = _channel(stats, channel)
    return (np.asarray(x, dtype=np.float64) - c.mean) / c.std


def invert_norm(x_hat, stats: NormStats, channel: str) -> np.ndarray:
    c = _channel(stats, channel)
    return np.asarray(x_hat, dtype=np.float64) * c.std + c.mean


def split_cases(
    n_cases: int,
    ratios: Sequence[float] = (0.7, 0.15, 0.15),
    seed: int = 0,
) -> SplitAssignment:
    """
    Whole-case train/val/test partition. Validation and test sizes are the
    rounded ratios, train receives the remainder. Rounding is half-to-even
    (Python round), so 190 cases at 15% give 28 rather than 29.
    """
    if len(ratios) != 3:
        raise InvalidInputError("ratios must hold (train, val, test)")
    if any(r <= 0 for r in ratios):
        raise InvalidInputError("split ratios must be positive")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise InvalidInputError(f"split ratios must sum to 1, got {sum(ratios)}")
    if n_cases < 3:
        raise InvalidInputError(f"{n_cases} cases cannot fill 3 partitions")

    n_val = int(round(n_cases * ratios[1]))
    n_test = int(round(n_cases * ratios[2]))
    n_train = n_cases - n_val - n_test
    if min(n_train, n_val, n_test) < 1:
        raise InvalidInputError(
            f"{n_cases} cases leave an empty partition for ratios {tuple(ratios)}"
        )

    order = np.random.default_rng(seed).permutation(n_cases)
    return SplitAssignment(
        train=sorted(int(i) for i in order[:n_train]),
        val=sorted(int(i) for i in order[n_train : n_train + n_val]),
        test=sorted(int(i) for i in order[n_train + n_val :]),
        seed=seed,
    )


def campaign_index_path(path: str) -> str:
    if os.path.isdir(path):
        return os.path.join(path, CAMPAIGN_INDEX_NAME)
    return path


def save_campaign_index(index: CampaignIndex, path: str):
    path = campaign_index_path(path)
    with open(path, "w") as f:
        f.write(index.model_dump_json(indent=2))


def load_campaign_index(path: str) -> CampaignIndex:
    path = campaign_index_path(path)
    if not os.path.exists(path):
        raise MissingBlobError("missing campaign index", path=path)
    try:
        with open(path, "r") as f:
            return CampaignIndex.model_validate(json.load(f))
    except (ValidationError, json.JSONDecodeError) as e:
        raise CaseFormatError(f"invalid campaign index: {e}", path=path)


def load_campaign_cases(path: str) -> tuple[CampaignIndex, list[CaseTrajectory]]:
    index_path = campaign_index_path(path)
    index = load_campaign_index(index_path)
    root = os.path.dirname(os.path.abspath(index_path))
    cases = [load_case(os.path.join(root, entry.case_dir)) for entry in index.cases]
    bt.logging.info(f"Loaded {len(cases)} cases from {index_path}")
    return index, cases
