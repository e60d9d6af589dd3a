from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

CASE_SCHEMA_VERSION = 1

# channels carrying their own z-score statistics
NORM_CHANNELS = ("coords", "u", "s", "peeq", "rf2")


class CaseTrajectory(BaseModel):
    """
    One simulation case: hexahedral mesh geometry plus the per-frame fields.
    Arrays are float64 except `connectivity` and `load_nodes` (int64).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    coords: np.ndarray = Field(..., description="[N x 3] node coordinates, mm")
    connectivity: np.ndarray = Field(
        ..., description="[E x 8] corner node indices, bottom face 0-3 then top 4-7"
    )
    u: np.ndarray = Field(..., description="[T x N x 3] nodal displacement, mm")
    s: np.ndarray = Field(..., description="[T x E] element von Mises stress, MPa")
    peeq: np.ndarray = Field(..., description="[T x E] equivalent plastic strain")
    rf2: np.ndarray = Field(..., description="[T] global vertical reaction force, kN")
    frame_times: np.ndarray = Field(..., description="[T] strictly increasing times")
    load_nodes: np.ndarray = Field(..., description="node indices under the load blocks")
    load_positions: tuple[float, float] = Field(
        ..., description="load block centres along the beam axis, mm"
    )
    case_id: str = Field(default="", description="human readable case label")
    meta: dict = Field(default_factory=dict, description="free-form provenance")

    @property
    def n_nodes(self) -> int:
        return int(self.coords.shape[0])

    @property
    def n_elems(self) -> int:
        return int(self.connectivity.shape[0])

    @property
    def n_frames(self) -> int:
        return int(self.frame_times.shape[0])


class ChannelStats(BaseModel):
    mean: float
    std: float = Field(..., gt=0.0)


class NormStats(BaseModel):
    """
    Global z-score statistics, one (mean, std) pair per channel, computed on the
    training split only.
    """

    channels: dict[str, ChannelStats]

    def mean(self, channel: str) -> float:
        return self.channels[channel].mean

    def std(self, channel: str) -> float:
        return self.channels[channel].std


class SplitAssignment(BaseModel):
    train: list[int]
    val: list[int]
    test: list[int]
    seed: int

    @model_validator(mode="after")
    def _check_partition(self):
        sets = [set(self.train), set(self.val), set(self.test)]
        if sum(len(s) for s in sets) != len(self.train) + len(self.val) + len(
            self.test
        ):
            raise ValueError("split lists contain duplicates")
        if (sets[0] & sets[1]) or (sets[0] & sets[2]) or (sets[1] & sets[2]):
            raise ValueError("split lists are not disjoint")
        return self

    @property
    def n_cases(self) -> int:
        return len(self.train) + len(self.val) + len(self.test)


class BlobEntry(BaseModel):
    name: str
    shape: list[int]
    dtype: str = Field(..., pattern="^(f64|u32)$")
    byte_length: int = Field(..., ge=0)


class CaseManifest(BaseModel):
    schema_version: int = CASE_SCHEMA_VERSION
    n_nodes: int
    n_elems: int
    n_frames: int
    dtype: str = "f64"
    endianness: str = "little"
    blobs: list[BlobEntry]
    load_positions: tuple[float, float]
    load_nodes: list[int]
    case_id: str = ""
    meta: dict = Field(default_factory=dict)

    def blob(self, name: str) -> Optional[BlobEntry]:
        for entry in self.blobs:
            if entry.name == name:
                return entry
        return None


class CampaignEntry(BaseModel):
    case_dir: str = Field(..., description="case directory relative to the index")
    offsets: tuple[int, int]
    load_positions: tuple[float, float]


class CampaignIndex(BaseModel):
    schema_version: int = CASE_SCHEMA_VERSION
    beam: dict = Field(default_factory=dict)
    campaign: dict = Field(default_factory=dict)
    mesh_scale: str = "tiny"
    cases: list[CampaignEntry]
    split: Optional[SplitAssignment] = None
