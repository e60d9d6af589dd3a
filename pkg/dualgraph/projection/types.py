import numpy as np
from pydantic import BaseModel, ConfigDict, Field


class AttenuationReport(BaseModel):
    """
    Peak comparison between an element field and its element -> node -> element
    reconstruction.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    original_peak: float
    projected_peak: float
    reduction_pct: float = Field(..., ge=0.0, le=100.0)
    original_peak_index: int
    projected_peak_index: int
    zero_peak: bool = Field(
        default=False, description="field is identically zero, reduction forced to 0"
    )
    unit: str = ""
    abs_diff: np.ndarray = Field(..., description="per-element |f - projected f|")

    def summary(self) -> dict:
        return self.model_dump(exclude={"abs_diff"})
