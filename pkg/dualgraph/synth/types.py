from enum import Enum
from typing import Optional

from pydantic import BaseModel, Field, model_validator


class MeshScale(str, Enum):
    tiny = "tiny"
    small = "small"
    full = "full"


# element divisions along (length, depth, width)
MESH_DIVISIONS = {
    MeshScale.tiny: (12, 2, 2),
    MeshScale.small: (54, 5, 3),
    MeshScale.full: (108, 10, 6),
}


class BeamSpec(BaseModel):
    """
    Four-point bending specimen. Lengths in mm, forces in kN, modulus in GPa.
    The beam axis is x, y is vertical (depth), z runs across the width.
    """

    width: float = 150.0
    depth: float = 250.0
    length: float = 2700.0
    span: float = 2400.0
    mesh_size: float = 25.0
    yield_force: float = 85.0
    ultimate_force: float = 102.0
    ultimate_deflection: float = 33.4
    yield_deflection: float = 10.02
    elastic_modulus: float = 32.7
    baseline_positions: tuple[float, float] = (950.0, 1750.0)
    block_width: float = 100.0

    @model_validator(mode="after")
    def _check(self):
        if self.span > self.length:
            raise ValueError("span cannot exceed the beam length")
        for name in ("width", "depth", "length"):
            ratio = getattr(self, name) / self.mesh_size
            if abs(ratio - round(ratio)) > 1e-9:
                raise ValueError(f"mesh size {self.mesh_size} does not divide {name}")
        if not self.yield_force < self.ultimate_force:
            raise ValueError("yield force must be below the ultimate force")
        if not self.yield_deflection < self.ultimate_deflection:
            raise ValueError("yield deflection must be below the ultimate deflection")
        return self

    @property
    def left_support(self) -> float:
        return 0.5 * (self.length - self.span)

    @property
    def right_support(self) -> float:
        return self.left_support + self.span

    @property
    def neutral_axis(self) -> float:
        return 0.5 * self.depth

    @property
    def inertia(self) -> float:
        """Second moment of area, mm^4."""
        return self.width * self.depth**3 / 12.0

    @property
    def flexural_rigidity(self) -> float:
        """E*I in N mm^2."""
        return self.elastic_modulus * 1e3 * self.inertia


class GeneratorConstants(BaseModel):
    """
    Closed-form stress/plasticity stand-in. Stresses in MPa.
    """

    contact_coefficient: float = Field(
        default=4.0, description="peak bearing stress per kN of block load"
    )
    contact_spread: float = Field(
        default=0.5, gt=0.0, description="decay length of the bearing stress along the span, in element widths"
    )
    contact_depth: float = Field(
        default=4.0, gt=0.0, description="decay length of the bearing stress into the depth, in element heights"
    )
    yield_stress: float = Field(
        default=60.0, description="stress cap; the elastic excess above it becomes PEEQ"
    )
    hardening: float = Field(
        default=0.0, ge=0.0, le=1.0, description="post-yield stress slope, 0 is a hard cap"
    )
    kappa: float = Field(default=5e-4, description="PEEQ per MPa of excess stress")
    tensile_strength: float = Field(
        default=2.0, description="cracked concrete carries at most this in tension"
    )


class CampaignSpec(BaseModel):
    offset_range: int = Field(default=200, description="max block shift, mm")
    offset_step: int = Field(default=25, description="shift increment, mm")
    frames: int = Field(default=21, ge=2)
    count: int = Field(default=190, ge=1)
    seed: int = 0
    offsets: Optional[list[tuple[int, int]]] = Field(
        default=None, description="explicit offset pairs, overrides sampling"
    )

    @model_validator(mode="after")
    def _check(self):
        if self.offset_step <= 0 or self.offset_range % self.offset_step:
            raise ValueError("offset range must be a multiple of the offset step")
        for pair in self.offsets or []:
            for offset in pair:
                if offset % self.offset_step or abs(offset) > self.offset_range:
                    raise ValueError(
                        f"offset {offset} is not a multiple of {self.offset_step} within ±{self.offset_range}"
                    )
        return self

    def grid(self) -> list[int]:
        return list(range(-self.offset_range, self.offset_range + 1, self.offset_step))

    def candidate_pairs(self) -> list[tuple[int, int]]:
        grid = self.grid()
        return [(a, b) for a in grid for b in grid]
