"""Pydantic input models"""

import math
from typing import List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, Field, field_validator, model_validator


class GridSamples(BaseModel):
    """Log conformal factor sampled on the Gauss-Legendre grid, latitude-major"""

    kind: Literal["grid"] = "grid"
    nlat: int = Field(..., gt=0, description="Number of colatitude nodes")
    nlon: int = Field(..., gt=0, description="Number of longitude nodes")
    values: List[float] = Field(..., description="Row-major node values")

    @model_validator(mode="after")
    def validate_shape(self) -> "GridSamples":
        if len(self.values) != self.nlat * self.nlon:
            raise ValueError(f"values has {len(self.values)} entries, expected nlat*nlon = {self.nlat * self.nlon}")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("values must be finite")
        return self


class HarmonicCoeffs(BaseModel):
    """
    Real harmonic expansion: (l, m, value) with m >= 0 the cosine/zonal
    coefficient and m < 0 the sine coefficient of order |m|.
    """

    kind: Literal["harmonics"] = "harmonics"
    coeffs: List[Tuple[int, int, float]] = Field(default_factory=list, description="(l, m, value) triples")

    @field_validator("coeffs")
    @classmethod
    def validate_coeffs(cls, v: List[Tuple[int, int, float]]) -> List[Tuple[int, int, float]]:
        for l, m, value in v:
            if l < 0 or abs(m) > l:
                raise ValueError(f"invalid harmonic index (l={l}, m={m})")
            if not math.isfinite(value):
                raise ValueError(f"coefficient for (l={l}, m={m}) is not finite")
        return v


class MetricFile(BaseModel):
    """Conformal metric exp(2w) g* on the round sphere"""

    form: Literal["conformal"] = Field("conformal", description="Only conformal metrics are accepted")
    bandlimit: int = Field(..., gt=0, description="Spectral bandlimit L")
    w: Union[GridSamples, HarmonicCoeffs] = Field(..., discriminator="kind")

    @model_validator(mode="after")
    def validate_against_bandlimit(self) -> "MetricFile":
        if isinstance(self.w, GridSamples):
            if self.w.nlat != self.bandlimit + 1:
                raise ValueError(f"grid nlat must be bandlimit + 1 = {self.bandlimit + 1}")
            if self.w.nlon not in (1, 2 * self.bandlimit + 2):
                raise ValueError(f"grid nlon must be 1 (zonal) or 2*bandlimit + 2 = {2 * self.bandlimit + 2}")
        else:
            too_high = [l for l, _, _ in self.w.coeffs if l > self.bandlimit]
            if too_high:
                raise ValueError(f"harmonic degree {max(too_high)} exceeds bandlimit {self.bandlimit}")
        return self

    model_config = {
        "json_schema_extra": {
            "examples": [
                {
                    "form": "conformal",
                    "bandlimit": 32,
                    "w": {"kind": "harmonics", "coeffs": [[1, 0, 1.0233267079464885]]},
                }
            ]
        }
    }


class MeshFile(BaseModel):
    """Closed triangle mesh"""

    vertices: List[Tuple[float, float, float]] = Field(..., min_length=4)
    faces: List[Tuple[int, int, int]] = Field(..., min_length=4)

    @model_validator(mode="after")
    def validate_indices(self) -> "MeshFile":
        n = len(self.vertices)
        for face in self.faces:
            if any(i < 0 or i >= n for i in face):
                raise ValueError(f"face {list(face)} references a vertex outside 0..{n - 1}")
            if len(set(face)) != 3:
                raise ValueError(f"face {list(face)} repeats a vertex")
        return self


class RunConfig(BaseModel):
    """Resolved parameters of one CLI run; echoed into every report"""

    subcommand: str = Field(..., description="CLI subcommand")
    metric_path: Optional[str] = Field(None, description="Metric input file")
    mesh_path: Optional[str] = Field(None, description="Mesh output or input file")
    out_path: Optional[str] = Field(None, description="JSON report path")
    csv_path: Optional[str] = Field(None, description="CSV dump path")
    bandlimit: int = Field(..., gt=0)
    n_time: int = Field(..., ge=8)
    membership_tol: float = Field(..., description="Relative M+ tolerance")
    collar_epsilon_cap: float = Field(..., description="Upper bound on the collar epsilon")
    seed: int = Field(..., description="Seed for randomized batteries")
    num_threads: int = Field(1, ge=1)

    @field_validator("membership_tol", "collar_epsilon_cap")
    @classmethod
    def validate_positive(cls, v: float) -> float:
        """Tolerances must be strictly positive"""
        if not v > 0:
            raise ValueError("tolerance must be positive")
        return v
