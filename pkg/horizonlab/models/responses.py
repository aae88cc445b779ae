"""Pydantic report models"""

from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from horizonlab.models.requests import RunConfig


class CertificateKind(str, Enum):
    """Routes to M+ membership"""
    EIGENVALUE = "eigenvalue"
    Q_CERTIFICATE = "q-certificate"
    GRADIENT_BOUND = "gradient-bound"


class MembershipCertificateRecord(BaseModel):
    """Serialized membership certificate"""

    model_config = ConfigDict(populate_by_name=True)

    kind: CertificateKind
    lambda_: Optional[float] = Field(None, alias="lambda")
    min_Q: Optional[float] = None
    sup_grad_w: Optional[float] = None


class EigenSummary(BaseModel):
    """First eigenpair diagnostics"""

    model_config = ConfigDict(populate_by_name=True)

    backend: str = Field(..., description="galerkin, galerkin-zonal or fem")
    size: int = Field(..., description="Number of unknowns")
    lambda_: float = Field(..., alias="lambda")
    gap: float = Field(..., description="Distance to the second eigenvalue")
    residual: float = Field(..., description="Sup norm of L_g u - lambda u at the nodes")


class MembershipReport(BaseModel):
    """Result of check-mplus"""

    seed: int
    config: Optional[RunConfig] = None
    area: float
    hawking_mass: float
    in_m_plus: bool
    tolerance: float
    eigen: EigenSummary
    certificates: List[MembershipCertificateRecord] = Field(default_factory=list)

    model_config = {
        "json_schema_extra": {
            "examples": [
                {
                    "seed": 20240611,
                    "area": 12.566370614359172,
                    "hawking_mass": 0.5,
                    "in_m_plus": True,
                    "tolerance": 1e-8,
                    "eigen": {"backend": "galerkin-zonal", "size": 33, "lambda": 1.0, "gap": 2.0, "residual": 1e-14},
                    "certificates": [{"kind": "q-certificate", "lambda": 1.0, "min_Q": 1.0}],
                }
            ]
        }
    }


class PathSummary(BaseModel):
    """Diagnostics of a metric path"""

    n_time: int
    times: List[float]
    lambdas: List[float]
    area: float
    rho: float
    area_residual: float = Field(..., description="sup |dA_g(t)/dA_g(0) - 1|")
    boundary_residual: float = Field(..., description="sup |g(0) - exp(2w) id|")
    curvature_residual: float = Field(..., description="sup |K_g(t) - 4 pi/A| on t >= 1/2")
    continuity_constant: float = Field(..., description="sup_t |u(t+dt) - u(t)|_inf / dt")
    min_lambda: float


class CollarReport(BaseModel):
    """Collar parameters, curvature and slice mean curvature"""

    epsilon: float
    A: float
    epsilon_0: float
    A_0: float
    min_R: float
    argmin: Dict[str, float] = Field(default_factory=dict, description="t, theta, phi of the minimum")
    bound_margin: float = Field(..., description="Minimum of the sufficient lower bound for R")
    times: List[float]
    min_H: List[float] = Field(..., description="Minimum mean curvature per slice")
    H0_residual: float
    second_fundamental_form_norm: float
    trace_residual: float = Field(..., description="Closed-form against finite-difference trace of h-dot")


class VerificationReport(BaseModel):
    """Region-wise checks of an extension; flags are recomputed from the numbers"""

    min_R_collar: float
    min_R_neck: float
    min_R_glued: float = Field(..., description="Minimum R on the glued neck from the glue start up to s0")
    max_abs_R_tail: float
    boundary_residual: float
    H0_residual: float
    min_interior_H: float
    hawking_mass: float
    adm_mass: float
    penrose_margin: float
    flags: Dict[str, bool] = Field(default_factory=dict)
    passed: bool = False


class ExtensionReport(BaseModel):
    """Result of extend"""

    seed: int
    config: Optional[RunConfig] = None
    mass: float
    area: float
    T: float = Field(..., description="Warp constant on t in [1/2, 1]")
    rho: float
    s0: float
    delta: float
    epsilon_star: float
    bend_amplitude: float
    glue_width: float
    path: PathSummary
    collar: CollarReport
    verification: VerificationReport


class BartnikTrial(BaseModel):
    mass: float
    success: bool
    reason: Optional[str] = None


class BartnikEstimate(BaseModel):
    """Bracket (lower, upper] for the Bartnik mass"""

    seed: int
    config: Optional[RunConfig] = None
    hawking_mass: float
    lower: float
    upper: float
    rel_tol: float
    trials: List[BartnikTrial] = Field(default_factory=list)


class ZooRow(BaseModel):
    """One member of the negative-curvature family"""

    model_config = ConfigDict(populate_by_name=True)

    n: int
    alpha: float
    bandlimit: int
    lambda_1: float
    negative_curvature: float = Field(..., description="Integral of (K)_- dA")
    mu: float = Field(..., description="Area of {cos n theta >= 1/2} in the band")
    Lambda: float = Field(..., description="sup over the band of 1 - lap v - alpha sin(n theta) cot(theta)")
    lower_bound: float
    gauss_bonnet_residual: float
    openness_margin: float
    c1_distance: float


class ZooReport(BaseModel):
    seed: int
    config: Optional[RunConfig] = None
    rows: List[ZooRow] = Field(default_factory=list)


class HoopReport(BaseModel):
    """Result of croke"""

    seed: int
    config: Optional[RunConfig] = None
    cap_radius: float
    area: float
    delta_area: float = Field(..., description="Signed area change of the caps; negative for convex caps")
    area_interval: Tuple[float, float] = Field(..., description="Smoothed area 2 sqrt(3) + delta_area and flat area 2 sqrt(3), ascending")
    lattice_systole: float
    cone_distance: float
    certified_length: float
    length_cases: Dict[str, float] = Field(..., description="Lower bound per case of the lift analysis")
    empirical_length: Optional[float] = None
    lambda_1: float
    total_curvature: float
    min_angle_defect: float
    cap_total_curvature: float
    cone_graph_slope: float
    ratio: float = Field(..., description="certified_length^2 / area")
    mass_factor: float
    mass: float
    hoop_bound: float = Field(..., description="4 pi m")
    flags: Dict[str, bool] = Field(default_factory=dict)
    passed: bool = False


class OracleResult(BaseModel):
    name: str
    passed: bool
    value: float
    expected: float
    tolerance: float


class OracleReport(BaseModel):
    seed: int
    results: List[OracleResult] = Field(default_factory=list)
    passed: bool = False


class ErrorResponse(BaseModel):
    """Structured error record"""

    error: str = Field(
        ...,
        description="Error type or category"
    )
    message: str = Field(
        ...,
        description="Detailed error message"
    )
    details: Optional[Dict[str, Any]] = Field(
        None,
        description="Additional error details"
    )
