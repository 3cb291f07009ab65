"""Distortion coefficients, volume estimators and the falsification experiments."""

from .bm import BMConfig, bm_construction, bm_report, degenerate_config
from .distortion import DistortionParams, sigma, tau, tau_value
from .homothety import (
    HOMOTHETY_GRID,
    default_target,
    homothety_exponent,
    homothety_volumes,
    translated_sampler,
    unit_time_ratio,
)
from .lemma import PROFILES, LemmaCheck, area_chord_check, parabola_ratio
from .mcp import (
    BallRegion,
    FlatSegment,
    MCPConfig,
    McpWitness,
    WitnessRegion,
    ball_target,
    flat_parts,
    mcp_report,
    mcp_singular_witness,
)
from .measure import (
    MeasureEstimate,
    ball_sampler,
    ball_volume,
    mc_integral,
    mc_volume,
    midpoint_cloud,
    midpoint_set_volume,
    point_sampler,
    pool_sampler,
    stabilized,
    vanishing,
    voxel_estimate,
    voxel_ladder,
)
from .records import ViolationRecord

__all__ = [
    "BMConfig",
    "BallRegion",
    "DistortionParams",
    "FlatSegment",
    "HOMOTHETY_GRID",
    "LemmaCheck",
    "MCPConfig",
    "McpWitness",
    "MeasureEstimate",
    "PROFILES",
    "ViolationRecord",
    "WitnessRegion",
    "area_chord_check",
    "ball_sampler",
    "ball_target",
    "ball_volume",
    "bm_construction",
    "bm_report",
    "default_target",
    "degenerate_config",
    "flat_parts",
    "homothety_exponent",
    "homothety_volumes",
    "mc_integral",
    "mc_volume",
    "mcp_report",
    "mcp_singular_witness",
    "midpoint_cloud",
    "midpoint_set_volume",
    "parabola_ratio",
    "point_sampler",
    "pool_sampler",
    "sigma",
    "stabilized",
    "tau",
    "tau_value",
    "translated_sampler",
    "unit_time_ratio",
    "vanishing",
    "voxel_estimate",
    "voxel_ladder",
]
