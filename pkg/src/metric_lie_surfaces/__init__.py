"""Surfaces in three-dimensional unimodular metric Lie groups."""

from .correspondences import daniel_transform, lawson_params, rot_theta, twin_s3
from .model_core import (
    Family,
    GroupType,
    MetricLieGroupModel,
    ProductLimitModel,
    make_dim4_model,
    make_model,
)
from .reconstruction import reconstruct_dim4, reconstruct_from_angles, reconstruct_from_T
from .special_surfaces import constant_angle_set, integral_surface, totally_geodesic, vertical_cylinder
from .surface_geometry import (
    FundamentalData,
    GridSurface,
    SurfacePatch,
    compatibility_residuals,
    dim4_residuals,
    extract_fundamental_data,
)

__all__ = [
    "Family",
    "FundamentalData",
    "GridSurface",
    "GroupType",
    "MetricLieGroupModel",
    "ProductLimitModel",
    "SurfacePatch",
    "compatibility_residuals",
    "constant_angle_set",
    "daniel_transform",
    "dim4_residuals",
    "extract_fundamental_data",
    "integral_surface",
    "lawson_params",
    "make_dim4_model",
    "make_model",
    "reconstruct_dim4",
    "reconstruct_from_T",
    "reconstruct_from_angles",
    "rot_theta",
    "totally_geodesic",
    "twin_s3",
    "vertical_cylinder",
]
