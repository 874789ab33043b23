"""Curvature energies, regularity certificates and isotopy bounds for discrete manifolds."""

from .geometry import GeometryError, HypothesisError, Plane, angle, angle_projectors, angle_sup
from .manifold import DiscreteManifold, ManifoldError, SampleSet, hausdorff_distance, load, sample, save
from .energy import EnergyError, EnergyResult, EnergySpec, QuadratureConfig, evaluate
from .regularity import RegularityCertificate, RegularityError, fit_patch, verify_class
from .isotopy import (IsotopyCertificate, IsotopyError, build_normal_field, certify_isotopy,
                      count_isotopy_types, project_onto)
from .minimize import FlowError, FlowOptions, FlowState, descend, energy_gradient, run_flow

__version__ = "0.1.0"

__all__ = [
    "GeometryError", "HypothesisError", "Plane", "angle", "angle_projectors", "angle_sup",
    "DiscreteManifold", "ManifoldError", "SampleSet", "hausdorff_distance", "load", "sample", "save",
    "EnergyError", "EnergyResult", "EnergySpec", "QuadratureConfig", "evaluate",
    "RegularityCertificate", "RegularityError", "fit_patch", "verify_class",
    "IsotopyCertificate", "IsotopyError", "build_normal_field", "certify_isotopy",
    "count_isotopy_types", "project_onto",
    "FlowError", "FlowOptions", "FlowState", "descend", "energy_gradient", "run_flow",
]
