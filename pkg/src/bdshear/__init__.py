"""Compactly supported shearlet frames on bounded domains and their approximation rates."""
from .approx import DecayReport, decay_curve, fit_rate, log_spaced_N, n_largest, tail_energies
from .cartoon import CartoonFunction, ImageGrid, make_cartoon, rasterize
from .frames import (
    FrameBounds,
    ProjectedSystem,
    dual_reconstruct,
    estimate_bounds,
    frame_apply,
    project_system,
)
from .generators import GeneratorSet, build_generator_set, cached_generator_set, validate_decay
from .geometry import DomainSpec, make_piecewise_domain, make_star_domain
from .system import CoefficientTable, ShearletSystem, analyze, enumerate_indices, synthesize

__all__ = [
    "CartoonFunction",
    "CoefficientTable",
    "DecayReport",
    "DomainSpec",
    "FrameBounds",
    "GeneratorSet",
    "ImageGrid",
    "ProjectedSystem",
    "ShearletSystem",
    "analyze",
    "build_generator_set",
    "cached_generator_set",
    "decay_curve",
    "dual_reconstruct",
    "enumerate_indices",
    "estimate_bounds",
    "fit_rate",
    "frame_apply",
    "log_spaced_N",
    "make_cartoon",
    "make_piecewise_domain",
    "make_star_domain",
    "n_largest",
    "project_system",
    "rasterize",
    "synthesize",
    "tail_energies",
    "validate_decay",
]
