"""Smearing simulator for explicit hyperbolic surfaces."""

from hypsmear.smear.surface import SurfaceModel, load_model, reduce_to_domain
from hypsmear.smear.net import GammaNet, build_net
from hypsmear.smear.chain import (
    SmearChain,
    RatioReport,
    FaceResidual,
    haar_sample,
    accumulate_chain,
    boundary_residuals,
    ratio_report,
    inclusion_check,
    measure_sandwich,
    element_word,
)

__all__ = [
    "SurfaceModel",
    "load_model",
    "reduce_to_domain",
    "GammaNet",
    "build_net",
    "SmearChain",
    "RatioReport",
    "FaceResidual",
    "haar_sample",
    "accumulate_chain",
    "boundary_residuals",
    "ratio_report",
    "inclusion_check",
    "measure_sandwich",
    "element_word",
]
