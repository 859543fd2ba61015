"""Numerical laboratory for Randers-Finsler metrics.

Exact high-order derivatives come from truncated Taylor jets
(:mod:`finslerlab.jets`); every tensor is built from F^2 of a chart defined by
expression strings (:mod:`finslerlab.dsl`).
"""
__version__ = "0.1.0"

from .catalog import euclidean_randers, funk_ball, parallel_beta_product, riemannian_sphere
from .core import (FundamentalData, NormEstimate, TorsionData, fundamental_data, mean_cartan_norm,
                   randers_norm_bound, torsion_data)
from .curvature import (ConnectionData, CurvatureBundle, FlagData, HCurv3, HHCurvature, RTensor, connection_data,
                        curvature_bundle, hcurv3, hh_curvature, r_tensor, riemann_flag, scalar_flag_verify)
from .dsl import ChartSpec, load_chart, parse_expr, to_text, validate_chart
from .fdoracle import FDOracleConfig, fd_partial
from .geodesics import (GeodesicPath, TraceSeries, TransportedFrame, integrate_geodesic, linear_law_check,
                        parallel_transport, trace_series)
from .jets import Jet, OrderExceeded, mixed_partial
from .spray import BerwaldLandsbergData, SprayData, berwald_landsberg, classify_spray, spray_data

__all__ = [
    "euclidean_randers", "funk_ball", "parallel_beta_product", "riemannian_sphere",
    "FundamentalData", "NormEstimate", "TorsionData", "fundamental_data", "mean_cartan_norm",
    "randers_norm_bound", "torsion_data",
    "ConnectionData", "CurvatureBundle", "FlagData", "HCurv3", "HHCurvature", "RTensor", "connection_data",
    "curvature_bundle", "hcurv3", "hh_curvature", "r_tensor", "riemann_flag", "scalar_flag_verify",
    "ChartSpec", "load_chart", "parse_expr", "to_text", "validate_chart",
    "FDOracleConfig", "fd_partial",
    "GeodesicPath", "TraceSeries", "TransportedFrame", "integrate_geodesic", "linear_law_check",
    "parallel_transport", "trace_series",
    "Jet", "OrderExceeded", "mixed_partial",
    "BerwaldLandsbergData", "SprayData", "berwald_landsberg", "classify_spray", "spray_data",
]
