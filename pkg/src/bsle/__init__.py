"""Backward chordal SLE: Loewner flow, driver samplers, Green's-function estimators
and a two-route verification of the decomposition constant C1."""

__version__ = "0.1.0"

from ._backend import NAME as backend  # noqa: E402
from .drivers import (BesselPath, RhoDriverResult, bessel_lifetimes, extend_driver,  # noqa: E402
                      lifetime_from_bessel, sample_brownian_driver, sample_cos_bessel, sample_rho_driver,
                      time_change_u, u_rate, w_from_xy)
from .greens import (EstimateReport, GreenParams, estimate_Gt, girsanov_check, green,  # noqa: E402
                     martingale_check, martingale_M, mean_inverse_lifetime, scaling_check)
from .harness import (VerifyConfig, estimate_c1_lifetime, estimate_c1_occupation,  # noqa: E402
                      extended_endpoint_check, occupation_histogram, verify_theorem)
from .loewner import (DrivingPath, FlowPoint, WeldingRecord, evolve_point, hcap_probe,  # noqa: E402
                      rect_occupation, step_derivative, step_map, swallowing_time, welding_curve)
from .rng import RngSpec  # noqa: E402

__all__ = [
    "backend", "BesselPath", "RhoDriverResult", "bessel_lifetimes", "extend_driver",
    "lifetime_from_bessel", "sample_brownian_driver", "sample_cos_bessel", "sample_rho_driver",
    "time_change_u", "u_rate", "w_from_xy", "EstimateReport", "GreenParams", "estimate_Gt",
    "girsanov_check", "green", "martingale_check", "martingale_M", "mean_inverse_lifetime",
    "scaling_check", "VerifyConfig", "estimate_c1_lifetime", "estimate_c1_occupation",
    "extended_endpoint_check", "occupation_histogram", "verify_theorem", "DrivingPath", "FlowPoint",
    "WeldingRecord", "evolve_point", "hcap_probe", "rect_occupation", "step_derivative", "step_map",
    "swallowing_time", "welding_curve", "RngSpec",
]
