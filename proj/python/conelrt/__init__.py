"""Likelihood ratio tests at singular points of algebraic models.

Laws and cones are given in the same text form as the command-line tool,
e.g. ``"maxeig:4"``, ``"chibar:0.5,0.5:1,2"`` or ``"diag:4"``.
"""

from ._conelrt import (
    chisq_sf,
    cone_angle_rho,
    dist2_cone,
    feedback_cov,
    fit_feedback,
    fit_one_factor,
    ident_class,
    law_cdf,
    lrt_mean_curve,
    lrt_saturated,
    lrt_submodel,
    pentad,
    quantile,
    run_experiment,
    sample_law,
    tetrads,
)

__all__ = [
    "chisq_sf",
    "cone_angle_rho",
    "dist2_cone",
    "feedback_cov",
    "fit_feedback",
    "fit_one_factor",
    "ident_class",
    "law_cdf",
    "lrt_mean_curve",
    "lrt_saturated",
    "lrt_submodel",
    "pentad",
    "quantile",
    "run_experiment",
    "sample_law",
    "tetrads",
]
