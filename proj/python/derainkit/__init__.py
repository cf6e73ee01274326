"""Multi-frame image deraining: temporal median filtering, weighted ensembling
of restored frames, and patch-match-driven least-squares brightness correction.
"""

from ._core import (
    DerainError,
    apply_affine,
    estimate_pixel,
    evaluate,
    fit_affine,
    fit_affine_plus,
    generate_scene,
    load_image,
    psnr,
    save_image,
    ssim,
    temporal_mean,
    temporal_median,
    weighted_average,
)

__all__ = [
    "DerainError",
    "apply_affine",
    "estimate_pixel",
    "evaluate",
    "fit_affine",
    "fit_affine_plus",
    "generate_scene",
    "load_image",
    "psnr",
    "save_image",
    "ssim",
    "temporal_mean",
    "temporal_median",
    "weighted_average",
]
