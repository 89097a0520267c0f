"""Stratified non-negative tensor factorization.

Fits shared global topic factors and per-stratum feature tensors to
collections of non-negative data tensors via multiplicative updates, with an
optional total-variation-regularized variant for spatial modes.
"""

from ._core import (
    DenseTensor,
    EarlyStop,
    FitConfig,
    FitResult,
    LossPoint,
    ModelState,
    Norm,
    PlantedSpec,
    StratifiedDataset,
    fit,
    generate_planted,
    init_model,
    load_dataset,
    load_model,
    objective,
    param_count,
    read_tensor,
    reconstruct,
    relative_loss,
    salt_and_pepper,
    save_model,
    tv_seminorm,
    tv_subgradient,
    write_tensor,
)

__all__ = [
    "DenseTensor",
    "EarlyStop",
    "FitConfig",
    "FitResult",
    "LossPoint",
    "ModelState",
    "Norm",
    "PlantedSpec",
    "StratifiedDataset",
    "fit",
    "generate_planted",
    "init_model",
    "load_dataset",
    "load_model",
    "objective",
    "param_count",
    "read_tensor",
    "reconstruct",
    "relative_loss",
    "salt_and_pepper",
    "save_model",
    "tv_seminorm",
    "tv_subgradient",
    "write_tensor",
]
