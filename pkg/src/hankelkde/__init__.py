"""Diffusion-based kernel estimation of the condensed density of Hankel pencil eigenvalues."""

from hankelkde.signal import ExponentialModel, ReplicateSet, RngConfig, add_noise, paper_model, synthesize

__all__ = [
    "ExponentialModel",
    "ReplicateSet",
    "RngConfig",
    "add_noise",
    "paper_model",
    "synthesize",
]

__version__ = "0.1.0"
