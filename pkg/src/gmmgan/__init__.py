"""Simulator for GAN training dynamics on mixtures of two unit Gaussians."""

__version__ = "0.1.0"

from .discriminator import DiscriminatorSet, Interval, optimal_discriminator, tv_distance
from .dynamics import DynamicsConfig, FirstOrderState, Status, Trajectory, Variant, run
from .errors import GMMGANError, IdenticalParameters, InvalidConfig, UnknownFigure, ZeroGap
from .gaussmix import MixtureParams, ZeroSet, find_zeros, mixture_pdf
from .loss import EndpointVector, gradients, loss_value

__all__ = [
    "__version__",
    "DiscriminatorSet",
    "DynamicsConfig",
    "EndpointVector",
    "FirstOrderState",
    "GMMGANError",
    "IdenticalParameters",
    "Interval",
    "InvalidConfig",
    "MixtureParams",
    "Status",
    "Trajectory",
    "UnknownFigure",
    "Variant",
    "ZeroGap",
    "ZeroSet",
    "find_zeros",
    "gradients",
    "loss_value",
    "mixture_pdf",
    "optimal_discriminator",
    "run",
    "tv_distance",
]
