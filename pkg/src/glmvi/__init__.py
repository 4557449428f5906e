"""Parameter recovery in generalized linear models via strongly monotone variational inequalities."""

from glmvi.glm_model import GlmModel, LabelLaw, Observation, Observations
from glmvi.links import Link, h_profile, modulus_profile
from glmvi.vi_core import Ball, VectorField, unit_ball

__version__ = "0.1.0"

__all__ = [
    "Ball",
    "GlmModel",
    "LabelLaw",
    "Link",
    "Observation",
    "Observations",
    "VectorField",
    "h_profile",
    "modulus_profile",
    "unit_ball",
]
