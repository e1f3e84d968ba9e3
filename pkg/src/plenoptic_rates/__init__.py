"""Information rates of camera views along random-walk trajectories.

Modules
-------
walk      Bernoulli random walk, first-return and recurrence analytics
reality   static walls and time-varying (BSC / AR(1)) fields
view      extraction of L-sample frames along a path
entropy   entropy-rate bounds for static and dynamic scenes
detect    trajectory-increment detectors and Monte-Carlo error rates
rd        rate-distortion: Blahut-Arimoto, Shannon lower bound, Toeplitz spectra
codec     closed-loop DPCM with an entropy-constrained scalar quantizer
oracle    brute-force ground truth on tiny instances
cli       experiment front end
"""

from .walk import WalkParams, WalkPath
from .reality import Ar1FieldSpec, BscFieldSpec, StaticWallSpec
from .view import ViewSpec, ViewSequence

__all__ = [
    "WalkParams",
    "WalkPath",
    "StaticWallSpec",
    "BscFieldSpec",
    "Ar1FieldSpec",
    "ViewSpec",
    "ViewSequence",
]
