"""Geodesic ball walk and Metropolis chains on compact surfaces.

Numerics for the spectral, mixing, and Brownian-limit behaviour of the
ball walk T_h and its Metropolis correction M_h on the flat torus, the
round sphere, and a torus of revolution.
"""

__version__ = "0.1.0"

from .geometry import FlatTorus, RevolutionTorus, Sphere2, make_manifold
from .kernels import WalkConfig
from .specfun import gamma_d, phi_h, unit_ball_volume

__all__ = [
    "FlatTorus", "RevolutionTorus", "Sphere2", "make_manifold",
    "WalkConfig", "gamma_d", "phi_h", "unit_ball_volume", "__version__",
]
