"""Photon blockade in weakly driven optomechanical cavities."""

__version__ = "0.1.0"

from .params import QuadratureSpec, SpectralDensity, SystemParams  # noqa: E402

__all__ = ["QuadratureSpec", "SpectralDensity", "SystemParams", "__version__"]
