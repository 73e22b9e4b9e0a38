"""Determinantal correlation kernels with number-variance saturation.

Subpackages:
  specfun  - theta functions, Si/Ci, the (f, g) pair, Bessel J, canonical products
  kernels  - limiting closed-form kernels and transforms
  contour  - finite-N and general-initial-data kernels by contour quadrature
  approx   - counting-function configurations and equidistant surrogates
  variance - number-variance engines and saturation levels
  gap      - Fredholm-determinant gap probabilities
  mcsim    - Dyson Brownian motion sampler for cross-validation
"""

from . import approx, contour, gap, kernels, mcsim, specfun, variance
from .errors import ConfigurationError, DomainError, NumericalError

__version__ = "0.1.0"

__all__ = [
    "approx", "contour", "gap", "kernels", "mcsim", "specfun", "variance",
    "ConfigurationError", "DomainError", "NumericalError", "__version__",
]
