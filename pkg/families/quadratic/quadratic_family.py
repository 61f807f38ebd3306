"""Quadratic Family Module.

Adapter for the family z^2 + c, whose connectedness locus is the
Mandelbrot set.
"""

from typing import Tuple

import numpy as np

from core.family import MapFamily


class QuadraticFamily(MapFamily):
    """Implementation of the MapFamily interface for z^2 + c."""

    @property
    def critical_count(self) -> int:
        return 1

    def polynomial_coefficients(self, params) -> np.ndarray:
        c = self.validate_params(params)[..., 0]
        coeffs = np.zeros(c.shape + (3,), dtype=complex)
        coeffs[..., 0] = c
        coeffs[..., 2] = 1.0
        return coeffs

    def lift_coefficients(self, params) -> Tuple[np.ndarray, np.ndarray]:
        return self._polynomial_lift(self.polynomial_coefficients(params))

    def critical_points(self, params) -> np.ndarray:
        c = self.validate_params(params)[..., 0]
        return np.zeros(c.shape + (1,), dtype=complex)
