"""Critically Marked Polynomial Family Module.

Adapter for the degree-d family

    P(z) = z^d/d + sum_{j=2}^{d-1} ((-1)^(d-j)/j) s_{d-j}(c) z^j + a^d,

where s_k are the elementary symmetric functions of c = (c_1, ..., c_{d-2}).
Its critical points are 0, c_1, ..., c_{d-2} and P(0) = a^d. Parameters are
ordered (c_1, ..., c_{d-2}, a).
"""

from typing import Tuple

import numpy as np

from core.family import MapFamily


class PolyCAFamily(MapFamily):
    """Implementation of the MapFamily interface for P_{c,a}."""

    @property
    def critical_count(self) -> int:
        return self.degree - 1

    def polynomial_coefficients(self, params) -> np.ndarray:
        params = self.validate_params(params)
        d = self.degree
        c = params[..., :-1]
        a = params[..., -1]

        # P'(z) = z * prod_k (z - c_k); q holds prod_k (z - c_k) ascending.
        q = np.zeros(params.shape[:-1] + (d - 1,), dtype=complex)
        q[..., 0] = 1.0
        for k in range(d - 2):
            shifted = np.zeros_like(q)
            shifted[..., 1:] = q[..., :-1]
            q = shifted - c[..., k, None] * q

        coeffs = np.zeros(params.shape[:-1] + (d + 1,), dtype=complex)
        coeffs[..., 0] = a ** d
        coeffs[..., 2:] = q / np.arange(2, d + 1)
        return coeffs

    def lift_coefficients(self, params) -> Tuple[np.ndarray, np.ndarray]:
        return self._polynomial_lift(self.polynomial_coefficients(params))

    def critical_points(self, params) -> np.ndarray:
        params = self.validate_params(params)
        zero = np.zeros(params.shape[:-1] + (1,), dtype=complex)
        return np.concatenate([zero, params[..., :-1]], axis=-1)

    def barycenter(self, params) -> np.ndarray:
        """delta = sum c_k / (d - 1)."""
        params = self.validate_params(params)
        return params[..., :-1].sum(axis=-1) / (self.degree - 1)

    def connectedness_bound(self) -> Tuple[float, float]:
        """Radii (r_c, r_a) of a polydisk containing the connectedness locus.

        When every critical orbit is bounded, each point z of the filled
        Julia set satisfies |z - delta| <= 4. Applied to 0 and to the c_k this
        gives |c_k| <= 8; applied to P(0) = a^d it gives |a|^d <= 8.
        """
        return 8.0, 8.0 ** (1.0 / self.degree)
