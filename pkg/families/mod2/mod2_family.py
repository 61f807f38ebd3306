"""Quadratic Rational Maps Module.

Adapter for the moduli space of degree-2 rational maps in the coordinates
(s1, s2) of the symmetric functions of the fixed-point multipliers. The
multipliers are the roots of X^3 - s1 X^2 + s2 X - (s1 - 2), and a
conjugacy class is represented by the normal form

    f(z) = z (z + mu_i) / (mu_j z + 1)

with fixed points 0 and infinity of multipliers mu_i and mu_j. When every
product mu_i mu_j equals 1 (the class (3, 3)) the representative is z + 1/z.
"""

from typing import Tuple

import numpy as np

from core.family import MapFamily
from core.polyalg import companion_roots

_PAIRS = ((0, 1), (0, 2), (1, 2))
_TIE = 1e-12
_DEGENERATE = 1e-8


class Mod2Family(MapFamily):
    """Implementation of the MapFamily interface for Mod_2."""

    @property
    def critical_count(self) -> int:
        return 2

    def multipliers(self, params) -> np.ndarray:
        """Fixed-point multipliers sorted by (real, imaginary), shape (..., 3)."""
        params = self.validate_params(params)
        s1, s2 = params[..., 0], params[..., 1]
        cubic = np.stack([-(s1 - 2.0), s2, -s1, np.ones_like(s1)], axis=-1)
        return companion_roots(cubic)

    def normal_form_pair(self, params) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Multiplier pair (mu_i, mu_j) of the normal form and a degeneracy mask.

        The pair maximising |1 - mu_i mu_j| is chosen; near-ties go to the
        first pair in sorted order.
        """
        params = self.validate_params(params)
        mu = self.multipliers(params)
        scores = np.stack([np.abs(1.0 - mu[..., i] * mu[..., j]) for i, j in _PAIRS], axis=-1)
        best = np.argmax(scores >= scores.max(axis=-1, keepdims=True) - _TIE, axis=-1)
        first = np.array([i for i, _ in _PAIRS])[best]
        second = np.array([j for _, j in _PAIRS])[best]
        mu_i = np.take_along_axis(mu, first[..., None], axis=-1)[..., 0]
        mu_j = np.take_along_axis(mu, second[..., None], axis=-1)[..., 0]
        # every product mu_i mu_j is 1 only for the triple multiplier 1
        degenerate = np.abs(params[..., 0] - 3.0) + np.abs(params[..., 1] - 3.0) < _DEGENERATE
        return mu_i, mu_j, degenerate

    def lift_coefficients(self, params) -> Tuple[np.ndarray, np.ndarray]:
        mu_i, mu_j, degenerate = self.normal_form_pair(params)
        a = np.zeros(mu_i.shape + (3,), dtype=complex)
        b = np.zeros(mu_i.shape + (3,), dtype=complex)
        # (z1^2 + mu_i z1 z2, mu_j z1 z2 + z2^2)
        a[..., 1] = mu_i
        a[..., 2] = 1.0
        b[..., 0] = 1.0
        b[..., 1] = mu_j
        # (z1^2 + z2^2, z1 z2) for z + 1/z
        a[degenerate] = (1.0, 0.0, 1.0)
        b[degenerate] = (0.0, 1.0, 0.0)
        if np.any(degenerate):
            self.logger.debug(f"{int(np.sum(degenerate))} Mod2 parameter(s) use the z + 1/z normal form")
        return a, b
