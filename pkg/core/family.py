"""Map Family Interface Module.

This module defines the common interface that every holomorphic family
adapter implements. It provides a consistent API for building lifts,
polynomial coefficients and marked critical points for a batch of parameter
points, regardless of the family behind it.
"""

import logging
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np

from core.exceptions import ConfigurationError


class FamilyKind(Enum):
    """Enum representing the supported holomorphic families."""
    QUADRATIC = "quadratic"
    POLYCA = "polyca"
    MOD2 = "mod2"


@dataclass(frozen=True)
class FamilySpec:
    """Kind and degree of a family; PolyCA carries its degree d >= 3."""
    kind: FamilyKind
    degree: int = 2

    def __post_init__(self):
        if self.kind is FamilyKind.POLYCA and self.degree < 3:
            raise ConfigurationError(f"PolyCA degree must be at least 3, got {self.degree}")
        if self.kind is not FamilyKind.POLYCA and self.degree != 2:
            raise ConfigurationError(f"{self.kind.value} family has degree 2, got {self.degree}")

    @property
    def parameter_dimension(self) -> int:
        if self.kind is FamilyKind.QUADRATIC:
            return 1
        if self.kind is FamilyKind.POLYCA:
            return self.degree - 1
        return 2

    @property
    def is_polynomial(self) -> bool:
        return self.kind is not FamilyKind.MOD2

    @classmethod
    def parse(cls, text: str) -> "FamilySpec":
        """Parse 'quadratic', 'polyca:<d>' or 'mod2'."""
        value = text.strip().lower()
        if value == "quadratic":
            return cls(FamilyKind.QUADRATIC)
        if value == "mod2":
            return cls(FamilyKind.MOD2)
        match = re.fullmatch(r"polyca:(\d+)", value)
        if match:
            return cls(FamilyKind.POLYCA, int(match.group(1)))
        raise ConfigurationError(f"Unknown family: {text!r} (expected quadratic, polyca:<d> or mod2)")

    def __str__(self) -> str:
        if self.kind is FamilyKind.POLYCA:
            return f"polyca:{self.degree}"
        return self.kind.value


class MapFamily(ABC):
    """Abstract base class for family adapters.

    Every method is batched: parameters arrive with shape (..., dim) and
    results keep the leading batch shape.
    """

    def __init__(self, spec: FamilySpec):
        self.spec = spec
        self.logger = logging.getLogger(__name__)

    @property
    def degree(self) -> int:
        return self.spec.degree

    @property
    def parameter_dimension(self) -> int:
        return self.spec.parameter_dimension

    @property
    def is_polynomial(self) -> bool:
        return self.spec.is_polynomial

    @property
    @abstractmethod
    def critical_count(self) -> int:
        """Number of marked critical points carrying an activity potential."""
        pass

    def validate_params(self, params) -> np.ndarray:
        """Return params as a complex array of shape (..., dim).

        Raises:
            ConfigurationError: On a dimension mismatch or non-finite entries.
        """
        array = np.asarray(params, dtype=complex)
        if array.ndim == 0:
            array = array.reshape(1)
        if array.shape[-1] != self.parameter_dimension:
            raise ConfigurationError(
                f"{self.spec} expects {self.parameter_dimension} parameter(s), got shape {array.shape}")
        if not np.all(np.isfinite(array)):
            raise ConfigurationError(f"Non-finite parameter for {self.spec}")
        return array

    @abstractmethod
    def lift_coefficients(self, params) -> Tuple[np.ndarray, np.ndarray]:
        """Coefficients (a, b) of the lift, each of shape (..., d+1)."""
        pass

    def polynomial_coefficients(self, params) -> np.ndarray:
        """Ascending polynomial coefficients, shape (..., d+1)."""
        raise ConfigurationError(f"{self.spec} is not a polynomial family")

    def critical_points(self, params) -> np.ndarray:
        """Finite marked critical points, shape (..., d-1)."""
        raise ConfigurationError(f"{self.spec} has no finite marked critical points")

    def _polynomial_lift(self, coeffs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        b = np.zeros_like(coeffs)
        b[..., 0] = 1.0
        return coeffs, b


def create_family(spec) -> MapFamily:
    """Create the family adapter for the specified family.

    Args:
        spec: A FamilySpec or its textual form.

    Returns:
        MapFamily: The adapter instance.
    """
    if isinstance(spec, str):
        spec = FamilySpec.parse(spec)
    if spec.kind is FamilyKind.QUADRATIC:
        from families.quadratic.quadratic_family import QuadraticFamily
        return QuadraticFamily(spec)
    elif spec.kind is FamilyKind.POLYCA:
        from families.polyca.polyca_family import PolyCAFamily
        return PolyCAFamily(spec)
    elif spec.kind is FamilyKind.MOD2:
        from families.mod2.mod2_family import Mod2Family
        return Mod2Family(spec)
    raise ConfigurationError(f"Unsupported family: {spec}")
