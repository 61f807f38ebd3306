import numpy as np
import pytest
from numpy.polynomial import polynomial as npoly

from core.exceptions import ConfigurationError
from core.family import FamilyKind, FamilySpec, MapFamily, create_family
from core.maps import fixed_point_multipliers, instantiate
from families.mod2.mod2_family import Mod2Family
from families.polyca.polyca_family import PolyCAFamily
from families.quadratic.quadratic_family import QuadraticFamily


@pytest.mark.parametrize("text,kind,degree,dim", [
    ("quadratic", FamilyKind.QUADRATIC, 2, 1),
    ("polyca:3", FamilyKind.POLYCA, 3, 2),
    ("PolyCA:5", FamilyKind.POLYCA, 5, 4),
    (" mod2 ", FamilyKind.MOD2, 2, 2),
])
def test_family_spec_parse(text, kind, degree, dim):
    spec = FamilySpec.parse(text)
    assert spec.kind is kind
    assert spec.degree == degree
    assert spec.parameter_dimension == dim
    assert FamilySpec.parse(str(spec)) == spec


@pytest.mark.parametrize("text", ["cubic", "polyca:2", "polyca:", "mod3", ""])
def test_family_spec_rejects_unknown(text):
    with pytest.raises(ConfigurationError):
        FamilySpec.parse(text)


@pytest.mark.parametrize("text,adapter_class", [
    ("quadratic", QuadraticFamily),
    ("polyca:4", PolyCAFamily),
    ("mod2", Mod2Family),
])
def test_create_family(text, adapter_class):
    adapter = create_family(text)
    assert isinstance(adapter, MapFamily)
    assert isinstance(adapter, adapter_class)


@pytest.mark.parametrize("params", [[1.0, 2.0], [np.nan], [[0.0, 1.0]]])
def test_validate_params_rejects_bad_points(params):
    with pytest.raises(ConfigurationError):
        create_family("quadratic").validate_params(params)


def test_rational_family_has_no_polynomial_coefficients():
    with pytest.raises(ConfigurationError):
        create_family("mod2").polynomial_coefficients([1.0, 1.0])


def test_quadratic_coefficients_batch():
    coeffs = create_family("quadratic").polynomial_coefficients(np.array([[0.25], [-1.0 + 1j]]))
    assert coeffs.shape == (2, 3)
    assert np.allclose(coeffs[1], [-1.0 + 1j, 0.0, 1.0])


@pytest.mark.parametrize("params", [
    [0.5, 1.0],
    [-1.0 + 0.5j, 0.3 - 0.2j],
    [0.2, -1.1, 0.7j],
])
def test_polyca_critical_points_and_critical_value(params):
    d = len(params) + 1
    adapter = create_family(f"polyca:{d}")
    coeffs = adapter.polynomial_coefficients(params)
    critical = adapter.critical_points(params)
    assert coeffs.shape == (d + 1,)
    assert critical.shape == (d - 1,)
    assert np.allclose(npoly.polyval(critical, npoly.polyder(coeffs)), 0.0, atol=1e-12)
    assert coeffs[0] == pytest.approx(params[-1] ** d)
    assert coeffs[-1] == pytest.approx(1.0 / d)


def test_polyca_bound_contains_connected_parameters():
    adapter = create_family("polyca:3")
    r_c, r_a = adapter.connectedness_bound()
    assert r_c == 8.0
    assert r_a == pytest.approx(2.0)
    assert adapter.barycenter([3.0, 0.5]) == pytest.approx(1.5)


@pytest.mark.parametrize("params", [
    [2.0, 0.0],
    [0.5 + 0.5j, 1.0],
    [-3.0, 2.0 - 1.0j],
    [1.3, -0.4j],
])
def test_mod2_multipliers_are_conjugacy_invariants(params):
    adapter = create_family("mod2")
    mu = adapter.multipliers(params)
    s1, s2 = params
    assert mu.sum() == pytest.approx(s1)
    assert mu[0] * mu[1] + mu[0] * mu[2] + mu[1] * mu[2] == pytest.approx(s2, abs=1e-10)
    assert mu.prod() == pytest.approx(s1 - 2.0, abs=1e-10)

    spectrum = fixed_point_multipliers(instantiate("mod2", params))
    for target in mu:
        assert np.min(np.abs(spectrum.multipliers - target)) <= 1e-8


def test_mod2_uses_z_plus_inverse_for_the_degenerate_class():
    a, b = create_family("mod2").lift_coefficients([3.0, 3.0])
    assert np.allclose(a, [1.0, 0.0, 1.0])
    assert np.allclose(b, [0.0, 1.0, 0.0])
