import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dunkl_lab.errors import ValidationError
from dunkl_lab.phi import PhiSpec

FAMILY = [PhiSpec.power(2.0, 1.5), PhiSpec.linear(0.5), PhiSpec.expm1(1.0), PhiSpec.poly(1.0, 0.0, 0.3)]


def test_parse_roundtrip():
    for phi in FAMILY:
        assert PhiSpec.parse(phi.description) == phi
    assert PhiSpec.parse("exp_minus_one:2") == PhiSpec.expm1(2.0)


@pytest.mark.parametrize("text", ["power:1", "power:-1,2", "power:1,0.5", "linear:0", "expm1:x", "poly:0,0", "cubic:1", "power"])
def test_parse_rejects(text):
    with pytest.raises(ValidationError):
        PhiSpec.parse(text)


@pytest.mark.parametrize("phi", FAMILY, ids=lambda p: p.description)
def test_standing_hypotheses(phi):
    assert phi(0.0) == 0.0
    t = np.linspace(0, 5, 501)
    assert np.all(np.diff(phi(t)) >= 0)


@settings(max_examples=80, deadline=None)
@given(st.floats(0.0, 4.0), st.floats(0.0, 4.0))
def test_primitive_between_matches_difference(a, t):
    for phi in FAMILY:
        direct = phi.primitive(t) - phi.primitive(a)
        assert phi.primitive_between(a, t) == pytest.approx(direct, rel=1e-10, abs=1e-12)


def test_primitive_by_quadrature():
    from scipy import integrate

    for phi in FAMILY:
        val, _ = integrate.quad(phi, 0, 2.5, epsabs=1e-13)
        assert phi.primitive(2.5) == pytest.approx(val, rel=1e-10)


def test_superlinear_flags():
    assert not PhiSpec.linear(1).superlinear()
    assert not PhiSpec.power(1, 1).superlinear()
    assert PhiSpec.power(1, 1.01).superlinear()
    assert PhiSpec.expm1(1).superlinear()
    assert PhiSpec.poly(1, 1e-6).superlinear()
