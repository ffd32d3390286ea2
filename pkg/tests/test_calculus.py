import math

import numpy as np
import pytest

from dunkl_lab.calculus import apply_dunkl_laplacian, radial_dunkl_laplacian, radial_field
from dunkl_lab.errors import NearHyperplane, ZeroRadius
from dunkl_lab.roots import build_root_system, reflect


def test_linear_fields_are_harmonic(a1xa1):
    for c in ([1.0, 0.0], [0.3, -2.0]):
        f = lambda x, c=np.array(c): float(c @ x)  # noqa: E731
        assert abs(apply_dunkl_laplacian(a1xa1, f, np.array([0.4, 0.7]))) < 1e-6


def test_constant_field(a1xa1):
    assert apply_dunkl_laplacian(a1xa1, lambda x: 3.0, np.array([0.4, 0.7])) == 0.0


def test_norm_squared_gives_2m():
    for sys in (build_root_system("A1_product", d=2, k=0.75), build_root_system("dihedral", order=3, k=1.0)):
        x = np.array([0.61, 0.35])
        val = apply_dunkl_laplacian(sys, lambda y: float(y @ y), x)
        assert val == pytest.approx(2 * sys.m, rel=1e-4)


def test_second_order_convergence(a1xa1):
    c = np.array([0.8, -0.5])
    x = np.array([0.6, 0.9])
    f = lambda y: math.exp(float(c @ y))  # noqa: E731
    e = f(x)
    exact = float(c @ c) * e
    for a, k in zip(a1xa1.positive_roots, a1xa1.multiplicity):
        p = float(a @ x)
        exact += 2 * k * (float(c @ a) / p * e - (e - f(reflect(a, x))) / (p * p))
    errs = [abs(apply_dunkl_laplacian(a1xa1, f, x, h) - exact) for h in (4e-2, 2e-2, 1e-2)]
    order = math.log2(errs[0] / errs[1]), math.log2(errs[1] / errs[2])
    assert all(abs(o - 2.0) <= 0.3 for o in order)


def test_near_hyperplane(a1xa1):
    with pytest.raises(NearHyperplane):
        apply_dunkl_laplacian(a1xa1, lambda y: 1.0, np.array([0.5, 0.005]), h=1e-3)


def test_radial_examples():
    assert radial_dunkl_laplacian(5, 1.0, 2.0, 2.0, 1.0) == 10.0
    assert radial_dunkl_laplacian(5, 3.0, 0.0, 0.0, 1.0) == 0.0
    r = 2.0
    assert radial_dunkl_laplacian(4, r**-2, -2 * r**-3, 6 * r**-4, r) == pytest.approx(0.0, abs=1e-15)
    assert radial_dunkl_laplacian(5, 0.0, 0.0, 2.0, 0.0, at_origin=True) == 10.0
    with pytest.raises(ZeroRadius):
        radial_dunkl_laplacian(5, 0.0, 0.0, 2.0, 0.0)


def test_radial_agreement(a1xa1):
    x = np.array([0.7, 0.5])
    r = float(np.linalg.norm(x))
    m = a1xa1.m
    profiles = [
        (lambda s: s**4, 4 * r**3, 12 * r**2),
        (lambda s: math.exp(-s * s), -2 * r * math.exp(-r * r), (4 * r * r - 2) * math.exp(-r * r)),
    ]
    for u, du, d2u in profiles:
        exact = radial_dunkl_laplacian(m, u(r), du, d2u, r)
        for h in (1e-2, 1e-3):
            assert abs(apply_dunkl_laplacian(a1xa1, radial_field(u), x, h) - exact) <= 50 * h * h
