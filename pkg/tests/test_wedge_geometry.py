import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wedgeiso.errors import DomainError
from wedgeiso.quadrature import big_H, kappa, trig_moment
from wedgeiso.sigma_map import build_sigma, sigma_eval
from wedgeiso.wedge_geometry import (
    HalfPlaneWeight,
    PolarCurve,
    RadialShape,
    WedgeWeight,
    check_contraction,
    check_measure_preservation,
    curve_perimeter,
    halfplane_measure,
    load_geometry,
    measure2d,
    perimeter2d,
    transport,
)


def wavy(a=0.2, b=0.1):
    return RadialShape.from_function(lambda t: np.exp(a * np.cos(2 * t) + b * np.cos(6 * t)), n=129)


def cartesian_boundary(shape, n=200_001):
    t = np.linspace(0, np.pi / 2, n)
    r = shape(t)
    return r * np.cos(t), r * np.sin(t)


def green_measure(shape, w):
    """mu = closed-contour integral of x^{l+1} y^k / (l+1) dy; the axes contribute nothing (c = 0)."""
    l, k = w.k
    x, y = cartesian_boundary(shape)
    xm, ym = 0.5 * (x[1:] + x[:-1]), 0.5 * (y[1:] + y[:-1])
    return np.sum(xm ** (l + 1) * ym**k / (l + 1) * np.diff(y))


def polyline_perimeter(shape, w):
    x, y = cartesian_boundary(shape)
    xm, ym = 0.5 * (x[1:] + x[:-1]), 0.5 * (y[1:] + y[:-1])
    dens = w.density(np.column_stack([xm, ym]))
    return np.sum(dens * np.hypot(np.diff(x), np.diff(y)))


@pytest.mark.parametrize("lk", [(0, 0), (1, 0), (1, 2), (2, 2)])
def test_measure_against_green(lk):
    w = WedgeWeight(2, 0.0, lk)
    shape = wavy()
    assert measure2d(shape, w) == pytest.approx(green_measure(shape, w), rel=1e-8)


@pytest.mark.parametrize("lk, c", [((0, 0), 0.0), ((1, 1), 0.0), ((2, 0.5), 1.0), ((0, 1), 0.5)])
def test_perimeter_against_polyline(lk, c):
    w = WedgeWeight(2, c, lk)
    shape = wavy()
    assert perimeter2d(shape, w) == pytest.approx(polyline_perimeter(shape, w), rel=1e-8)


@pytest.mark.parametrize("R", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("lk", [(0, 0), (1, 2), (0.5, 2)])
@pytest.mark.parametrize("c", [0.0, 1.0])
def test_quarter_disc_closed_form(R, lk, c):
    w = WedgeWeight(2, c, lk)
    disc = RadialShape.quarter_disc(R)
    kap = kappa(lk)
    m = w.abs_k + 1
    assert measure2d(disc, w) == pytest.approx(kap * float(big_H(R, c, m)), rel=1e-12)
    assert perimeter2d(disc, w) == pytest.approx(kap * np.exp(c * R * R) * R**m, rel=1e-12)


def test_unweighted_box_corner():
    # Square with one vertex at (1, 1): area 1, interior boundary length 2.
    shape = RadialShape.from_function(lambda t: 1 / np.maximum(np.cos(t), np.sin(t)), n=129)
    w = WedgeWeight(2, 0, (0, 0))
    assert measure2d(shape, w) == pytest.approx(green_measure(shape, w), rel=1e-9)


@given(st.floats(0.2, 5.0))
def test_scaling_law(lam):
    w = WedgeWeight(2, 0.0, (1.0, 0.5))
    shape = wavy()
    n = 2 + w.abs_k
    assert measure2d(shape.scaled(lam), w) == pytest.approx(lam**n * measure2d(shape, w), rel=1e-10)
    assert perimeter2d(shape.scaled(lam), w) == pytest.approx(lam ** (n - 1) * perimeter2d(shape, w), rel=1e-10)


def test_curve_perimeter_matches_graph():
    w = WedgeWeight(2, 0.5, (1, 1))
    shape = wavy()
    assert curve_perimeter(shape.boundary_curve(), w) == pytest.approx(perimeter2d(shape, w), rel=1e-12)
    with pytest.raises(DomainError):
        curve_perimeter(PolarCurve([0, 1], [1, 1], [0, 3.0]), w)


@pytest.mark.parametrize("lk", [(0, 0), (1, 1), (2, 0.5)])
def test_half_disc_image_of_quarter_disc(lk):
    w = WedgeWeight(2, 0.7, lk)
    smap = build_sigma(w.k[1], w.k[0])
    hw = HalfPlaneWeight(w.c, w.abs_k)
    half = halfplane_measure(lambda phi: np.full_like(phi, 1.3), hw)
    expected = 2 * trig_moment(w.abs_k, 0) * float(big_H(1.3, w.c, w.abs_k + 1))
    assert half == pytest.approx(expected, rel=1e-12)
    report = check_measure_preservation(RadialShape.quarter_disc(1.3), w, smap)
    assert report["rel_gap"] < 1e-12
    cont = check_contraction(RadialShape.quarter_disc(1.3), w, smap)
    assert cont["equality"]


def test_uniform_contraction_closed_form():
    # For k = l = 0 the image curve is (rho, 2 theta); c1 = 1/2 gives int sqrt(rho^2 + rho'^2 / 4).
    w = WedgeWeight(2, 0, (0, 0))
    shape = wavy(0.3, 0.15)
    t = np.linspace(0, np.pi / 2, 400_001)
    r, dr = shape(t), shape.derivative(t)
    f = np.sqrt(r * r + dr * dr / 4)
    expected = np.sum(0.5 * (f[1:] + f[:-1]) * np.diff(t))
    report = check_contraction(shape, w, build_sigma(0, 0))
    assert report["lhs"] == pytest.approx(expected, rel=1e-9)
    assert report["lhs"] < report["rhs"]


@pytest.mark.parametrize("lk, c", [((0, 0), 0.0), ((1, 2), 1.0), ((2, 0.5), 0.5), ((0.5, 2), 1.0)])
def test_random_transport_identities(rng, lk, c):
    w = WedgeWeight(2, c, lk)
    smap = build_sigma(w.k[1], w.k[0])
    for _ in range(5):
        a = rng.uniform(-0.3, 0.3, 4)
        shape = RadialShape.from_function(lambda t: np.exp(sum(a[j] * np.cos(2 * j * t) for j in range(4))), n=65)
        assert check_measure_preservation(shape, w, smap)["rel_gap"] < 1e-10
        rep = check_contraction(shape, w, smap)
        assert rep["lhs"] <= rep["rhs"] + 1e-9


def test_transport_maps_nodes():
    smap = build_sigma(1, 1)
    curve = transport(wavy().boundary_curve(), smap)
    assert curve.theta[0] == 0.0 and curve.theta[-1] == np.pi
    r, _, th, _ = curve.evaluate(np.array([0.4]))
    assert th[0] == pytest.approx(sigma_eval(smap, 0.4), abs=1e-14)


def test_pairing_is_checked():
    with pytest.raises(DomainError):
        check_contraction(wavy(), WedgeWeight(2, 0, (1, 0)), build_sigma(1, 0))


@pytest.mark.parametrize(
    "bad",
    [
        {"type": "radial", "theta": [0, 1], "rho": [1, 1]},
        {"type": "radial", "theta": list(np.linspace(0, 1.5, 40)), "rho": [1] * 40},
        {"type": "radial", "theta": list(np.linspace(0, np.pi / 2, 40)), "rho": [1] * 39 + [-1]},
        {"type": "radial", "theta": list(np.linspace(0, np.pi / 2, 40)), "rho": [1] * 39 + ["x"]},
        {"type": "nope"},
        [1, 2, 3],
    ],
)
def test_malformed_geometry(bad):
    with pytest.raises(ValueError):
        load_geometry(json.dumps(bad))


def test_geometry_round_trip():
    shape = wavy()
    again = load_geometry(json.dumps(shape.to_dict()))
    np.testing.assert_array_equal(again.rho, shape.rho)
    curve = PolarCurve([0, 0.5, 1], [1, 2, 1], [0, 0.5, 1.5])
    assert load_geometry(json.dumps(curve.to_dict())).to_dict() == curve.to_dict()


@pytest.mark.parametrize("args", [(1, 0, (0,)), (2, -1, (0, 0)), (2, 0, (0, -1)), (2, 0, (0,)), (2, np.nan, (0, 0))])
def test_weight_validation(args):
    with pytest.raises(DomainError):
        WedgeWeight(*args)
