from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glvortex import curves
from glvortex.errors import SelfIntersection, UnresolvedWinding, ZeroChord


@pytest.mark.parametrize("d", range(-3, 5))
def test_degree_of_powers_is_exact(d):
    assert curves.degree(curves.power_data(d)) == d


@settings(max_examples=30, deadline=None)
@given(d=st.integers(-3, 3), rot=st.floats(-math.pi, math.pi), amp=st.floats(0.0, 1.2),
       k=st.integers(1, 4), alpha=st.floats(-math.pi, math.pi))
def test_degree_invariant_under_phase_perturbation_and_rotation(d, rot, amp, k, alpha):
    data = curves.power_data(d, rot, amp, k)
    assert curves.degree(data) == d
    assert curves.degree(curves.rotate_data(data, alpha)) == d


@settings(max_examples=20, deadline=None)
@given(d1=st.integers(-2, 2), d2=st.integers(-2, 2))
def test_degree_is_additive_under_products(d1, d2):
    g = curves.power_data(d1, 0.3, 0.5, 2).samples(1024) * curves.power_data(d2, -1.0).samples(1024)
    assert curves.degree(g) == d1 + d2


def test_degree_rejects_unresolved_samples():
    with pytest.raises(UnresolvedWinding):
        curves.degree(curves.power_data(200).samples(256))
    with pytest.raises(ValueError):
        curves.degree(np.ones(64, dtype=complex))


def test_h_half_of_identity_circle_map():
    val = curves.h_half_seminorm(curves.power_data(1), curves.circle(1.0))
    assert abs(val - 4 * math.pi ** 2) <= 1e-3


def test_h_half_is_rotation_and_scale_invariant():
    circ = curves.circle(1.0)
    base = curves.h_half_seminorm(curves.power_data(2, 0.0, 0.4, 3), circ)
    rot = curves.h_half_seminorm(curves.rotate_data(curves.power_data(2, 0.0, 0.4, 3), 1.1), circ)
    big = curves.h_half_seminorm(curves.power_data(2, 0.0, 0.4, 3), curves.circle(3.0, 1 + 2j))
    assert abs(rot - base) <= 1e-9 * base
    assert abs(big - base) <= 1e-9 * base


def test_h_half_skip_differs_from_fill_and_warns_when_coarse():
    circ, g = curves.circle(1.0), curves.power_data(1)
    assert curves.h_half_seminorm(g, circ, diagonal="skip") < curves.h_half_seminorm(g, circ)
    with pytest.warns(UserWarning):
        curves.h_half_seminorm(g, circ, n=256)
    with pytest.raises(ValueError):
        curves.h_half_seminorm(g, circ, diagonal="bogus")


def test_tangent_data_of_circle_is_i_z():
    t = np.linspace(0, 1, 97, endpoint=False)
    g = curves.tangent_data(curves.circle(2.0, 1j)).value(t)
    assert np.allclose(g, 1j * np.exp(2j * np.pi * t))
    assert curves.degree(curves.tangent_data(curves.analytic_curve([0, 1, 0.2]))) == 1
    with pytest.raises(UnresolvedWinding):
        curves.degree(curves.tangent_data(curves.square()))


def test_curves_are_counterclockwise():
    for c in (curves.circle(), curves.square(), curves.analytic_curve([0, 1, 0.2]),
              curves.polyline_curve([0, 1j, 1 + 1j, 1]), curves.log_spiral_curve(0.05)):
        assert c.signed_area() > 0


def test_square_length_and_area():
    sq = curves.square(2.0)
    assert abs(sq.length() - 8.0) < 1e-9
    assert abs(sq.signed_area() - 4.0) < 1e-9


def test_circle_chord_arc_constant_is_pi_over_two():
    assert abs(curves.chord_arc_constant(curves.circle(), n=1024) - math.pi / 2) < 1e-3


def test_log_spiral_is_simple_and_has_tip():
    c = curves.log_spiral_curve(0.01, smoothing=0.002)
    curves.check_simple(c.samples(4096))
    assert c.tip is not None
    assert curves.chord_arc_constant(c, n=2048) > curves.chord_arc_constant(curves.circle(), n=2048)
    with pytest.raises(ValueError):
        curves.log_spiral_curve(0.5)


def test_self_intersection_and_zero_chord_detected():
    with pytest.raises(SelfIntersection):
        curves.polyline_curve([0, 1 + 1j, 1, 1j])
    with pytest.raises(ZeroChord):
        curves.polyline_curve([0, 1, 1, 1j])


def test_json_round_trip():
    c = curves.analytic_curve([0, 1, 0.2])
    back = curves.curve_from_json(curves.curve_to_json(c))
    t = np.linspace(0, 1, 33, endpoint=False)
    assert np.allclose(back.param(t), c.param(t))
    g = curves.power_data(2, 0.4)
    gb = curves.data_from_json(curves.data_to_json(g))
    assert curves.degree(gb) == 2
    assert np.allclose(gb.value(np.arange(512) / 512), g.samples(512))
