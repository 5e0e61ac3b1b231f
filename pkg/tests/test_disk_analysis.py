from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glvortex import disk_analysis as da
from glvortex.errors import CompatibilityFailure, OutsideDisk


def _fd_laplacian(fn, z, h=1e-3):
    return (fn(z + h) + fn(z - h) + fn(z + 1j * h) + fn(z - 1j * h) - 4 * fn(z)) / h ** 2


@settings(max_examples=25, deadline=None)
@given(coeffs=st.lists(st.complex_numbers(max_magnitude=1.0, allow_nan=False, allow_infinity=False),
                       min_size=5, max_size=5))
def test_fourier_round_trip_and_parseval(coeffs):
    g = da.FourierBoundary(np.array(coeffs))
    theta = 2 * np.pi * np.arange(16) / 16
    back = da.FourierBoundary.from_samples(g.samples(16), g.N)
    assert np.allclose(back.coefficients, g.coefficients, atol=1e-12)
    assert np.allclose(g(theta), g.samples(16), atol=1e-12)
    assert abs(np.mean(np.abs(g.samples(64)) ** 2) - g.parseval_energy()) < 1e-10
    assert np.allclose(da.FourierBoundary.from_json(g.to_json()).coefficients, g.coefficients)


def test_poisson_extension_is_harmonic_with_right_trace():
    g = da.FourierBoundary.from_function(lambda t: np.exp(1j * t + 0.3j * np.sin(2 * t)), N=32)
    v = da.poisson_extend(g)
    theta = np.linspace(0, 2 * np.pi, 40, endpoint=False)
    assert np.max(np.abs(v(np.exp(1j * theta)) - np.exp(1j * theta + 0.3j * np.sin(2 * theta)))) < 1e-10
    z = np.array([0.1, 0.3j, -0.4 + 0.2j])
    assert np.max(np.abs(_fd_laplacian(v, z))) < 1e-4
    assert abs(v(0.0) - g.mode(0)) < 1e-14


def test_properness_profile_of_identity_is_radius():
    g = da.FourierBoundary.from_function(lambda t: np.exp(1j * t), N=8)
    radii = np.array([0.2, 0.5, 0.9])
    assert np.allclose(da.properness_profile(g, radii), radii)


@settings(max_examples=20, deadline=None)
@given(r=st.floats(0.0, 0.9), t=st.floats(0.0, 2 * math.pi))
def test_dirichlet_green_vanishes_on_circle(r, t):
    a = r * np.exp(1j * t)
    G = da.dirichlet_green_disk(a)
    circle = np.exp(1j * np.linspace(0, 2 * np.pi, 64, endpoint=False))
    assert np.max(np.abs(G(circle))) < 1e-12
    z = np.array([0.5 * np.exp(1j * (t + 2.0)), -0.1 + 0.2j])
    h = 1e-6
    fd = (G(z + h) - G(z - h)) / (2 * h) + 1j * (G(z + 1j * h) - G(z - 1j * h)) / (2 * h)
    assert np.max(np.abs(fd - G.gradient(z))) < 1e-6


def test_dirichlet_green_mass_is_minus_log_one_minus_r2():
    for a in (0.0, 0.3, 0.6j):
        G = da.dirichlet_green_disk(a)
        assert abs(G.smooth(np.array(a)) + math.log(1 - abs(a) ** 2)) < 1e-14
    with pytest.raises(OutsideDisk):
        da.dirichlet_green_disk(1.0)


def test_neumann_green_has_unit_normal_derivative_and_zero_mean():
    x = 0.3 + 0.4j
    G = da.neumann_green_disk(x)
    theta = np.linspace(0, 2 * np.pi, 256, endpoint=False)
    c = np.exp(1j * theta)
    h = 1e-6
    dr = (G((1 + h) * c) - G((1 - h) * c)) / (2 * h)
    assert np.max(np.abs(dr - 1.0)) < 1e-6
    assert abs(np.mean(G(c))) < 1e-12
    assert np.max(np.abs(_fd_laplacian(G, np.array([-0.5, 0.2j])))) < 1e-4


def test_phi_tilde_for_perturbed_identity():
    fn = lambda t: np.exp(1j * (t + 0.2 * np.sin(3 * t)))  # noqa: E731
    g = da.FourierBoundary.from_function(fn, N=64)
    phi = da.solve_phi_tilde(g)
    assert phi.log_coefficient == 1.0
    theta = np.linspace(0, 2 * np.pi, 128, endpoint=False)
    h = 1e-6
    c = np.exp(1j * theta)
    dr = (phi((1 + h) * c) - phi((1 - h) * c)) / (2 * h)
    q = 1 + 0.6 * np.cos(3 * theta)
    assert np.max(np.abs(dr - q)) < 1e-6
    assert abs(np.mean(phi.smooth(c))) < 1e-12
    conj = da.phi_tilde_conjugate(phi, 0.7 * c)
    assert np.max(np.abs(np.exp(1j * conj) - np.exp(1j * np.angle(0.7 * c)) *
                         np.exp(1j * np.imag(np.polyval(phi.holomorphic[::-1], 0.7 * c))))) < 1e-12


def test_phi_tilde_rejects_incompatible_data():
    g = da.FourierBoundary.from_function(lambda t: np.exp(1j * t) * (1 + 0.5 * np.cos(t)), N=16)
    with pytest.raises(CompatibilityFailure):
        da.solve_phi_tilde(g)


@pytest.mark.parametrize("M", [0.5, 1.0, 2.0])
def test_poisson_kernel_limit_matches_two_arctan(M):
    rep = da.poisson_kernel_limit(M)
    assert rep["matches"] == "2*arctan(1/M)"
    assert rep["relative_mismatch"]["2*arctan(1/M)"] < 1e-4
    assert abs(rep["values"][-1] - rep["extrapolated_limit"]) < 1e-2 * rep["extrapolated_limit"]


def test_poisson_kernel_full_circle_integral():
    # with M -> 0 the integral is (1-r) 2 pi / (1 - r^2) = 2 pi / (1 + r)
    r = 0.95
    assert abs(da.poisson_kernel_integral(1e-9, r) - 2 * math.pi / (1 + r)) < 1e-7
