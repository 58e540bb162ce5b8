from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccslab.forms import MatrixForm
from ccslab.torus import (
    GridError,
    GridProduct,
    boundary,
    build_torus,
    coordinate_cycle,
    coordinate_cycles,
    integrate,
    simpson_weights,
)


def test_build_torus_broadcasts_scalars():
    t = build_torus(3, 8)
    assert t.shape == (8, 8, 8)
    assert t.spacing == pytest.approx((1 / 8,) * 3)
    assert t.all_periodic


def test_refine_keeps_periodicity():
    t = build_torus(2, [4, 6], [True, False]).refine(12)
    assert t.shape == (12, 12)
    assert t.periodic == (True, False)


@pytest.mark.parametrize("m", [0, 1, 2, 4, 10])
def test_simpson_rejects_bad_counts(m):
    with pytest.raises(GridError):
        simpson_weights(m)
    with pytest.raises(GridError):
        GridProduct(build_torus(1, 4), m)


@settings(max_examples=40, deadline=None)
@given(
    m=st.integers(1, 20).map(lambda k: 2 * k + 1),
    coeffs=st.lists(st.floats(-5, 5), min_size=4, max_size=4),
)
def test_simpson_is_exact_for_cubics(m, coeffs):
    x = np.linspace(0.0, 1.0, m)
    values = sum(c * x**k for k, c in enumerate(coeffs))
    exact = sum(c / (k + 1) for k, c in enumerate(coeffs))
    assert simpson_weights(m) @ values == pytest.approx(exact, abs=1e-12)


def test_coordinate_cycle_orientation_sign():
    t = build_torus(3, 4)
    assert coordinate_cycle(t, [0, 1]).components[0].weight == 1
    assert coordinate_cycle(t, [1, 0]).components[0].weight == -1
    with pytest.raises(GridError):
        coordinate_cycle(t, [0, 0])


def test_coordinate_cycles_skip_open_axes():
    t = build_torus(3, 4, [True, False, True])
    labels = [z.components[0].axes for z in coordinate_cycles(t, 2)]
    assert labels == [(0, 2)]


def test_integrate_constant_two_form():
    t = build_torus(3, [4, 6, 8])
    w = MatrixForm.from_components(t, 2, {(0, 2): 3.0, (1, 2): -1.0})
    assert integrate(w, coordinate_cycle(t, [0, 2])) == pytest.approx(3.0)
    assert integrate(w, coordinate_cycle(t, [2, 0])) == pytest.approx(-3.0)
    z = coordinate_cycle(t, [0, 2]) + 2 * coordinate_cycle(t, [1, 2])
    assert integrate(w, z) == pytest.approx(1.0)


@settings(max_examples=25, deadline=None)
@given(k=st.integers(-3, 3), n=st.integers(8, 16))
def test_integrate_trig_mode_is_exact(k, n):
    t = build_torus(1, n)
    (x,) = t.coordinates()
    w = MatrixForm.from_components(t, 1, {(0,): np.exp(2j * math.pi * k * x)})
    expected = 1.0 if k == 0 else 0.0
    assert abs(integrate(w, coordinate_cycle(t, [0])) - expected) < 1e-12


def test_integrate_rejects_mismatches():
    t = build_torus(2, 4)
    w = MatrixForm.zero(t, 1, 2)
    with pytest.raises(GridError):
        integrate(w, coordinate_cycle(t, [0]))
    with pytest.raises(GridError):
        integrate(MatrixForm.zero(t, 2), coordinate_cycle(t, [0]))


def test_periodic_cycles_have_no_boundary():
    t = build_torus(3, 6)
    for k in (1, 2, 3):
        for z in coordinate_cycles(t, k):
            assert boundary(z) == []


def test_cycles_must_be_closed():
    t = build_torus(2, 6, [False, True])
    with pytest.raises(GridError):
        coordinate_cycle(t, [0, 1])
    assert boundary(coordinate_cycle(t, [1], offset=[3, 0])) == []
