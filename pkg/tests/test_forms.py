from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccslab.forms import (
    FiberedForm,
    FormError,
    MatrixForm,
    exterior_derivative,
    norm_inf,
    support,
    trace,
    wedge,
)
from ccslab.torus import build_torus

from fields import fourier_form

DEGREES = st.integers(0, 3)
SEEDS = st.integers(0, 2**32 - 1)


def _torus(dim=3, n=8):
    return build_torus(dim, n)


@settings(max_examples=20, deadline=None)
@given(k=st.integers(0, 2), seed=SEEDS)
def test_d_squared_vanishes(k, seed):
    t = _torus()
    w = fourier_form(t, k, 2, np.random.default_rng(seed))
    assert norm_inf(exterior_derivative(exterior_derivative(w))) <= 1e-12 * max(norm_inf(w), 1.0)


def test_d_squared_vanishes_on_open_axes():
    t = build_torus(3, 7, [True, False, False])
    w = fourier_form(t, 1, 1, np.random.default_rng(1))
    assert norm_inf(exterior_derivative(exterior_derivative(w))) <= 1e-11


@settings(max_examples=20, deadline=None)
@given(j=DEGREES, k=DEGREES, seed=SEEDS)
def test_scalar_graded_commutativity(j, k, seed):
    rng = np.random.default_rng(seed)
    t = _torus()
    a, b = fourier_form(t, j, 1, rng), fourier_form(t, k, 1, rng)
    lhs, rhs = wedge(a, b), wedge(b, a) * (-1) ** (j * k)
    assert norm_inf(lhs - rhs) <= 1e-12 * max(norm_inf(lhs), 1.0)


@settings(max_examples=20, deadline=None)
@given(j=DEGREES, k=DEGREES, seed=SEEDS)
def test_trace_graded_cyclicity(j, k, seed):
    rng = np.random.default_rng(seed)
    t = _torus()
    a, b = fourier_form(t, j, 2, rng), fourier_form(t, k, 2, rng)
    lhs, rhs = trace(wedge(a, b)), trace(wedge(b, a)) * (-1) ** (j * k)
    assert norm_inf(lhs - rhs) <= 1e-12 * max(norm_inf(lhs), 1.0)


@settings(max_examples=15, deadline=None)
@given(seed=SEEDS)
def test_wedge_is_associative(seed):
    rng = np.random.default_rng(seed)
    t = _torus(n=6)
    a, b, c = (fourier_form(t, 1, 2, rng) for _ in range(3))
    lhs = wedge(wedge(a, b), c)
    assert norm_inf(lhs - wedge(a, wedge(b, c))) <= 1e-12 * max(norm_inf(lhs), 1.0)


def test_leibniz_rule_converges_at_second_order():
    errs = []
    for n in (16, 32):
        t = _torus(n=n)
        x, y, z = t.coordinates()
        a = MatrixForm.from_components(t, 1, {(1,): np.sin(2 * np.pi * x), (2,): np.cos(2 * np.pi * y)})
        b = MatrixForm.from_components(t, 1, {(2,): np.cos(2 * np.pi * (x + z))})
        lhs = exterior_derivative(wedge(a, b))
        rhs = wedge(exterior_derivative(a), b) - wedge(a, exterior_derivative(b))
        errs.append(norm_inf(lhs - rhs))
    assert errs[1] > 0.0
    assert errs[0] / errs[1] > 3.5


def test_from_components_applies_sort_sign():
    t = _torus(n=4)
    w = MatrixForm.from_components(t, 2, {(2, 0): 1.5})
    assert np.allclose(w.component((0, 2)), -1.5)


def test_forms_are_immutable():
    w = MatrixForm.zero(_torus(n=4), 1, 2)
    with pytest.raises(AttributeError):
        w.degree = 2
    with pytest.raises(ValueError):
        w.coeffs[0, 0, 0, 0, 0, 0] = 1.0


def test_incompatible_forms_are_rejected():
    t = _torus(n=4)
    with pytest.raises(FormError):
        MatrixForm.zero(t, 1, 2) + MatrixForm.zero(t, 2, 2)
    with pytest.raises(FormError):
        MatrixForm.zero(t, 1, 2) + MatrixForm.zero(t, 1, 3)


def test_support_and_dilation():
    t = build_torus(2, 10, False)
    v = np.zeros(t.shape)
    v[4, 5] = 1.0
    s = support(MatrixForm.scalar_field(t, v))
    assert s.count == 1
    assert s.dilate(1).count == 5
    assert s.dilate(1).contains(s)
    edge = np.zeros(t.shape)
    edge[0, 0] = 1.0
    # open axes do not wrap
    assert support(MatrixForm.scalar_field(t, edge)).dilate(1).count == 3


def test_fibered_wedge_sign():
    t = _torus(n=4)
    rng = np.random.default_rng(0)
    a, b = fourier_form(t, 1, 1, rng), fourier_form(t, 2, 1, rng)
    fa = FiberedForm({("t",): a})
    fb = FiberedForm({("s",): b})
    # dt a ^ ds b = (-1)^{deg a} dt ds a b = -(-1)^{deg a} ds dt a b
    got = fa.wedge(fb).component("s", "t")
    assert norm_inf(got - wedge(a, b) * (-(-1) ** a.degree)) <= 1e-14


def test_fibered_wedge_only_matches_full_product():
    t = _torus(n=4)
    rng = np.random.default_rng(2)
    a0, a1 = fourier_form(t, 1, 2, rng), fourier_form(t, 0, 2, rng)
    f = FiberedForm({(): a0, ("t",): a1})
    full = f.wedge(f)
    part = f.wedge(f, only=("t",))
    assert norm_inf(full.component("t") - part.component("t")) == 0.0


def test_fibered_components_share_total_degree():
    t = _torus(n=4)
    with pytest.raises(FormError):
        FiberedForm({(): MatrixForm.zero(t, 1), ("t",): MatrixForm.zero(t, 1)})
