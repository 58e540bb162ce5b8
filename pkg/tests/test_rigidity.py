from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccslab.characters import CharacterError
from ccslab.connections import Connection, linear_path, two_param_connection
from ccslab.rigidity import (
    dbeta_constancy_check,
    fit_order,
    flat_integrand_check,
    rigidity_check,
    tertiary_constancy_check,
    variational_fd_study,
    variational_integrand,
)
from ccslab.forms import norm_inf
from ccslab.scenario import compile_family, scenario_path, scenario_two_param
from ccslab.torus import build_torus

from conftest import scenario
from fields import anti_hermitian, fourier_form


@settings(max_examples=50, deadline=None)
@given(q=st.floats(0.5, 4.0), c=st.floats(1e-3, 1e3), base=st.integers(4, 16))
def test_fit_recovers_a_power_law(q, c, base):
    steps = [1.0 / (base * 2**k) for k in range(3)]
    fit = fit_order(steps, [c * h**q for h in steps], floor=0.0)
    assert fit.order == pytest.approx(q, rel=1e-9)
    assert not fit.exact


def test_fit_flags_exact_levels_and_rejects_short_ladders():
    fit = fit_order([0.1, 0.05, 0.025], [1e-15, 0.0, 3e-16])
    assert fit.exact and fit.order is None
    with pytest.raises(ValueError):
        fit_order([0.1, 0.05], [1.0, 0.25])
    assert fit_order([0.1, 0.05, 0.025], [1.0, 0.0, 0.5], floor=0.0).order is None


def test_variational_study_on_the_scenario_family():
    scn = scenario("t3_variational")
    rep = variational_fd_study(compile_family(scn), 2, scn.s0, t_samples=scn.t_samples)
    assert rep.passed
    assert rep.orders["ds"].order >= 1.9
    assert rep.as_dict()["inputs"]["s0"] == scn.s0


def test_variational_integrand_is_a_three_form_on_t3():
    scn = scenario("t3_variational")
    f = scenario_two_param(scn, None, [0.25, 0.5, 0.75])
    assert variational_integrand(f, 2, 1).degree == 3
    assert variational_integrand(f, 1, 1).degree == 1


def test_flat_family_integrand_and_dbeta_vanish():
    scn = scenario("t3_flat_family")
    f = scenario_two_param(scn, None, np.linspace(0.0, 1.0, 3))
    assert flat_integrand_check(f, 2).passed
    rep = dbeta_constancy_check(f, 2)
    assert rep.passed and rep.asserted


def test_constancy_needs_a_flat_homotopy_with_fixed_ends():
    t = build_torus(2, 4)
    rng = np.random.default_rng(0)
    a = Connection(anti_hermitian(fourier_form(t, 1, 2, rng)))
    f = two_param_connection(Connection.trivial(t, 2), a, 3, 3)
    with pytest.raises(CharacterError):
        tertiary_constancy_check(f, 2)
    with pytest.raises(CharacterError):
        tertiary_constancy_check(f, 1)


def test_p2_constancy_is_recorded_without_a_verdict():
    scn = scenario("t3_flat_family")
    f = scenario_two_param(scn, None, np.linspace(0.0, 1.0, 3))
    rep = tertiary_constancy_check(f, 2)
    assert not rep.asserted and rep.passed
    assert rep.values["spread"] > 1e-4


def test_rigidity_on_constant_and_non_flat_paths():
    scn = scenario("t3_constant_path")
    path = scenario_path(scn)
    rep = rigidity_check(path, 2, samples=5)
    assert rep.passed and rep.norms["max_distance"] == 0.0
    t = build_torus(3, 6)
    a = Connection(anti_hermitian(fourier_form(t, 1, 2, np.random.default_rng(3))))
    moved = rigidity_check(linear_path(Connection.trivial(t, 2), a, 5), 2, samples=5)
    assert not moved.passed
    assert norm_inf(a.form) > 0.0
