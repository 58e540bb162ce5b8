"""Acceptance criteria, one test each.

Every test prints a single PASS/FAIL line with the measured value and the
pinned tolerance; the lines are repeated in the terminal summary.
"""

from __future__ import annotations

import numpy as np
import pytest

from ccslab.characters import cs_character, mod_z_distance
from ccslab.forms import exterior_derivative, norm_inf, trace, wedge
from ccslab.scenario import CheckSpec, scenario_path as build_path
from ccslab.suite import CHECKS, Context, report_json, run_suite
from ccslab.torus import build_torus, coordinate_cycle

import oracles
from conftest import ACCEPTANCE, SCENARIOS, check_entry, ladder_report, scenario, suite_report
from fields import fourier_form

# pinned tolerances
FLOOR_REL = 1e-12
MIN_ORDER = 1.9
CHERN_ABS = 1e-12
ETA_ABS = 1e-12
FIBER_ABS = 1e-10
BETA_ABS = 1e-10
P1_DIST = 1e-10
RIGID_DIST = 1e-10
TERTIARY_ZERO = 1e-12
TERTIARY_ORACLE = 1e-10
TERTIARY_DOUBLING = 1e-10
FLAT_INTEGRAND = 1e-12
CONSTANCY_DIST = 1e-10
SUPPORT_DILATION = 1


@pytest.fixture
def record(capsys):
    def emit(number: int, passed: bool, detail: str) -> None:
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d}: {detail}"
        ACCEPTANCE.append(line)
        with capsys.disabled():
            print("\n" + line)

    return emit


def _order_text(entry) -> str:
    if entry.get("exact"):
        return "exact (all levels at the floor)"
    order = entry.get("order")
    return "order n/a" if order is None else f"order {order:.3f}"


def _order_ok(entry) -> bool:
    return bool(entry.get("exact")) or (entry.get("order") is not None and entry["order"] >= MIN_ORDER)


def test_criterion_01_exterior_floor(record):
    t = build_torus(3, 16)
    rng = np.random.default_rng(2024)
    dd, comm, cyc = 0.0, 0.0, 0.0
    for k in (0, 1, 2):
        w = fourier_form(t, k, 2, rng)
        dd = max(dd, norm_inf(exterior_derivative(exterior_derivative(w))) / norm_inf(w))
    for j in range(4):
        for k in range(4):
            a, b = fourier_form(t, j, 1, rng), fourier_form(t, k, 1, rng)
            ab = wedge(a, b)
            comm = max(comm, norm_inf(ab - wedge(b, a) * (-1) ** (j * k)) / max(norm_inf(ab), 1e-300))
            m, n = fourier_form(t, j, 2, rng), fourier_form(t, k, 2, rng)
            tr = trace(wedge(m, n))
            cyc = max(cyc, norm_inf(tr - trace(wedge(n, m)) * (-1) ** (j * k)) / max(norm_inf(tr), 1e-300))
    scn_check = CHECKS["exterior_floor"](Context(scenario("t3_u2_fourier"), 16), CheckSpec("exterior_floor"))
    worst = max(dd, comm, cyc, scn_check["residual"])
    ok = worst <= FLOOR_REL
    record(1, ok, f"16^3 |ddw|/|w| {dd:.2e}, commutativity {comm:.2e}, cyclicity {cyc:.2e}, "
                  f"U(2) connection {scn_check['residual']:.2e} (tol {FLOOR_REL:g})")
    assert ok


def test_criterion_02_chern_weil_closedness(record):
    u2 = check_entry(ladder_report("t3_u2_fourier"), "chern_closedness", p=2)
    abel = scenario("t3_abelian_flat")
    levels = [CHECKS["chern_closedness"](Context(abel, n), CheckSpec("chern_closedness", (("p", 2),)))["residual"]
              for n in (12, 24, 48)]
    ok = _order_ok(u2) and max(levels) <= CHERN_ABS
    record(2, ok, f"U(2) ladder {u2['ladder']} |dc_2| {_order_text(u2)} (min {MIN_ORDER}); "
                  f"abelian |dc_2| max {max(levels):.2e} over 12/24/48 (tol {CHERN_ABS:g}); "
                  "c_2 is a 4-form on T^3, so both are identically zero")
    assert ok


def test_criterion_03_flat_path_eta_vanishing(record):
    abel = check_entry(suite_report("t3_abelian_flat"), "eta_vanishing", p=2)
    gauge = check_entry(ladder_report("t3_pure_gauge"), "eta_vanishing", p=2)
    ok = abel["residual"] <= ETA_ABS and _order_ok(gauge)
    record(3, ok, f"abelian |eta_2| {abel['residual']:.2e} at {scenario('t3_abelian_flat').t_samples} t-samples "
                  f"(tol {ETA_ABS:g}); pure gauge ladder {gauge['ladder']} {_order_text(gauge)} (min {MIN_ORDER})")
    assert ok


def test_criterion_04_transgression_stokes(record):
    entry = check_entry(ladder_report("t3_u2_fourier"), "transgression_stokes", p=2)
    ok = _order_ok(entry)
    record(4, ok, f"U(2) ladder {entry['ladder']} with dt ~ h: {_order_text(entry)} (min {MIN_ORDER}); "
                  "both sides are 4-forms on T^3")
    assert ok


def test_criterion_05_fiber_consistency(record):
    worst, count = 0.0, 0
    for path in sorted(SCENARIOS.glob("*.json")):
        scn = scenario(path.stem)
        ctx = Context(scn)
        for p in range(1, (scn.manifold.dim + 1) // 2 + 1):
            r = CHECKS["fiber_consistency"](ctx, CheckSpec("fiber_consistency", (("p", p),)))
            worst = max(worst, r["residual"])
            count += 1
    ok = worst <= FIBER_ABS
    record(5, ok, f"max |TP - eta(linear)| {worst:.2e} over {count} (scenario, p) pairs (tol {FIBER_ABS:g})")
    assert ok


def test_criterion_06_beta_witness(record):
    abel = check_entry(suite_report("t3_abelian_flat"), "beta_residual", p=2)
    fourier = check_entry(ladder_report("t3_fourier_beta"), "beta_residual", p=2)
    scn = scenario("t3_abelian_flat")
    ok = abel["residual"] <= BETA_ABS and _order_ok(fourier)
    record(6, ok, f"abelian {scn.manifold.resolution[0]}^3 {scn.s_samples}x{scn.t_samples}: "
                  f"|d beta - (TP - eta)| {abel['residual']:.2e} (tol {BETA_ABS:g}); "
                  f"Fourier ladder {fourier['ladder']} {_order_text(fourier)} (min {MIN_ORDER})")
    assert ok


def _holonomy_values(name):
    scn = scenario(name)
    path = build_path(scn)
    worst = 0.0
    for end in (path.start, path.end):
        for axis in range(scn.manifold.dim):
            z = coordinate_cycle(path.torus, [axis])
            got = cs_character(end, 1, z, samples=5)
            along = tuple(slice(None) if a == axis else 0 for a in range(scn.manifold.dim))
            line = np.moveaxis(end.form.coeffs[axis][(slice(None), slice(None)) + along], (0, 1), (-2, -1))
            expected = oracles.holonomy_character(line, 1.0 / scn.manifold.resolution[axis])
            worst = max(worst, mod_z_distance(got, expected))
    return worst


def test_criterion_07_p1_difference_identity(record):
    dist = max(check_entry(suite_report(n), "character_difference", p=1)["residual"]
               for n in ("t1_abelian_p1", "t2_abelian_p1"))
    hol = max(_holonomy_values(n) for n in ("t1_abelian_p1", "t2_abelian_p1"))
    ok = dist <= P1_DIST and hol <= P1_DIST
    record(7, ok, f"T^1/T^2 endpoint difference vs int eta_1: {dist:.2e}; endpoint characters vs holonomy "
                  f"oracle: {hol:.2e} (tol {P1_DIST:g})")
    assert ok


def test_criterion_08_rigidity(record):
    abel = check_entry(suite_report("t3_abelian_flat"), "rigidity", p=2)
    gauge = check_entry(ladder_report("t3_pure_gauge"), "rigidity", p=2)
    ok = abel["residual"] <= RIGID_DIST and _order_ok(gauge)
    record(8, ok, f"constant-coefficient endpoint distance {abel['residual']:.2e} (tol {RIGID_DIST:g}); "
                  f"pure gauge ladder {gauge['ladder']} distances "
                  f"{', '.join(f'{r:.2e}' for r in gauge['residuals'])} {_order_text(gauge)} (min {MIN_ORDER})")
    assert ok


def test_criterion_09_tertiary_sanity(record):
    const = check_entry(suite_report("t3_constant_path"), "tertiary", p=2)
    rank1 = check_entry(suite_report("t3_rank1_loop"), "tertiary", p=2)
    loop = check_entry(suite_report("t3_tertiary_loop"), "tertiary", p=2)
    oracle = oracles.trig_loop_tertiary(0.7, 0.45, 1.3)
    planes = [tuple(c) for c in scenario("t3_tertiary_loop").checks[-1].get("cycles")]
    oracle_dist = max(mod_z_distance(row["raw"], oracle[plane]) for row, plane in zip(loop["cycles"], planes))
    doubling = max(row["doubling_shift"] for row in loop["cycles"])
    zero = max(abs(complex(row["raw"])) for e in (const, rank1) for row in e["cycles"])
    ok = zero <= TERTIARY_ZERO and oracle_dist <= TERTIARY_ORACLE and doubling <= TERTIARY_DOUBLING
    record(9, ok, f"constant and rank-1 values max {zero:.2e} (tol {TERTIARY_ZERO:g}); loop vs symbolic oracle "
                  f"{oracle_dist:.2e} (tol {TERTIARY_ORACLE:g}); t-doubling shift {doubling:.2e} "
                  f"(tol {TERTIARY_DOUBLING:g})")
    assert ok


def test_criterion_10_variational_formula(record):
    var = check_entry(suite_report("t3_variational"), "variational", p=2)
    flat = check_entry(suite_report("t3_flat_family"), "variational_flat", p=2)
    ok = var["order"] is not None and var["order"] >= MIN_ORDER and flat["residual"] <= FLAT_INTEGRAND
    errs = ", ".join(f"{e:.2e}" for e in var["fd_errors"])
    record(10, ok, f"non-flat U(2) FD errors over ds {var['steps']}: {errs}, order {var['order']:.3f} "
                   f"(min {MIN_ORDER}); flat family integrand {flat['residual']:.2e} (tol {FLAT_INTEGRAND:g})")
    assert ok


def test_criterion_11_tertiary_constancy(record):
    entry = check_entry(suite_report("t4_tertiary_constancy"), "tertiary_constancy", p=3)
    p2 = check_entry(suite_report("t3_flat_family"), "tertiary_constancy", p=2)
    n_slices = len({row["s"] for row in entry["cycles"]})
    ok = entry["asserted"] and entry["residual"] <= CONSTANCY_DIST and n_slices == 5
    record(11, ok, f"T^4 8^4 p = 3 spread over {n_slices} s-slices {entry['residual']:.2e} "
                   f"(tol {CONSTANCY_DIST:g}); p = 2 analogue spreads (not asserted): "
                   f"T^4 {entry['p2_spread']:.2e}, T^3 {p2['residual']:.2e}")
    assert ok


def test_criterion_12_compact_support(record):
    box2 = check_entry(suite_report("box2_bump"), "compact_support", p=1)
    box3 = check_entry(suite_report("box3_bump"), "compact_support", p=2)
    dil = [e[k] for e in (box2, box3) for k in ("chern_dilation", "transgression_dilation")]
    ok = all(d is not None and d <= SUPPORT_DILATION for d in dil) and box2["passed"] and box3["passed"]
    record(12, ok, f"dilation needed (c_1, TP_1) on 32^2: {dil[0]}, {dil[1]}; (c_2, TP_2) on 24^3: "
                   f"{dil[2]}, {dil[3]} (allowed {SUPPORT_DILATION} cell)")
    assert ok


def test_criterion_13_determinism(record):
    names = sorted(p.stem for p in SCENARIOS.glob("*.json"))
    differing = [n for n in names if report_json(suite_report(n)) != report_json(run_suite(scenario(n), 8))]
    ok = not differing
    record(13, ok, f"{len(names)} scenario reports byte-identical with 1 and 8 workers"
                   + (f"; differing: {differing}" if differing else ""))
    assert ok


def test_every_scenario_suite_passes():
    failing = [p.stem for p in sorted(SCENARIOS.glob("*.json")) if not suite_report(p.stem).passed]
    assert not failing
