"""Declarative scenario files: a grid, a rank, and a connection family written
as a finite sum of terms

    coef * t^a * s^b * tf(2 pi w t) * trig(2 pi k . x) * E_{rc} dx_axis

optionally conjugated by a gauge field g = I + sum(terms without dx) and
multiplied by a compactly supported bump.  Scenarios are JSON documents.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .connections import (
    Connection,
    FamilySample,
    FlatnessError,
    TwoParamFamily,
    flatness_residual,
    sample_family,
    sample_path,
)
from .forms import MatrixForm, SupportMask
from .torus import GridTorus, build_torus

TRIG = ("one", "cos", "sin", "exp")
TFUN = ("one", "cos", "sin")
KINDS = ("terms", "interpolation")


class ScenarioError(ValueError):
    """Malformed or inconsistent scenario; ``where`` locates the problem."""

    def __init__(self, message: str, where: str = "", line: int | None = None, column: int | None = None):
        loc = ""
        if line is not None:
            loc = f"line {line}, column {column}: "
        elif where:
            loc = f"{where}: "
        super().__init__(loc + message)
        self.where = where
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Term:
    entry: tuple[int, int]
    coef: tuple[float, float]
    dx: int | None = None
    t: int = 0
    s: int = 0
    tfun: str = "one"
    w: int = 0
    trig: str = "one"
    k: tuple[int, ...] = ()

    @property
    def coefficient(self) -> complex:
        return complex(*self.coef)


@dataclass(frozen=True)
class Bump:
    center: tuple[float, ...]
    radius: tuple[float, ...]


@dataclass(frozen=True)
class Manifold:
    dim: int
    resolution: tuple[int, ...]
    periodic: tuple[bool, ...]


@dataclass(frozen=True)
class Family:
    kind: str = "terms"
    terms: tuple[Term, ...] = ()
    gauge: tuple[Term, ...] = ()
    bump: Bump | None = None
    a0: tuple[Term, ...] = ()
    a1: tuple[Term, ...] = ()
    base: str = "trivial"


@dataclass(frozen=True)
class CheckSpec:
    name: str
    params: tuple[tuple[str, Any], ...] = ()

    def get(self, key: str, default=None):
        for k, v in self.params:
            if k == key:
                return v
        return default

    def as_dict(self) -> dict:
        return {"name": self.name, **{k: _thaw(v) for k, v in self.params}}


@dataclass(frozen=True)
class Scenario:
    name: str
    manifold: Manifold
    rank: int
    family: Family
    flat: bool = False
    flat_tolerance: float = 1e-12
    endpoint_fixed: bool = False
    t_samples: int = 33
    s_samples: int = 33
    s0: float = 0.0
    ladder: tuple[int, ...] = ()
    checks: tuple[CheckSpec, ...] = ()

    def with_resolution(self, n: int) -> Scenario:
        m = self.manifold
        return Scenario(**{**_fields(self), "manifold": Manifold(m.dim, (int(n),) * m.dim, m.periodic)})


def _fields(obj) -> dict:
    return {k: getattr(obj, k) for k in obj.__dataclass_fields__}


def _freeze(v):
    if isinstance(v, list):
        return tuple(_freeze(x) for x in v)
    if isinstance(v, dict):
        return tuple((k, _freeze(x)) for k, x in v.items())
    return v


def _thaw(v):
    if isinstance(v, tuple):
        return [_thaw(x) for x in v]
    return v


# parsing ------------------------------------------------------------------


def _need(d: dict, key: str, where: str):
    if key not in d:
        raise ScenarioError(f"missing required key {key!r}", where)
    return d[key]


def _int(v, where: str, minimum: int | None = None) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ScenarioError(f"expected an integer, got {v!r}", where)
    if minimum is not None and v < minimum:
        raise ScenarioError(f"must be >= {minimum}, got {v}", where)
    return v


def _float(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioError(f"expected a number, got {v!r}", where)
    return float(v)


def _unknown(d: dict, allowed: set, where: str) -> None:
    extra = sorted(set(d) - allowed)
    if extra:
        raise ScenarioError(f"unknown keys {extra}", where)


def _parse_term(d, where: str, dim: int, rank: int, form: bool) -> Term:
    if not isinstance(d, dict):
        raise ScenarioError("a term must be an object", where)
    _unknown(d, {"entry", "coef", "dx", "t", "s", "tfun", "w", "trig", "k"}, where)
    entry = _need(d, "entry", where)
    if not (isinstance(entry, list) and len(entry) == 2):
        raise ScenarioError("entry must be [row, column]", where + ".entry")
    r, c = (_int(x, where + ".entry", 0) for x in entry)
    if r >= rank or c >= rank:
        raise ScenarioError(f"entry {entry} outside a rank-{rank} matrix", where + ".entry")
    coef = _need(d, "coef", where)
    if isinstance(coef, (int, float)) and not isinstance(coef, bool):
        coef = [coef, 0.0]
    if not (isinstance(coef, list) and len(coef) == 2):
        raise ScenarioError("coef must be a number or [re, im]", where + ".coef")
    coef = (_float(coef[0], where + ".coef"), _float(coef[1], where + ".coef"))
    dx = None
    if form:
        dx = _int(_need(d, "dx", where), where + ".dx", 0)
        if dx >= dim:
            raise ScenarioError(f"axis {dx} outside dimension {dim}", where + ".dx")
    elif "dx" in d:
        raise ScenarioError("gauge terms are functions and take no dx", where)
    tfun = d.get("tfun", "one")
    trig = d.get("trig", "one")
    if tfun not in TFUN:
        raise ScenarioError(f"tfun must be one of {TFUN}", where + ".tfun")
    if trig not in TRIG:
        raise ScenarioError(f"trig must be one of {TRIG}", where + ".trig")
    k = d.get("k", [0] * dim)
    if not (isinstance(k, list) and len(k) == dim):
        raise ScenarioError(f"k must list {dim} integers", where + ".k")
    k = tuple(_int(x, where + ".k") for x in k)
    return Term(
        entry=(r, c), coef=coef, dx=dx,
        t=_int(d.get("t", 0), where + ".t", 0), s=_int(d.get("s", 0), where + ".s", 0),
        tfun=tfun, w=_int(d.get("w", 0), where + ".w"), trig=trig, k=k,
    )


def _parse_terms(seq, where: str, dim: int, rank: int, form: bool = True) -> tuple[Term, ...]:
    if not isinstance(seq, list):
        raise ScenarioError("expected a list of terms", where)
    return tuple(_parse_term(d, f"{where}[{i}]", dim, rank, form) for i, d in enumerate(seq))


def _parse_check(d, where: str) -> CheckSpec:
    from .suite import CHECKS

    if isinstance(d, str):
        d = {"name": d}
    if not isinstance(d, dict):
        raise ScenarioError("a check must be a name or an object", where)
    name = _need(d, "name", where)
    if name not in CHECKS:
        raise ScenarioError(f"unknown check {name!r}; known: {sorted(CHECKS)}", where + ".name")
    params = tuple((k, _freeze(v)) for k, v in sorted(d.items()) if k != "name")
    return CheckSpec(name, params)


def scenario_from_dict(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("a scenario must be a JSON object")
    _unknown(doc, {"name", "manifold", "rank", "family", "flat", "flat_tolerance", "endpoint_fixed",
                   "samples", "s0", "ladder", "checks"}, "scenario")
    man = _need(doc, "manifold", "scenario")
    if not isinstance(man, dict):
        raise ScenarioError("manifold must be an object", "manifold")
    _unknown(man, {"dim", "resolution", "periodic"}, "manifold")
    dim = _int(_need(man, "dim", "manifold"), "manifold.dim", 1)
    res = _need(man, "resolution", "manifold")
    res = [res] * dim if isinstance(res, int) and not isinstance(res, bool) else res
    if not (isinstance(res, list) and len(res) == dim):
        raise ScenarioError(f"resolution must be an integer or {dim} integers", "manifold.resolution")
    res = tuple(_int(n, "manifold.resolution", 4) for n in res)
    per = man.get("periodic", True)
    per = [per] * dim if isinstance(per, bool) else per
    if not (isinstance(per, list) and len(per) == dim and all(isinstance(x, bool) for x in per)):
        raise ScenarioError(f"periodic must be a boolean or {dim} booleans", "manifold.periodic")
    manifold = Manifold(dim, res, tuple(per))
    rank = _int(_need(doc, "rank", "scenario"), "rank", 1)

    fam = _need(doc, "family", "scenario")
    if not isinstance(fam, dict):
        raise ScenarioError("family must be an object", "family")
    _unknown(fam, {"kind", "terms", "gauge", "bump", "a0", "a1", "base"}, "family")
    kind = fam.get("kind", "terms")
    if kind not in KINDS:
        raise ScenarioError(f"kind must be one of {KINDS}", "family.kind")
    bump = None
    if "bump" in fam:
        b = fam["bump"]
        if not isinstance(b, dict):
            raise ScenarioError("bump must be an object", "family.bump")
        _unknown(b, {"center", "radius"}, "family.bump")
        center = _need(b, "center", "family.bump")
        radius = _need(b, "radius", "family.bump")
        if not (isinstance(center, list) and isinstance(radius, list) and len(center) == len(radius) == dim):
            raise ScenarioError(f"bump center and radius need {dim} entries", "family.bump")
        bump = Bump(tuple(_float(x, "family.bump.center") for x in center),
                    tuple(_float(x, "family.bump.radius") for x in radius))
        if any(r <= 0 for r in bump.radius):
            raise ScenarioError("bump radii must be positive", "family.bump.radius")
    base = fam.get("base", "trivial")
    if base not in ("trivial", "start"):
        raise ScenarioError("base must be 'trivial' or 'start'", "family.base")
    family = Family(
        kind=kind,
        terms=_parse_terms(fam.get("terms", []), "family.terms", dim, rank),
        gauge=_parse_terms(fam.get("gauge", []), "family.gauge", dim, rank, form=False),
        bump=bump,
        a0=_parse_terms(fam.get("a0", []), "family.a0", dim, rank),
        a1=_parse_terms(fam.get("a1", []), "family.a1", dim, rank),
        base=base,
    )
    if kind == "interpolation" and (family.terms or family.gauge):
        raise ScenarioError("interpolation families take a0/a1, not terms/gauge", "family")
    if kind == "terms" and (family.a0 or family.a1):
        raise ScenarioError("a0/a1 belong to interpolation families", "family")

    samples = doc.get("samples", {})
    if not isinstance(samples, dict):
        raise ScenarioError("samples must be an object", "samples")
    _unknown(samples, {"t", "s"}, "samples")
    t_samples = _int(samples.get("t", 33), "samples.t", 3)
    s_samples = _int(samples.get("s", 33), "samples.s", 3)
    for m, where in ((t_samples, "samples.t"), (s_samples, "samples.s")):
        if m % 2 == 0:
            raise ScenarioError("sample counts must be odd", where)
    ladder = doc.get("ladder", [])
    if not isinstance(ladder, list):
        raise ScenarioError("ladder must be a list of resolutions", "ladder")
    ladder = tuple(_int(n, "ladder", 4) for n in ladder)
    checks = doc.get("checks", [])
    if not isinstance(checks, list):
        raise ScenarioError("checks must be a list", "checks")
    ftol = _float(doc.get("flat_tolerance", 1e-12), "flat_tolerance")
    for key in ("flat", "endpoint_fixed"):
        if not isinstance(doc.get(key, False), bool):
            raise ScenarioError("expected a boolean", key)
    name = doc.get("name", "scenario")
    if not isinstance(name, str):
        raise ScenarioError("name must be a string", "name")
    return Scenario(
        name=name,
        manifold=manifold,
        rank=rank,
        family=family,
        flat=doc.get("flat", False),
        flat_tolerance=ftol,
        endpoint_fixed=doc.get("endpoint_fixed", False),
        t_samples=t_samples,
        s_samples=s_samples,
        s0=_float(doc.get("s0", 0.0), "s0"),
        ladder=ladder,
        checks=tuple(_parse_check(c, f"checks[{i}]") for i, c in enumerate(checks)),
    )


def check_nyquist(scn: Scenario) -> None:
    """Every wave number must stay strictly below half the coarsest resolution."""
    coarsest = [min([n] + list(scn.ladder)) for n in scn.manifold.resolution]
    fam = scn.family
    for group, terms in (("terms", fam.terms), ("gauge", fam.gauge), ("a0", fam.a0), ("a1", fam.a1)):
        for i, term in enumerate(terms):
            for axis, kk in enumerate(term.k):
                if kk != 0 and not scn.manifold.periodic[axis]:
                    raise ScenarioError("Fourier modes need a periodic axis", f"family.{group}[{i}].k")
                if 2 * abs(kk) >= coarsest[axis]:
                    raise ScenarioError(
                        f"wave number {kk} on axis {axis} reaches the Nyquist limit of resolution "
                        f"{coarsest[axis]}",
                        f"family.{group}[{i}].k",
                    )


def parse_scenario(text: str, verify_flatness: bool = True) -> Scenario:
    """Parse and validate a scenario document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(exc.msg, line=exc.lineno, column=exc.colno) from None
    scn = scenario_from_dict(doc)
    check_nyquist(scn)
    if scn.flat and verify_flatness:
        residual = scenario_flatness(scn)
        if residual > scn.flat_tolerance:
            raise FlatnessError(
                f"scenario {scn.name!r} is declared flat but its curvature reaches {residual:.3e} "
                f"(tolerance {scn.flat_tolerance:.3e})",
                residual,
            )
    return scn


def load_scenario(path, verify_flatness: bool = True) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read(), verify_flatness)


def _term_dict(t: Term) -> dict:
    out = {"entry": list(t.entry), "coef": list(t.coef)}
    if t.dx is not None:
        out["dx"] = t.dx
    out.update({"t": t.t, "s": t.s, "tfun": t.tfun, "w": t.w, "trig": t.trig, "k": list(t.k)})
    return out


def scenario_to_dict(scn: Scenario) -> dict:
    fam = scn.family
    family: dict = {"kind": fam.kind, "base": fam.base}
    if fam.kind == "terms":
        family["terms"] = [_term_dict(t) for t in fam.terms]
        family["gauge"] = [_term_dict(t) for t in fam.gauge]
    else:
        family["a0"] = [_term_dict(t) for t in fam.a0]
        family["a1"] = [_term_dict(t) for t in fam.a1]
    if fam.bump is not None:
        family["bump"] = {"center": list(fam.bump.center), "radius": list(fam.bump.radius)}
    return {
        "name": scn.name,
        "manifold": {
            "dim": scn.manifold.dim,
            "resolution": list(scn.manifold.resolution),
            "periodic": list(scn.manifold.periodic),
        },
        "rank": scn.rank,
        "family": family,
        "flat": scn.flat,
        "flat_tolerance": scn.flat_tolerance,
        "endpoint_fixed": scn.endpoint_fixed,
        "samples": {"t": scn.t_samples, "s": scn.s_samples},
        "s0": scn.s0,
        "ladder": list(scn.ladder),
        "checks": [c.as_dict() for c in scn.checks],
    }


def dump_scenario(scn: Scenario) -> str:
    # repr-exact floats keep parse(dump(x)) == x
    return json.dumps(scenario_to_dict(scn), indent=2)


# compilation --------------------------------------------------------------


def _tfactor(term: Term, t: float) -> tuple[float, float]:
    """(value, d/dt) of t^a * tf(2 pi w t)."""
    a, om = term.t, 2.0 * math.pi * term.w
    poly = t ** a
    dpoly = a * t ** (a - 1) if a > 0 else 0.0
    if term.tfun == "one":
        f, df = 1.0, 0.0
    elif term.tfun == "cos":
        f, df = math.cos(om * t), -om * math.sin(om * t)
    else:
        f, df = math.sin(om * t), om * math.cos(om * t)
    return poly * f, dpoly * f + poly * df


def _sfactor(term: Term, s: float) -> tuple[float, float]:
    b = term.s
    return s ** b, (b * s ** (b - 1) if b > 0 else 0.0)


def _spatial(term: Term, coords) -> tuple[np.ndarray, list[np.ndarray]]:
    """trig(2 pi k.x) on the grid and its partial derivatives."""
    phase = sum(2.0 * math.pi * kk * x for kk, x in zip(term.k, coords))
    phase = np.broadcast_to(phase, np.broadcast_shapes(*(c.shape for c in coords)))
    ks = [2.0 * math.pi * kk for kk in term.k]
    if term.trig == "one":
        val = np.ones(phase.shape, dtype=complex)
        return val, [np.zeros(phase.shape, dtype=complex) for _ in ks]
    if term.trig == "cos":
        val, dval = np.cos(phase) + 0j, -np.sin(phase) + 0j
    elif term.trig == "sin":
        val, dval = np.sin(phase) + 0j, np.cos(phase) + 0j
    else:
        val = np.exp(1j * phase)
        dval = 1j * val
    return val, [k * dval for k in ks]


def bump_field(bump: Bump, coords) -> np.ndarray:
    """Product of exp(1 - 1 / (1 - u^2)) over the axes, u = (x - c) / r; zero for |u| >= 1."""
    out = 1.0
    for x, c, r in zip(coords, bump.center, bump.radius):
        u = (x - c) / r
        inside = np.abs(u) < 1.0
        safe = np.where(inside, 1.0 - u * u, 1.0)
        out = out * np.where(inside, np.exp(1.0 - 1.0 / safe), 0.0)
    return np.asarray(out, dtype=float)


def scenario_mask(scn: Scenario, torus: GridTorus | None = None) -> SupportMask:
    torus = torus or scenario_torus(scn)
    if scn.family.bump is None:
        return SupportMask(torus, np.ones(torus.shape, dtype=bool))
    b = np.broadcast_to(bump_field(scn.family.bump, torus.coordinates()), torus.shape)
    return SupportMask(torus, b > 0.0)


def scenario_torus(scn: Scenario) -> GridTorus:
    m = scn.manifold
    return build_torus(m.dim, list(m.resolution), list(m.periodic))


class CompiledFamily:
    """The family of a scenario on one grid, as a callable (s, t) -> FamilySample."""

    def __init__(self, scn: Scenario, torus: GridTorus | None = None):
        self.scenario = scn
        self.torus = torus or scenario_torus(scn)
        self.rank = scn.rank
        coords = self.torus.coordinates()
        self._coords = coords
        self._bump = None if scn.family.bump is None else bump_field(scn.family.bump, coords)
        self._spatial_cache = {}
        fam = scn.family
        if fam.kind == "interpolation":
            self._interp = (self._constant_form(fam.a0), self._constant_form(fam.a1))

    def _sp(self, term: Term):
        key = (term.trig, term.k)
        if key not in self._spatial_cache:
            self._spatial_cache[key] = _spatial(term, self._coords)
        return self._spatial_cache[key]

    def _grid_full(self, arr) -> np.ndarray:
        return np.broadcast_to(arr, self.torus.shape)

    def _form(self, terms, s: float, t: float, which: str) -> MatrixForm:
        """Connection terms (or their t, s, st derivatives) as a MatrixForm."""
        n, d = self.rank, self.torus.dim
        comps = np.zeros((d, n, n, *self.torus.shape), dtype=complex)
        for term in terms:
            tv, dt = _tfactor(term, t)
            sv, ds = _sfactor(term, s)
            scale = {"": tv * sv, "t": dt * sv, "s": tv * ds, "st": dt * ds}[which]
            if scale == 0.0:
                continue
            val, _ = self._sp(term)
            comps[term.dx, term.entry[0], term.entry[1]] += term.coefficient * scale * val
        if self._bump is not None:
            comps *= self._bump
        return MatrixForm(self.torus, 1, comps)

    def _constant_form(self, terms) -> MatrixForm:
        return self._form(terms, 0.0, 0.0, "")

    def _gauge(self, s: float, t: float):
        """g, dg (a 1-form), dg/dt and dg/ds, as (n, n, *grid) arrays / forms."""
        n, d = self.rank, self.torus.dim
        shape = self.torus.shape
        g = np.zeros((n, n, *shape), dtype=complex)
        g_t = np.zeros_like(g)
        g_s = np.zeros_like(g)
        dg = np.zeros((d, n, n, *shape), dtype=complex)
        dg_t = np.zeros_like(dg)
        dg_s = np.zeros_like(dg)
        for i in range(n):
            g[i, i] = 1.0
        for term in self.scenario.family.gauge:
            tv, dt = _tfactor(term, t)
            sv, ds = _sfactor(term, s)
            val, grads = self._sp(term)
            r, c = term.entry
            coef = term.coefficient
            g[r, c] += coef * tv * sv * val
            g_t[r, c] += coef * dt * sv * val
            g_s[r, c] += coef * tv * ds * val
            for axis, gr in enumerate(grads):
                dg[axis, r, c] += coef * tv * sv * gr
                dg_t[axis, r, c] += coef * dt * sv * gr
                dg_s[axis, r, c] += coef * tv * ds * gr
        return g, g_t, g_s, dg, dg_t, dg_s

    def __call__(self, s: float, t: float) -> FamilySample:
        fam = self.scenario.family
        if fam.kind == "interpolation":
            return self._interpolation(s, t)
        a = self._form(fam.terms, s, t, "")
        a_t = self._form(fam.terms, s, t, "t")
        a_s = self._form(fam.terms, s, t, "s")
        if not fam.gauge:
            return FamilySample(a, a_t, a_s, self._form(fam.terms, s, t, "st"))
        return self._gauged(a, a_t, a_s, s, t)

    def _gauged(self, a, a_t, a_s, s, t) -> FamilySample:
        """A' = g A g^-1 - dg g^-1 with exact t and s derivatives."""
        torus = self.torus
        g, g_t, g_s, dg, dg_t, dg_s = self._gauge(s, t)
        gm = MatrixForm(torus, 0, g[None])
        gi = MatrixForm(torus, 0, np.moveaxis(np.linalg.inv(np.moveaxis(g, (0, 1), (-2, -1))), (-2, -1), (0, 1))[None])
        dgf = MatrixForm(torus, 1, dg)

        def transformed(a):
            return gm.wedge(a).wedge(gi) - dgf.wedge(gi)

        def derivative(a, a_x, gx, dgx):
            # d/dx (g a g^-1 - dg g^-1) with d(g^-1)/dx = -g^-1 gx g^-1
            gxf = MatrixForm(torus, 0, gx[None])
            gi_x = -(gi.wedge(gxf).wedge(gi))
            return (
                gxf.wedge(a).wedge(gi) + gm.wedge(a_x).wedge(gi) + gm.wedge(a).wedge(gi_x)
                - MatrixForm(torus, 1, dgx).wedge(gi) - dgf.wedge(gi_x)
            )

        form = transformed(a)
        return FamilySample(form, derivative(a, a_t, g_t, dg_t), derivative(a, a_s, g_s, dg_s), None)

    def _interpolation(self, s: float, t: float) -> FamilySample:
        a0, a1 = self._interp
        delta = a1 - a0
        base = a0 if self.scenario.family.base == "start" else MatrixForm.zero(self.torus, 1, self.rank)
        lin = a0 if t == 0.0 else a1 if t == 1.0 else a0 + delta * t
        form = lin if s == 1.0 else lin * s + base * (1.0 - s)
        return FamilySample(form, delta * s, lin - base, delta)


def compile_family(scn: Scenario, resolution: int | None = None) -> CompiledFamily:
    torus = scenario_torus(scn)
    if resolution is not None:
        torus = torus.refine(resolution)
    return CompiledFamily(scn, torus)


def scenario_path(scn: Scenario, resolution: int | None = None, s: float | None = None,
                  t_samples: int | None = None):
    fam = compile_family(scn, resolution)
    return sample_path(fam, t_samples or scn.t_samples, scn.s0 if s is None else s,
                       flat=False, flat_tolerance=scn.flat_tolerance)


def scenario_two_param(scn: Scenario, resolution: int | None = None, s_values=None,
                       t_samples: int | None = None) -> TwoParamFamily:
    fam = compile_family(scn, resolution)
    if s_values is None:
        s_values = np.linspace(0.0, 1.0, scn.s_samples)
    return sample_family(fam, list(s_values), t_samples or scn.t_samples,
                         endpoint_fixed=scn.endpoint_fixed, flat_tolerance=scn.flat_tolerance)


def scenario_flatness(scn: Scenario) -> float:
    """Largest curvature over the t-nodes (and the s-nodes when the family varies in s)."""
    fam = compile_family(scn)
    ts = np.linspace(0.0, 1.0, scn.t_samples)
    varies_in_s = fam.scenario.family.kind == "interpolation" or any(
        term.s > 0 for term in scn.family.terms + scn.family.gauge
    )
    ss = np.linspace(0.0, 1.0, scn.s_samples) if varies_in_s else [scn.s0]
    worst = 0.0
    for s in ss:
        for t in ts:
            worst = max(worst, flatness_residual(Connection(fam(s, t).form)))
    return worst
