"""C/Z-valued evaluation of differential characters on cycles, for connections
on the trivial bundle over a grid torus.

The character of a connection A is normalised by declaring the trivial
connection to have character zero: on a (2p-1)-cycle z it is the integral of
the transgression form of the straight path from 0 to A, reduced mod Z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .chern_weil import (
    InvariantPolynomial,
    beta_form,
    invariant_poly,
    path_transgression,
)
from .connections import Connection, ConnectionPath, curvature, flatness_residual, linear_path
from .forms import FiberedForm, MatrixForm, norm_inf, wedge
from .torus import Cycle, coordinate_cycles, integrate, simpson_weights

DOUBLING_TOLERANCE = 1e-10


class CharacterError(ValueError):
    pass


@dataclass(frozen=True)
class CharacterValue:
    """A point of C/Z: real part of ``value`` in [0, 1); ``raw`` is the unreduced number."""

    value: complex
    raw: complex

    def distance(self, other: CharacterValue) -> float:
        return mod_z_distance(self.raw, other.raw)


def _reduce_real(x: float) -> float:
    r = x - math.floor(x)
    # x slightly below an integer can round up to exactly 1.0
    return 0.0 if r >= 1.0 else r


def reduce_mod_Z(z: complex) -> CharacterValue:
    z = complex(z)
    return CharacterValue(complex(_reduce_real(z.real), z.imag), z)


def mod_z_distance(a, b) -> float:
    """Circle distance min_k |a - b - k| over integers k."""
    if isinstance(a, CharacterValue):
        a = a.raw
    if isinstance(b, CharacterValue):
        b = b.raw
    d = complex(a) - complex(b)
    frac = _reduce_real(d.real)
    return math.hypot(min(frac, 1.0 - frac), d.imag)


@dataclass(frozen=True)
class CharacterEvaluation:
    label: str
    p: int
    cycle: str
    value: CharacterValue
    metadata: dict = field(default_factory=dict, hash=False, compare=False)

    def as_dict(self) -> dict:
        return {
            "label": self.label,
            "p": self.p,
            "cycle": self.cycle,
            "raw": self.value.raw,
            "value": self.value.value,
            **self.metadata,
        }


def _check_cycle(torus, z: Cycle, degree: int) -> None:
    if z.torus != torus:
        raise CharacterError("cycle lives on a different torus")
    if z.dimension != degree:
        raise CharacterError(f"expected a cycle of dimension {degree}, got {z.dimension}")


def cs_character(c: Connection, p: int, z: Cycle, samples: int = 33) -> CharacterValue:
    """Character of c on a (2p-1)-cycle, relative to the trivial connection."""
    _check_cycle(c.torus, z, 2 * p - 1)
    if 2 * p - 1 > c.torus.dim:
        raise CharacterError(f"no {2 * p - 1}-cycles on a {c.torus.dim}-torus")
    eta = path_transgression(linear_path(Connection.trivial(c.torus, c.rank), c, samples), p)
    return reduce_mod_Z(integrate(eta, z))


@dataclass(frozen=True)
class DifferenceReport:
    p: int
    cycle: str
    endpoint_difference: CharacterValue
    transgression: CharacterValue
    distance: float

    def as_dict(self) -> dict:
        return {
            "p": self.p,
            "cycle": self.cycle,
            "endpoint_difference": self.endpoint_difference.raw,
            "transgression": self.transgression.raw,
            "distance": self.distance,
        }


def character_difference_check(path: ConnectionPath, p: int, z: Cycle, samples: int = 33) -> DifferenceReport:
    """Compare the change of the character along a path with the integral of its eta form."""
    _check_cycle(path.torus, z, 2 * p - 1)
    c0 = cs_character(path.start, p, z, samples)
    c1 = cs_character(path.end, p, z, samples)
    diff = reduce_mod_Z(c1.raw - c0.raw)
    eta = reduce_mod_Z(integrate(path_transgression(path, p), z))
    return DifferenceReport(p, z.label, diff, eta, mod_z_distance(diff, eta))


def relative_cs_form(a0: Connection, a1: Connection, p: int, samples: int, nodes: int | None = None) -> MatrixForm:
    """Fiber integral over t of the dt-part of the transgression from 0 to the
    convex connection A~ = A_0 + t (A_1 - A_0) on I x X.

    With F_u = u dA~ + u^2 A~ ^ A~ (dA~ includes dt ^ (A_1 - A_0)) the form is
    p * int_0^1 P_p(A~, F_u, ..., F_u) du.  The integrand is a polynomial of
    degree 2p - 2 in u, so Gauss-Legendre with p nodes is exact.
    """
    torus = a0.torus
    if 2 * p - 2 > torus.dim:
        return MatrixForm.zero(torus, 2 * p - 2, 1)
    delta = a1.form - a0.form
    P = InvariantPolynomial(p, a0.rank)
    gl_x, gl_w = np.polynomial.legendre.leggauss(nodes or p)
    us, uw = 0.5 * (gl_x + 1.0), 0.5 * gl_w
    wt = simpson_weights(samples)
    total = MatrixForm.zero(torus, 2 * p - 2, 1)
    if norm_inf(delta) == 0.0:
        # A~ is pulled back from X, so it has no dt-part
        return total
    for j, t in enumerate(np.linspace(0.0, 1.0, samples)):
        at = a0.form if j == 0 else a1.form if j == samples - 1 else a0.form + delta * t
        da = curvature(Connection(at)) - wedge(at, at)
        aa = wedge(at, at)
        lifted = FiberedForm({(): at})
        for u, w in zip(us, uw):
            fu = FiberedForm({("t",): delta * u, (): da * u + aa * (u * u)})
            term = invariant_poly(P, [lifted] + [fu] * (p - 1), only=("t",)).component("t")
            total = total + term * (p * w * wt[j])
    return total


@dataclass(frozen=True, eq=False)
class TertiaryParts:
    """The forms entering a tertiary value: I_1 comes from ``relative``, I_2 from ``beta``."""

    relative: MatrixForm
    beta: MatrixForm
    eta_norm: float
    beta_residual: float


def tertiary_parts(path: ConnectionPath, p: int, s_samples: int | None = None) -> TertiaryParts:
    witness = beta_form(path, p, s_samples)
    rel = relative_cs_form(path.start, path.end, p, path.count)
    return TertiaryParts(rel, witness.beta, norm_inf(witness.eta), witness.residual)


def _require_flat_path(path: ConnectionPath) -> None:
    worst = max(flatness_residual(c) for c in path.samples)
    if worst > path.flat_tolerance:
        raise CharacterError(
            f"tertiary classes need a flat path: curvature {worst:.3e} exceeds {path.flat_tolerance:.3e}"
        )


def tertiary_class(
    path: ConnectionPath,
    p: int,
    z: Cycle,
    s_samples: int | None = None,
    refined: ConnectionPath | None = None,
    eta_tolerance: float = 1e-10,
) -> CharacterEvaluation:
    """Tertiary value on a (2p-2)-cycle: reduce(int_{I x z} relative CS - int_z beta).

    ``refined`` is the same path at doubled t-resolution; when given, the
    value is recomputed there and the mod-Z change is recorded.
    """
    if p < 2:
        raise CharacterError("tertiary classes are defined for p >= 2")
    _check_cycle(path.torus, z, 2 * p - 2)
    if 2 * p - 2 > path.torus.dim:
        raise CharacterError(f"no {2 * p - 2}-cycles on a {path.torus.dim}-torus")
    _require_flat_path(path)
    parts = tertiary_parts(path, p, s_samples)
    return _evaluate(parts, p, z, path, s_samples, refined, eta_tolerance)


def _evaluate(parts, p, z, path, s_samples, refined, eta_tolerance, refined_parts=None):
    i1, i2 = integrate(parts.relative, z), integrate(parts.beta, z)
    value = reduce_mod_Z(i1 - i2)
    meta = {
        "relative_integral": i1,
        "beta_integral": i2,
        "eta_norm": parts.eta_norm,
        "zero_projection": parts.eta_norm <= eta_tolerance,
        "beta_residual": parts.beta_residual,
        "t_samples": path.count,
        "s_samples": s_samples or path.count,
        "resolution": list(path.torus.resolution),
    }
    if refined is not None or refined_parts is not None:
        if refined_parts is None:
            _require_flat_path(refined)
            refined_parts = tertiary_parts(refined, p, s_samples)
        again = reduce_mod_Z(integrate(refined_parts.relative, z) - integrate(refined_parts.beta, z))
        shift = mod_z_distance(value, again)
        meta["doubling_shift"] = shift
        meta["doubling_stable"] = shift <= DOUBLING_TOLERANCE
    return CharacterEvaluation("tertiary", p, z.label, value, meta)


def tertiary_class_field(
    path: ConnectionPath,
    p: int,
    cycles: Sequence[Cycle] | None = None,
    s_samples: int | None = None,
    refined: ConnectionPath | None = None,
    eta_tolerance: float = 1e-10,
) -> list[CharacterEvaluation]:
    """Tertiary values on a list of cycles (default: all coordinate (2p-2)-cycles).

    The forms are built once and integrated over every cycle.
    """
    if p < 2:
        raise CharacterError("tertiary classes are defined for p >= 2")
    if cycles is None:
        cycles = coordinate_cycles(path.torus, 2 * p - 2)
    for z in cycles:
        _check_cycle(path.torus, z, 2 * p - 2)
    _require_flat_path(path)
    parts = tertiary_parts(path, p, s_samples)
    refined_parts = None
    if refined is not None:
        _require_flat_path(refined)
        refined_parts = tertiary_parts(refined, p, s_samples)
    return [
        _evaluate(parts, p, z, path, s_samples, None, eta_tolerance, refined_parts)
        for z in cycles
    ]


__all__ = [
    "CharacterError",
    "CharacterEvaluation",
    "CharacterValue",
    "DifferenceReport",
    "TertiaryParts",
    "character_difference_check",
    "cs_character",
    "mod_z_distance",
    "reduce_mod_Z",
    "relative_cs_form",
    "tertiary_class",
    "tertiary_class_field",
    "tertiary_parts",
]
