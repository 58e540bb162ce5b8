"""Invariant polynomials, Chern forms and transgression forms.

Normalisation: P_p is the polarisation of the p-th elementary symmetric
function of the eigenvalues of (i / 2 pi) X, so P_p(F, ..., F) is the degree-2p
part of det(1 + (i / 2 pi) F).  In trace monomials,

    P_p(X_1, ..., X_p) = (i/2pi)^p / p! * sum_{sigma in S_p} sgn(sigma)
                         * prod_{cycles (a b ... z) of sigma} tr(X_a X_b ... X_z).
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

from .connections import (
    Connection,
    ConnectionPath,
    TwoParamFamily,
    curvature,
    flatness_residual,
    linear_path,
    path_velocity,
    straight_homotopy,
)
from .forms import (
    FiberedForm,
    MatrixForm,
    SupportMask,
    exterior_derivative,
    norm_inf,
    support,
)
from .torus import check_simpson_count, simpson_weights

CHERN_FACTOR = 1j / (2.0 * np.pi)

Form = Union[MatrixForm, FiberedForm]


class ChernWeilError(ValueError):
    pass


@lru_cache(maxsize=None)
def _permutation_cycles(p: int) -> tuple[tuple[float, tuple[tuple[int, ...], ...]], ...]:
    """(sgn(sigma) / p!, cycles of sigma with each cycle starting at its least element)."""
    out = []
    for perm in itertools.permutations(range(p)):
        seen = [False] * p
        cycles = []
        for start in range(p):
            if seen[start]:
                continue
            cyc = []
            k = start
            while not seen[k]:
                seen[k] = True
                cyc.append(k)
                k = perm[k]
            cycles.append(tuple(cyc))
        sign = (-1) ** sum(len(c) - 1 for c in cycles)
        out.append((sign / math.factorial(p), tuple(cycles)))
    return tuple(out)


@lru_cache(maxsize=None)
def _cycle_types(p: int) -> tuple[tuple[float, tuple[int, ...]], ...]:
    """Coefficients of prod tr(M^k) in e_p(M), grouped by cycle type."""
    acc: Counter = Counter()
    for coef, cycles in _permutation_cycles(p):
        acc[tuple(sorted(len(c) for c in cycles))] += coef
    return tuple((c, lengths) for lengths, c in sorted(acc.items()) if c != 0)


def _product(forms: Sequence[Form], only=None) -> Form:
    out = forms[0]
    for k, f in enumerate(forms[1:], start=2):
        out = out.wedge(f, only) if only is not None and k == len(forms) else out.wedge(f)
    return out


def _restrict(form: Form, only) -> Form:
    if only is None:
        return form
    return FiberedForm({only: form.component(*only)})


@dataclass(frozen=True)
class InvariantPolynomial:
    """The GL_n-invariant polynomial defining the p-th Chern form."""

    degree: int
    rank: int

    def __post_init__(self):
        if self.degree < 1:
            raise ChernWeilError("invariant polynomial degree must be >= 1")

    def __call__(self, *args: Form) -> Form:
        return invariant_poly(self, args)


def invariant_poly(P: InvariantPolynomial, args: Sequence[Form], only: Sequence[str] | None = None) -> Form:
    """Evaluate P_p on p matrix-valued forms (at most one of odd degree).

    Accepts MatrixForm or FiberedForm arguments (not mixed).  With at most
    one odd argument the trace monomials carry no ordering ambiguity.  For
    FiberedForm arguments ``only`` names the single parameter monomial
    wanted, which skips work on the others.
    """
    args = list(args)
    p = P.degree
    if len(args) != p:
        raise ChernWeilError(f"P_{p} takes {p} arguments, got {len(args)}")
    kinds = {type(a) for a in args}
    if len(kinds) != 1:
        raise ChernWeilError("arguments must all be MatrixForm or all FiberedForm")
    ranks = {a.rank for a in args}
    if ranks != {P.rank}:
        raise ChernWeilError(f"argument ranks {sorted(ranks)} do not match polynomial rank {P.rank}")
    if len({a.torus for a in args}) != 1:
        raise ChernWeilError("arguments live on different tori")
    if only is not None:
        if not isinstance(args[0], FiberedForm):
            raise ChernWeilError("component restriction applies to fibered forms only")
        only = tuple(only)
    odd = sum(a.total_degree % 2 for a in args)
    if odd > 1:
        raise ChernWeilError("at most one odd-degree argument is supported")
    scale = CHERN_FACTOR ** p

    if all(a is args[0] for a in args):
        # diagonal evaluation: only the cycle type matters
        M = args[0]
        powers: dict[int, Form] = {1: M}
        for k in range(2, p):
            powers[k] = powers[k - 1].wedge(M)
        if p > 1:
            powers[p] = powers[p - 1].wedge(M) if only is None else powers[p - 1].wedge(M, only)
        traces = {k: powers[k].trace() for k in powers}
        total = None
        for coef, lengths in _cycle_types(p):
            if len(lengths) == 1:
                term = _restrict(traces[lengths[0]], only) * (coef * scale)
            else:
                term = _product([traces[k] for k in lengths], only) * (coef * scale)
            total = term if total is None else total + term
        return total

    cache: dict[tuple[int, ...], Form] = {}

    def cycle_trace(cyc):
        if cyc not in cache:
            cache[cyc] = _product([args[i] for i in cyc]).trace()
        return cache[cyc]

    total = None
    for coef, cycles in _permutation_cycles(p):
        # the odd-containing factor (if any) may sit anywhere: all others are even
        if len(cycles) == 1:
            term = _restrict(cycle_trace(cycles[0]), only) * (coef * scale)
        else:
            term = _product([cycle_trace(c) for c in cycles], only) * (coef * scale)
        total = term if total is None else total + term
    return total


def chern_form(c: Connection, p: int) -> MatrixForm:
    """c_p = P_p(F, ..., F); canonical zero form when 2p exceeds the dimension."""
    if 2 * p > c.torus.dim:
        return MatrixForm.zero(c.torus, 2 * p, 1)
    F = curvature(c)
    return invariant_poly(InvariantPolynomial(p, c.rank), [F] * p)


def path_transgression(path: ConnectionPath, p: int) -> MatrixForm:
    """eta_p = p * int_0^1 P_p(dA/dt, F_t, ..., F_t) dt by composite Simpson."""
    torus = path.torus
    if 2 * p - 1 > torus.dim:
        return MatrixForm.zero(torus, 2 * p - 1, 1)
    P = InvariantPolynomial(p, path.rank)
    weights = simpson_weights(path.count)
    total = MatrixForm.zero(torus, 2 * p - 1, 1)
    for j, conn in enumerate(path.samples):
        vel = path_velocity(path, j)
        if norm_inf(vel) == 0.0:
            continue
        args = [vel] + [curvature(conn)] * (p - 1)
        total = total + invariant_poly(P, args) * (p * weights[j])
    return total


def fiber_integrate_I(samples: Sequence[Form]) -> MatrixForm:
    """Integrate over I the dt-components of forms on I x X sampled at Simpson nodes.

    FiberedForm samples contribute their dt component; MatrixForm samples are
    taken to be the dt components already.  Non-dt parts are dropped.
    """
    samples = list(samples)
    m = len(samples)
    if m < 3 or m % 2 == 0:
        raise ChernWeilError(f"fiber integration needs an odd sample count >= 3, got {m}")
    parts = [s.component("t") if isinstance(s, FiberedForm) else s for s in samples]
    degrees = {f.degree for f in parts}
    if len(degrees) != 1:
        raise ChernWeilError("fiber samples must share one degree")
    weights = simpson_weights(m)
    total = parts[0] * weights[0]
    for w, f in zip(weights[1:], parts[1:]):
        total = total + f * w
    return total


def convex_curvature(a0: Connection, a1: Connection, t: float) -> FiberedForm:
    """Curvature of A_0 + t (A_1 - A_0) viewed on I x X: dt ^ (A_1 - A_0) + F_t."""
    delta = a1.form - a0.form
    at = a0 if t == 0.0 else a1 if t == 1.0 else Connection(a0.form + delta * t)
    return FiberedForm({("t",): delta, (): curvature(at)})


def transgression_convex(a0: Connection, a1: Connection, p: int, samples: int = 33) -> MatrixForm:
    """TP = fiber integral of P_p(Theta~, ..., Theta~) for the convex combination."""
    torus = a0.torus
    if 2 * p - 1 > torus.dim:
        return MatrixForm.zero(torus, 2 * p - 1, 1)
    check_simpson_count(samples)
    P = InvariantPolynomial(p, a0.rank)
    integrands = []
    for t in np.linspace(0.0, 1.0, samples):
        theta = convex_curvature(a0, a1, t)
        integrands.append(invariant_poly(P, [theta] * p, only=("t",)))
    return fiber_integrate_I(integrands)


def family_curvature(f: TwoParamFamily, i: int, j: int) -> FiberedForm:
    """Full curvature on I x I x X: ds ^ dA/ds + dt ^ dA/dt + F_{s,t}."""
    return FiberedForm(
        {("s",): f.velocity_s(i, j), ("t",): f.velocity_t(i, j), (): curvature(f.connection(i, j))}
    )


def _uniform_unit(values: Sequence[float]) -> bool:
    values = np.asarray(values)
    return (
        len(values) >= 3
        and len(values) % 2 == 1
        and np.allclose(values, np.linspace(0.0, 1.0, len(values)), rtol=0.0, atol=1e-14)
    )


def double_transgression(f: TwoParamFamily, p: int) -> MatrixForm:
    """int_I int_I of the dt ^ ds component of P_p of the full family curvature.

    With t-endpoints fixed in s this satisfies
    d(result) = TP(slice s=1) - TP(slice s=0).
    """
    torus = f.torus
    if 2 * p - 2 > torus.dim:
        return MatrixForm.zero(torus, 2 * p - 2, 1)
    if not _uniform_unit(f.s_values):
        raise ChernWeilError("double transgression needs odd, uniform s samples covering [0, 1]")
    P = InvariantPolynomial(p, f.rank)
    ws = simpson_weights(f.s_count)
    wt = simpson_weights(f.t_count)
    total = MatrixForm.zero(torus, 2 * p - 2, 1)
    for i in range(f.s_count):
        for j in range(f.t_count):
            vs = f.velocity_s(i, j)
            if norm_inf(vs) == 0.0:
                continue
            full = family_curvature(f, i, j)
            # ds^dt component is stored; dt^ds = -ds^dt
            top = invariant_poly(P, [full] * p, only=("s", "t")).component("s", "t")
            total = total - top * (ws[i] * wt[j])
    return total


def double_transgression_stokes(f: TwoParamFamily, p: int) -> tuple[MatrixForm, float]:
    """Double transgression together with its Stokes residual
    sup |d(result) - (TP(slice 1) - TP(slice 0))|."""
    from .connections import family_slice

    if not f.endpoint_fixed_flag:
        raise ChernWeilError("the Stokes identity needs t-endpoints fixed across s")
    tp2 = double_transgression(f, p)
    diff = path_transgression(family_slice(f, f.s_count - 1), p) - path_transgression(family_slice(f, 0), p)
    return tp2, norm_inf(exterior_derivative(tp2) - diff)


@dataclass(frozen=True, eq=False)
class BetaWitness:
    """beta with d beta = TP(convex) - eta_p(path), plus the measured residual."""

    beta: MatrixForm
    transgression: MatrixForm
    eta: MatrixForm
    residual: float
    endpoint_flatness: tuple[float, float]


def beta_form(
    path: ConnectionPath,
    p: int,
    s_samples: int | None = None,
    flat_tolerance: float | None = None,
) -> BetaWitness:
    """beta by double transgression of the straight-line homotopy from the path
    (s = 0) to the convex path between its endpoints (s = 1)."""
    tol = path.flat_tolerance if flat_tolerance is None else flat_tolerance
    flat0, flat1 = flatness_residual(path.start), flatness_residual(path.end)
    if max(flat0, flat1) > tol:
        raise ChernWeilError(
            f"endpoints must be flat: curvature {max(flat0, flat1):.3e} exceeds tolerance {tol:.3e}"
        )
    homotopy = straight_homotopy(path, s_samples or path.count)
    beta = double_transgression(homotopy, p)
    tp = transgression_convex(path.start, path.end, p, path.count)
    eta = path_transgression(path, p)
    residual = norm_inf(exterior_derivative(beta) - (tp - eta))
    return BetaWitness(beta, tp, eta, residual, (flat0, flat1))


@dataclass(frozen=True)
class SupportReport:
    p: int
    mask_cells: int
    chern_cells: int
    transgression_cells: int
    chern_dilation: int | None
    transgression_dilation: int | None
    chern_contained: bool
    transgression_contained: bool

    @property
    def passed(self) -> bool:
        return self.chern_contained and self.transgression_contained

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__} | {"passed": self.passed}


def _dilation_needed(mask: SupportMask, supp: SupportMask, limit: int = 4) -> int | None:
    current = mask
    for k in range(limit + 1):
        if current.contains(supp):
            return k
        current = current.dilate(1)
    return None


def compact_support_check(
    c: Connection, mask: SupportMask, p: int, samples: int = 5, threshold: float = 0.0
) -> SupportReport:
    """Check that c_p and the transgression from the trivial connection stay
    inside the mask, allowing one cell of widening for the single d involved."""
    if mask.torus != c.torus:
        raise ChernWeilError("mask and connection live on different grids")
    if not mask.contains(support(c.form, threshold)):
        raise ChernWeilError("connection has nonzero coefficients outside the declared mask")
    cp = chern_form(c, p)
    tp = path_transgression(linear_path(Connection.trivial(c.torus, c.rank), c, samples), p)
    s_cp, s_tp = support(cp, threshold), support(tp, threshold)
    k_cp, k_tp = _dilation_needed(mask, s_cp), _dilation_needed(mask, s_tp)
    return SupportReport(
        p=p,
        mask_cells=mask.count,
        chern_cells=s_cp.count,
        transgression_cells=s_tp.count,
        chern_dilation=k_cp,
        transgression_dilation=k_tp,
        chern_contained=k_cp is not None and k_cp <= 1,
        transgression_contained=k_tp is not None and k_tp <= 1,
    )
