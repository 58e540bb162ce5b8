"""Matrix-valued differential forms sampled on a GridTorus.

A degree-k form of rank n stores one n x n complex matrix per grid point
and per strictly increasing k-tuple of axes.  Coefficients live in a single
array of shape ``(C(d, k), n, n, *grid_shape)``; degree k > d gives an empty
leading axis, which is the canonical zero form.  Matrix axes come before the
grid so that small matrix products vectorise over contiguous grid slabs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .torus import GridTorus


class FormError(ValueError):
    pass


@lru_cache(maxsize=None)
def axis_tuples(dim: int, degree: int) -> tuple[tuple[int, ...], ...]:
    if degree < 0:
        return ()
    return tuple(itertools.combinations(range(dim), degree))


@lru_cache(maxsize=None)
def _axis_lookup(dim: int, degree: int) -> dict[tuple[int, ...], int]:
    return {axes: i for i, axes in enumerate(axis_tuples(dim, degree))}


def axis_index(dim: int, axes: Sequence[int]) -> int:
    return _axis_lookup(dim, len(axes))[tuple(axes)]


@lru_cache(maxsize=None)
def _wedge_table(dim: int, j: int, k: int) -> tuple[tuple[int, int, int, int], ...]:
    """(index of I, index of J, index of I u J, sign) for disjoint I, J."""
    table = []
    lookup = _axis_lookup(dim, j + k)
    for a, left in enumerate(axis_tuples(dim, j)):
        for b, right in enumerate(axis_tuples(dim, k)):
            if set(left) & set(right):
                continue
            merged = left + right
            inversions = sum(1 for x in left for y in right if x > y)
            table.append((a, b, lookup[tuple(sorted(merged))], -1 if inversions % 2 else 1))
    return tuple(table)


@lru_cache(maxsize=None)
def _derivative_table(dim: int, k: int) -> tuple[tuple[int, int, int, int], ...]:
    """(source index, axis, target index, sign) for d(f dx_I) = sum df/dx_i dx_i ^ dx_I."""
    table = []
    lookup = _axis_lookup(dim, k + 1)
    for a, axes in enumerate(axis_tuples(dim, k)):
        for i in range(dim):
            if i in axes:
                continue
            before = sum(1 for x in axes if x < i)
            table.append((a, i, lookup[tuple(sorted(axes + (i,)))], -1 if before % 2 else 1))
    return tuple(table)


def partial_derivative(values: np.ndarray, torus: GridTorus, axis: int) -> np.ndarray:
    """Second-order central difference along a grid axis of ``values``.

    The grid axes are the trailing ``torus.dim`` axes of ``values``.  Periodic
    axes wrap; open axes use one-sided second-order stencils at the ends.
    """
    h = torus.spacing[axis]
    where = axis - torus.dim
    if torus.periodic[axis]:
        return (np.roll(values, -1, axis=where) - np.roll(values, 1, axis=where)) / (2.0 * h)
    v = np.moveaxis(values, where, 0)
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
    out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
    out[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h)
    return np.moveaxis(out, 0, where)


def _matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Product of (n, m, *grid) and (m, k, *grid) matrix fields."""
    if a.shape[0] == 1 and a.shape[1] == 1 and b.shape[0] != 1:
        return a[0, 0] * b
    if b.shape[0] == 1 and b.shape[1] == 1 and a.shape[1] != 1:
        return a * b[0, 0]
    n, m = a.shape[:2]
    k = b.shape[1]
    out = np.empty((n, k) + np.broadcast_shapes(a.shape[2:], b.shape[2:]), dtype=np.complex128)
    for i in range(n):
        for c in range(k):
            acc = a[i, 0] * b[0, c]
            for j in range(1, m):
                acc += a[i, j] * b[j, c]
            out[i, c] = acc
    return out


class MatrixForm:
    """Immutable matrix-valued k-form on a grid torus."""

    __slots__ = ("torus", "degree", "rank", "coeffs")

    def __init__(self, torus: GridTorus, degree: int, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        expected = len(axis_tuples(torus.dim, degree))
        if coeffs.ndim != torus.dim + 3 or coeffs.shape[0] != expected:
            raise FormError(
                f"coefficient array of shape {coeffs.shape} does not fit a degree-{degree} "
                f"form on a {torus.dim}-torus"
            )
        if coeffs.shape[3:] != torus.shape or coeffs.shape[1] != coeffs.shape[2]:
            raise FormError(f"coefficient shape {coeffs.shape[1:]} does not fit {torus.shape}")
        if coeffs.flags.writeable:
            coeffs = coeffs.copy() if not coeffs.flags.owndata else coeffs
            coeffs.flags.writeable = False
        object.__setattr__(self, "torus", torus)
        object.__setattr__(self, "degree", int(degree))
        object.__setattr__(self, "rank", int(coeffs.shape[1]))
        object.__setattr__(self, "coeffs", coeffs)

    def __setattr__(self, name, value):
        raise AttributeError("MatrixForm is immutable")

    # construction -------------------------------------------------------

    @classmethod
    def zero(cls, torus: GridTorus, degree: int, rank: int = 1) -> MatrixForm:
        n = len(axis_tuples(torus.dim, degree))
        return cls(torus, degree, np.zeros((n, rank, rank, *torus.shape), dtype=np.complex128))

    @classmethod
    def from_components(
        cls,
        torus: GridTorus,
        degree: int,
        components: Mapping[Sequence[int], object],
        rank: int | None = None,
    ) -> MatrixForm:
        """Build from ``{axes: coefficient}``.

        A coefficient may be a scalar, a grid array, an (n, n) matrix or a
        grid of matrices.  Axis tuples may be unsorted; the permutation sign
        is applied.  Matrix-valued coefficients need an explicit ``rank``.
        """
        if rank is None:
            rank = 1
        out = np.zeros((len(axis_tuples(torus.dim, degree)), rank, rank, *torus.shape), dtype=np.complex128)
        for axes, value in components.items():
            axes = tuple(axes)
            if len(axes) != degree:
                raise FormError(f"component {axes} does not have degree {degree}")
            if len(set(axes)) != len(axes):
                continue
            sign = _sort_sign(axes)
            out[axis_index(torus.dim, tuple(sorted(axes)))] += sign * _as_matrix_grid(value, torus, rank)
        return cls(torus, degree, out)

    @classmethod
    def scalar_field(cls, torus: GridTorus, values) -> MatrixForm:
        """A rank-1 0-form from grid values (or a constant)."""
        return cls.from_components(torus, 0, {(): values}, rank=1)

    @classmethod
    def matrix_field(cls, torus: GridTorus, values: np.ndarray) -> MatrixForm:
        """A 0-form from an array of shape (*grid, n, n) or (n, n)."""
        values = np.asarray(values, dtype=np.complex128)
        n = values.shape[-1]
        return cls.from_components(torus, 0, {(): values}, rank=n)

    # algebra ------------------------------------------------------------

    def _check_compatible(self, other: MatrixForm) -> None:
        if not isinstance(other, MatrixForm):
            raise TypeError(f"expected MatrixForm, got {type(other).__name__}")
        if other.torus != self.torus:
            raise FormError("forms live on different tori")

    def __add__(self, other: MatrixForm) -> MatrixForm:
        self._check_compatible(other)
        if other.degree != self.degree or other.rank != self.rank:
            raise FormError(
                f"cannot add degree {self.degree}/rank {self.rank} to degree {other.degree}/rank {other.rank}"
            )
        return MatrixForm(self.torus, self.degree, self.coeffs + other.coeffs)

    def __sub__(self, other: MatrixForm) -> MatrixForm:
        return self + (-other)

    def __neg__(self) -> MatrixForm:
        return MatrixForm(self.torus, self.degree, -self.coeffs)

    def __mul__(self, factor) -> MatrixForm:
        if isinstance(factor, MatrixForm):
            return NotImplemented
        return MatrixForm(self.torus, self.degree, self.coeffs * complex(factor))

    __rmul__ = __mul__

    def __truediv__(self, factor) -> MatrixForm:
        return self * (1.0 / complex(factor))

    def wedge(self, other: MatrixForm) -> MatrixForm:
        return wedge(self, other)

    def trace(self) -> MatrixForm:
        return trace(self)

    @property
    def total_degree(self) -> int:
        return self.degree

    @property
    def is_scalar(self) -> bool:
        return self.rank == 1

    def component(self, axes: Sequence[int]) -> np.ndarray:
        """Coefficients for a strictly increasing axis tuple, shape (*grid, n, n)."""
        return np.moveaxis(self.coeffs[axis_index(self.torus.dim, tuple(axes))], (0, 1), (-2, -1))

    def scalar_component(self, axes: Sequence[int]) -> np.ndarray:
        if self.rank != 1:
            raise FormError("scalar_component needs a rank-1 form")
        return self.coeffs[axis_index(self.torus.dim, tuple(axes)), 0, 0]

    def __repr__(self) -> str:
        return (
            f"MatrixForm(degree={self.degree}, rank={self.rank}, "
            f"grid={self.torus.shape}, norm={norm_inf(self):.3e})"
        )


def _sort_sign(axes: Sequence[int]) -> int:
    sign = 1
    axes = list(axes)
    for i in range(len(axes)):
        for j in range(i + 1, len(axes)):
            if axes[i] > axes[j]:
                sign = -sign
    return sign


def _as_matrix_grid(value, torus: GridTorus, rank: int) -> np.ndarray:
    """Coefficient in (n, n, *grid) layout from user-facing (*grid, n, n) data."""
    arr = np.asarray(value, dtype=np.complex128)
    expand = (slice(None), slice(None)) + (None,) * torus.dim
    if arr.shape == torus.shape + (rank, rank):
        return np.moveaxis(arr, (-2, -1), (0, 1))
    if arr.shape == (rank, rank):
        return np.broadcast_to(arr[expand], (rank, rank) + torus.shape)
    # scalar or grid of scalars, times the identity
    grid = np.broadcast_to(arr, torus.shape)
    return np.eye(rank)[expand] * grid


def exterior_derivative(a: MatrixForm) -> MatrixForm:
    torus = a.torus
    out = np.zeros(
        (len(axis_tuples(torus.dim, a.degree + 1)), a.rank, a.rank, *torus.shape), dtype=np.complex128
    )
    for src, axis, dst, sign in _derivative_table(torus.dim, a.degree):
        deriv = partial_derivative(a.coeffs[src], torus, axis)
        if sign > 0:
            out[dst] += deriv
        else:
            out[dst] -= deriv
    return MatrixForm(torus, a.degree + 1, out)


def wedge(a: MatrixForm, b: MatrixForm) -> MatrixForm:
    """Pointwise antisymmetrised product; matrix coefficients multiply in order."""
    a._check_compatible(b)
    torus = a.torus
    if a.rank != b.rank and a.rank != 1 and b.rank != 1:
        raise FormError(f"rank mismatch in wedge: {a.rank} vs {b.rank}")
    rank = max(a.rank, b.rank)
    degree = a.degree + b.degree
    out = np.zeros((len(axis_tuples(torus.dim, degree)), rank, rank, *torus.shape), dtype=np.complex128)
    for i, j, k, sign in _wedge_table(torus.dim, a.degree, b.degree):
        prod = _matmul(a.coeffs[i], b.coeffs[j])
        if sign > 0:
            out[k] += prod
        else:
            out[k] -= prod
    return MatrixForm(torus, degree, out)


def trace(a: MatrixForm) -> MatrixForm:
    tr = np.trace(a.coeffs, axis1=1, axis2=2)
    return MatrixForm(a.torus, a.degree, tr[:, None, None])


def norm_inf(a) -> float:
    """Largest entry modulus over grid points, axis tuples and matrix entries."""
    if isinstance(a, FiberedForm):
        return max((norm_inf(c) for c in a.components.values()), default=0.0)
    if a.coeffs.size == 0:
        return 0.0
    return float(np.abs(a.coeffs).max())


# support bookkeeping ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class SupportMask:
    torus: GridTorus
    mask: np.ndarray

    def __post_init__(self):
        if self.mask.shape != self.torus.shape or self.mask.dtype != bool:
            raise FormError("support mask must be a boolean array on the grid")

    @property
    def count(self) -> int:
        return int(self.mask.sum())

    @property
    def empty(self) -> bool:
        return not self.mask.any()

    def dilate(self, cells: int = 1) -> SupportMask:
        """Widen by ``cells`` grid steps along each axis (the stencil reach of d)."""
        m = self.mask
        for _ in range(cells):
            grown = m.copy()
            for axis in range(self.torus.dim):
                for shift in (1, -1):
                    if self.torus.periodic[axis]:
                        grown |= np.roll(m, shift, axis=axis)
                    else:
                        grown |= _shift_open(m, shift, axis)
            m = grown
        return SupportMask(self.torus, m)

    def contains(self, other: SupportMask) -> bool:
        return bool(np.all(~other.mask | self.mask))

    def __or__(self, other: SupportMask) -> SupportMask:
        return SupportMask(self.torus, self.mask | other.mask)

    def __and__(self, other: SupportMask) -> SupportMask:
        return SupportMask(self.torus, self.mask & other.mask)


def _shift_open(m: np.ndarray, shift: int, axis: int) -> np.ndarray:
    out = np.zeros_like(m)
    src = [slice(None)] * m.ndim
    dst = [slice(None)] * m.ndim
    if shift > 0:
        src[axis], dst[axis] = slice(None, -shift), slice(shift, None)
    else:
        src[axis], dst[axis] = slice(-shift, None), slice(None, shift)
    out[tuple(dst)] = m[tuple(src)]
    return out


def support(a: MatrixForm, threshold: float = 0.0) -> SupportMask:
    if a.coeffs.size == 0:
        return SupportMask(a.torus, np.zeros(a.torus.shape, dtype=bool))
    mags = np.abs(a.coeffs).max(axis=(0, 1, 2))
    return SupportMask(a.torus, mags > threshold)


# forms on parameter cubes ------------------------------------------------

PARAM_ORDER = ("s", "t")


def _label(params) -> tuple[str, ...]:
    params = tuple(params)
    for p in params:
        if p not in PARAM_ORDER:
            raise FormError(f"unknown parameter {p!r}")
    if len(set(params)) != len(params):
        raise FormError(f"repeated parameter in {params}")
    return tuple(sorted(params, key=PARAM_ORDER.index))


class FiberedForm:
    """A form on P x X, P a cube of parameters (s, t), written as
    sum over parameter monomials of dP ^ omega_P with omega_P a MatrixForm on X.

    Parameter differentials are kept to the left in canonical (s, t) order.
    All components must share one total degree |P| + deg(omega_P).
    """

    __slots__ = ("components", "total_degree")

    def __init__(self, components: Mapping[Sequence[str], MatrixForm]):
        comps: dict[tuple[str, ...], MatrixForm] = {}
        degree = None
        for label, form in components.items():
            key = _label(label)
            if key in comps:
                raise FormError(f"duplicate parameter monomial {key}")
            tot = len(key) + form.degree
            if degree is not None and tot != degree:
                raise FormError("fibered form components must share one total degree")
            degree = tot
            comps[key] = form
        if not comps:
            raise FormError("fibered form needs at least one component")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "total_degree", degree)

    def __setattr__(self, name, value):
        raise AttributeError("FiberedForm is immutable")

    @property
    def _any(self) -> MatrixForm:
        return next(iter(self.components.values()))

    @property
    def rank(self) -> int:
        return self._any.rank

    @property
    def torus(self) -> GridTorus:
        return self._any.torus

    def component(self, *params: str) -> MatrixForm:
        """Coefficient of dP (P in canonical order); zero form when absent."""
        key = _label(params)
        if key in self.components:
            return self.components[key]
        return MatrixForm.zero(self.torus, self.total_degree - len(key), self.rank)

    def __add__(self, other: FiberedForm) -> FiberedForm:
        if other.total_degree != self.total_degree:
            raise FormError("cannot add fibered forms of different total degree")
        comps = dict(self.components)
        for key, form in other.components.items():
            comps[key] = comps[key] + form if key in comps else form
        return FiberedForm(comps)

    def __neg__(self) -> FiberedForm:
        return FiberedForm({k: -v for k, v in self.components.items()})

    def __sub__(self, other: FiberedForm) -> FiberedForm:
        return self + (-other)

    def __mul__(self, factor) -> FiberedForm:
        if isinstance(factor, (MatrixForm, FiberedForm)):
            return NotImplemented
        return FiberedForm({k: v * factor for k, v in self.components.items()})

    __rmul__ = __mul__

    def wedge(self, other: FiberedForm, only: Sequence[str] | None = None) -> FiberedForm:
        """Wedge product; ``only`` restricts the result to one parameter monomial."""
        # (dP ^ a) ^ (dQ ^ b) = (-1)^{deg a * |Q|} dP ^ dQ ^ a ^ b
        target = None if only is None else _label(only)
        acc: dict[tuple[str, ...], MatrixForm] = {}
        for p_key, a in self.components.items():
            for q_key, b in other.components.items():
                if set(p_key) & set(q_key):
                    continue
                merged = p_key + q_key
                key = _label(merged)
                if target is not None and key != target:
                    continue
                sign = _sort_sign([PARAM_ORDER.index(x) for x in merged])
                if (a.degree * len(q_key)) % 2:
                    sign = -sign
                term = wedge(a, b)
                if sign < 0:
                    term = -term
                acc[key] = acc[key] + term if key in acc else term
        if not acc:
            key = target or ()
            degree = self.total_degree + other.total_degree - len(key)
            return FiberedForm({key: MatrixForm.zero(self.torus, degree, max(self.rank, other.rank))})
        return FiberedForm(acc)

    def trace(self) -> FiberedForm:
        return FiberedForm({k: trace(v) for k, v in self.components.items()})

    @classmethod
    def lift(cls, form: MatrixForm) -> FiberedForm:
        """A form on X viewed on P x X (no parameter differentials)."""
        return cls({(): form})
