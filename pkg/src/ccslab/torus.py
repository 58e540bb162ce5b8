"""Periodic grid model of the flat unit torus T^d (and open boxes), with
coordinate cycles and integration of scalar forms over them."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

if TYPE_CHECKING:
    from .forms import MatrixForm

MIN_RESOLUTION = 4


class GridError(ValueError):
    """Invalid grid, cycle or grid-product construction."""


@dataclass(frozen=True)
class GridTorus:
    """Uniform grid on [0, 1)^d; axis i is periodic or an open interval.

    Grid point j on axis i sits at x_i = j * h_i with h_i = 1 / N_i.
    """

    dim: int
    resolution: tuple[int, ...]
    periodic: tuple[bool, ...]

    def __post_init__(self):
        if self.dim < 1:
            raise GridError(f"dimension must be >= 1, got {self.dim}")
        if len(self.resolution) != self.dim or len(self.periodic) != self.dim:
            raise GridError(
                f"resolution/periodic must have length {self.dim}, got "
                f"{len(self.resolution)} and {len(self.periodic)}"
            )
        for axis, n in enumerate(self.resolution):
            if n < MIN_RESOLUTION:
                raise GridError(
                    f"resolution {n} on axis {axis} is below the minimum {MIN_RESOLUTION}"
                )

    @property
    def shape(self) -> tuple[int, ...]:
        return self.resolution

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(1.0 / n for n in self.resolution)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def all_periodic(self) -> bool:
        return all(self.periodic)

    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Broadcastable coordinate arrays, one per axis."""
        out = []
        for axis, n in enumerate(self.resolution):
            shape = [1] * self.dim
            shape[axis] = n
            out.append((np.arange(n) / n).reshape(shape))
        return tuple(out)

    def refine(self, resolution: int | Sequence[int]) -> GridTorus:
        """Same axes and periodicity at another resolution."""
        if isinstance(resolution, (int, np.integer)):
            resolution = (int(resolution),) * self.dim
        return GridTorus(self.dim, tuple(int(n) for n in resolution), self.periodic)


def build_torus(
    dim: int,
    resolution: Sequence[int] | int,
    periodic: Sequence[bool] | bool = True,
) -> GridTorus:
    if isinstance(resolution, (int, np.integer)):
        resolution = [int(resolution)] * max(dim, 0)
    if isinstance(periodic, bool):
        periodic = [periodic] * max(dim, 0)
    return GridTorus(int(dim), tuple(int(n) for n in resolution), tuple(bool(p) for p in periodic))


@dataclass(frozen=True)
class CycleComponent:
    axes: tuple[int, ...]
    offset: tuple[int, ...]
    weight: int = 1


@dataclass(frozen=True)
class Cycle:
    """Integer combination of axis-aligned coordinate sub-tori.

    Each component spans the grid along ``axes`` (in increasing order,
    positively oriented) and sits at ``offset`` along the remaining axes.
    """

    torus: GridTorus
    dimension: int
    components: tuple[CycleComponent, ...] = field(default_factory=tuple)

    def __post_init__(self):
        for comp in self.components:
            _validate_component(self.torus, self.dimension, comp.axes, comp.offset)

    def __add__(self, other: Cycle) -> Cycle:
        if other.torus != self.torus or other.dimension != self.dimension:
            raise GridError("cannot add cycles on different tori or of different dimension")
        return Cycle(self.torus, self.dimension, self.components + other.components)

    def __rmul__(self, k: int) -> Cycle:
        return self.scaled(k)

    def scaled(self, k: int) -> Cycle:
        comps = tuple(CycleComponent(c.axes, c.offset, int(k) * c.weight) for c in self.components)
        return Cycle(self.torus, self.dimension, comps)

    @property
    def label(self) -> str:
        parts = []
        for c in self.components:
            axes = "".join(str(a) for a in c.axes) or "pt"
            parts.append(f"{c.weight}*[{axes}@{','.join(str(o) for o in c.offset)}]")
        return " + ".join(parts)


def _validate_component(torus: GridTorus, k: int, axes, offset) -> None:
    if len(axes) != k:
        raise GridError(f"cycle component spans {len(axes)} axes, expected {k}")
    if len(set(axes)) != len(axes):
        raise GridError(f"repeated axis in {tuple(axes)}")
    if list(axes) != sorted(axes):
        raise GridError(f"axes must be increasing, got {tuple(axes)}")
    for a in axes:
        if not 0 <= a < torus.dim:
            raise GridError(f"axis {a} out of range for dimension {torus.dim}")
        if not torus.periodic[a]:
            raise GridError(f"axis {a} is not periodic; coordinate cycles must be closed")
    if len(offset) != torus.dim:
        raise GridError(f"offset must have {torus.dim} entries, got {len(offset)}")
    for a, (o, n) in enumerate(zip(offset, torus.resolution)):
        if not 0 <= o < n:
            raise GridError(f"offset {o} out of range on axis {a} (resolution {n})")


def coordinate_cycle(
    torus: GridTorus, axes: Iterable[int], offset: Sequence[int] | None = None
) -> Cycle:
    """The coordinate sub-torus spanned by ``axes`` through grid point ``offset``."""
    axes = list(axes)
    if len(set(axes)) != len(axes):
        raise GridError(f"repeated axis in {tuple(axes)}")
    offset = tuple(int(o) for o in (offset if offset is not None else (0,) * torus.dim))
    # Positive orientation follows increasing axis order; a reordering
    # contributes the sign of the sorting permutation as the weight.
    sign = _permutation_sign(axes)
    comp = CycleComponent(tuple(sorted(axes)), offset, sign)
    return Cycle(torus, len(axes), (comp,))


def coordinate_cycles(torus: GridTorus, k: int) -> list[Cycle]:
    """All k-dimensional coordinate sub-tori through the origin (a generating set of H_k)."""
    axes_pool = [a for a in range(torus.dim) if torus.periodic[a]]
    return [coordinate_cycle(torus, axes) for axes in itertools.combinations(axes_pool, k)]


def _permutation_sign(seq: Sequence[int]) -> int:
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def boundary(cycle: Cycle) -> list[CycleComponent]:
    """Boundary chain of a cycle as (k-1)-dimensional faces, after cancellation.

    A face is a component together with a fixed index along one of its
    axes; periodic axes identify the index N with 0 so opposite faces cancel.
    """
    torus = cycle.torus
    faces: dict[tuple[tuple[int, ...], tuple[int, ...]], int] = {}
    for comp in cycle.components:
        for pos, axis in enumerate(comp.axes):
            rest = comp.axes[:pos] + comp.axes[pos + 1:]
            n = torus.resolution[axis]
            for index, orient in ((0, -1), (n, 1)):
                if torus.periodic[axis]:
                    index %= n
                off = list(comp.offset)
                off[axis] = index
                key = (rest, tuple(off))
                faces[key] = faces.get(key, 0) + comp.weight * orient * (-1) ** pos
    return [CycleComponent(axes, off, w) for (axes, off), w in sorted(faces.items()) if w != 0]


def integrate(form: MatrixForm, cycle: Cycle) -> complex:
    """Integral of a scalar form over an integer combination of coordinate sub-tori.

    Periodic trapezoid rule: exact for trigonometric polynomials below the
    Nyquist limit of the grid.
    """
    from .forms import axis_index

    if form.degree != cycle.dimension:
        raise GridError(f"form degree {form.degree} does not match cycle dimension {cycle.dimension}")
    if form.rank != 1:
        raise GridError(f"only scalar forms can be integrated, got rank {form.rank}")
    if form.torus != cycle.torus:
        raise GridError("form and cycle live on different tori")
    torus = cycle.torus
    total = 0j
    for comp in cycle.components:
        if form.coeffs.shape[0] == 0:
            continue
        coeff = form.coeffs[axis_index(torus.dim, comp.axes), 0, 0]
        index = tuple(
            slice(None) if a in comp.axes else comp.offset[a] for a in range(torus.dim)
        )
        measure = float(np.prod([torus.spacing[a] for a in comp.axes])) if comp.axes else 1.0
        total += comp.weight * complex(coeff[index].sum()) * measure
    return total


@dataclass(frozen=True)
class GridProduct:
    """I x X (or I x I x X) sampled at uniform Simpson nodes in each parameter."""

    base: GridTorus
    fiber_samples: int
    s_samples: int | None = None

    def __post_init__(self):
        for m in (self.fiber_samples, self.s_samples):
            if m is not None:
                check_simpson_count(m)

    @property
    def t_nodes(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.fiber_samples)

    @property
    def s_nodes(self) -> np.ndarray | None:
        return None if self.s_samples is None else np.linspace(0.0, 1.0, self.s_samples)


def check_simpson_count(m: int) -> None:
    if m < 3 or m % 2 == 0:
        raise GridError(f"Simpson quadrature needs an odd sample count >= 3, got {m}")


def simpson_weights(m: int, length: float = 1.0) -> np.ndarray:
    """Composite Simpson weights for m uniform nodes on an interval."""
    check_simpson_count(m)
    w = np.ones(m)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (length / (m - 1)) / 3.0
