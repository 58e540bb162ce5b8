"""Connections d + A on the trivial rank-n bundle over a grid torus, their
curvature, gauge action, and one/two-parameter families of them."""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .forms import FormError, MatrixForm, exterior_derivative, norm_inf, wedge
from .torus import GridTorus, check_simpson_count


class FlatnessError(ValueError):
    """A family declared flat has a sample whose curvature exceeds the tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class GaugeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Connection:
    """d + A with A a matrix 1-form."""

    form: MatrixForm

    def __post_init__(self):
        if self.form.degree != 1:
            raise FormError(f"connection form must have degree 1, got {self.form.degree}")

    @property
    def torus(self) -> GridTorus:
        return self.form.torus

    @property
    def rank(self) -> int:
        return self.form.rank

    @classmethod
    def trivial(cls, torus: GridTorus, rank: int) -> Connection:
        return cls(MatrixForm.zero(torus, 1, rank))


def curvature(c: Connection) -> MatrixForm:
    """F = dA + A ^ A."""
    return exterior_derivative(c.form) + wedge(c.form, c.form)


def flatness_residual(c: Connection) -> float:
    return norm_inf(curvature(c))


def bianchi_residual(c: Connection) -> float:
    """sup-norm of dF - (F ^ A - A ^ F), which vanishes for smooth connections."""
    f = curvature(c)
    return norm_inf(exterior_derivative(f) - (wedge(f, c.form) - wedge(c.form, f)))


# gauge action -------------------------------------------------------------


def _as_gauge_field(g, torus: GridTorus) -> np.ndarray:
    if isinstance(g, MatrixForm):
        if g.degree != 0:
            raise GaugeError("gauge map must be a 0-form")
        return np.moveaxis(np.asarray(g.coeffs[0]), (0, 1), (-2, -1))
    arr = np.asarray(g, dtype=np.complex128)
    n = arr.shape[-1]
    return np.broadcast_to(arr, torus.shape + (n, n))


def gauge_condition(g, torus: GridTorus) -> float:
    """Worst condition number of the gauge map over the grid."""
    return float(np.linalg.cond(_as_gauge_field(g, torus)).max())


def gauge_transform(c: Connection, g, dg: MatrixForm | None = None, max_condition: float = 1e12) -> Connection:
    """A -> g A g^-1 - (dg) g^-1.

    ``g`` is a grid of invertible matrices (array or 0-form).  ``dg`` may
    supply the exact differential of g; otherwise it is the grid derivative.
    """
    torus = c.torus
    field = _as_gauge_field(g, torus)
    if field.shape[-1] != c.rank:
        raise GaugeError(f"gauge map rank {field.shape[-1]} does not match connection rank {c.rank}")
    cond = np.linalg.cond(field)
    if not np.all(np.isfinite(cond)) or cond.max() > max_condition:
        raise GaugeError(f"gauge map is singular somewhere on the grid (condition {cond.max():.3e})")
    g0 = MatrixForm.matrix_field(torus, field)
    ginv = MatrixForm.matrix_field(torus, np.linalg.inv(field))
    if dg is None:
        dg = exterior_derivative(g0)
    conj = wedge(wedge(g0, c.form), ginv)
    return Connection(conj - wedge(dg, ginv))


def pure_gauge_connection(g, torus: GridTorus | None = None, dg: MatrixForm | None = None) -> Connection:
    """-(dg) g^-1, the gauge transform of the trivial connection."""
    if isinstance(g, MatrixForm):
        torus = g.torus
        n = g.rank
    else:
        if torus is None:
            raise GaugeError("a torus is needed when g is a plain array")
        n = np.asarray(g).shape[-1]
    return gauge_transform(Connection.trivial(torus, n), g, dg=dg)


# families -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FamilySample:
    """A(s, t) with whichever parameter derivatives are known exactly."""

    form: MatrixForm
    d_t: MatrixForm | None = None
    d_s: MatrixForm | None = None
    d_st: MatrixForm | None = None


FamilyField = Callable[[float, float], FamilySample]


def _sweep_flatness(connections, tolerance: float, what: str) -> None:
    worst = 0.0
    for c in connections:
        worst = max(worst, flatness_residual(c))
    if worst > tolerance:
        raise FlatnessError(
            f"{what} declared flat but curvature reaches {worst:.3e} (tolerance {tolerance:.3e})", worst
        )


def _same_bundle(connections) -> None:
    first = connections[0]
    for c in connections[1:]:
        if c.torus != first.torus or c.rank != first.rank:
            raise FormError("all connections in a family must share torus and rank")


@dataclass(frozen=True, eq=False)
class ConnectionPath:
    """Connections at the uniform nodes t_j = j / (m - 1), m odd."""

    samples: tuple[Connection, ...]
    velocities: tuple[MatrixForm, ...] | None = None
    flat_flag: bool = False
    flat_tolerance: float = 1e-12

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        check_simpson_count(len(self.samples))
        _same_bundle(self.samples)
        if self.velocities is not None:
            object.__setattr__(self, "velocities", tuple(self.velocities))
            if len(self.velocities) != len(self.samples):
                raise FormError("one velocity per sample is required")
        if self.flat_flag:
            _sweep_flatness(self.samples, self.flat_tolerance, "path")

    @property
    def count(self) -> int:
        return len(self.samples)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.count)

    @property
    def torus(self) -> GridTorus:
        return self.samples[0].torus

    @property
    def rank(self) -> int:
        return self.samples[0].rank

    @property
    def start(self) -> Connection:
        return self.samples[0]

    @property
    def end(self) -> Connection:
        return self.samples[-1]


def _fd_along(values: Sequence[MatrixForm], j: int, step: float) -> MatrixForm:
    """Second-order finite difference of a uniformly sampled sequence at index j."""
    m = len(values)
    if 0 < j < m - 1:
        return (values[j + 1] - values[j - 1]) * (0.5 / step)
    if j == 0:
        return (values[0] * -3.0 + values[1] * 4.0 - values[2]) * (0.5 / step)
    return (values[-1] * 3.0 - values[-2] * 4.0 + values[-3]) * (0.5 / step)


def path_velocity(path: ConnectionPath, j: int) -> MatrixForm:
    """dA/dt at node j: attached exact velocity, else second-order differences."""
    if not -path.count <= j < path.count:
        raise IndexError(f"sample index {j} out of range")
    j %= path.count
    if path.velocities is not None:
        return path.velocities[j]
    forms = [c.form for c in path.samples]
    return _fd_along(forms, j, 1.0 / (path.count - 1))


def linear_path(a0: Connection, a1: Connection, samples: int = 33) -> ConnectionPath:
    """A_t = A_0 + t (A_1 - A_0) with exact velocity A_1 - A_0."""
    _same_bundle([a0, a1])
    check_simpson_count(samples)
    delta = a1.form - a0.form
    conns = []
    for j, t in enumerate(np.linspace(0.0, 1.0, samples)):
        if j == 0:
            conns.append(a0)
        elif j == samples - 1:
            conns.append(a1)
        else:
            conns.append(Connection(a0.form + delta * t))
    return ConnectionPath(tuple(conns), tuple([delta] * samples))


def sample_path(
    field: FamilyField,
    samples: int,
    s: float = 0.0,
    flat: bool = False,
    flat_tolerance: float = 1e-12,
) -> ConnectionPath:
    """Sample t -> A(s, t) at Simpson nodes; exact t-derivatives are kept when given."""
    check_simpson_count(samples)
    pts = [field(s, t) for t in np.linspace(0.0, 1.0, samples)]
    vel = None
    if all(p.d_t is not None for p in pts):
        vel = tuple(p.d_t for p in pts)
    return ConnectionPath(tuple(Connection(p.form) for p in pts), vel, flat, flat_tolerance)


Sampler = Callable[[int, int], FamilySample]
RECENT_SAMPLES = 4


class TwoParamFamily:
    """Connections A(s_i, t_j) on a rectangular (s, t) grid; t nodes uniform on [0, 1].

    Samples are produced on demand by ``sampler(i, j)`` and not stored, so
    memory stays at a few forms however fine the parameter grid is.  Missing
    parameter derivatives fall back to second-order differences.
    """

    def __init__(
        self,
        sampler: Sampler,
        s_values: Sequence[float],
        t_count: int,
        flat_flag: bool = False,
        endpoint_fixed_flag: bool = False,
        flat_tolerance: float = 1e-12,
    ):
        check_simpson_count(t_count)
        self.s_values = tuple(float(s) for s in s_values)
        if not self.s_values:
            raise FormError("at least one s value is required")
        self._sampler = sampler
        self._recent: OrderedDict[tuple[int, int], FamilySample] = OrderedDict()
        self._t_count = int(t_count)
        self.flat_flag = flat_flag
        self.endpoint_fixed_flag = endpoint_fixed_flag
        self.flat_tolerance = flat_tolerance
        first = self.sample(0, 0).form
        self._torus, self._rank = first.torus, first.rank
        if endpoint_fixed_flag:
            worst = self.endpoint_drift()
            if worst > 1e-14:
                raise FormError(f"t-endpoints vary across s by {worst:.3e}")
        if flat_flag:
            _sweep_flatness(self.connections(), flat_tolerance, "two-parameter family")

    @classmethod
    def from_field(cls, field: FamilyField, s_values: Sequence[float], t_samples: int, **flags) -> TwoParamFamily:
        s_values = tuple(float(s) for s in s_values)
        ts = np.linspace(0.0, 1.0, t_samples)
        return cls(lambda i, j: field(s_values[i], ts[j]), s_values, t_samples, **flags)

    @classmethod
    def from_grid(cls, grid, s_values, d_t=None, d_s=None, d_st=None, **flags) -> TwoParamFamily:
        """Wrap explicitly stored samples (rows indexed by s)."""
        grid = tuple(tuple(row) for row in grid)
        if len(grid) != len(s_values) or len({len(r) for r in grid}) != 1:
            raise FormError("one grid row per s value is required, all of equal length")

        def pick(table, i, j):
            return None if table is None else table[i][j]

        def sampler(i, j):
            c = grid[i][j]
            form = c.form if isinstance(c, Connection) else c
            return FamilySample(form, pick(d_t, i, j), pick(d_s, i, j), pick(d_st, i, j))

        return cls(sampler, s_values, len(grid[0]), **flags)

    def sample(self, i: int, j: int) -> FamilySample:
        # a handful of recent samples covers repeated access at one node
        key = (i, j)
        hit = self._recent.get(key)
        if hit is None:
            hit = self._sampler(i, j)
            self._recent[key] = hit
            if len(self._recent) > RECENT_SAMPLES:
                self._recent.popitem(last=False)
        return hit

    def connection(self, i: int, j: int) -> Connection:
        return Connection(self.sample(i, j).form)

    def connections(self):
        for i in range(self.s_count):
            for j in range(self.t_count):
                yield self.connection(i, j)

    @property
    def s_count(self) -> int:
        return len(self.s_values)

    @property
    def t_count(self) -> int:
        return self._t_count

    @property
    def t_values(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.t_count)

    @property
    def torus(self) -> GridTorus:
        return self._torus

    @property
    def rank(self) -> int:
        return self._rank

    def endpoint_drift(self) -> float:
        start, end = self.sample(0, 0).form, self.sample(0, self.t_count - 1).form
        worst = 0.0
        for i in range(1, self.s_count):
            worst = max(worst, norm_inf(self.sample(i, 0).form - start))
            worst = max(worst, norm_inf(self.sample(i, self.t_count - 1).form - end))
        return worst

    def velocity_t(self, i: int, j: int) -> MatrixForm:
        d = self.sample(i, j).d_t
        if d is not None:
            return d
        return self._fd_t(lambda k: self.sample(i, k).form, j)

    def velocity_s(self, i: int, j: int) -> MatrixForm:
        d = self.sample(i, j).d_s
        if d is not None:
            return d
        return self._fd_s(lambda k: self.sample(k, j).form, i)

    def velocity_st(self, i: int, j: int) -> MatrixForm:
        d = self.sample(i, j).d_st
        if d is not None:
            return d
        return self._fd_s(lambda k: self.velocity_t(k, j), i)

    def _fd_t(self, get, j: int) -> MatrixForm:
        return _fd_local(get, j, self.t_count, 1.0 / (self.t_count - 1))

    def _fd_s(self, get, i: int) -> MatrixForm:
        return _fd_local(get, i, self.s_count, self._s_step())

    def _s_step(self) -> float:
        if self.s_count < 3:
            raise FormError("finite differences in s need at least three s samples")
        steps = np.diff(self.s_values)
        if not np.allclose(steps, steps[0], rtol=1e-12, atol=0.0):
            raise FormError("finite differences in s need uniformly spaced s values")
        return float(steps[0])


def _fd_local(get, j: int, m: int, step: float) -> MatrixForm:
    """_fd_along evaluated from only the three samples it needs."""
    if 0 < j < m - 1:
        idx = (j - 1, j, j + 1)
    elif j == 0:
        idx = (0, 1, 2)
    else:
        idx = (m - 3, m - 2, m - 1)
    vals = [get(k) for k in idx]
    local = {0: 0, m - 1: 2}.get(j, 1)
    return _fd_along(vals, local, step)


def family_slice(f: TwoParamFamily, i: int) -> ConnectionPath:
    """The path t -> A(s_i, t), materialised."""
    pts = [f.sample(i, j) for j in range(f.t_count)]
    vel = tuple(p.d_t for p in pts) if all(p.d_t is not None for p in pts) else None
    return ConnectionPath(tuple(Connection(p.form) for p in pts), vel, flat_tolerance=f.flat_tolerance)


def sample_family(
    field: FamilyField,
    s_values: Sequence[float],
    t_samples: int,
    flat: bool = False,
    endpoint_fixed: bool = False,
    flat_tolerance: float = 1e-12,
) -> TwoParamFamily:
    return TwoParamFamily.from_field(
        field, s_values, t_samples,
        flat_flag=flat, endpoint_fixed_flag=endpoint_fixed, flat_tolerance=flat_tolerance,
    )


def two_param_connection(
    a0: Connection,
    a1: Connection,
    s_samples: int = 33,
    t_samples: int = 33,
    base: str = "trivial",
) -> TwoParamFamily:
    """A(s, t) = s [(1 - t) A_0 + t A_1] + (1 - s) B.

    ``base="trivial"`` takes B = 0 (the trivial connection d), so the s = 0
    row is the zero connection.  ``base="start"`` takes B = A_0, making the
    s = 0 row the constant path at A_0.
    """
    _same_bundle([a0, a1])
    if base not in ("trivial", "start"):
        raise ValueError(f"unknown base {base!r}")
    check_simpson_count(s_samples)
    check_simpson_count(t_samples)
    A0, A1 = a0.form, a1.form
    zero = MatrixForm.zero(a0.torus, 1, a0.rank)
    B = A0 if base == "start" else zero
    delta = A1 - A0

    def field(s, t):
        # same arithmetic as linear_path so the s = 1 row matches it bitwise
        lin = A0 if t == 0.0 else A1 if t == 1.0 else A0 + delta * t
        form = lin if s == 1.0 else lin * s + B * (1.0 - s)
        return FamilySample(form, d_t=delta * s, d_s=lin - B, d_st=delta)

    s_values = np.linspace(0.0, 1.0, s_samples)
    return sample_family(field, s_values, t_samples)


def straight_homotopy(path: ConnectionPath, s_samples: int = 33) -> TwoParamFamily:
    """H(s, t) = (1 - s) A_path(t) + s [A_0 + t (A_1 - A_0)], from the path (s = 0)
    to the convex path between its endpoints (s = 1).  Endpoints stay fixed."""
    check_simpson_count(s_samples)
    A0, A1 = path.start.form, path.end.form
    delta = A1 - A0
    ts = path.times
    s_values = np.linspace(0.0, 1.0, s_samples)
    last = path.count - 1

    def sampler(i, j):
        s, gamma = s_values[i], path.samples[j].form
        vel = path_velocity(path, j)
        lin = A0 if j == 0 else A1 if j == last else A0 + delta * ts[j]
        diff = lin - gamma
        if j == 0 or j == last:
            # keep endpoint columns bitwise identical across s
            form = gamma
        elif s == 0.0:
            form = gamma
        elif s == 1.0:
            form = lin
        else:
            form = gamma + diff * s
        return FamilySample(form, vel * (1.0 - s) + delta * s, diff, delta - vel)

    return TwoParamFamily(sampler, s_values, path.count, endpoint_fixed_flag=True)
