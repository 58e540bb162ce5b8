"""Independent reference values used by the tests.

Nothing here goes through the package's transgression or character code:
holonomies come from matrix exponentials along grid lines, windings from
counting phase jumps, and the constant-coefficient abelian values from sympy.
"""

from __future__ import annotations

import cmath
import math

import numpy as np
import sympy as sp
from scipy.linalg import expm


def holonomy(a_line: np.ndarray, h: float) -> np.ndarray:
    """Path-ordered product of exp(-A h) for connection matrices sampled along a closed line.

    ``a_line`` has shape (m, n, n): the coefficient of dx along the line at
    each grid point.
    """
    n = a_line.shape[-1]
    hol = np.eye(n, dtype=complex)
    for a in a_line:
        hol = expm(-a * h) @ hol
    return hol


def holonomy_character(a_line: np.ndarray, h: float) -> float:
    """(1 / 2 pi i) log det of the holonomy, in [0, 1).

    For A = 2 pi i theta dx on a unit circle this gives -theta mod 1.
    """
    det = np.linalg.det(holonomy(a_line, h))
    x = cmath.phase(det) / (2 * math.pi)
    return x - math.floor(x)


def winding_number(phases: np.ndarray) -> int:
    """Degree of a closed sampled loop in U(1), from its unwrapped phase."""
    closed = np.append(phases, phases[0])
    steps = np.angle(np.exp(1j * np.diff(closed)))
    return int(round(steps.sum() / (2 * math.pi)))


# constant-coefficient abelian rank-2 values ---------------------------------

_t, _u, _sig, _s = sp.symbols("t u sigma s", real=True)


def _wedge11(a, b, i, j):
    """dx_i ^ dx_j coefficient of a ^ b for 1-forms given by coefficient lists."""
    return a[i] * b[j] - a[j] * b[i]


def _p2(x, y, i, j):
    """P_2 on diagonal rank-2 1-forms, evaluated on the (i, j) 2-plane.

    e_2 of (i / 2 pi) X for X = diag(x0, x1) is -(x0 x1) / (4 pi^2); its
    polarisation on a pair of 1-forms is the symmetrised wedge.
    """
    c = -1 / (4 * sp.pi**2)
    return c * (_wedge11(x[0], y[1], i, j) + _wedge11(x[1], y[0], i, j)) / 2


def abelian_tertiary(gamma, plane, lin=None):
    """Tertiary value on the coordinate 2-cycle ``plane`` of a flat diagonal rank-2 path.

    ``gamma`` is a pair of coefficient lists (one per diagonal entry) of
    sympy expressions in t, constant in space.  The relative term comes from
    the fibrewise Chern-Simons form of the convex connection on I x X,
    taken with dt first; beta is minus the sigma-t integral of the
    double transgression of the straight homotopy to the linear path.
    """
    i, j = plane
    g0 = [[sp.sympify(c).subs(_t, 0) for c in row] for row in gamma]
    g1 = [[sp.sympify(c).subs(_t, 1) for c in row] for row in gamma]
    delta = [[b - a for a, b in zip(r0, r1)] for r0, r1 in zip(g0, g1)]
    if lin is None:
        lin = [[a + _t * d for a, d in zip(r0, rd)] for r0, rd in zip(g0, delta)]
    # relative term: 2 int u du P(A~, dt ^ delta) = -P(A~ ^ delta) with dt moved to the front
    rel = -sp.integrate(_p2(lin, delta, i, j), (_t, 0, 1))
    # straight homotopy H = (1 - sigma) gamma + sigma lin
    h_sig = [[l - g for l, g in zip(rl, rg)] for rl, rg in zip(lin, gamma)]
    h_t = [[(1 - _sig) * sp.diff(g, _t) + _sig * sp.diff(l, _t) for l, g in zip(rl, rg)]
           for rl, rg in zip(lin, gamma)]
    # P(F^2) carries 2 P(d_sigma H, d_t H) on dsigma dt, with a sign from moving dt past a 1-form
    st = -2 * _p2(h_sig, h_t, i, j)
    beta = -sp.integrate(sp.integrate(st, (_sig, 0, 1)), (_t, 0, 1))
    return sp.simplify(rel - beta)


def trig_loop_tertiary(b: float, bz: float, c: float) -> dict[tuple[int, int], float]:
    """Values of A0 + (cos 2 pi t - 1) B + sin(2 pi t) C with B = b dx + bz dz in entry 0 and C = c dy in entry 1."""
    cos, sin = sp.cos(2 * sp.pi * _t), sp.sin(2 * sp.pi * _t)
    gamma = [[(cos - 1) * b, 0, (cos - 1) * bz], [0, sin * c, 0]]
    return {pl: float(abelian_tertiary(gamma, pl)) for pl in ((0, 1), (0, 2), (1, 2))}


def symbol(name: str):
    return {"t": _t, "s": _s}[name]
