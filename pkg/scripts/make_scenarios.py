"""Write the scenario corpus under scenarios/ (or the directory given as argument)."""

import argparse
import json
import math
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parent.parent / "scenarios"


def term(entry, dx, coef, **kw):
    d = {"entry": list(entry), "dx": dx, "coef": coef if isinstance(coef, list) else [coef, 0.0]}
    d.update(kw)
    return d


def save(name, doc):
    with open(OUT / name, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def I(v):
    return [0.0, v]


def neg(x, **kw):
    return dict(x, coef=[-x["coef"][0], -x["coef"][1]], **kw)


# non-flat U(2) Fourier blocks on T^3 with anti-hermitian entries
def u2_block(scale, tpow, spow=0, shift=0):
    return [
        term([0, 0], 0, [0.0, 0.5 * scale], t=tpow, s=spow, trig="cos", k=[0, 1, 0]),
        term([1, 1], 1, [0.0, 0.3 * scale], t=tpow, s=spow, trig="sin", k=[0, 0, 1]),
        term([0, 1], 2, [0.4 * scale, 0.2 * scale], t=tpow, s=spow, trig="cos", k=[1, 0, 1 - shift]),
        term([1, 0], 2, [-0.4 * scale, 0.2 * scale], t=tpow, s=spow, trig="cos", k=[1, 0, 1 - shift]),
        term([0, 1], 0, [0.25 * scale, 0.0], t=tpow, s=spow, trig="sin", k=[0, 1, 1]),
        term([1, 0], 1, [0.0, 0.35 * scale], t=tpow, s=spow, trig="sin", k=[1, 1, 0]),
    ]


def gauge_terms(seed=5, amplitude=0.06):
    """Generic phases so that no symmetry makes the character error vanish exactly."""
    rng = np.random.default_rng(seed)
    out = []
    modes = (("cos", [1, 0, 0]), ("sin", [0, 1, 0]), ("cos", [0, 0, 1]),
             ("sin", [1, 0, 0]), ("cos", [0, 1, 0]), ("sin", [0, 0, 1]))
    for r in range(2):
        for c in range(2):
            for trig, k in modes:
                v = rng.normal(size=2) * amplitude
                out.append({"entry": [r, c], "coef": [round(v[0], 3), round(v[1], 3)], "t": 1, "trig": trig, "k": k})
    return out


def flat_family(dim, axes_e):
    a0 = [term([0, 0], 0, I(0.3)), term([1, 1], 1 % dim, I(-0.6)), term([0, 0], dim - 1, 0.15)]
    delta = [term([0, 0], 1 % dim, I(0.8), t=1), term([1, 1], 0, I(0.45), t=1),
             term([1, 1], dim - 1, 0.25, t=1)]
    bend = []
    for ax, (r, v) in axes_e:
        bend += [term([r, r], ax, I(v), t=1, s=1), term([r, r], ax, I(-v), t=2, s=1)]
    return a0 + delta + bend


def main(argv=None):
    global OUT
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out", nargs="?", type=Path, default=OUT)
    OUT = parser.parse_args(argv).out
    OUT.mkdir(parents=True, exist_ok=True)

    # non-flat U(2) path on T^3
    save("t3_u2_fourier.json", {
        "name": "t3_u2_fourier",
        "manifold": {"dim": 3, "resolution": 12},
        "rank": 2,
        "family": {"terms": u2_block(1.0, 0) + u2_block(0.8, 1, shift=1)},
        "samples": {"t": 13, "s": 13},
        "ladder": [12, 24, 48],
        "checks": [
            {"name": "exterior_floor", "tolerance": 1e-12},
            {"name": "chern_closedness", "p": 1, "order": 1.9},
            {"name": "chern_closedness", "p": 2, "order": 1.9},
            {"name": "bianchi", "order": 1.9},
            {"name": "transgression_stokes", "p": 1, "order": 1.9, "joint_t": True},
            {"name": "transgression_stokes", "p": 2, "order": 1.9, "joint_t": True},
            {"name": "fiber_consistency", "p": 1, "tolerance": 1e-10},
            {"name": "fiber_consistency", "p": 2, "tolerance": 1e-10},
        ],
    })

    # constant-coefficient rank-2 abelian flat path, reparametrised (t^2)
    abel = [
        term([0, 0], 0, I(0.3)), term([0, 0], 2, 0.2), term([1, 1], 1, I(-0.5)),
        term([0, 0], 1, 0.4, t=2), term([0, 0], 2, I(0.1), t=2), term([1, 1], 0, 0.6, t=2), term([1, 1], 2, I(-0.2), t=2),
    ]
    save("t3_abelian_flat.json", {
        "name": "t3_abelian_flat",
        "manifold": {"dim": 3, "resolution": 16},
        "rank": 2,
        "family": {"terms": abel},
        "flat": True,
        "samples": {"t": 33, "s": 33},
        "checks": [
            {"name": "flatness", "tolerance": 1e-12},
            {"name": "chern_closedness", "p": 1, "tolerance": 1e-12},
            {"name": "chern_closedness", "p": 2, "tolerance": 1e-12},
            {"name": "eta_vanishing", "p": 2, "tolerance": 1e-12},
            {"name": "fiber_consistency", "p": 2, "tolerance": 1e-10},
            {"name": "beta_residual", "p": 2, "tolerance": 1e-10},
            {"name": "rigidity", "p": 2, "tolerance": 1e-10, "samples": 5},
        ],
    })

    # pure-gauge flat path g_t = I + t G(x), A_t = -(dg_t) g_t^-1
    save("t3_pure_gauge.json", {
        "name": "t3_pure_gauge",
        "manifold": {"dim": 3, "resolution": 8},
        "rank": 2,
        "family": {"gauge": gauge_terms()},
        "samples": {"t": 17, "s": 17},
        "ladder": [16, 24, 32],
        "checks": [
            {"name": "eta_vanishing", "p": 2, "order": 1.9},
            {"name": "rigidity", "p": 2, "order": 1.9, "samples": 5},
            {"name": "flatness", "order": 1.9},
        ],
    })

    # Fourier U(2) loop at the trivial connection: gamma(t) = sin(2 pi t) B_1 + (1 - cos 2 pi t) B_2
    fb = ([dict(x, t=0, tfun="sin", w=1) for x in u2_block(1.0, 1)]
          + [dict(x, t=0) for x in u2_block(0.8, 1, shift=1)]
          + [neg(x, t=0, tfun="cos", w=1) for x in u2_block(0.8, 1, shift=1)])
    save("t3_fourier_beta.json", {
        "name": "t3_fourier_beta",
        "manifold": {"dim": 3, "resolution": 16},
        "rank": 2,
        "family": {"terms": fb},
        "samples": {"t": 9, "s": 9},
        "ladder": [16, 24, 32],
        "checks": [
            {"name": "beta_residual", "p": 2, "order": 1.9},
            {"name": "fiber_consistency", "p": 2, "tolerance": 1e-10},
        ],
    })

    TWO_PI = 2 * math.pi
    # rank-1 abelian paths for the p = 1 difference identity
    save("t1_abelian_p1.json", {
        "name": "t1_abelian_p1",
        "manifold": {"dim": 1, "resolution": 16},
        "rank": 1,
        "family": {"terms": [
            term([0, 0], 0, I(TWO_PI * 0.3)),
            term([0, 0], 0, I(TWO_PI * 0.9), t=1),
            term([0, 0], 0, I(TWO_PI * 0.25), t=2, trig="cos", k=[1]),
        ]},
        "samples": {"t": 17, "s": 17},
        "checks": [
            {"name": "character_difference", "p": 1, "tolerance": 1e-10, "samples": 5},
            {"name": "fiber_consistency", "p": 1, "tolerance": 1e-10},
        ],
    })
    save("t2_abelian_p1.json", {
        "name": "t2_abelian_p1",
        "manifold": {"dim": 2, "resolution": 16},
        "rank": 1,
        "family": {"terms": [
            term([0, 0], 0, I(TWO_PI * 0.15)),
            term([0, 0], 1, I(TWO_PI * -0.4)),
            term([0, 0], 0, I(TWO_PI * 1.35), t=1),
            term([0, 0], 1, I(TWO_PI * 0.7), t=2),
            term([0, 0], 0, I(TWO_PI * 0.2), t=1, trig="sin", k=[0, 1]),
            term([0, 0], 1, [0.3, 0.0], t=1, trig="cos", k=[1, 1]),
        ]},
        "samples": {"t": 17, "s": 17},
        "checks": [
            {"name": "character_difference", "p": 1, "tolerance": 1e-10, "samples": 5},
            {"name": "fiber_consistency", "p": 1, "tolerance": 1e-10},
            {"name": "chern_closedness", "p": 1, "tolerance": 1e-12},
        ],
    })

    # rank-2 constant-coefficient diagonal flat loop on T^3:
    # gamma(t) = A0 + (cos 2 pi t - 1) B + sin(2 pi t) C
    b, bz, c = 0.7, 0.45, 1.3
    loop = [
        term([0, 0], 0, I(0.4)), term([1, 1], 2, I(-0.3)), term([1, 1], 0, 0.2),
        term([0, 0], 0, b, tfun="cos", w=1), term([0, 0], 0, -b),
        term([0, 0], 2, bz, tfun="cos", w=1), term([0, 0], 2, -bz),
        term([1, 1], 1, c, tfun="sin", w=1),
    ]
    expected = [[-b * c / (4 * math.pi), 0.0], [0.0, 0.0], [bz * c / (4 * math.pi), 0.0]]
    save("t3_tertiary_loop.json", {
        "name": "t3_tertiary_loop",
        "manifold": {"dim": 3, "resolution": 4},
        "rank": 2,
        "family": {"terms": loop},
        "flat": True,
        "samples": {"t": 17, "s": 17},
        "ladder": [4, 6, 8],
        "checks": [
            {"name": "flatness", "tolerance": 1e-12},
            {"name": "eta_vanishing", "p": 2, "tolerance": 1e-12},
            {"name": "tertiary", "p": 2, "cycles": [[0, 1], [0, 2], [1, 2]], "expected": expected,
             "tolerance": 1e-10, "doubling": True},
        ],
    })
    save("t3_rank1_loop.json", {
        "name": "t3_rank1_loop",
        "manifold": {"dim": 3, "resolution": 4},
        "rank": 1,
        "family": {"terms": [
            term([0, 0], 0, I(0.4)), term([0, 0], 0, b, tfun="cos", w=1), term([0, 0], 0, -b),
            term([0, 0], 1, c, tfun="sin", w=1),
        ]},
        "flat": True,
        "samples": {"t": 9, "s": 9},
        "checks": [{"name": "tertiary", "p": 2, "tolerance": 1e-12, "expected": [[0.0, 0.0]] * 3}],
    })
    save("t3_constant_path.json", {
        "name": "t3_constant_path",
        "manifold": {"dim": 3, "resolution": 6},
        "rank": 2,
        "family": {"terms": [
            term([0, 1], 0, [0.3, 0.1]), term([1, 0], 0, [-0.3, 0.1]),
            term([0, 0], 2, I(0.5)), term([1, 1], 2, I(0.5)),
        ]},
        "flat": True,
        "samples": {"t": 5, "s": 5},
        "checks": [
            {"name": "tertiary", "p": 2, "tolerance": 1e-12, "expected": [[0.0, 0.0]] * 3},
            {"name": "eta_vanishing", "p": 2, "tolerance": 1e-12},
            {"name": "beta_residual", "p": 2, "tolerance": 1e-12},
        ],
    })

    # non-flat two-parameter U(2) family A = P t + Q s t^2 + R s^2 t
    save("t3_variational.json", {
        "name": "t3_variational",
        "manifold": {"dim": 3, "resolution": 8},
        "rank": 2,
        "family": {"terms": u2_block(1.0, 1) + u2_block(0.7, 2, spow=1, shift=1) + u2_block(0.5, 1, spow=2)},
        "samples": {"t": 17, "s": 9},
        "s0": 0.5,
        "checks": [
            {"name": "variational", "p": 2, "steps": [1 / 8, 1 / 16, 1 / 32], "order": 1.9},
            {"name": "dbeta_constancy", "p": 2, "require_flat": False, "slices": 3},
        ],
    })

    # flat homotopy with fixed endpoints: gamma_s(t) = A0 + t delta + s (t - t^2) E

    save("t3_flat_family.json", {
        "name": "t3_flat_family",
        "manifold": {"dim": 3, "resolution": 8},
        "rank": 2,
        "family": {"terms": flat_family(3, [(0, (0, 1.1)), (2, (1, -0.7)), (1, (0, 0.5))])},
        "flat": True,
        "endpoint_fixed": True,
        "samples": {"t": 9, "s": 9},
        "checks": [
            {"name": "variational_flat", "p": 2, "tolerance": 1e-12, "slices": 5},
            {"name": "dbeta_constancy", "p": 2, "tolerance": 1e-10, "slices": 5},
            {"name": "tertiary_constancy", "p": 2, "slices": 5},
        ],
    })

    save("t4_tertiary_constancy.json", {
        "name": "t4_tertiary_constancy",
        "manifold": {"dim": 4, "resolution": 8},
        "rank": 2,
        "family": {"terms": flat_family(4, [(0, (0, 1.1)), (2, (1, -0.7)), (3, (0, 0.5)), (1, (1, 0.3))])},
        "flat": True,
        "endpoint_fixed": True,
        "samples": {"t": 5, "s": 5},
        "checks": [
            {"name": "tertiary_constancy", "p": 3, "tolerance": 1e-10, "slices": 5},
        ],
    })

    # compactly supported connections on open boxes
    save("box2_bump.json", {
        "name": "box2_bump",
        "manifold": {"dim": 2, "resolution": 32, "periodic": False},
        "rank": 1,
        "family": {"terms": [term([0, 0], 0, I(1.2), t=1), term([0, 0], 1, I(-0.8), t=1),
                             term([0, 0], 1, I(0.5))],
                   "bump": {"center": [0.45, 0.55], "radius": [0.25, 0.2]}},
        "samples": {"t": 9, "s": 9},
        "checks": [{"name": "compact_support", "p": 1}],
    })
    save("box3_bump.json", {
        "name": "box3_bump",
        "manifold": {"dim": 3, "resolution": 24, "periodic": False},
        "rank": 2,
        "family": {"terms": [
            term([0, 0], 0, I(1.0), t=1), term([1, 1], 1, I(-0.7), t=1),
            term([0, 1], 2, [0.6, 0.2], t=1), term([1, 0], 2, [-0.6, 0.2], t=1),
            term([0, 1], 0, [0.0, 0.4]), term([1, 0], 0, [0.0, 0.4]), term([1, 1], 2, I(0.3)),
        ], "bump": {"center": [0.5, 0.45, 0.5], "radius": [0.3, 0.25, 0.28]}},
        "samples": {"t": 5, "s": 5},
        "checks": [{"name": "compact_support", "p": 2}, {"name": "compact_support", "p": 1}],
    })


if __name__ == "__main__":
    main()
