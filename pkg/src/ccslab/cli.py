"""Command line interface: ccslab verify | compute | converge | report."""

from __future__ import annotations

import argparse
import sys

from .characters import cs_character, reduce_mod_Z, tertiary_class
from .chern_weil import beta_form, chern_form, path_transgression, transgression_convex
from .connections import FlatnessError, flatness_residual
from .forms import norm_inf
from .scenario import ScenarioError, load_scenario
from .suite import Context, convergence_study, report_csv, report_json, run_suite, to_json
from .torus import coordinate_cycle, integrate

QUANTITIES = ("flatness", "chern", "eta", "transgression", "beta", "character", "tertiary")


def _parse_axes(text: str | None):
    if text is None:
        return None
    return [int(a) for a in text.split(",") if a.strip()]


def compute_quantity(scn, name: str, p: int, axes=None, resolution=None) -> dict:
    """One scalar quantity of a scenario, integrated over a coordinate cycle when it is a form."""
    ctx = Context(scn, resolution)
    path = ctx.path()
    if name == "flatness":
        return {"quantity": name, "value": max(flatness_residual(c) for c in path.samples)}
    if name == "chern":
        form = chern_form(path.end, p)
    elif name == "eta":
        form = path_transgression(path, p)
    elif name == "transgression":
        form = transgression_convex(path.start, path.end, p, path.count)
    elif name == "beta":
        form = beta_form(path, p, scn.s_samples, flat_tolerance=scn.flat_tolerance).beta
    elif name in ("character", "tertiary"):
        degree = 2 * p - 1 if name == "character" else 2 * p - 2
        axes = axes if axes is not None else list(range(degree))
        z = coordinate_cycle(ctx.torus, axes)
        if name == "character":
            v = cs_character(path.end, p, z)
        else:
            v = tertiary_class(path, p, z, scn.s_samples).value
        return {"quantity": name, "p": p, "cycle": z.label, "raw": v.raw, "value": v.value}
    else:
        raise ValueError(f"unknown quantity {name!r}; choose from {QUANTITIES}")
    out = {"quantity": name, "p": p, "norm": norm_inf(form)}
    if axes is not None:
        z = coordinate_cycle(ctx.torus, axes)
        raw = integrate(form, z)
        out.update({"cycle": z.label, "integral": raw, "reduced": reduce_mod_Z(raw).value})
    return out


def _summary(report) -> str:
    lines = []
    for e in report.checks:
        tag = "PASS" if e["passed"] else "FAIL"
        if not e.get("asserted", True):
            tag = "INFO"
        res = e.get("residual")
        extra = f" residual={res:.3e}" if isinstance(res, float) else ""
        if e.get("status") == "error":
            extra = f" error={e['error']}"
        lines.append(f"[{tag}] {e['name']}{extra}")
    for e in report.convergence:
        tag = "PASS" if e["passed"] else "FAIL"
        if not e.get("asserted", True):
            tag = "INFO"
        order = e.get("order")
        desc = "exact" if e.get("exact") else (f"order={order:.3f}" if order is not None else "order=n/a")
        lines.append(f"[{tag}] {e['name']} ladder={e['ladder']} {desc}")
    lines.append("overall: " + ("PASS" if report.passed else "FAIL"))
    return "\n".join(lines)


def _write(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ccslab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("scenario", help="scenario JSON file")
        p.add_argument("--workers", type=int, default=None, help="concurrent checks (default: $CCSLAB_WORKERS or 1)")
        p.add_argument("--resolution", type=int, default=None, help="override the grid resolution")

    v = sub.add_parser("verify", help="run the checks listed in a scenario")
    common(v)
    v.add_argument("--json", dest="json_out", default=None, help="also write the JSON report here")
    v.add_argument("--timings", action="store_true", help="include wall-clock timings in the JSON report")

    c = sub.add_parser("compute", help="print one quantity")
    common(c)
    c.add_argument("--quantity", required=True, choices=QUANTITIES)
    c.add_argument("--p", type=int, default=1)
    c.add_argument("--cycle", default=None, help="comma-separated axes of a coordinate cycle, e.g. 0,1")

    g = sub.add_parser("converge", help="convergence study over a resolution ladder")
    common(g)
    g.add_argument("--ladder", default=None, help="comma-separated resolutions (at least three)")
    g.add_argument("--joint-t", action="store_true", help="refine t-samples together with the grid")
    g.add_argument("--json", dest="json_out", default=None)

    r = sub.add_parser("report", help="run the checks and write a JSON or CSV report")
    common(r)
    r.add_argument("--format", choices=("json", "csv"), default="json")
    r.add_argument("--out", default="-", help="output path (default: stdout)")
    r.add_argument("--timings", action="store_true")
    r.add_argument("--ladder", default=None, help="run a convergence study instead of the plain suite")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scn = load_scenario(args.scenario)
    except (ScenarioError, FlatnessError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "compute":
            result = compute_quantity(scn, args.quantity, args.p, _parse_axes(args.cycle), args.resolution)
            sys.stdout.write(to_json(result))
            return 0
        if args.command == "verify":
            report = run_suite(scn, args.workers, args.resolution)
            print(_summary(report))
            if args.json_out:
                _write(report_json(report, args.timings), args.json_out)
            return 0 if report.passed else 1
        if args.command == "converge":
            ladder = [int(x) for x in args.ladder.split(",")] if args.ladder else None
            report = convergence_study(scn, ladder, args.workers, True if args.joint_t else None)
            print(_summary(report))
            if args.json_out:
                _write(report_json(report), args.json_out)
            return 0 if report.passed else 1
        if args.command == "report":
            if args.ladder:
                report = convergence_study(scn, [int(x) for x in args.ladder.split(",")], args.workers)
            else:
                report = run_suite(scn, args.workers, args.resolution)
            text = report_json(report, args.timings) if args.format == "json" else report_csv(report)
            _write(text, args.out)
            return 0 if report.passed else 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    raise SystemExit(main())
