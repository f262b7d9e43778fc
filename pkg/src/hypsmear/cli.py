"""Command-line front end: constants, bounds, certificates, curve data,
and smearing experiments, emitted as JSON or CSV with 12 significant
digits.  Randomized commands embed their effective seed in the output, and
repeated runs with the same arguments produce byte-identical files.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from hypsmear.bounds import (
    DEFAULT_SEED,
    gap_bound,
    gluing_ratio_sequence,
    solve_k,
    tube_factor,
    vl_estimate,
)
from hypsmear.volume import QuadratureSpec, ideal_regular_volume, regular_simplex_volume

_BUNDLED = ("genus2", "holed_torus")


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _json(obj, level: int = 0) -> str:
    pad = "  " * level
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        body = ",\n".join(
            f'{pad}  "{k}": {_json(v, level + 1)}' for k, v in obj.items()
        )
        return "{\n" + body + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_json(v, level) for v in obj) + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return '"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"'
    return _fmt(obj)


def _csv(columns, rows, header_comments=()) -> str:
    lines = [f"# {c}" for c in header_comments]
    lines.append(",".join(columns))
    for r in rows:
        lines.append(",".join(_fmt(v) for v in r))
    return "\n".join(lines) + "\n"


def _tabular(columns, rows, fmt: str, seed=None) -> str:
    if fmt == "csv":
        comments = [f"seed={seed}"] if seed is not None else []
        return _csv(columns, rows, comments)
    doc = {"columns": list(columns), "rows": [list(r) for r in rows]}
    if seed is not None:
        doc = {"seed": seed, **doc}
    return _json(doc) + "\n"


def _emit(text: str, out):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _parse_grid(spec: str):
    parts = spec.split(":")
    if len(parts) != 3:
        raise _Usage(f"bad grid '{spec}', expected A:B:STEP")
    try:
        a, b, step = (float(p) for p in parts)
    except ValueError:
        raise _Usage(f"bad grid '{spec}', expected numeric A:B:STEP")
    if step <= 0:
        raise _Usage("grid step must be positive")
    out = []
    v = a
    while v <= b + 1e-12:
        out.append(round(v, 12))
        v += step
    if not out:
        raise _Usage("empty grid")
    return out


class _Usage(Exception):
    pass


def _load_model(path: str):
    from hypsmear.smear.surface import bundled_model_path, load_model

    if path in _BUNDLED:
        return load_model(bundled_model_path(path))
    if not os.path.exists(path):
        raise ValueError(f"model file not found: {path}")
    return load_model(path)


# --- sub-commands -----------------------------------------------------------


def _cmd_vn(args) -> str:
    vc = ideal_regular_volume(args.dim)
    return _json({"n": vc.n, "v_n": vc.v_n, "method": vc.method}) + "\n"


def _cmd_regvol(args) -> str:
    quad = QuadratureSpec(abs_tol=args.tol) if args.tol else None
    res = regular_simplex_volume(args.dim, args.edge, quad)
    return (
        _json(
            {
                "n": args.dim,
                "edge": args.edge,
                "volume": res.value,
                "err_estimate": res.err_estimate,
                "converged": res.converged,
            }
        )
        + "\n"
    )


def _cmd_tube(args) -> str:
    return _json({"n": args.dim, "t": args.t, "tube_factor": tube_factor(args.dim, args.t)}) + "\n"


def _vl_doc(est) -> dict:
    return {
        "n": est.n,
        "L": est.L,
        "value": est.value,
        "restarts": est.restarts,
        "optimizer_tol": est.optimizer_tol,
        "best_perturbation": [[float(v) for v in row] for row in est.best_perturbation],
    }


def _cmd_vl(args) -> str:
    est = vl_estimate(args.dim, args.edge, args.restarts, args.seed)
    return _json({"seed": args.seed, **_vl_doc(est)}) + "\n"


def _cmd_bound(args) -> str:
    est = vl_estimate(args.dim, args.edge, args.restarts, args.seed)
    val = gap_bound(args.dim, args.edge, args.r, est)
    return (
        _json(
            {
                "seed": args.seed,
                "n": args.dim,
                "L": args.edge,
                "r": args.r,
                "vl": est.value,
                "bound": val,
            }
        )
        + "\n"
    )


def _cmd_solvek(args) -> str:
    cert = solve_k(args.dim, args.eta, seed=args.seed)
    return (
        _json(
            {
                "seed": args.seed,
                "n": cert.n,
                "eta": cert.eta,
                "L1": cert.L1,
                "k": cert.k,
                "bound_value": cert.bound_value,
                "vL1": _vl_doc(cert.vL1),
            }
        )
        + "\n"
    )


def _curve_edges(args):
    if args.edge_grid:
        return _parse_grid(args.edge_grid)
    return [4.0 + j for j in range(13)]


def _cmd_curve(args) -> str:
    grid = _parse_grid(args.grid)
    if args.kind == "vl_vs_L":
        rows = [
            (L, vl_estimate(args.dim, L, args.restarts, args.seed).value) for L in grid
        ]
        return _tabular(("L", "vl"), rows, args.format, args.seed)
    if args.kind == "bound_vs_L":
        rows = []
        for L in grid:
            est = vl_estimate(args.dim, L, args.restarts, args.seed)
            rows.append((L, gap_bound(args.dim, L, args.r, est)))
        return _tabular(("L", "bound"), rows, args.format, args.seed)
    if args.kind == "bound_vs_r":
        edges = _curve_edges(args)
        ests = [(L, vl_estimate(args.dim, L, args.restarts, args.seed)) for L in edges]
        rows = []
        for r in grid:
            best = max(ests, key=lambda le: gap_bound(args.dim, le[0], r, le[1]))
            rows.append((r, best[0], gap_bound(args.dim, best[0], r, best[1])))
        return _tabular(("r", "L_best", "bound"), rows, args.format, args.seed)
    if args.kind == "glue_sequence":
        if args.volm is None or args.volb is None:
            raise _Usage("glue_sequence needs --volm and --volb")
        imax = int(max(grid))
        wanted = {int(i) for i in grid}
        seq = gluing_ratio_sequence(args.volm, args.volb, imax, args.dim, seed=args.seed)
        rows = [row for row in seq if row[0] in wanted]
        return _tabular(("i", "r", "bound"), rows, args.format, args.seed)
    raise _Usage(f"unknown curve kind '{args.kind}'")


def _cmd_glue(args) -> str:
    rows = gluing_ratio_sequence(args.volm, args.volb, args.imax, args.dim, seed=args.seed)
    return _tabular(("i", "r", "bound"), rows, args.format, args.seed)


def _residual_summary(residuals) -> dict:
    zs = np.array([r.z_score for r in residuals])
    tot = np.array([r.total for r in residuals])
    edges = list(range(-6, 7))
    hist = np.histogram(zs, bins=edges)[0] if len(zs) else np.zeros(12, dtype=int)
    qualifying = tot >= 30
    max_q = float(np.abs(zs[qualifying]).max()) if qualifying.any() else 0.0
    return {
        "faces": int(len(zs)),
        "max_abs_z": float(np.abs(zs).max()) if len(zs) else 0.0,
        "qualifying_faces": int(qualifying.sum()),
        "max_abs_z_qualifying": max_q,
        "z_histogram_edges": edges,
        "z_histogram_counts": [int(c) for c in hist],
    }


def _cmd_smear_run(args) -> str:
    from hypsmear.smear import (
        accumulate_chain,
        boundary_residuals,
        build_net,
        measure_sandwich,
        ratio_report,
    )
    from hypsmear.smear.chain import CLASS_EXT

    model = _load_model(args.model)
    net = build_net(model, args.net_radius)
    chain = accumulate_chain(model, net, args.edge, args.samples, args.seed)
    bp, bm, cls, _ = chain.counts()
    ext = cls == CLASS_EXT
    ext_mass = chain.scale * float(bp[ext].sum() + bm[ext].sum()) / 2.0
    sw = measure_sandwich(chain)
    lo, hi = sw["bracket"]
    sandwich_ok = all(
        lo - 3.0 * sig <= mass <= hi + 3.0 * sig
        for mass, sig in (sw["plus"], sw["minus"])
    )
    residuals = boundary_residuals(chain)
    rsum = _residual_summary(residuals)
    rep = ratio_report(chain)
    vn = ideal_regular_volume(2).v_n
    doc = {
        "model": args.model,
        "L": args.edge,
        "samples": args.samples,
        "seed": args.seed,
        "net_radius": args.net_radius,
        "entry_count": len(chain),
        "ext_mass": ext_mass,
        "discarded_plus": chain.discarded[1],
        "discarded_minus": chain.discarded[-1],
        "sandwich": {
            "plus_mass": sw["plus"][0],
            "plus_sigma": sw["plus"][1],
            "minus_mass": sw["minus"][0],
            "minus_sigma": sw["minus"][1],
            "bracket_low": lo,
            "bracket_high": hi,
        },
        "residuals": rsum,
        "ratio": {
            "omega": rep.omega,
            "l1_norm": rep.l1_norm,
            "ratio": rep.ratio,
            "implied_norm_upper": rep.implied_norm_upper,
            "mc_sigma": rep.mc_sigma,
        },
        "checks": {
            "sandwich": sandwich_ok,
            "residuals": rsum["max_abs_z_qualifying"] <= 4.0,
            "ratio": rep.ratio <= vn + 3.0 * rep.mc_sigma,
        },
    }
    if args.csv:
        keys = chain.key_array()
        _, _, _, areas = chain.counts()
        names = {1: "int", 2: "ext"}
        rows = [
            list(keys[i])
            + [int(bp[i]), int(bm[i]), names[int(cls[i])], float(areas[i])]
            for i in range(len(chain))
        ]
        cols = [f"k{j}" for j in range(15)] + ["b_plus", "b_minus", "class", "area"]
        with open(args.csv, "w", newline="") as fh:
            fh.write(_csv(cols, rows, [f"seed={args.seed}"]))
    return _json(doc) + "\n"


def _cmd_smear_check(args) -> str:
    from hypsmear.smear import build_net, inclusion_check

    model = _load_model(args.model)
    net = build_net(model, args.net_radius)
    violations = inclusion_check(model, net, args.edge, args.samples, args.seed)
    return (
        _json(
            {
                "model": args.model,
                "L": args.edge,
                "samples": args.samples,
                "seed": args.seed,
                "violations": violations,
            }
        )
        + "\n"
    )


# --- parser -----------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hypsmear",
        description="hyperbolic volume bounds and smearing experiments",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=False):
        sp.add_argument("--out", default=None, help="output path (default stdout)")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--tol", type=float, default=None)
        if seed:
            sp.add_argument("--seed", type=int, default=DEFAULT_SEED)

    sp = sub.add_parser("vn", help="ideal regular simplex volume")
    sp.add_argument("--dim", type=int, required=True)
    common(sp)
    sp.set_defaults(fn=_cmd_vn)

    sp = sub.add_parser("regvol", help="regular simplex volume by quadrature")
    sp.add_argument("--dim", type=int, required=True)
    sp.add_argument("--edge", type=float, required=True)
    common(sp)
    sp.set_defaults(fn=_cmd_regvol)

    sp = sub.add_parser("tube", help="hypersurface tube volume factor")
    sp.add_argument("--dim", type=int, required=True)
    sp.add_argument("--t", type=float, required=True)
    common(sp)
    sp.set_defaults(fn=_cmd_tube)

    sp = sub.add_parser("vl", help="perturbed regular simplex volume infimum")
    sp.add_argument("--dim", type=int, required=True)
    sp.add_argument("--edge", type=float, required=True)
    sp.add_argument("--restarts", type=int, default=8)
    common(sp, seed=True)
    sp.set_defaults(fn=_cmd_vl)

    sp = sub.add_parser("bound", help="gap bound at a boundary ratio")
    sp.add_argument("--dim", type=int, required=True)
    sp.add_argument("--edge", type=float, required=True)
    sp.add_argument("--r", type=float, required=True)
    sp.add_argument("--restarts", type=int, default=6)
    common(sp, seed=True)
    sp.set_defaults(fn=_cmd_bound)

    sp = sub.add_parser("solvek", help="certificate for the ratio threshold k(eta)")
    sp.add_argument("--dim", type=int, required=True)
    sp.add_argument("--eta", type=float, required=True)
    common(sp, seed=True)
    sp.set_defaults(fn=_cmd_solvek)

    sp = sub.add_parser("curve", help="tabulated curves for plotting")
    sp.add_argument("--kind", required=True,
                    choices=("bound_vs_r", "bound_vs_L", "vl_vs_L", "glue_sequence"))
    sp.add_argument("--dim", type=int, default=2)
    sp.add_argument("--grid", required=True, help="A:B:STEP")
    sp.add_argument("--r", type=float, default=0.0)
    sp.add_argument("--edge-grid", default=None, help="L grid for bound_vs_r")
    sp.add_argument("--volm", type=float, default=None)
    sp.add_argument("--volb", type=float, default=None)
    sp.add_argument("--restarts", type=int, default=6)
    common(sp, seed=True)
    sp.set_defaults(fn=_cmd_curve)

    sp = sub.add_parser("glue", help="gap bounds along a gluing tower")
    sp.add_argument("--volm", type=float, required=True)
    sp.add_argument("--volb", type=float, required=True)
    sp.add_argument("--imax", type=int, required=True)
    sp.add_argument("--dim", type=int, default=2)
    common(sp, seed=True)
    sp.set_defaults(fn=_cmd_glue)

    sp = sub.add_parser("smear", help="smearing experiments on surface models")
    ssub = sp.add_subparsers(dest="subcommand", required=True)

    sp2 = ssub.add_parser("run", help="accumulate a chain and report statistics")
    sp2.add_argument("--model", required=True, help="bundled name or JSON path")
    sp2.add_argument("--edge", type=float, required=True)
    sp2.add_argument("--samples", type=int, required=True)
    sp2.add_argument("--net-radius", type=float, default=0.4)
    sp2.add_argument("--csv", default=None, help="also dump per-simplex CSV here")
    common(sp2, seed=True)
    sp2.set_defaults(fn=_cmd_smear_run)

    sp2 = ssub.add_parser("check", help="retention-logic violation count")
    sp2.add_argument("--model", required=True)
    sp2.add_argument("--edge", type=float, required=True)
    sp2.add_argument("--samples", type=int, required=True)
    sp2.add_argument("--net-radius", type=float, default=0.4)
    common(sp2, seed=True)
    sp2.set_defaults(fn=_cmd_smear_check)

    return p


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        text = args.fn(args)
    except _Usage as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _emit(text, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
