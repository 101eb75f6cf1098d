"""Command-line entry point: ``panodrag {align,drag,eval,synth,perspective}``.

Exit status is 0 on success, 1 when a case fails and 2 on usage errors.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

from . import __version__, jsonfmt
from .drag_engine import DragConfig
from .errors import InvalidArgumentError, PanoDragError
from .harness import (
    FAMILIES,
    Ablation,
    SynthParams,
    generate_synthetic_case,
    load_case,
    run_case,
    run_suite,
    save_case,
)
from .reproject import (
    DragCase,
    PerspectiveSpec,
    align_case,
    extract_perspective,
    load_image,
    save_image,
)
from .sphere_geom import SphericalCoord

EXIT_OK, EXIT_CASE, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("panodrag")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fov_list(text: str) -> list:
    try:
        fovs = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of degrees: {text!r}")
    if not fovs or any(not 0 < f < 180 for f in fovs):
        raise argparse.ArgumentTypeError(f"FOVs must lie in (0, 180): {text!r}")
    return [int(f) if f.is_integer() else f for f in fovs]


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def cmd_align(args) -> int:
    case = load_case(args.case_dir)
    aligned, rec = align_case(case, math.radians(args.target_lon), args.keep_lat)
    out = save_case(aligned, args.out)
    _write(out / "alignment.json", jsonfmt.dumps({
        "rotation": rec.rotation, "target_lon": rec.target_lon, "keep_lat": rec.keep_lat,
        "midpoint_before": list(rec.midpoint_before), "midpoint_after": list(rec.midpoint_after),
        "pairs": [[list(h), list(t)] for h, t in aligned.pairs],
    }, indent=2) + "\n")
    print(out)
    return EXIT_OK


def cmd_drag(args) -> int:
    case = load_case(args.case_dir)
    cfg = DragConfig(lam=args.lam, lr=args.lr, r_base=args.r, max_iter=args.max_iter)
    ablation = Ablation(ar=not args.no_ar, gcta=not args.no_gcta, ssrt=not args.no_ssrt)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    trace = open(args.trace, "w") if args.trace else None
    try:
        res = run_case(case, cfg, fovs=(), ablation=ablation, trace=trace)
    finally:
        if trace is not None:
            trace.close()
    save_case(DragCase(res.edited, case.mask, case.pairs, case.id), out)
    _write(out / "result.json", jsonfmt.dumps({
        "case_id": res.case_id, "success": res.success, "converged": res.converged,
        "iterations": res.iterations, "final_distance": res.final_distance,
        "hashes": res.hashes, "config": {**vars(cfg)}, "ablation": vars(ablation),
    }, indent=2) + "\n")
    print(f"{case.id}: success={res.success} final_distance={res.final_distance}")
    return EXIT_OK if res.success else EXIT_CASE


def cmd_eval(args) -> int:
    cases, failed_loads = [], []
    for d in args.cases:
        try:
            cases.append(load_case(d))
        except PanoDragError as exc:
            log.error("%s: %s", d, exc)
            failed_loads.append({"path": str(d), "error": f"{type(exc).__name__}: {exc}"})
    if not cases:
        log.error("no loadable cases")
        return EXIT_CASE
    cfg = DragConfig(lam=args.lam, lr=args.lr, r_base=args.r, max_iter=args.max_iter)
    ablation = Ablation(ar=not args.no_ar, gcta=not args.no_gcta, ssrt=not args.no_ssrt)
    report = run_suite(cases, cfg, fovs=tuple(args.fov), ablation=ablation,
                       metric_seed=args.seed, dry_run=args.dry_run)
    doc = report.to_dict()
    doc["load_failures"] = failed_loads
    _write(Path(args.report), jsonfmt.dumps(doc, indent=2) + "\n")
    for fov, m in report.aggregate.items():
        print(fov, m)
    return EXIT_CASE if report.failed or failed_loads else EXIT_OK


def cmd_synth(args) -> int:
    out = Path(args.out)
    for k in range(args.n):
        seed = args.seed + k
        case_id = f"{args.family}-{seed:04d}"
        case = generate_synthetic_case(seed, SynthParams(family=args.family), case_id)
        print(save_case(case, out / case_id))
    return EXIT_OK


def cmd_perspective(args) -> int:
    img = load_image(args.image)
    spec = PerspectiveSpec(SphericalCoord(math.radians(args.lat), math.radians(args.lon)),
                           args.fov, args.size)
    out = args.out or Path(args.image).with_name(
        f"{Path(args.image).stem}_persp_{args.lat:g}_{args.lon:g}_{args.fov:g}.png")
    save_image(out, extract_perspective(img, spec))
    print(out)
    return EXIT_OK


def _drag_options(p):
    p.add_argument("--lambda", dest="lam", type=float, default=0.1)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--r", type=float, default=3.0, help="base tracking radius in field cells")
    p.add_argument("--max-iter", type=int, default=80)
    p.add_argument("--no-ar", action="store_true", help="skip adaptive reprojection")
    p.add_argument("--no-gcta", action="store_true", help="planar drag direction")
    p.add_argument("--no-ssrt", action="store_true", help="square tracking window")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="panodrag", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("align", help="rotate a case so its drag sits on a seam-free meridian")
    p.add_argument("case_dir")
    p.add_argument("--target-lon", type=float, default=0.0, help="degrees")
    p.add_argument("--keep-lat", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("drag", help="run the drag loop on one case")
    p.add_argument("case_dir")
    _drag_options(p)
    p.add_argument("--out", required=True)
    p.add_argument("--trace", help="write one JSON line per iteration to this file")
    p.set_defaults(func=cmd_drag)

    p = sub.add_parser("eval", help="drag and score a set of cases")
    p.add_argument("cases", nargs="+")
    p.add_argument("--fov", type=_fov_list, default=[30, 60, 90], help="comma-separated degrees")
    p.add_argument("--seed", type=int, default=0, help="feature projection seed")
    p.add_argument("--report", required=True)
    p.add_argument("--dry-run", action="store_true", help="score the unedited panoramas")
    _drag_options(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="write synthetic case directories")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--family", choices=FAMILIES, default="seam")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("perspective", help="render a pinhole view of a panorama")
    p.add_argument("image")
    p.add_argument("--lat", type=float, default=0.0, help="degrees")
    p.add_argument("--lon", type=float, default=0.0, help="degrees")
    p.add_argument("--fov", type=float, default=90.0, help="degrees")
    p.add_argument("--size", type=int, default=512)
    p.add_argument("--out")
    p.set_defaults(func=cmd_perspective)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "n", 1) < 1:
        parser.error("--n must be >= 1")
    try:
        return args.func(args)
    except InvalidArgumentError as exc:
        print(f"panodrag: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PanoDragError, OSError) as exc:
        print(f"panodrag: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CASE


if __name__ == "__main__":
    sys.exit(main())
