"""Command line entry point: ``elastoscatter {simulate,image,size,validate}``.

Exit codes: 0 success, 1 no peak found (``image``), 2 validation or usage
error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from .acquisition import (Dataset, add_noise, direction_set, load_dataset, response_matrix,
                          save_dataset, truth_from_scene)
from .errors import ConfigError, DatasetError, ParameterError, SolverError
from .foldy_lax import CHANNELS, FoldyLaxSystem, Scene, check_invertibility, parse_channel
from .music import (DEFAULT_THRESHOLD, ImagingGrid, locate, pseudospectrum, save_peaks)
from .sizing import Constants, extract_capacitances, recover_B, size_report

log = logging.getLogger("elastoscatter")

EXIT_OK, EXIT_NO_PEAK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2, 3
CONFIG_VERSION = 1


class UsageError(Exception):
    pass


def parse_grid(spec: str, wavelength: float) -> ImagingGrid:
    """``"box=x0,y0,z0,x1,y1,z1;h=0.05;unit=wavelength"`` (unit defaults
    to scene units; with ``unit=wavelength`` both box and h are scaled)."""
    fields = {}
    for part in spec.split(";"):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ConfigError(f"bad grid field {part!r}")
        k, v = part.split("=", 1)
        fields[k.strip()] = v.strip()
    try:
        box = np.array([float(s) for s in fields["box"].split(",")])
        h = float(fields["h"])
    except KeyError as exc:
        raise ConfigError(f"grid spec needs {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"bad grid number: {exc}") from exc
    if box.shape != (6,):
        raise ConfigError("grid box needs six numbers x0,y0,z0,x1,y1,z1")
    unit = fields.get("unit", "absolute")
    if unit == "wavelength":
        box, h = box * wavelength, h * wavelength
    elif unit != "absolute":
        raise ConfigError(f"unknown grid unit {unit!r}")
    try:
        return ImagingGrid.from_spacing(box[:3], box[3:], h)
    except ParameterError as exc:
        raise ConfigError(f"invalid grid: {exc}") from exc


def _thread_limit(n):
    if not n:
        return nullcontext()
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # optional
        return nullcontext()
    return threadpool_limits(limits=n)


def cmd_simulate(args) -> int:
    channels = [c.strip() for c in args.channels.split(",") if c.strip()]
    for c in channels:
        parse_channel(c)
    scene = Scene.load(args.scene)
    if args.N < 1:
        raise ConfigError("N must be >= 1")
    dirs = direction_set(args.N, args.directions, args.seed)
    system = FoldyLaxSystem(scene)
    spread = np.ptp(scene.centers, axis=0)
    diam = args.omega_diam or float(np.linalg.norm(spread)) + \
        max(s.diameter for s in scene.scatterers) or 1.0
    report = check_invertibility(scene, diam)
    outputs = {}
    for c in channels:
        F = response_matrix(scene, c, dirs, system)
        if args.noise:
            F = add_noise(F, args.noise, args.seed)
        outputs[c] = Dataset(F, truth_from_scene(scene))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for c, ds in outputs.items():
        save_dataset(out / f"dataset_{c}.json", ds)
    diag = {"invertibility": report.to_dict(), "condition": system.condition,
            "channels": channels, "N": args.N}
    (out / "diagnostics.json").write_text(json.dumps(diag, indent=1))
    log.info("wrote %d dataset(s) to %s", len(outputs), out)
    return EXIT_OK


def cmd_image(args) -> int:
    ds = load_dataset(args.data)
    F = ds.response
    _, rec = F.kinds
    kind = args.kind or rec
    if kind != rec:
        raise ConfigError(f"--kind {kind} does not match the receive kind {rec!r} of {F.channel}")
    grid = parse_grid(args.grid, F.medium.wavelength_s)
    j = args.j if args.j == "union" else int(args.j)
    ps = pseudospectrum(F, grid, kind=kind, j=j, rank=args.rank, threshold=args.threshold,
                        gram=args.gram)
    peaks = locate(ps, expected_M=args.expected_M, rel_threshold=args.rel_threshold,
                   r_min=args.r_min, j=j)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ps.to_csv(out / "pseudospectrum.csv", j)
    params = {"rank": args.rank, "threshold": args.threshold, "rel_threshold": args.rel_threshold,
              "r_min": args.r_min, "expected_M": args.expected_M, "gram": args.gram}
    save_peaks(out / "peaks.json", ps, peaks, params)
    if len(peaks) == 0:
        log.warning("no peak detected")
        return EXIT_NO_PEAK
    return EXIT_OK


def cmd_size(args) -> int:
    ds = load_dataset(args.data)
    if args.centers:
        data = json.loads(Path(args.centers).read_text())
        centers = data["peaks"] if isinstance(data, dict) else data
    elif args.use_truth:
        if not ds.has_truth:
            raise UsageError("--use-truth given but the dataset has no ground truth")
        centers = ds.truth["centers"]
    else:
        raise UsageError("size needs --centers FILE or --use-truth")
    centers = np.asarray(centers, dtype=float).reshape(-1, 3)
    rs = recover_B(ds.response, centers)
    ex = extract_capacitances(rs)
    consts = Constants.calibrated(ds.response.medium)
    reference = None
    if ds.has_truth and ds.truth.get("capacitances") and len(ds.truth["centers"]) == len(centers):
        truth_c = np.asarray(ds.truth["centers"])
        order = [int(np.argmin(np.linalg.norm(truth_c - z, axis=1))) for z in centers]
        reference = [ds.truth["capacitances"][i] for i in order]
    report = size_report(centers, ex.capacitances, ds.response.medium, consts,
                         convex=args.convex, reference=reference)
    report["imaginary_fraction"] = ex.imaginary_fraction
    report["conditioning"] = {"transmit": rs.cond_transmit, "receive": rs.cond_receive}
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "size_report.json").write_text(json.dumps(report, indent=1))
    return EXIT_OK


def cmd_validate(args) -> int:
    from .validation import run_checks
    names = [n.strip() for n in args.only.split(",")] if args.only else None
    try:
        rows = run_checks(names, args.force_tolerance)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from exc
    for r in rows:
        print(r.line())
    ok = all(r.passed for r in rows)
    print(f"{sum(r.passed for r in rows)}/{len(rows)} checks passed")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "validation.json").write_text(
            json.dumps({"passed": ok, "results": [r.to_dict() for r in rows]}, indent=1))
    return EXIT_OK if ok else EXIT_NUMERICAL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="elastoscatter",
                                description="Elastic small-scatterer forward and inverse toolkit")
    p.add_argument("--config", help="JSON file of default option values (flags override)")
    p.add_argument("--threads", type=int, default=None, help="cap BLAS worker threads")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="synthesize response-matrix datasets from a scene")
    s.add_argument("--scene", required=True)
    s.add_argument("--channels", default="PP")
    s.add_argument("--N", type=int, default=30)
    s.add_argument("--directions", choices=("fibonacci", "random"), default="fibonacci")
    s.add_argument("--noise", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--omega-diam", type=float, default=None,
                   help="diameter of the region containing the scatterers")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    i = sub.add_parser("image", help="MUSIC pseudospectrum and peak extraction")
    i.add_argument("--data", required=True)
    i.add_argument("--grid", required=True, help='e.g. "box=-1,-1,-1,1,1,1;h=0.05;unit=wavelength"')
    i.add_argument("--kind", choices=("p", "sh", "sv", "s"), default=None)
    i.add_argument("--j", default="union", choices=("union", "1", "2", "3"))
    i.add_argument("--rank", type=int, default=None)
    i.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    i.add_argument("--gram", action="store_true", help="take the SVD of F F^*")
    i.add_argument("--expected-M", dest="expected_M", type=int, default=None)
    i.add_argument("--rel-threshold", type=float, default=0.5)
    i.add_argument("--r-min", type=float, default=None)
    i.add_argument("--out", required=True)
    i.set_defaults(func=cmd_image)

    z = sub.add_parser("size", help="recover capacitances and size estimates")
    z.add_argument("--data", required=True)
    z.add_argument("--centers", default=None, help="peaks.json from image, or a JSON list")
    z.add_argument("--use-truth", action="store_true")
    z.add_argument("--convex", action="store_true")
    z.add_argument("--out", required=True)
    z.set_defaults(func=cmd_size)

    v = sub.add_parser("validate", help="run the acceptance checks")
    v.add_argument("--only", default=None, help="comma-separated check names")
    v.add_argument("--force-tolerance", type=float, default=None)
    v.add_argument("--out", default=None)
    v.set_defaults(func=cmd_validate)
    return p


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    cfg = json.loads(Path(known.config).read_text())
    if cfg.get("version") != CONFIG_VERSION:
        raise ConfigError(f"unsupported config version {cfg.get('version')!r}")
    opts = {k.replace("-", "_"): v for k, v in cfg.items() if k != "version"}
    for action in parser._subparsers._group_actions:
        for sp in action.choices.values():
            sp.set_defaults(**opts)
            for a in sp._actions:
                if a.dest in opts:
                    a.required = False


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with _thread_limit(args.threads):
            return args.func(args)
    except (ParameterError, DatasetError, ConfigError, UsageError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SolverError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
