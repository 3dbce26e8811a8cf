"""Command-line surface for the retargeting engine.

Subcommands cover the whole pipeline: `retarget` and `enlarge` resize a
single image by seams or warping, `video` processes a frame directory,
`energy` and `segment` expose the intermediate products, `ars` scores a
recorded deformation, and `batch` fans a retargeting job over many
inputs.  Exit codes: 0 success, 1 usage, 2 input/output failure,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .energy import (
    CARRY,
    COMMAND,
    GRADIENT,
    EnergyProvider,
    command_provider,
    energy_for_iteration,
    gradient_energy,
    gradient_provider,
    run_provider_command,
    static_map_provider,
)
from .errors import (
    CoverageError,
    DecodeError,
    DegenerateMesh,
    DegenerateTarget,
    DimensionMismatch,
    Foldover,
    FrameDimensionMismatch,
    InvalidSeam,
    KindMismatch,
    NonConvergence,
    ProviderFailure,
    ZeroDimension,
)
from .fields import SEAM_REMOVAL, DeformationField, load_field, save_field
from .metrics import ars
from .raster import (
    ImportanceMap,
    TargetSpec,
    load_image,
    load_importance,
    save_image,
    save_importance,
    save_labels_pgm,
)
from .seam import retarget_seam
from .segment import SegmentationParams, patch_energy, segment
from .warp import (
    LEGACY_IMAGE,
    LEGACY_VIDEO,
    MODIFIED_IMAGE,
    MODIFIED_VIDEO,
    WarpEnergyConfig,
    build_mesh,
    render_warp,
    retarget_video,
    solve_warp,
)

ENERGY_ENV = "RETARGET_ENERGY_CMD"
_FRAME_SUFFIXES = (".png", ".ppm", ".pnm", ".pgm")


class UsageError(ValueError):
    """Bad flags or request; maps to exit code 1."""


_USAGE_ERRORS = (UsageError, DegenerateTarget, DegenerateMesh, ValueError)
_NUMERICAL_ERRORS = (Foldover, NonConvergence)
_IO_ERRORS = (
    DecodeError,
    DimensionMismatch,
    ProviderFailure,
    CoverageError,
    KindMismatch,
    InvalidSeam,
    ZeroDimension,
    FrameDimensionMismatch,
    OSError,
)


def _failure(e: BaseException):
    if isinstance(e, _NUMERICAL_ERRORS):
        return 3, f"{type(e).__name__}: {e}"
    if isinstance(e, _IO_ERRORS):
        return 2, f"{type(e).__name__}: {e}"
    if isinstance(e, _USAGE_ERRORS):
        return 1, str(e)
    raise e


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags by default; the contract wants 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _parse_size(text: str):
    text = text.strip()
    if text.endswith("%"):
        try:
            pct = float(text[:-1])
        except ValueError:
            raise UsageError(f"bad percentage {text!r}")
        if not 0.0 < pct <= 400.0:
            raise UsageError("percentage must lie in (0, 400]")
        return ("pct", pct)
    try:
        px = int(text)
    except ValueError:
        raise UsageError(f"bad size {text!r} (pixels or percent)")
    if px < 1:
        raise UsageError("pixel size must be at least 1")
    return ("abs", px)


def _resolve_size(spec, source: int) -> int:
    if spec is None:
        return source
    kind, value = spec
    if kind == "abs":
        return int(value)
    out = math.floor(source * value / 100.0 + 0.5)  # round half up
    if out < 1:
        raise UsageError("percentage target resolves to zero pixels")
    return out


def _make_provider(args, img):
    """Provider plus optional carried map, per --energy/--refresh."""
    spec = args.energy
    if spec is None:
        spec = "cmd" if os.environ.get(ENERGY_ENV) else "gradient"
    carry = getattr(args, "refresh", "recompute") == "carry"

    if spec == "gradient":
        if carry:
            return EnergyProvider(GRADIENT, CARRY), gradient_energy(img)
        return gradient_provider(), None
    if spec.startswith("map:"):
        path = spec[4:]
        carried = load_importance(path, expected=(img.width, img.height))
        return static_map_provider(), carried
    if spec == "cmd" or spec.startswith("cmd:"):
        command = spec[4:] if spec.startswith("cmd:") else os.environ.get(ENERGY_ENV)
        if not command:
            raise UsageError(
                f"--energy cmd needs a program (cmd:PROGRAM or ${ENERGY_ENV})"
            )
        if carry:
            return (
                EnergyProvider(COMMAND, CARRY, command),
                run_provider_command(command, img),
            )
        return command_provider(command), None
    raise UsageError(f"unknown energy source {spec!r}")


def _seam_passes(img, args, tw, th):
    """Width pass then height pass; returns the result and field list."""
    provider, carried = _make_provider(args, img)
    cur, cur_map = img, carried
    fields = []
    if tw != cur.width:
        cur, cur_map, field = retarget_seam(
            cur, provider, TargetSpec.for_width(tw, cur.height), cur_map
        )
        fields.append(field)
    if th != cur.height:
        cur, cur_map, field = retarget_seam(
            cur, provider, TargetSpec.for_height(cur.width, th), cur_map
        )
        fields.append(field)
    if len(fields) == 2 and fields[0].kind == fields[1].kind:
        fields = [
            DeformationField(fields[0].kind, seams=fields[0].seams + fields[1].seams)
        ]
    if not fields:
        fields = [DeformationField(SEAM_REMOVAL)]  # identity: empty log
    return cur, fields


def _seg_params(args) -> SegmentationParams:
    return SegmentationParams(args.sigma, args.seg_k, args.min_patch)


def _warp_pass(img, args, tw, th):
    provider, carried = _make_provider(args, img)
    imap = energy_for_iteration(provider, img, carried)
    labels = segment(img, _seg_params(args))
    pm = patch_energy(labels, imap)
    mesh = build_mesh(img.width, img.height, pm, args.cell)
    mode = LEGACY_IMAGE if args.legacy else MODIFIED_IMAGE
    cfg = WarpEnergyConfig(mode=mode, alpha=args.alpha)
    solved = solve_warp(mesh, TargetSpec(tw, th), cfg)
    out, field = render_warp(img, solved)
    return out, [field]


def _retarget_once(args) -> None:
    img = load_image(args.input)
    if args.width is None and args.height is None:
        raise UsageError("need --width and/or --height")
    tw = _resolve_size(args.width, img.width)
    th = _resolve_size(args.height, img.height)
    if getattr(args, "grow_only", False):
        if (args.width and tw < img.width) or (args.height and th < img.height):
            raise UsageError("enlarge targets must not shrink the image")
    if args.op == "seam":
        out, fields = _seam_passes(img, args, tw, th)
    else:
        out, fields = _warp_pass(img, args, tw, th)
    save_image(out, args.output)
    if args.emit_field:
        save_field(fields[0], args.emit_field)
        if len(fields) > 1:
            save_field(fields[1], args.emit_field + ".2")
    if args.fig:
        from .report import save_field_figure

        save_field_figure(img, fields[0], args.fig)


def cmd_retarget(args) -> int:
    _retarget_once(args)
    return 0


def cmd_energy(args) -> int:
    img = load_image(args.input)
    provider, carried = _make_provider(args, img)
    imap = energy_for_iteration(provider, img, carried)
    save_importance(imap, args.output)
    if args.fig:
        from .report import save_energy_figure

        save_energy_figure(imap, args.fig)
    return 0


def cmd_segment(args) -> int:
    img = load_image(args.input)
    labels = segment(img, _seg_params(args))
    print(f"patches {int(labels.max()) + 1}")
    if args.output:
        save_labels_pgm(labels, args.output)
    if args.fig:
        from .report import save_segment_figure

        save_segment_figure(labels, args.fig)
    return 0


def cmd_ars(args) -> int:
    img = load_image(args.input)
    if args.map:
        imap = load_importance(args.map, expected=(img.width, img.height))
    else:
        imap = ImportanceMap(np.ones((img.height, img.width)))
    fields = [load_field(p) for p in args.field]
    report = ars(fields if len(fields) > 1 else fields[0], imap, args.cell)
    print(f"{report.score:.6f}")
    if args.csv:
        Path(args.csv).write_text(report.to_csv())
    if args.fig:
        from .report import save_ars_figure

        save_ars_figure(report, (img.width, img.height), args.fig)
    return 0


def cmd_video(args) -> int:
    in_dir = Path(args.input)
    if not in_dir.is_dir():
        raise UsageError(f"{args.input} is not a directory")
    paths = sorted(
        (p for p in in_dir.iterdir() if p.suffix.lower() in _FRAME_SUFFIXES),
        key=lambda p: p.name,
    )
    if not paths:
        raise UsageError(f"no frames found in {args.input}")
    frames = [load_image(p) for p in paths]
    provider, carried = _make_provider(args, frames[0])
    tw = _resolve_size(args.width, frames[0].width)
    th = _resolve_size(args.height, frames[0].height)
    mode = LEGACY_VIDEO if args.legacy else MODIFIED_VIDEO
    cfg = WarpEnergyConfig(mode=mode, alpha=args.alpha, temporal_lambda=args.temporal)
    outs, _fields = retarget_video(
        frames,
        provider,
        TargetSpec(tw, th),
        cfg,
        seg_params=_seg_params(args),
        cell_size=args.cell,
        initial_map=carried,
    )
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    for path, frame in zip(paths, outs):
        save_image(frame, out_dir / path.name)
    return 0


def _batch_worker(payload):
    ns = argparse.Namespace(**payload)
    try:
        _retarget_once(ns)
        return ns.input, 0, ""
    except Exception as e:  # mapped, not re-raised: workers must report
        try:
            code, msg = _failure(e)
        except BaseException:
            code, msg = 2, f"{type(e).__name__}: {e}"
        return ns.input, code, msg


def cmd_batch(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    payloads = []
    for inp in args.inputs:
        ns = dict(
            input=inp,
            output=str(out_dir / Path(inp).name),
            width=args.width,
            height=args.height,
            op=args.op,
            energy=args.energy,
            refresh=args.refresh,
            cell=args.cell,
            legacy=args.legacy,
            alpha=args.alpha,
            sigma=args.sigma,
            seg_k=args.seg_k,
            min_patch=args.min_patch,
            emit_field=None,
            fig=None,
        )
        payloads.append(ns)
    jobs = args.jobs or os.cpu_count() or 1
    if jobs == 1:
        results = [_batch_worker(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_batch_worker, payloads))
    failures = [(name, code, msg) for name, code, msg in results if code]
    for name, _code, msg in failures:
        print(f"failed: {name}: {msg}", file=sys.stderr)
    print(f"{len(results) - len(failures)}/{len(results)} succeeded")
    return max((code for _n, code, _m in failures), default=0)


def _add_energy_flags(sp):
    sp.add_argument(
        "--energy",
        default=None,
        metavar="SRC",
        help="gradient | map:FILE | cmd[:PROGRAM] "
        f"(default: ${ENERGY_ENV} if set, else gradient)",
    )
    sp.add_argument(
        "--refresh",
        choices=("recompute", "carry"),
        default="recompute",
        help="recompute energy every iteration or carry it with the image",
    )


def _add_warp_flags(sp):
    sp.add_argument("--cell", type=int, default=20, help="mesh cell size in pixels")
    sp.add_argument("--legacy", action="store_true", help="alpha-weighted energy form")
    sp.add_argument("--alpha", type=float, default=0.8)
    sp.add_argument("--sigma", type=float, default=0.8, help="segmentation smoothing")
    sp.add_argument("--seg-k", dest="seg_k", type=float, default=300.0)
    sp.add_argument("--min-patch", dest="min_patch", type=int, default=50)


def _add_retarget_flags(sp):
    sp.add_argument("--in", dest="input", required=True, metavar="IMAGE")
    sp.add_argument("--out", dest="output", required=True, metavar="IMAGE")
    sp.add_argument("--width", type=_parse_size, default=None, metavar="W[%]")
    sp.add_argument("--height", type=_parse_size, default=None, metavar="H[%]")
    sp.add_argument("--op", choices=("seam", "warp"), default="seam")
    _add_energy_flags(sp)
    _add_warp_flags(sp)
    sp.add_argument("--emit-field", dest="emit_field", default=None, metavar="FILE")
    sp.add_argument("--fig", default=None, metavar="PNG")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="retarget", description="Content-aware image retargeting.")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("retarget", help="resize one image")
    _add_retarget_flags(sp)
    sp.set_defaults(func=cmd_retarget, grow_only=False)

    sp = sub.add_parser("enlarge", help="grow one image (targets above 100%)")
    _add_retarget_flags(sp)
    sp.set_defaults(func=cmd_retarget, grow_only=True)

    sp = sub.add_parser("video", help="retarget a directory of frames by warping")
    sp.add_argument("--in", dest="input", required=True, metavar="DIR")
    sp.add_argument("--out", dest="output", required=True, metavar="DIR")
    sp.add_argument("--width", type=_parse_size, default=None, metavar="W[%]")
    sp.add_argument("--height", type=_parse_size, default=None, metavar="H[%]")
    _add_energy_flags(sp)
    _add_warp_flags(sp)
    sp.add_argument("--temporal", type=float, default=1.0, metavar="LAMBDA")
    sp.set_defaults(func=cmd_video)

    sp = sub.add_parser("energy", help="write the importance map for an image")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--out", dest="output", required=True, metavar="PGM")
    _add_energy_flags(sp)
    sp.add_argument("--fig", default=None, metavar="PNG")
    sp.set_defaults(func=cmd_energy)

    sp = sub.add_parser("segment", help="write the patch labels for an image")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--out", dest="output", default=None, metavar="PGM16")
    sp.add_argument("--sigma", type=float, default=0.8)
    sp.add_argument("--k", dest="seg_k", type=float, default=300.0)
    sp.add_argument("--min-size", dest="min_patch", type=int, default=50)
    sp.add_argument("--fig", default=None, metavar="PNG")
    sp.set_defaults(func=cmd_segment)

    sp = sub.add_parser("ars", help="score a recorded deformation")
    sp.add_argument("--in", dest="input", required=True, metavar="SOURCE")
    sp.add_argument(
        "--field", action="append", required=True, metavar="FILE",
        help="deformation field file; repeat to compose in order",
    )
    sp.add_argument("--map", default=None, metavar="PGM")
    sp.add_argument("--cell", type=int, default=16)
    sp.add_argument("--csv", default=None, metavar="FILE")
    sp.add_argument("--fig", default=None, metavar="PNG")
    sp.set_defaults(func=cmd_ars)

    sp = sub.add_parser("batch", help="retarget many images concurrently")
    sp.add_argument("inputs", nargs="+", metavar="IMAGE")
    sp.add_argument("--out-dir", dest="out_dir", required=True)
    sp.add_argument("--width", type=_parse_size, default=None, metavar="W[%]")
    sp.add_argument("--height", type=_parse_size, default=None, metavar="H[%]")
    sp.add_argument("--op", choices=("seam", "warp"), default="seam")
    _add_energy_flags(sp)
    _add_warp_flags(sp)
    sp.add_argument("--jobs", type=int, default=None)
    sp.set_defaults(func=cmd_batch, grow_only=False)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as e:
        try:
            code, msg = _failure(e)
        except BaseException:
            raise e
        print(f"error: {msg}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
