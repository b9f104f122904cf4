"""Command-line entry point: ``generate``, ``run``, ``metrics`` and ``compare``.

Failures print a single ``error: <category>: <message>`` line to stderr and
exit non-zero (2 for usage errors, 1 otherwise).
"""
from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .config import ConfigError, ModelConfig, parse_key_values
from .correlator import DIRECTIONS, VARIANTS, DirectionalField, direction_index
from .exceptions import (ContractError, InvalidParameterError, SequenceFormatError,
                         SequencingError, ShapeError, WarmupError)
from .metrics import MetricsReport, ReportCell, ThresholdSchedule, compare_models
from .model import MotionModel
from .stimulus import StimulusSpec, generate, read_sequence, write_pgm, write_sequence

RUN_MANIFEST = "run_manifest.txt"
DIRECTIONS_CSV = "directions.csv"
DIRECTIONS_HEADER = "t_ms,theta_rad,sum_0,sum_90,sum_180,sum_270,margin,tie,warmup"
DEFAULT_FIELD_FRAME = 840

_CATEGORIES = (
    (ConfigError, "config"),
    (InvalidParameterError, "invalid-parameter"),
    (SequenceFormatError, "format"),
    (SequencingError, "sequencing"),
    (WarmupError, "warmup"),
    (ShapeError, "shape"),
    (ContractError, "contract"),
    (FileNotFoundError, "missing-input"),
    (OSError, "io"),
)


class CLIError(Exception):
    def __init__(self, category, message):
        super().__init__(message)
        self.category = category


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CLIError("usage", message)


def _size(text):
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WIDTHxHEIGHT, got {text!r}") from None
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError(f"frame size must be positive, got {text!r}")
    return w, h


def _direction(text):
    try:
        return DIRECTIONS[direction_index(text)]
    except ContractError:
        pass
    try:
        return DIRECTIONS[direction_index(float(text))]
    except (ValueError, ContractError):
        raise argparse.ArgumentTypeError(f"not a cardinal direction: {text!r}") from None


def _frame_list(text):
    try:
        return sorted({int(t) for t in text.split(",") if t.strip()})
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated frame indices, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tqdmotion", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--threads", type=int, default=None, help="cap on numeric library threads")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a synthetic translating-background sequence")
    g.add_argument("--size", type=_size, required=True, help="WIDTHxHEIGHT in pixels")
    g.add_argument("--rate", type=float, default=1000.0, help="sample rate in Hz")
    g.add_argument("--dir", type=_direction, default=0.0, help="right, up, left, down or radians")
    g.add_argument("--vel", type=float, default=150.0, help="background velocity in px/s")
    g.add_argument("--frames", type=int, required=True)
    g.add_argument("--texture", default="clutter-noise")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--lum", default="0,1", help="luminance range lo,hi")
    g.add_argument("--out", type=Path, required=True)

    r = sub.add_parser("run", help="run one detector over a sequence")
    r.add_argument("--model", choices=VARIANTS, required=True)
    r.add_argument("--config", type=Path, default=None, help="key=value model config file")
    r.add_argument("--in", dest="input", type=Path, required=True)
    r.add_argument("--out", type=Path, required=True)
    r.add_argument("--save-fields", type=_frame_list, default=None,
                   help=f"frames whose LPTC fields are saved (default: {DEFAULT_FIELD_FRAME} and the last)")
    r.add_argument("--dump-stages", type=_frame_list, nargs="?", const="all", default=None,
                   help="dump every stage as PGM for the listed frames (all if no list)")

    m = sub.add_parser("metrics", help="DR/NP report from saved run fields")
    m.add_argument("--runs", type=Path, nargs="+", required=True)
    m.add_argument("--frame", type=int, default=DEFAULT_FIELD_FRAME)
    m.add_argument("--truth", type=_direction, default=None,
                   help="true direction (default: from the run's stimulus manifest)")
    m.add_argument("--gammas", default=None, help="comma-separated thresholds starting at 0.01")
    m.add_argument("--out", type=Path, default=Path("report"))

    c = sub.add_parser("compare", help="run both detectors on a sequence and report DR/NP")
    c.add_argument("--in", dest="input", type=Path, required=True)
    c.add_argument("--config", type=Path, default=None)
    c.add_argument("--frame", type=int, default=DEFAULT_FIELD_FRAME)
    c.add_argument("--truth", type=_direction, default=None)
    c.add_argument("--gammas", default=None)
    c.add_argument("--out", type=Path, default=Path("report"))
    return p


# --------------------------------------------------------------------------

def cmd_generate(args) -> int:
    w, h = args.size
    try:
        lo, hi = (float(v) for v in args.lum.split(","))
    except ValueError:
        raise CLIError("usage", f"--lum expects lo,hi, got {args.lum!r}") from None
    spec = StimulusSpec(width=w, height=h, frame_count=args.frames, sample_rate=args.rate,
                        direction=args.dir, velocity=args.vel, texture=args.texture,
                        seed=args.seed, luminance_range=(lo, hi))
    write_sequence(generate(spec), args.out, spec)
    print(f"wrote {spec.frame_count} frames to {args.out}")
    return 0


def _load_config(path) -> ModelConfig:
    return ModelConfig() if path is None else ModelConfig.from_file(path)


def _check_rate(cfg: ModelConfig, rate: float):
    if abs(cfg.dt * rate - 1.0) > 1e-9:
        raise ConfigError(f"sequence sample rate {rate} Hz does not match dt={cfg.dt} s")


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x))


def _direction_row(est) -> str:
    return ",".join([
        _fmt(round(est.timestamp * 1000, 6)),
        _fmt(est.theta),
        *(_fmt(s) for s in est.per_direction_sums),
        _fmt(est.margin),
        str(int(est.tie)),
        str(int(est.warmup)),
    ])


def _dump_stages(root: Path, index: int, stages: dict):
    for name, arr in stages.items():
        d = root / name
        d.mkdir(parents=True, exist_ok=True)
        lo, hi = float(arr.min()), float(arr.max())
        scale = hi - lo
        write_pgm(d / f"frame_{index:06d}.pgm", (arr - lo) / scale if scale > 0 else np.zeros_like(arr))
        with open(d / "scales.csv", "a") as fh:
            if fh.tell() == 0:
                fh.write("frame,offset,scale\n")
            fh.write(f"{index},{lo!r},{scale!r}\n")


def cmd_run(args) -> int:
    cfg = _load_config(args.config)
    seq = read_sequence(args.input)
    _check_rate(cfg, seq.sample_rate)
    model = MotionModel(cfg, seq.shape, (args.model,))
    save = args.save_fields
    if save is None:
        save = sorted({DEFAULT_FIELD_FRAME, len(seq) - 1} & set(range(len(seq))))
    dump = args.dump_stages
    out = args.out
    (out / "fields").mkdir(parents=True, exist_ok=True)
    if dump is not None and dump != "all":
        dump = set(dump)

    started = time.perf_counter()
    rows = [DIRECTIONS_HEADER]
    for mf in model.run(seq):
        rows.append(_direction_row(mf.estimates[args.model]))
        if mf.index in save:
            np.save(out / "fields" / f"frame_{mf.index:06d}.npy", mf.fields[args.model].values)
        if dump == "all" or (dump and mf.index in dump):
            _dump_stages(out / "stages", mf.index, mf.step.stages())
    elapsed = time.perf_counter() - started

    (out / DIRECTIONS_CSV).write_text("\n".join(rows) + "\n")
    (out / "config.cfg").write_text(cfg.to_text())
    manifest = {
        "tool_version": __version__,
        "variant": args.model,
        "input": str(args.input),
        "frames": len(seq),
        "warmup_frames": model.warmup_frames,
        "saved_fields": ",".join(str(k) for k in sorted(save)),
        "wall_clock_s": f"{elapsed:.3f}",
    }
    manifest.update({f"stimulus.{k}": v for k, v in seq.manifest.items()})
    manifest.update({f"config.{k}": v for k, v in parse_key_values(cfg.to_text()).items()})
    (out / RUN_MANIFEST).write_text("".join(f"{k}={v}\n" for k, v in manifest.items()))
    print(f"{args.model}: {len(seq)} frames, warm-up {model.warmup_frames}, {elapsed:.1f} s -> {out}")
    return 0


def _schedule(text) -> ThresholdSchedule:
    return ThresholdSchedule() if text is None else ThresholdSchedule.parse(text)


def _manifest_direction(raw: str | None):
    if raw in (None, "none"):
        return None
    return DIRECTIONS[direction_index(float(raw))]


def _manifest_velocity(raw: str | None):
    return None if raw in (None, "none") else float(raw)


def _write_report(report: MetricsReport, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.csv").write_text(report.to_csv())
    (out / "summary.txt").write_text(report.summary())


def cmd_metrics(args) -> int:
    schedule = _schedule(args.gammas)
    cells, config = [], None
    for run in args.runs:
        mpath = run / RUN_MANIFEST
        if not mpath.is_file():
            raise FileNotFoundError(f"{run}: no {RUN_MANIFEST}")
        man = parse_key_values(mpath.read_text())
        warm = int(man["warmup_frames"])
        if args.frame < warm:
            raise WarmupError(f"frame {args.frame} lies inside the {warm}-frame warm-up of {run}")
        fpath = run / "fields" / f"frame_{args.frame:06d}.npy"
        if not fpath.is_file():
            raise FileNotFoundError(f"{run}: no saved field for frame {args.frame}")
        truth = args.truth if args.truth is not None else _manifest_direction(man.get("stimulus.direction_rad"))
        if truth is None:
            raise CLIError("usage", f"{run}: stimulus direction unknown; pass --truth")
        field = DirectionalField(np.load(fpath), args.frame * float(man["config.dt"]), man["variant"])
        cells.append(ReportCell.from_field(field, schedule, truth, args.frame,
                                           _manifest_velocity(man.get("stimulus.velocity_px_s"))))
        if config is None:
            config = ModelConfig.from_file(run / "config.cfg")
    report = MetricsReport(cells, schedule, config)
    _write_report(report, args.out)
    _print_dr(report)
    return 0


def cmd_compare(args) -> int:
    cfg = _load_config(args.config)
    seq = read_sequence(args.input)
    _check_rate(cfg, seq.sample_rate)
    truth = args.truth if args.truth is not None else seq.direction
    if truth is None:
        raise CLIError("usage", "stimulus direction unknown; pass --truth")
    report = compare_models(seq, cfg, _schedule(args.gammas), args.frame, truth, seq.velocity)
    _write_report(report, args.out)
    _print_dr(report)
    return 0


def _print_dr(report: MetricsReport):
    for c in report.cells:
        dr0 = c.dr[0]
        print(f"{c.variant} v={c.velocity} frame={c.frame} DR(0.01)={'undefined' if dr0 is None else f'{dr0:.4f}'}")


_COMMANDS = {"generate": cmd_generate, "run": cmd_run, "metrics": cmd_metrics, "compare": cmd_compare}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        with threadpool_limits(limits=args.threads):
            return _COMMANDS[args.command](args)
    except CLIError as exc:
        return _fail(exc.category, str(exc), 2 if exc.category == "usage" else 1)
    except Exception as exc:
        for cls, category in _CATEGORIES:
            if isinstance(exc, cls):
                return _fail(category, str(exc), 1)
        raise


def _fail(category, message, code) -> int:
    print(f"error: {category}: {' '.join(str(message).split())}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
