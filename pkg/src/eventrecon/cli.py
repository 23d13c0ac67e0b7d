"""``eventrecon`` command line: simulate, reconstruct, estimate, voxelize, evaluate, roundtrip.

Results go to stdout as ``key=value`` lines or tables; diagnostics go to
stderr. Exit status is 0 on success, 1 on bad input or usage and 2 on
internal errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, event_io
from .errors import ConfigurationError, EventReconError, InputError
from .estimator import build_observations, fit_all
from .metrics import evaluate_sequence
from .reconstructor import iter_reconstruction
from .simulator import sample_thresholds, simulate_events
from .synthetic import moving_texture
from .types import CameraParams
from .voxelgrid import encode_voxel_grid, normalized, write_voxel_file

log = logging.getLogger("eventrecon")

DEFAULTS = {
    "width": None,
    "height": None,
    "theta_pos": 0.2,
    "theta_neg": 0.2,
    "k": 0.01,
    "seed": 0,
    "sigma": 0.0,
    "bins": 5,
    "reset_interval": 0,
    "max_rows": 200_000,
    "k_lo": 1e-3,
    "k_hi": 1.0,
    "threads": 1,
    "dt": 10_000,
}


class UsageError(InputError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _add_common(p, *groups):
    if "sensor" in groups:
        p.add_argument("--width", type=int, default=None, help="sensor width in pixels")
        p.add_argument("--height", type=int, default=None, help="sensor height in pixels")
    if "params" in groups:
        p.add_argument("--theta-pos", type=float, default=None)
        p.add_argument("--theta-neg", type=float, default=None)
        p.add_argument("--k", type=float, default=None, help="intensity offset ratio")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None, help="worker cap")
    p.add_argument("--config", type=Path, default=None, help="key=value file filling unset flags")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="eventrecon", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("simulate", help="frames directory -> events text file")
    p.add_argument("frames", type=Path)
    p.add_argument("-o", "--output", type=Path, required=True)
    p.add_argument("--dt", type=int, default=None, help="frame spacing (us) when no timestamps.txt")
    p.add_argument("--sigma", type=float, default=None, help="sample thresholds around the given means")
    _add_common(p, "params")

    p = sub.add_parser("reconstruct", help="events + keyframes + boundaries -> frames")
    p.add_argument("events", type=Path)
    p.add_argument("keyframes", type=Path)
    p.add_argument("boundaries", type=Path)
    p.add_argument("-o", "--output", type=Path, required=True)
    p.add_argument("--reset-interval", type=int, default=None)
    _add_common(p, "sensor", "params")

    p = sub.add_parser("estimate", help="events + frames -> fitted parameters")
    p.add_argument("events", type=Path)
    p.add_argument("frames", type=Path)
    p.add_argument("boundaries", type=Path)
    p.add_argument("--max-rows", type=int, default=None)
    p.add_argument("--k-lo", type=float, default=None)
    p.add_argument("--k-hi", type=float, default=None)
    p.add_argument("--report", type=Path, default=None)
    _add_common(p, "sensor")

    p = sub.add_parser("voxelize", help="events slice -> voxel grid file")
    p.add_argument("events", type=Path)
    p.add_argument("--t0", type=int, required=True)
    p.add_argument("--t1", type=int, required=True)
    p.add_argument("--bins", type=int, default=None)
    p.add_argument("-o", "--output", type=Path, required=True)
    p.add_argument("--normalize", action="store_true", help="also write a max-abs normalized copy")
    _add_common(p, "sensor")

    p = sub.add_parser("evaluate", help="compare two frame directories")
    p.add_argument("recon", type=Path)
    p.add_argument("truth", type=Path)
    p.add_argument("--csv", action="store_true")
    _add_common(p)

    p = sub.add_parser("roundtrip", help="simulate, reconstruct and evaluate in one pass")
    p.add_argument("frames", type=Path, nargs="?", help="frames directory (default: synthetic sequence)")
    p.add_argument("--n-frames", type=int, default=20, help="length of the synthetic sequence")
    p.add_argument("--dt", type=int, default=None)
    p.add_argument("--reset-interval", type=int, default=None)
    _add_common(p, "sensor", "params")
    return parser


def _read_config(path: Path) -> dict:
    out = {}
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def _resolve(args) -> argparse.Namespace:
    """Fill unset flags from --config then defaults; a key set in both is an error."""
    conf = _read_config(args.config) if args.config else {}
    for key, raw in conf.items():
        if key not in DEFAULTS or not hasattr(args, key):
            raise ConfigurationError(f"config key {key!r} does not apply to '{args.command}'")
        if getattr(args, key) is not None:
            raise ConfigurationError(f"{key} given both on the command line and in {args.config}")
        kind = float if isinstance(DEFAULTS[key], float) else int
        try:
            setattr(args, key, kind(raw))
        except ValueError:
            raise ConfigurationError(f"config value for {key!r} is not a number: {raw!r}") from None
    for key, value in DEFAULTS.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, value)
    return args


def _params(args) -> CameraParams:
    return CameraParams(args.theta_pos, args.theta_neg, args.k)


def _sensor(args):
    if args.width is None or args.height is None:
        raise ConfigurationError("--width and --height are required to read event text files")
    return args.width, args.height


def _cmd_simulate(args):
    frames = event_io.read_frame_dir(args.frames, dt=args.dt)
    if args.sigma > 0:
        params = sample_thresholds(args.seed, args.theta_pos, args.theta_neg, args.sigma, args.k)
    else:
        params = _params(args)
    stream = simulate_events(frames, params, threads=args.threads)
    event_io.write_events_text(stream, args.output)
    print(
        f"events={len(stream)} width={stream.width} height={stream.height} "
        f"theta_pos={params.theta_pos:.9g} theta_neg={params.theta_neg:.9g} k={params.k:.9g}"
    )


def _keyframes_for(path, boundaries):
    path = Path(path)
    stamps = None if (path / event_io.TIMESTAMPS_FILE).exists() else boundaries[: len(list(path.glob("*.pgm")))]
    return event_io.read_frame_dir(path, timestamps=stamps)


def _cmd_reconstruct(args):
    w, h = _sensor(args)
    stream = event_io.read_events_text(args.events, w, h)
    bounds = event_io.read_boundaries(args.boundaries)
    keyframes = _keyframes_for(args.keyframes, bounds)
    frames, worst_overflow = [], 0.0
    for state, frame in iter_reconstruction(stream, keyframes, bounds, _params(args), args.reset_interval):
        frames.append(frame)
        worst_overflow = max(worst_overflow, state.overflow)
    event_io.write_frame_dir(frames, args.output)
    print(f"frames={len(frames)} max_overflow_fraction={worst_overflow:.6g}")


def _cmd_estimate(args):
    w, h = _sensor(args)
    stream = event_io.read_events_text(args.events, w, h)
    bounds = event_io.read_boundaries(args.boundaries)
    frames = event_io.read_frame_dir(args.frames, timestamps=bounds)
    obs = build_observations(frames, stream, args.max_rows, args.seed)
    result = fit_all(obs, (args.k_lo, args.k_hi))
    print(result.format_line())
    if args.report:
        lines = [result.format_line().replace(" ", "\n"), f"relative_rms={result.relative_rms:.9g}"]
        lines += [f"{key}={value}" for key, value in obs.meta.items()]
        args.report.write_text("\n".join(lines) + "\n")


def _cmd_voxelize(args):
    w, h = _sensor(args)
    stream = event_io.read_events_text(args.events, w, h)
    grid = encode_voxel_grid(stream, args.t0, args.t1, args.bins)
    write_voxel_file(grid, args.output)
    if args.normalize:
        out = args.output.with_name(args.output.stem + "_normalized" + args.output.suffix)
        write_voxel_file(normalized(grid), out)
    print(f"bins={grid.bins} height={grid.height} width={grid.width} sum={grid.values.sum():.9g}")


def _cmd_evaluate(args):
    recon = event_io.read_frame_dir(args.recon, dt=1)
    truth = event_io.read_frame_dir(args.truth, dt=1)
    report = evaluate_sequence(recon, truth)
    print(report.format_table(csv=args.csv))


def _cmd_roundtrip(args):
    if args.frames is not None:
        frames = event_io.read_frame_dir(args.frames, dt=args.dt)
    else:
        w = args.width or 240
        h = args.height or 180
        frames = moving_texture(args.n_frames, w, h, dt=args.dt, seed=args.seed)
    params = _params(args)
    started = time.perf_counter()
    stream = simulate_events(frames, params, threads=args.threads)
    bounds = [f.t for f in frames]
    recon, worst = [], 0.0
    for (state, frame), truth in zip(
        iter_reconstruction(stream, frames, bounds, params, args.reset_interval), frames[1:]
    ):
        worst = max(worst, float(np.abs(state.log_state - np.log(truth.pixels + params.k)).max()))
        recon.append(frame)
    report = evaluate_sequence(recon, frames[1:])
    elapsed = time.perf_counter() - started
    bound = params.max_threshold
    verdict = "PASS" if worst < bound else "FAIL"
    print(f"events={len(stream)} frames={len(recon)} seconds={elapsed:.3f}")
    print(f"max_log_residual={worst:.9g} bound={bound:.9g}")
    print(f"residual_bound: {verdict}")
    print(f"mean_mse={report.mean_mse:.6e} mean_ssim={report.mean_ssim:.6f}")


COMMANDS = {
    "simulate": _cmd_simulate,
    "reconstruct": _cmd_reconstruct,
    "estimate": _cmd_estimate,
    "voxelize": _cmd_voxelize,
    "evaluate": _cmd_evaluate,
    "roundtrip": _cmd_roundtrip,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_help())
        logging.basicConfig(
            level=logging.DEBUG if args.verbose else logging.WARNING,
            stream=sys.stderr,
            format="%(levelname)s %(name)s: %(message)s",
        )
        COMMANDS[args.command](_resolve(args))
    except SystemExit as exc:
        return int(exc.code or 0)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (EventReconError, OSError) as exc:
        print(f"eventrecon: error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        log.exception("internal error")
        return 2
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
