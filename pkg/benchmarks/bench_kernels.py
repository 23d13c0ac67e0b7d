"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--frames 100] [--width 240] [--height 180] [--repeat 3]
"""

import argparse
import time

from eventrecon import _backend
from eventrecon.reconstructor import count_events
from eventrecon.simulator import simulate_events
from eventrecon.synthetic import moving_texture
from eventrecon.types import CameraParams
from eventrecon.voxelgrid import encode_voxel_grid


def best_of(repeat, fn):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--frames", type=int, default=100)
    ap.add_argument("--width", type=int, default=240)
    ap.add_argument("--height", type=int, default=180)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    frames = moving_texture(args.frames, args.width, args.height, seed=1)
    params = CameraParams(0.2, 0.2, 0.01)
    stream = simulate_events(frames, params)
    t0, t1 = frames[0].t, frames[-1].t
    bounds = [f.t for f in frames]
    print(f"{args.frames} frames of {args.width}x{args.height}, {len(stream)} events")

    cases = {
        "simulate": lambda b: simulate_events(frames, params, backend=b),
        "count": lambda b: [count_events(stream, a, c, backend=b) for a, c in zip(bounds, bounds[1:])],
        "voxelize": lambda b: encode_voxel_grid(stream, t0, t1, 5, backend=b),
    }
    backends = _backend.available()
    print(f"{'kernel':<10}" + "".join(f"{b:>12}" for b in backends) + (f"{'speedup':>10}" if len(backends) > 1 else ""))
    for name, fn in cases.items():
        secs = [best_of(args.repeat, lambda b=b: fn(b)) for b in backends]
        row = f"{name:<10}" + "".join(f"{s:>11.4f}s" for s in secs)
        if len(secs) > 1:
            row += f"{secs[1] / secs[0]:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
