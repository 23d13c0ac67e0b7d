"""End-to-end acceptance checks, one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -s`` to see the summary lines.
"""

import time

import numpy as np

from eventrecon import _backend
from eventrecon.estimator import (
    ObservationSet,
    build_observations,
    fit_all,
    fit_thresholds_given_k,
    objective_gradient_check,
)
from eventrecon.event_io import (
    read_events_text,
    read_frame_pgm,
    write_events_text,
    write_frame_pgm,
)
from eventrecon.metrics import K1, evaluate_sequence, mse, ssim
from eventrecon.reconstructor import iter_reconstruction, reconstruct_sequence
from eventrecon.simulator import EventSimulator, simulate_events
from eventrecon.synthetic import moving_texture
from eventrecon.types import CameraParams, Event, EventStream, Frame
from eventrecon.voxelgrid import encode_voxel_grid


def verdict(number, title, ok, detail):
    print(f"\ncriterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}")
    return ok


def test_criterion_1_round_trip_fidelity():
    frames = moving_texture(100, 240, 180, seed=1)
    params = CameraParams(0.2, 0.2, 0.01)
    bounds = [f.t for f in frames]
    started = time.perf_counter()
    stream = simulate_events(frames, params, threads=1)
    worst, recon = 0.0, []
    for (state, frame), truth in zip(iter_reconstruction(stream, frames[:1], bounds, params), frames[1:]):
        worst = max(worst, float(np.abs(state.log_state - np.log(truth.pixels + params.k)).max()))
        recon.append(frame)
    elapsed = time.perf_counter() - started
    mean_mse = evaluate_sequence(recon, frames[1:]).mean_mse
    ok = verdict(
        1, "round-trip fidelity",
        worst < 0.2 and mean_mse < 1e-3 and elapsed < 10.0,
        f"max|dlog|={worst:.9f} (<0.2) mean_mse={mean_mse:.3e} (<1e-3) "
        f"runtime={elapsed:.2f}s (<10s, {_backend.BACKEND} backend) events={len(stream)}",
    )
    assert worst < 0.2
    assert elapsed < 10.0
    assert mean_mse < 1e-3
    assert ok


def test_criterion_2_telescoping_identity():
    rng = np.random.default_rng(2024)
    worst, counts = 0.0, []
    for _ in range(100):
        # high-contrast pixel values keep the number of frames per pixel modest
        tp, tn = rng.uniform(0.05, 0.3, 2)
        k = rng.uniform(0.001, 0.05)
        sim = EventSimulator(CameraParams(tp, tn, k))
        sim.feed(Frame([[rng.beta(0.2, 0.2)]], 0))
        start = float(sim.state.start_log[0])
        n, t = 0, 0
        while n < 10_000:
            t += 1000
            n += len(sim.feed(Frame([[rng.beta(0.2, 0.2)]], t)))
        state = sim.state
        displacement = tp * int(state.n_pos[0]) - tn * int(state.n_neg[0])
        worst = max(worst, abs(displacement - (float(state.ref_log[0]) - start)))
        counts.append(n)
    ok = verdict(2, "telescoping identity", worst < 1e-9,
                 f"max gap={worst:.3e} (<1e-9) over 100 pixels, {min(counts)}..{max(counts)} events each")
    assert ok


def beta_frames(n_frames, height, width, seed):
    """Independent high-contrast frames (beta(0.1, 0.1) pixels) at 10 ms spacing."""
    rng = np.random.default_rng(seed)
    return [Frame(rng.beta(0.1, 0.1, (height, width)), 10_000 * i) for i in range(n_frames)]


def test_criterion_3_estimator_recovery():
    rng = np.random.default_rng(3)
    # noise-free linear systems at fixed k
    exact_gap = 0.0
    for _ in range(20):
        tp, tn, k = rng.uniform(0.05, 0.5), rng.uniform(0.05, 0.5), rng.uniform(0.01, 0.5)
        e_pos = rng.integers(0, 4, 2000).astype(float)
        e_neg = rng.integers(0, 4, 2000).astype(float)
        f0 = rng.uniform(0, 1, 2000)
        f1 = np.exp(tp * e_pos - tn * e_neg) * (f0 + k) - k
        keep = (f1 >= 0) & (f1 <= 1)
        r = fit_thresholds_given_k(ObservationSet(e_pos[keep], e_neg[keep], f0[keep], f1[keep]), k)
        exact_gap = max(exact_gap, abs(r.params.theta_pos - tp), abs(r.params.theta_neg - tn))

    truth = CameraParams(0.2, 0.3, 0.1)
    frames = beta_frames(30, 60, 80, seed=0)
    obs = build_observations(frames, simulate_events(frames, truth))
    fit = fit_all(obs, (1e-3, 1.0))
    err_pos = abs(fit.params.theta_pos / truth.theta_pos - 1)
    err_neg = abs(fit.params.theta_neg / truth.theta_neg - 1)
    err_k = abs(fit.params.k / truth.k - 1)
    rows_ok = len(obs) >= 10_000 and fit.condition_flag == "well-posed"
    ok = verdict(
        3, "estimator recovery",
        exact_gap < 1e-9 and rows_ok and err_pos <= 0.05 and err_neg <= 0.05 and err_k <= 0.20,
        f"noise-free gap={exact_gap:.2e} (<1e-9); simulator rows={len(obs)} flag={fit.condition_flag} "
        f"theta_pos={fit.params.theta_pos:.4f} ({err_pos:.1%}, 5%) theta_neg={fit.params.theta_neg:.4f} "
        f"({err_neg:.1%}, 5%) k={fit.params.k:.4f} ({err_k:.1%}, 20%)",
    )
    assert exact_gap < 1e-9
    assert rows_ok
    assert err_k <= 0.20
    assert err_pos <= 0.05 and err_neg <= 0.05
    assert ok


def test_criterion_4_gradient_hygiene():
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(10, 500))
        obs = ObservationSet(rng.integers(0, 8, n), rng.integers(0, 8, n), rng.uniform(0, 1, n), rng.uniform(0, 1, n))
        params = CameraParams(rng.uniform(0.05, 0.5), rng.uniform(0.05, 0.5), rng.uniform(0.01, 0.5))
        worst = max(worst, objective_gradient_check(obs, params, h=1e-6))
    ok = verdict(4, "gradient hygiene", worst < 1e-5, f"max deviation={worst:.3e} (<1e-5) over 50 sets")
    assert ok


def test_criterion_5_voxel_conservation():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(0, 2000))
        w, h = 17, 11
        t = np.sort(rng.integers(0, 50_000, n))
        x, y = rng.integers(0, w, n), rng.integers(0, h, n)
        p = rng.choice([-1, 1], n)
        stream = EventStream(w, h, t, x, y, p, validate=False).sorted()
        grid = encode_voxel_grid(stream, 0, 50_000, int(rng.integers(1, 10)))
        worst = max(worst, abs(grid.values.sum() - p.sum()))
    mid = encode_voxel_grid(EventStream.from_events(1, 1, [Event(50, 0, 0, 1)]), 0, 100, 5).values[:, 0, 0]
    split = encode_voxel_grid(EventStream.from_events(1, 1, [Event(375, 0, 0, -1)]), 0, 1000, 5).values[:, 0, 0]
    hand_ok = mid.tolist() == [0, 0, 1, 0, 0] and split.tolist() == [0, -0.5, -0.5, 0, 0]
    ok = verdict(5, "voxel conservation", worst < 1e-9 and hand_ok,
                 f"max mass gap={worst:.3e} (<1e-9) over 100 streams; hand examples exact={hand_ok}")
    assert ok


def test_criterion_6_metrics_sanity():
    rng = np.random.default_rng(6)
    self_gap = max(abs(ssim(a, a) - 1) for a in (rng.uniform(0, 1, (40, 50)) for _ in range(10)))
    c1 = K1 ** 2
    const_gap = abs(ssim(np.zeros((20, 20)), np.ones((20, 20))) - c1 / (1 + c1))
    z = np.zeros((4, 4))
    half = z.copy()
    half[:2] = 0.5
    mse_ok = mse(z, z) == 0.0 and mse(z, np.ones((4, 4))) == 1.0 and mse(z, half) == 0.125
    ok = verdict(6, "metrics sanity", self_gap < 1e-9 and const_gap < 1e-8 and mse_ok,
                 f"|ssim(a,a)-1|={self_gap:.1e} (<1e-9) constant gap={const_gap:.1e} (<1e-8) mse exact={mse_ok}")
    assert ok


def test_criterion_7_io_round_trips(tmp_path):
    rng = np.random.default_rng(7)
    n = 5000
    stream = EventStream(
        346, 260, np.sort(rng.integers(0, 10**10, n)), rng.integers(0, 346, n), rng.integers(0, 260, n),
        rng.choice([-1, 1], n), validate=False,
    ).sorted()
    write_events_text(stream, tmp_path / "e.txt")
    events_ok = read_events_text(tmp_path / "e.txt", 346, 260) == stream
    frame = Frame(rng.uniform(0, 1, (61, 83)))
    write_frame_pgm(frame, tmp_path / "f.pgm")
    pgm_gap = float(np.abs(read_frame_pgm(tmp_path / "f.pgm").pixels - frame.pixels).max())
    ok = verdict(7, "I/O round trips", events_ok and pgm_gap <= 1 / 510,
                 f"events identical={events_ok}; pgm max gap={pgm_gap:.6f} (<=1/510={1 / 510:.6f})")
    assert ok


def test_criterion_8_zero_event_identity():
    rng = np.random.default_rng(8)
    exact = True
    for _ in range(20):
        key = Frame(rng.uniform(0, 1, (rng.integers(1, 30), rng.integers(1, 30))), 0)
        key = Frame(np.where(rng.uniform(size=key.shape) < 0.1, rng.choice([0.0, 1.0], key.shape), key.pixels), 0)
        params = CameraParams(*rng.uniform(0.05, 0.5, 2), rng.uniform(1e-3, 1.0))
        out = reconstruct_sequence(EventStream(key.width, key.height), [key], list(range(0, 60, 10)), params)
        exact &= all(np.array_equal(f.pixels, key.pixels) for f in out)
    ok = verdict(8, "zero-event identity", exact, f"bit-exact over 20 keyframes x 5 steps={exact}")
    assert ok
