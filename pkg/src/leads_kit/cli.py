"""Command-line harness.

Subcommands: emulate (synthetic telemetry + paced loop), replay (stability
interventions over a recorded trip), analyze (trip/lap statistics), infer
(fill missing channels), pace-bench (pacing convergence trace), and a
serve/client pair demonstrating the framed transport. All commands read an
optional JSON config (--config or $LEADS_KIT_CONFIG).

Exit codes: 0 success, 1 runtime error, 2 configuration or usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import random
import signal
import sys
import threading
from typing import Any

from .analysis import CollisionVolume, bake, best_lap_index, default_volume, lap_stats, split_laps
from .comm import Client, Server
from .config import Config, load_config
from .emulate import CircuitEmulator, generate_trip, run_emulation
from .errors import ConfigError, InsufficientDataError, LeadsKitError
from .esc import SYSTEM_FUNCS, SYSTEMS, pipeline
from .inference import INFERENCE_NAMES, run_pipeline
from .model import Trip
from .pacer import SimulatedClock, WallClock, run_paced_loop

PROG = "leads-kit"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=PROG, description=__doc__)
    parser.add_argument("--config", help="JSON config path (default: $LEADS_KIT_CONFIG)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("emulate", help="generate a synthetic trip and run the paced loop")
    p.add_argument("--seed", type=int, help="emulation seed (default from config)")
    p.add_argument("--duration", type=float, help="seconds to run (default from config)")
    p.add_argument("--target-rate", type=float, help="target FPS (default from config)")
    p.add_argument("--output", help="JSONL path for the generated trip")
    p.add_argument("--simulate", action="store_true", help="run the loop on a simulated clock")
    p.add_argument("--uncapped", action="store_true", help="skip pacing and measure raw FPS")
    p.set_defaults(func=cmd_emulate)

    p = sub.add_parser("replay", help="stream a trip through the stability pipeline")
    p.add_argument("--input", required=True, help="trip JSONL path")
    p.add_argument("--output", help="intervention CSV path (default: stdout)")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("analyze", help="bake trip statistics and split laps")
    p.add_argument("--input", required=True, help="trip JSONL path")
    p.add_argument("--output-dir", default=".", help="directory for summary/laps/map files")
    p.add_argument("--lap-radius", type=float, default=10.0, help="collision volume radius, m")
    p.add_argument("--min-lap-duration", type=float, default=10.0, help="seconds between laps")
    p.add_argument("--start-lat", type=float, help="collision volume center latitude")
    p.add_argument("--start-lon", type=float, help="collision volume center longitude")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("infer", help="fill missing channels")
    p.add_argument("--input", required=True, help="trip JSONL path")
    p.add_argument("--output", required=True, help="filled trip JSONL path")
    p.add_argument("--provenance", help="sidecar JSON path (default: <output>.provenance.json)")
    p.add_argument("--cache-limit", type=int, help="max frames held per pass")
    p.add_argument(
        "names",
        nargs="+",
        metavar="inference",
        help=f"ordered inference names from: {', '.join(INFERENCE_NAMES)}",
    )
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("pace-bench", help="pacing convergence trace on a simulated clock")
    p.add_argument("--target-rate", type=float, help="target FPS (default from config)")
    p.add_argument("--duration", type=float, default=30.0, help="simulated seconds")
    p.add_argument("--seed", type=int, default=0, help="net-delay noise seed")
    p.add_argument("--net-delay-ms", type=float, default=3.2, help="mean frame work, ms")
    p.add_argument("--net-jitter-ms", type=float, default=1.0, help="frame work stddev, ms")
    p.add_argument("--output", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_pace_bench)

    p = sub.add_parser("serve", help="broadcast emulated frames to connected clients")
    p.add_argument("--count", type=int, help="stop after this many frames (default: run until Ctrl-C)")
    p.add_argument("--seed", type=int, help="emulation seed")
    p.add_argument("--target-rate", type=float, help="broadcast rate, FPS")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("client", help="print frames received from a server")
    p.add_argument("--count", type=int, help="exit after this many messages")
    p.set_defaults(func=cmd_client)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        return args.func(args, config)
    except ConfigError as exc:
        print(f"{PROG}: config error: {exc}", file=sys.stderr)
        return 2
    except LeadsKitError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"{PROG}: i/o error: {exc}", file=sys.stderr)
        return 1


def cmd_emulate(args: argparse.Namespace, config: Config) -> int:
    seed = config.emulation.seed if args.seed is None else args.seed
    duration = config.emulation.duration if args.duration is None else args.duration
    target_rate = config.pacer.target_rate if args.target_rate is None else args.target_rate
    trip = generate_trip(seed, duration, noise=config.emulation.noise)
    output = args.output or os.path.join(config.paths.output_dir, "emulated.jsonl")
    trip.save_jsonl(output)
    print(f"wrote {len(trip)} frames to {output}")
    clock = SimulatedClock() if args.simulate else None
    result = run_emulation(
        config,
        duration=duration,
        target_rate=target_rate,
        seed=seed,
        clock=clock,
        uncapped=args.uncapped,
    )
    mode = "uncapped" if args.uncapped else f"target {target_rate:g} FPS"
    print(f"emulation loop: {result.frames} frames, {result.fps:.2f} FPS ({mode})")
    return 0


def cmd_replay(args: argparse.Namespace, config: Config) -> int:
    trip = Trip.load_jsonl(args.input)
    rows: list[list[Any]] = []
    for frame in trip:
        for name in SYSTEMS:
            try:
                result = SYSTEM_FUNCS[name](config.vehicle, config.esc_calibration, frame, config.esc)
            except InsufficientDataError:
                continue
            if not result.is_noop:
                rows.append(_intervention_row(frame.t, result))
        combined = pipeline(config.vehicle, config.esc_calibration, frame, config.esc)
        rows.append(_intervention_row(frame.t, combined))
    _write_csv(
        args.output,
        ["t", "system", "throttle_scale", "brake_scale", "brake_add", "reason"],
        rows,
    )
    return 0


def _intervention_row(t: float, result) -> list[Any]:
    return [t, result.source, result.throttle_scale, result.brake_scale, result.brake_add, result.reason]


def cmd_analyze(args: argparse.Namespace, config: Config) -> int:
    trip = Trip.load_jsonl(args.input)
    summary = bake(trip)
    if args.start_lat is not None and args.start_lon is not None:
        volume = CollisionVolume(args.start_lat, args.start_lon, args.lap_radius, args.min_lap_duration)
    else:
        volume = default_volume(trip, args.lap_radius, args.min_lap_duration)
    split = split_laps(trip, volume)
    stats = lap_stats(trip, split)
    best = best_lap_index(stats)

    os.makedirs(args.output_dir, exist_ok=True)
    summary_path = os.path.join(args.output_dir, "summary.json")
    with open(summary_path, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "frames": summary.frame_count,
                "duration_s": summary.duration,
                "total_mileage_km": summary.total_mileage_km,
                "laps": len(split.laps),
                "best_lap": best,
                "channels": {
                    name: {
                        "min": s.minimum,
                        "max": s.maximum,
                        "mean": s.mean,
                        "count": s.count,
                    }
                    for name, s in sorted(summary.channel_stats.items())
                },
            },
            fh,
            indent=2,
        )
        fh.write("\n")

    laps_path = os.path.join(args.output_dir, "laps.csv")
    _write_csv(
        laps_path,
        ["lap", "start_t", "duration_s", "distance_km", "speed_min", "speed_max", "speed_mean"],
        [
            [s.index, s.start_t, s.duration, s.distance_km, s.speed_min, s.speed_max, s.speed_mean]
            for s in stats
        ],
    )

    map_path = os.path.join(args.output_dir, "map.geojson")
    with open(map_path, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "type": "Feature",
                "properties": {"name": trip.name},
                "geometry": {
                    "type": "LineString",
                    "coordinates": [[lon, lat] for lat, lon in summary.map_polyline],
                },
            },
            fh,
        )
        fh.write("\n")

    print(f"wrote {summary_path}, {laps_path}, {map_path} ({len(split.laps)} laps)")
    return 0


def cmd_infer(args: argparse.Namespace, config: Config) -> int:
    trip = Trip.load_jsonl(args.input)
    filled, provenance = run_pipeline(trip, args.names, cache_limit=args.cache_limit)
    filled.save_jsonl(args.output)
    sidecar = args.provenance or f"{args.output}.provenance.json"
    with open(sidecar, "w", encoding="utf-8") as fh:
        json.dump(provenance, fh, indent=2)
        fh.write("\n")
    print(f"wrote {args.output} and {sidecar}")
    return 0


def cmd_pace_bench(args: argparse.Namespace, config: Config) -> int:
    target_rate = config.pacer.target_rate if args.target_rate is None else args.target_rate
    rng = random.Random(args.seed)
    mean_s = args.net_delay_ms / 1000.0
    jitter_s = args.net_jitter_ms / 1000.0
    clock = SimulatedClock()

    def frame_work(_t: float) -> float:
        return max(0.0, rng.gauss(mean_s, jitter_s))

    trace = run_paced_loop(target_rate, frame_work, clock, args.duration)
    _write_csv(
        args.output,
        ["t", "instantaneous_rate", "avg_net_delay_ms"],
        [[s.t, f"{s.rate:.4f}", f"{s.avg_net_ms:.4f}"] for s in trace.samples],
    )
    return 0


def cmd_serve(args: argparse.Namespace, config: Config) -> int:
    seed = config.emulation.seed if args.seed is None else args.seed
    rate = config.pacer.target_rate if args.target_rate is None else args.target_rate
    stop = threading.Event()
    received_from: set[str] = set()

    def on_connect(conn) -> None:
        print(f"client connected: {conn.label}")

    def on_receive(conn, message: bytes) -> None:
        received_from.add(conn.label)
        print(f"<- {conn.label}: {message.decode('utf-8', 'replace')}")

    def on_disconnect(conn) -> None:
        print(f"client disconnected: {conn.label}")

    server = Server(on_connect, on_receive, on_disconnect, separator=config.comm.separator)
    server.serve(config.comm.port, config.comm.host, config.comm.pool_size)
    print(f"serving on {config.comm.host}:{server.port} (Ctrl-C to stop)")

    def handle_sigint(_sig, _frame) -> None:
        stop.set()

    try:
        signal.signal(signal.SIGINT, handle_sigint)
    except ValueError:
        pass  # not the main thread (tests)

    emulator = CircuitEmulator(seed=seed, noise=config.emulation.noise)
    sent = 0
    try:
        wall = WallClock()
        clock_start = wall.now()
        while not stop.is_set() and (args.count is None or sent < args.count):
            t = wall.now() - clock_start
            frame = emulator.frame_at(t)
            payload = json.dumps(frame.to_json_dict()).encode("utf-8")
            server.broadcast(payload)
            sent += 1
            wall.sleep(1.0 / rate)
    finally:
        server.close()
    print(f"served {sent} frames, shutting down")
    return 0


def cmd_client(args: argparse.Namespace, config: Config) -> int:
    done = threading.Event()
    count = 0
    lock = threading.Lock()

    def on_receive(_conn, message: bytes) -> None:
        nonlocal count
        print(message.decode("utf-8", "replace"))
        with lock:
            count += 1
            if args.count is not None and count >= args.count:
                done.set()

    def on_disconnect(_conn) -> None:
        print("disconnected", file=sys.stderr)
        done.set()

    client = Client(None, on_receive, on_disconnect, separator=config.comm.separator)
    client.connect(config.comm.host, config.comm.port)
    try:
        while not done.wait(timeout=0.2):
            pass
    except KeyboardInterrupt:
        pass
    finally:
        client.close()
    return 0


def _write_csv(path: str | None, header: list[str], rows: list[list[Any]]) -> None:
    if path is None:
        writer = csv.writer(sys.stdout)
        writer.writerow(header)
        writer.writerows(rows)
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


if __name__ == "__main__":
    sys.exit(main())
