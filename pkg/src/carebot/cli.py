"""Command line entry points: scenario runs, log replay, thermal corpus
generation, and the serve stack."""

from __future__ import annotations

import argparse
import json
import signal
import socket
import sys
import threading
import time
from pathlib import Path

import numpy as np

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class LogCorrupt(Exception):
    def __init__(self, line_no: int, detail: str):
        self.line_no = line_no
        super().__init__(f"log corrupt at line {line_no}: {detail}")


def cmd_run(args) -> int:
    from .runner import FailureConfig, run_scenario, write_report
    from .simworld.scenario import ConfigInvalid

    try:
        failures = FailureConfig.from_file(args.failures) if args.failures else None
        progress = None
        if args.verbose:
            def progress(t, action):
                print(f"[t={t:12.1f}] {action}", file=sys.stderr)
        report = run_scenario(args.scenario, days=args.days, seed=args.seed,
                              failures=failures, progress=progress)
    except ConfigInvalid as e:
        for d in e.details:
            print(f"config error: {d}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:
        print(f"runtime failure: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    text = write_report(report, args.report)
    print(text, end="")
    return EXIT_OK


def cmd_replay(args) -> int:
    from .runtime.bus import MessageBus

    if args.speed <= 0:
        print("config error: --speed must be > 0", file=sys.stderr)
        return EXIT_CONFIG
    path = Path(args.log)
    if not path.exists():
        print(f"config error: no such log {path}", file=sys.stderr)
        return EXIT_CONFIG
    bus = MessageBus()
    count = 0
    last_stamp = None
    try:
        with open(path) as f:
            for i, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                if not line.endswith("\n"):
                    raise LogCorrupt(i, "truncated line")
                try:
                    row = json.loads(line)
                    stamp = float(row["stamp"])
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                    raise LogCorrupt(i, str(e))
                if last_stamp is not None and stamp > last_stamp:
                    time.sleep((stamp - last_stamp) / args.speed)
                last_stamp = stamp
                topic = row.get("topic", "replay/event")
                bus.publish(topic, row, publisher="replay", stamp=stamp)
                print(f"[{stamp:12.3f}] {topic}: "
                      f"{json.dumps({k: v for k, v in row.items() if k not in ('stamp', 'topic')}, sort_keys=True)}")
                count += 1
    except LogCorrupt as e:
        print(f"runtime failure: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"replayed {count} events", file=sys.stderr)
    return EXIT_OK


def cmd_gen_thermal_corpus(args) -> int:
    from .perception.thermal import make_synthetic_frame

    if args.n <= 0:
        print("config error: --n must be > 0", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    labels = []
    n_elevated = int(round(args.n * args.elevated))
    for i in range(args.n):
        elevated = i < n_elevated
        temp = args.baseline + (args.delta if elevated else 0.0) \
            + float(rng.normal(0.0, args.scatter))
        glasses = bool(rng.random() < args.glasses)
        frame, face = make_synthetic_frame(temp, glasses, rng, stamp=float(i))
        frame.save(out / f"frame_{i:04d}.bin")
        labels.append({"index": i, "temp_k": round(temp, 4), "elevated": elevated,
                       "glasses": glasses,
                       "inner_eye_points": face.inner_eye_points,
                       "forehead_region": face.forehead_region,
                       "bbox": face.bbox})
    (out / "labels.json").write_text(json.dumps(
        {"baseline_k": args.baseline, "delta_k": args.delta, "seed": args.seed,
         "frames": labels}, indent=2, sort_keys=True) + "\n")
    print(f"wrote {args.n} frames ({n_elevated} elevated) to {out}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .app import Stack
    from .executive.calendar import CalendarStore
    from .rules.parser import parse
    from .runtime.api import create_api
    from .runtime.bus import BusTCPServer
    from .runtime.service import StackRuntime
    from .simworld.scenario import ConfigInvalid, load_scenario_file, parse_scenario_text

    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((args.host, args.port))
        probe.close()
    except OSError:
        print(f"config error: port {args.port} in use", file=sys.stderr)
        return EXIT_CONFIG

    try:
        world = load_scenario_file(args.scenario)
        cfg = parse_scenario_text(Path(args.scenario).read_text())
    except ConfigInvalid as e:
        for d in e.details:
            print(f"config error: {d}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    data_dir = Path(args.data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    calendar = CalendarStore(data_dir / "calendar.json")
    for entry in cfg.get("calendar") or []:
        from .executive.calendar import CalendarEntry
        calendar.upsert(CalendarEntry(**entry))
    stack = Stack(world, rulebase=parse(cfg.get("rules", "")), calendar=calendar,
                  motion="drive")
    runtime = StackRuntime(stack, data_dir / "logs")

    tokens = {}
    if args.tokens:
        tokens = json.loads(Path(args.tokens).read_text())
    else:
        tokens = {"operator-token": "operator", "admin-token": "admin"}
        print("using default tokens: operator-token (operator), "
              "admin-token (admin)", file=sys.stderr)
    app = create_api(runtime, tokens)

    bus_server = BusTCPServer(runtime.bus, host=args.host, port=args.bus_port)
    bus_server.start()
    print(f"bus: ndjson tcp on {args.host}:{bus_server.port}", file=sys.stderr)

    stop = threading.Event()

    def sim_loop():
        # real-time pacing: one SIM_DT tick per SIM_DT of wall time
        from .simworld.world import SIM_DT
        next_t = time.monotonic()
        while not stop.is_set():
            runtime.tick()
            next_t += SIM_DT / args.time_scale
            delay = next_t - time.monotonic()
            if delay > 0:
                time.sleep(delay)
            else:
                next_t = time.monotonic()

    sim_thread = threading.Thread(target=sim_loop, daemon=True)
    sim_thread.start()

    config = uvicorn.Config(app, host=args.host, port=args.port, log_level="warning")
    server = uvicorn.Server(config)

    def shutdown(*_):
        stop.set()
        server.should_exit = True

    signal.signal(signal.SIGINT, shutdown)
    signal.signal(signal.SIGTERM, shutdown)
    print(f"gateway: http://{args.host}:{args.port}", file=sys.stderr)
    server.run()
    stop.set()
    sim_thread.join(timeout=2.0)
    bus_server.stop()
    print("shut down cleanly", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="carebot",
                                description="care-facility robot stack tools")
    sub = p.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="headless scenario run with report")
    runp.add_argument("scenario")
    runp.add_argument("--days", type=float, default=1.0)
    runp.add_argument("--seed", type=int, default=0)
    runp.add_argument("--failures", default=None,
                      help="failure-injection config (YAML/JSON)")
    runp.add_argument("--report", default=None, help="write report JSON here")
    runp.add_argument("--verbose", action="store_true")
    runp.set_defaults(fn=cmd_run)

    rep = sub.add_parser("replay", help="re-emit a JSON-lines log onto a local bus")
    rep.add_argument("log")
    rep.add_argument("--speed", type=float, default=1000000.0)
    rep.set_defaults(fn=cmd_replay)

    gen = sub.add_parser("gen-thermal-corpus", help="synthetic screening corpus")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--baseline", type=float, default=309.0)
    gen.add_argument("--elevated", type=float, default=0.1,
                     help="fraction of elevated subjects")
    gen.add_argument("--delta", type=float, default=1.5,
                     help="temperature excess of elevated subjects, kelvin")
    gen.add_argument("--scatter", type=float, default=0.25,
                     help="within-cohort temperature stddev, kelvin")
    gen.add_argument("--glasses", type=float, default=0.3,
                     help="fraction wearing glasses")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", default="thermal_corpus")
    gen.set_defaults(fn=cmd_gen_thermal_corpus)

    srv = sub.add_parser("serve", help="run the full stack with the HTTP gateway")
    srv.add_argument("scenario")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8080)
    srv.add_argument("--bus-port", type=int, default=0)
    srv.add_argument("--tokens", default=None, help="JSON file token -> role")
    srv.add_argument("--data-dir", default="carebot_data")
    srv.add_argument("--time-scale", type=float, default=1.0,
                     help="sim seconds per wall second")
    srv.set_defaults(fn=cmd_serve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
