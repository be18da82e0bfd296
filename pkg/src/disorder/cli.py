"""Command-line front end.

Exit codes: 0 success, 1 runtime error, 2 usage error.  All randomness
flows from --seed; data artifacts are byte-reproducible for a fixed seed
on the sim device (timestamps live only in store manifests).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import channel as channel_mod
from . import fingerprint as fp_mod
from . import report as report_mod
from .archaware import (
    CacheGeometry,
    FrameDecoder,
    FrameLayout,
    SimChannel,
    encode_frame,
)
from .fuzz import CampaignPlan, run_campaign
from .litmus import build_test
from .runner import BasicParams, observation_stream
from .simdevice import SimDevice, parse_device
from .stress import stress_process_main


def _default_out(args_out):
    return args_out or os.environ.get("DISORDER_RESULTS") or "results"


def _bits_argument(args) -> str:
    if args.bits:
        if not set(args.bits) <= {"0", "1"}:
            raise ValueError("--bits takes a 0/1 string; use --ascii for text")
        return args.bits
    if args.ascii:
        return channel_mod.ascii_to_bits(args.ascii)
    if args.bits_file:
        with open(args.bits_file, "r", encoding="utf-8") as fh:
            text = fh.read().strip()
        return text
    raise ValueError("one of --bits/--ascii/--bits-file is required")


def _load_profile(spec: str) -> channel_mod.SignalProfile:
    if spec in channel_mod.PRESET_NAMES:
        return channel_mod.load_preset(spec)
    return channel_mod.SignalProfile.load(spec)


def _hw_stream(profile: channel_mod.SignalProfile, seed: int):
    rng = np.random.default_rng(seed)
    test = build_test(profile.test)
    buffer_len = 16384
    idx_x = int(rng.integers(0, buffer_len))
    idx_y = (idx_x + 1 + int(rng.integers(0, buffer_len - 1))) % buffer_len
    params = BasicParams(index_x=idx_x, index_y=idx_y, buffer_len=buffer_len,
                         iterations=profile.iterations_per_sample)
    return observation_stream(test, params)


# ---------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------

def cmd_fuzz(args) -> int:
    with open(args.plan, "r", encoding="utf-8") as fh:
        plan = CampaignPlan.from_json(fh.read())
    if args.seed is not None:
        plan.seed = args.seed
    kind, script = parse_device(args.device)
    device = None
    if kind == "sim":
        device = SimDevice(script, seed=plan.seed)
    store = report_mod.ResultsStore(_default_out(args.out), seed=plan.seed,
                                    device=args.device or "hw")
    result = run_campaign(plan, store=store, device=device)
    store.record_event(f"campaign finished: {result.total_trials} trials"
                       + (" (truncated)" if result.truncated else ""))
    print(report_mod.report_markdown(result), end="")
    print(f"results written to {store.root}")
    return 0


def cmd_stress(args) -> int:
    cfg = json.loads(args.config_json) if args.config_json else {}
    for key in ("line_size", "thread_offset", "iterations_per_line", "stride",
                "num_threads", "buffer_bytes", "loop_iterations"):
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    if args.pattern:
        cfg["pattern"] = [1 if c in "sS1" else 0 for c in args.pattern]
    return stress_process_main(args.kind, cfg, args.duration)


def cmd_channel_send(args) -> int:
    bits = _bits_argument(args)
    profile = _load_profile(args.profile)
    if args.device and args.device.startswith("sim:"):
        script = channel_mod.build_sim_script(bits, profile, seed=args.seed or 0)
        script.save(args.device[len("sim:"):])
        print(f"{len(bits)} bits scripted to {args.device[len('sim:'):]}")
        return 0
    from .stress import config_from_dict
    if not (profile.high_stress and profile.low_stress):
        raise ValueError("profile carries no stress configs for hardware send")
    sent = channel_mod.send_bits(
        bits,
        config_from_dict(profile.high_stress),
        config_from_dict(profile.low_stress),
        symbol_seconds=args.symbol_seconds,
    )
    print(f"sent {sent} bits")
    return 0


def cmd_channel_recv(args) -> int:
    profile = _load_profile(args.profile)
    kind, script = parse_device(args.device)
    if kind == "sim":
        stream = SimDevice(script, seed=args.seed)
    else:
        stream = _hw_stream(profile, args.seed or 0)
    result = channel_mod.receive(stream, profile, max_bits=args.max_bits)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(result.bits + "\n")
    flag = " (truncated mid-symbol)" if result.truncated else ""
    print(f"decoded {len(result.bits)} bits to {args.out}{flag}")
    return 0


def cmd_fingerprint_collect(args) -> int:
    kind, script = parse_device(args.device)
    if kind == "sim":
        device = SimDevice(script, seed=args.seed)
        observations = device.sample_condition(args.label, args.n)
        complete = True
    else:
        profile = channel_mod.load_preset("x86")
        observations, complete = fp_mod.collect_class(
            _hw_stream(profile, args.seed or 0), args.n)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, f"{args.label}.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("observation\n")
        for v in observations:
            fh.write(f"{float(v)!r}\n")
    manifest_path = os.path.join(args.out, "dataset.json")
    manifest = {"n_train": args.n // 2, "classes": [], "meta": {"device": args.device or "hw"}}
    if os.path.exists(manifest_path):
        with open(manifest_path, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
    if args.label not in manifest["classes"]:
        manifest["classes"].append(args.label)
        manifest["classes"].sort()
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    status = "" if complete else " (partial: source ended early)"
    print(f"collected {len(observations)} observations for {args.label}{status}")
    return 0


def cmd_fingerprint_eval(args) -> int:
    dataset = fp_mod.FingerprintDataset.load(args.ds)
    sizes = tuple(int(s) for s in args.sizes.split(","))
    result = fp_mod.evaluate(dataset, sizes=sizes, trials=args.trials,
                             seed=args.seed or 0)
    for z in sizes:
        print(f"sample size {z}: overall {100 * result.overall[z]:.1f}%")
        for label in dataset.labels:
            print(f"  {label}: {100 * result.accuracy[z][label]:.1f}%")
    if args.out:
        payload = {
            "sizes": list(sizes),
            "trials": args.trials,
            "overall": {str(z): result.overall[z] for z in sizes},
            "accuracy": {str(z): result.accuracy[z] for z in sizes},
            "confusion": {str(z): result.confusion[z] for z in sizes},
        }
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def cmd_fingerprint_watch(args) -> int:
    kind, script = parse_device(args.device)
    if kind == "sim":
        stream = SimDevice(script, seed=args.seed)
        clock = None
    else:
        profile = channel_mod.load_preset("x86")
        stream = _hw_stream(profile, args.seed or 0)
        clock = fp_mod.watch_clock()
    series = fp_mod.capture_timeseries(stream, n_samples=args.samples,
                                       interval_iterations=args.interval,
                                       clock=clock)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(series.to_csv())
    print(f"captured {len(series.samples)} samples to {args.out}")
    return 0


def cmd_archaware_send(args) -> int:
    layout = FrameLayout(geo=CacheGeometry.parse(args.geometry),
                         frame_iterations=args.frame_iters)
    bits = _bits_argument(args)
    frames = [bits[i:i + layout.data_bits]
              for i in range(0, len(bits), layout.data_bits)]
    if args.device and args.device.startswith("sim:"):
        medium = {
            "geometry": args.geometry,
            "frame_iterations": args.frame_iters,
            "expected_bits": len(bits),
            "frames": [encode_frame(fb, layout, i) for i, fb in enumerate(frames)],
        }
        path = args.device[len("sim:"):]
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(medium, fh, sort_keys=True)
            fh.write("\n")
        print(f"{len(bits)} bits in {len(frames)} frames written to {path}")
        return 0
    from .archaware import hw_send_frame
    buf = np.zeros(layout.geo.ways * layout.geo.way_stride // 4, dtype=np.int32)
    for i, fb in enumerate(frames):
        hw_send_frame(buf, fb, layout, i, repeats=args.repeats)
    print(f"issued {len(frames)} hardware frames (experimental)")
    return 0


def cmd_archaware_recv(args) -> int:
    if not (args.device and args.device.startswith("sim:")):
        raise ValueError("archaware recv currently decodes sim mediums; "
                         "hardware capture is via `archaware poll`")
    path = args.device[len("sim:"):]
    with open(path, "r", encoding="utf-8") as fh:
        medium = json.load(fh)
    layout = FrameLayout(geo=CacheGeometry.parse(medium["geometry"]),
                         frame_iterations=int(medium["frame_iterations"]))
    sim = SimChannel(layout, seed=args.seed or 0)
    decoder = FrameDecoder(layout, expected_bits=int(medium["expected_bits"]),
                           polls_per_frame=2)
    for stores in medium["frames"]:
        for _ in range(2):
            sim.apply_stores(stores)
            decoder.offer(sim.poll_counts())
            if decoder.done:
                break
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(decoder.bits() + "\n")
    print(f"decoded {len(decoder.bits())} bits to {args.out}")
    return 0


def cmd_archaware_poll(args) -> int:
    from .archaware import hw_poll_counts
    layout = FrameLayout(geo=CacheGeometry.parse(args.geometry),
                         frame_iterations=args.frame_iters)
    counts = hw_poll_counts(layout)
    print(",".join(str(c) for c in counts))
    return 0


def cmd_report(args) -> int:
    if args.mode == "hist":
        if not args.runs:
            raise ValueError("report hist needs --runs")
        values = report_mod.runs_csv_reorders(args.runs)
        text = report_mod.histogram_csv(values, bins=args.bins)
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
            print(f"histogram written to {args.out}")
        else:
            print(text, end="")
        return 0
    if not args.campaign:
        raise ValueError("report needs --campaign dir/ (or the hist mode)")
    trials_csv = os.path.join(args.campaign, "trials.csv")
    if not os.path.exists(trials_csv):
        print("empty store: no trials.csv to report on", file=sys.stderr)
        return 1
    result = report_mod.report_from_trials_csv(trials_csv)
    print(report_mod.report_markdown(result), end="")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report_mod.report_csv(result))
    return 0


# ---------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------

def _common(parser):
    """--seed/--device/--out are valid before or after the subcommand."""
    suppress = argparse.SUPPRESS
    parser.add_argument("--seed", type=int, default=suppress,
                        help="global RNG seed")
    parser.add_argument("--device", default=suppress,
                        help="'hw' or 'sim:script.json' (default hw)")
    parser.add_argument("--out", default=suppress,
                        help="output path/dir (default $DISORDER_RESULTS or ./results)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="disorder",
        description="Memory re-ordering side-channel lab toolkit")
    parser.add_argument("--seed", type=int, default=None, help="global RNG seed")
    parser.add_argument("--device", default=None,
                        help="'hw' or 'sim:script.json' (default hw)")
    parser.add_argument("--out", default=None,
                        help="output path/dir (default $DISORDER_RESULTS or ./results)")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("fuzz", help="run a fuzzing campaign from a plan")
    p.add_argument("--plan", required=True)
    _common(p)
    p.set_defaults(func=cmd_fuzz)

    p = sub.add_parser("stress", help="run a stressor until killed")
    p.add_argument("kind", choices=["memory", "thread-launch"])
    p.add_argument("--config-json", default=None)
    p.add_argument("--duration", type=float, default=None)
    p.add_argument("--line-size", dest="line_size", type=int)
    p.add_argument("--thread-offset", dest="thread_offset", type=int)
    p.add_argument("--iterations-per-line", dest="iterations_per_line", type=int)
    p.add_argument("--stride", type=int)
    p.add_argument("--pattern", help="load/store sequence, e.g. 'lss'")
    p.add_argument("--num-threads", dest="num_threads", type=int)
    p.add_argument("--buffer-bytes", dest="buffer_bytes", type=int)
    p.add_argument("--loop-iterations", dest="loop_iterations", type=int)
    _common(p)
    p.set_defaults(func=cmd_stress)

    p = sub.add_parser("channel", help="covert channel")
    chan = p.add_subparsers(dest="mode")
    ps = chan.add_parser("send")
    ps.add_argument("--bits")
    ps.add_argument("--ascii")
    ps.add_argument("--bits-file")
    ps.add_argument("--profile", required=True)
    ps.add_argument("--symbol-seconds", type=float, default=1.0)
    _common(ps)
    ps.set_defaults(func=cmd_channel_send)
    pr = chan.add_parser("recv")
    pr.add_argument("--profile", required=True)
    pr.add_argument("--max-bits", type=int, default=None)
    _common(pr)
    pr.set_defaults(func=cmd_channel_recv)

    p = sub.add_parser("fingerprint", help="application fingerprinting")
    fp = p.add_subparsers(dest="mode")
    pc = fp.add_parser("collect")
    pc.add_argument("--label", required=True)
    pc.add_argument("--n", type=int, default=4000)
    _common(pc)
    pc.set_defaults(func=cmd_fingerprint_collect)
    pe = fp.add_parser("eval")
    pe.add_argument("--ds", required=True)
    pe.add_argument("--sizes", default="30,100")
    pe.add_argument("--trials", type=int, default=1000)
    _common(pe)
    pe.set_defaults(func=cmd_fingerprint_eval)
    pw = fp.add_parser("watch")
    pw.add_argument("--samples", type=int, default=1000)
    pw.add_argument("--interval", type=int, default=1000)
    _common(pw)
    pw.set_defaults(func=cmd_fingerprint_watch)

    p = sub.add_parser("archaware", help="cache-set-aware channel")
    aa = p.add_subparsers(dest="mode")
    pa = aa.add_parser("send")
    pa.add_argument("--bits")
    pa.add_argument("--ascii")
    pa.add_argument("--bits-file")
    pa.add_argument("--geometry", default="48k:12:64")
    pa.add_argument("--frame-iters", type=int, default=15)
    pa.add_argument("--repeats", type=int, default=1)
    _common(pa)
    pa.set_defaults(func=cmd_archaware_send)
    pb = aa.add_parser("recv")
    pb.add_argument("--geometry", default="48k:12:64")
    pb.add_argument("--frame-iters", type=int, default=15)
    _common(pb)
    pb.set_defaults(func=cmd_archaware_recv)
    pp = aa.add_parser("poll")
    pp.add_argument("--geometry", default="48k:12:64")
    pp.add_argument("--frame-iters", type=int, default=15)
    _common(pp)
    pp.set_defaults(func=cmd_archaware_poll)

    p = sub.add_parser("report", help="aggregate reports and histograms")
    p.add_argument("mode", nargs="?", default="campaign",
                   choices=["campaign", "hist"])
    p.add_argument("--campaign")
    p.add_argument("--runs")
    p.add_argument("--bins", type=int, default=30)
    _common(p)
    p.set_defaults(func=cmd_report)

    return parser


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return 2
    # subcommand defaults for file-writing commands
    if getattr(args, "out", None) is None and args.command in ("channel", "fingerprint"):
        mode = getattr(args, "mode", None)
        defaults = {"recv": "bits.txt", "collect": "dataset",
                    "eval": None, "watch": "series.csv"}
        args.out = defaults.get(mode)
    if args.command == "archaware" and getattr(args, "mode", None) == "recv" \
            and args.out is None:
        args.out = "bits.txt"
    try:
        return args.func(args)
    except (ValueError, KeyError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch())
