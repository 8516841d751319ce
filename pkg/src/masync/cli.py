"""Command-line entry points: embed, detect, attack, params, bench, corpus."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .attacks import apply_chain
from .bench import load_config, run_benchmark
from .core_signal import MAParams
from .corpus import DEFAULT_SEEDS, synth_clip
from .detector import DetectParams, detect
from .embedder import DEFAULT_CALIBRATION, SMOOTHING_MODES, EmbedParams, FrameLayout, embed_frames, explain_params
from .errors import MasyncError
from .metrics import snr_measured, snr_predicted
from .sync_codes import BitSequence, parse_code
from .wavio import read_wav, write_wav


def _ma_strength(args, clip) -> tuple[EmbedParams, list[str]]:
    given = [v is not None for v in (args.a, args.b, args.strength)]
    if all(given):
        return EmbedParams(MAParams(args.a, args.b), args.strength, args.smooth or 5), []
    if any(given):
        raise MasyncError("give all of --a, --b and --strength, or none of them to derive them")
    choice = explain_params(clip, DEFAULT_CALIBRATION, t_n=args.smooth or 5)
    return choice.params, choice.lines()


def cmd_embed(args) -> int:
    clip = read_wav(args.input)
    params, derivation = _ma_strength(args, clip)
    for line in derivation:
        print(line)
    sync = parse_code(args.sync)
    payload = parse_code(args.payload) if args.payload else BitSequence([])
    mode = args.mode or ("EC" if args.smooth else "EA")
    marked, rec = embed_frames(clip, FrameLayout(sync, payload, repeat=not args.once), params, mode)
    write_wav(args.output, marked)
    print(f"a={params.ma.a}")
    print(f"b={params.ma.b}")
    print(f"strength={params.s:g}")
    print(f"mode={mode}")
    print(f"codes_embedded={rec.codes_embedded}")
    print(f"frames_embedded={len(rec.frames)}")
    print(f"bits_embedded={rec.bits_embedded}")
    print(f"aborted_frames={rec.aborted_frames}")
    print(f"unplaced_payload_bits={rec.unplaced_payload_bits}")
    print(f"clamped_samples={rec.clamped_samples}")
    print(f"snr_measured={snr_measured(clip, marked):.4f}")
    print(f"snr_predicted={snr_predicted(clip, params.s):.4f}")
    return 0


def cmd_detect(args) -> int:
    clip = read_wav(args.input)
    params = DetectParams(MAParams(args.a, args.b), args.strength, parse_code(args.sync),
                          threshold=args.threshold, min_gap=args.min_gap, max_gap=args.max_gap)
    reference = parse_code(args.payload) if args.payload else None
    payload_len = args.payload_len if args.payload_len is not None else (len(reference) if reference else 0)
    report = detect(clip, params, payload_len=payload_len, reference=reference)
    for line in report.lines():
        print(line)
    return 0


def cmd_attack(args) -> int:
    clip = read_wav(args.input)
    attacked, labels = apply_chain(clip, args.spec)
    write_wav(args.output, attacked)
    print("attacks=" + " + ".join(labels))
    print(f"samples_in={len(clip)}")
    print(f"samples_out={len(attacked)}")
    return 0


def cmd_params(args) -> int:
    clip = read_wav(args.input)
    calib = args.calibrate if args.calibrate is not None else DEFAULT_CALIBRATION
    for line in explain_params(clip, calib, b_ratio=args.b_ratio).lines():
        print(line)
    return 0


def cmd_bench(args) -> int:
    report = run_benchmark(load_config(args.config))
    text = report.to_json() if args.format == "json" else report.to_text()
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 1 if report.errors and not report.rows else 0


def cmd_corpus(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for style, seed in DEFAULT_SEEDS.items():
        path = out / f"{style}.wav"
        write_wav(path, synth_clip(style, seed, args.seconds))
        print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="masync", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def ma_args(sp, required: bool):
        sp.add_argument("--a", type=int, required=required, help="short window length")
        sp.add_argument("--b", type=int, required=required, help="long window length")
        sp.add_argument("--strength", type=float, required=required, help="lattice step s")
        sp.add_argument("--sync", default="barker16", help="barker16, barkerN, mseq:K[:SEED], hex:... or bin:...")

    e = sub.add_parser("embed", help="embed sync codes (and an optional payload) into a WAV file")
    e.add_argument("--in", dest="input", required=True)
    e.add_argument("--out", dest="output", required=True)
    ma_args(e, required=False)
    e.add_argument("--payload", help="payload bits as hex:... or bin:...")
    e.add_argument("--smooth", type=int, metavar="TN", help="ramp length for boundary smoothing (implies mode EC)")
    e.add_argument("--mode", choices=sorted(SMOOTHING_MODES), help="EA none, EB payload only, EC everything")
    e.add_argument("--once", action="store_true", help="embed a single frame instead of tiling the clip")
    e.set_defaults(func=cmd_embed)

    d = sub.add_parser("detect", help="blind detection of sync codes in a WAV file")
    d.add_argument("--in", dest="input", required=True)
    ma_args(d, required=True)
    d.add_argument("--payload-len", type=int)
    d.add_argument("--payload", help="reference payload for a BER figure")
    d.add_argument("--threshold", type=int, help="matching bits required (default: all)")
    d.add_argument("--min-gap", type=int)
    d.add_argument("--max-gap", type=int)
    d.set_defaults(func=cmd_detect)

    a = sub.add_parser("attack", help="apply an attack chain to a WAV file")
    a.add_argument("--in", dest="input", required=True)
    a.add_argument("--out", dest="output", required=True)
    a.add_argument("--spec", action="append", required=True, help="e.g. awgn:55:seed=7; repeat to chain")
    a.set_defaults(func=cmd_attack)

    pa = sub.add_parser("params", help="derive a, b and s for a WAV file")
    pa.add_argument("--in", dest="input", required=True)
    pa.add_argument("--calibrate", action="append", help="calibration attack; repeat (default set if omitted)")
    pa.add_argument("--b-ratio", type=float, default=0.9)
    pa.set_defaults(func=cmd_params)

    b = sub.add_parser("bench", help="run a benchmark described by a config file")
    b.add_argument("--config", required=True)
    b.add_argument("--format", choices=("text", "json"), default="text")
    b.add_argument("--out", dest="output")
    b.set_defaults(func=cmd_bench)

    c = sub.add_parser("corpus", help="write the synthetic corpus as WAV files")
    c.add_argument("--out-dir", required=True)
    c.add_argument("--seconds", type=float, default=16.0)
    c.set_defaults(func=cmd_corpus)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (MasyncError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
