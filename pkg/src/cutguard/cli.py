"""``cutguard`` command line: thin wrappers over the library, one subcommand per stage."""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from .calibrate import calibrate as fit_constants
from .classifier import PRESET_NAMES, load_config, preset, read_verdicts, save_config, write_verdicts, classify_stream
from .dataset import (STANDARD_LENGTHS, SourceVideo, SpliceSpec, read_corpus, splice,
                      standard_corpus, write_corpus, write_sample)
from .embed_io import read_masks, read_sequence, write_masks
from .errors import CutguardError, LengthMismatch
from .evaluate import evaluate_sample, report_tables
from .gate import DEFAULT_WRITE_PERIOD, apply_gate_to_masks, run_gate, write_trace
from .pipeline import UNGATED, run_corpus

DEFAULT_RUN_PRESETS = ("cutie", "xmem")


def _lengths(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad length list {text!r}")
    if not values or min(values) < 0:
        raise argparse.ArgumentTypeError("lengths must be non-negative integers")
    return values


def _config_from(args):
    """Config from ``--config`` or ``--preset``, with window flags applied on top."""
    if args.config:
        config = load_config(args.config)
    else:
        config = preset(args.preset or "cutie")
    if args.window_short is not None:
        config = replace(config, short_window=args.window_short)
    if args.window_long is not None:
        config = replace(config, long_window=args.window_long)
    return config


def _corpus_by_length(directory) -> dict[int, list]:
    grouped: dict[int, list] = {}
    for sample in read_corpus(directory).values():
        grouped.setdefault(sample.interjection_len, []).append(sample)
    if not grouped:
        raise CutguardError(f"{directory}: no samples found")
    return dict(sorted(grouped.items()))


def _write_tables(out, text, csv_text):
    print(text, end="")
    if out:
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, "tables.txt"), "w") as fh:
            fh.write(text)
        with open(os.path.join(out, "report.csv"), "w") as fh:
            fh.write(csv_text)


def cmd_synth(args):
    corpus = standard_corpus(args.lengths, args.samples, args.seed, prefix_len=args.prefix, suffix_len=args.suffix,
                             dim=args.dim, cross_video_gap=args.gap, within_video_step=args.step)
    ids = write_corpus(args.out, corpus)
    print(f"wrote {len(ids)} samples to {args.out}")


def cmd_splice(args):
    def source(directory):
        return SourceVideo(read_sequence(os.path.join(directory, "emb.bin")),
                           read_masks(os.path.join(directory, "mask.bin")), os.path.basename(directory.rstrip("/")))

    a, b = source(args.source_a), source(args.source_b)
    spec = SpliceSpec(args.prefix, args.suffix, args.length, a.name, b.name, args.seed)
    sample = splice(spec, a, b)
    write_sample(args.out, sample)
    print(f"wrote {len(sample)}-frame sample to {args.out}")


def cmd_detect(args):
    config = _config_from(args)
    verdicts = classify_stream(read_sequence(args.sequence), config)
    if args.out:
        write_verdicts(args.out, verdicts)
    flagged = sum(v.is_interjection for v in verdicts)
    print(f"{flagged} of {len(verdicts)} frames flagged as interjection")


def cmd_gate(args):
    frames = read_sequence(args.sequence)
    verdicts = read_verdicts(args.verdicts)
    buffer, trace = run_gate(frames, verdicts, args.write_period)
    os.makedirs(args.out, exist_ok=True)
    write_trace(os.path.join(args.out, "trace.txt"), trace)
    if args.masks:
        masks = read_masks(args.masks)
        write_masks(os.path.join(args.out, "mask.bin"), apply_gate_to_masks(masks, trace))
    print(f"memory holds frames {buffer.frame_indices}")


def cmd_eval(args):
    """Score ``<predictions>/<sample_id>.bin`` mask files against a corpus."""
    reports = []
    for sid, sample in read_corpus(args.corpus).items():
        path = os.path.join(args.predictions, sid + ".bin")
        preds = read_masks(path)
        if len(preds) != len(sample):
            raise LengthMismatch(f"{path}: {len(preds)} predictions for {len(sample)} frames")
        reports.append((args.name, sample.interjection_len, evaluate_sample(sample, preds)))
    if not reports:
        raise CutguardError(f"{args.corpus}: no samples found")
    _write_tables(args.out, *report_tables(reports))


def cmd_calibrate(args):
    template = _config_from(args)
    result = fit_constants(_corpus_by_length(args.corpus), template)
    save_config(args.out, result.config)
    status = "separable" if result.separable else "NOT separable"
    print(f"{status}: false positives {result.false_positive_count}, recall {result.recall:.4f}, "
          f"accuracy {result.train_accuracy:.4f}, margin {result.margin:.4g}; wrote {args.out}")


def cmd_run_all(args):
    if args.corpus:
        corpus = _corpus_by_length(args.corpus)
    else:
        lengths = sorted(set((0,) + tuple(args.lengths)))
        corpus = standard_corpus(lengths, args.samples, args.seed, prefix_len=args.prefix, suffix_len=args.suffix)
    configs = {UNGATED: None}
    if args.config:
        config = _config_from(args)
        configs[config.name + "+"] = config
    else:
        for name in [args.preset] if args.preset else DEFAULT_RUN_PRESETS:
            args.preset = name
            configs[name + "+"] = _config_from(args)
    rows = run_corpus(corpus, configs, write_period=args.write_period)
    _write_tables(args.out, *report_tables(rows))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cutguard", description="Interjection detection and memory gating toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        p = sub.add_parser(name, help=help)
        p.set_defaults(func=func)
        return p

    def corpus_shape(p):
        p.add_argument("--prefix", type=int, default=12)
        p.add_argument("--suffix", type=int, default=12)
        p.add_argument("--lengths", type=_lengths, default=STANDARD_LENGTHS)
        p.add_argument("--samples", type=int, default=25)
        p.add_argument("--seed", type=int, default=0)

    def classifier_source(p):
        p.add_argument("--preset", choices=PRESET_NAMES)
        p.add_argument("--config", help="classifier config file")
        p.add_argument("--window-short", type=int, default=None, help="short window (default 1)")
        p.add_argument("--window-long", type=int, default=None, help="long window (default 5)")

    p = add("synth", cmd_synth, "write a synthetic corpus")
    corpus_shape(p)
    p.add_argument("--dim", type=int, default=256)
    p.add_argument("--gap", type=float, default=10.0, help="cross-video gap per element")
    p.add_argument("--step", type=float, default=1.0, help="within-video drift step per element")
    p.add_argument("--out", required=True)

    p = add("splice", cmd_splice, "splice two source videos into one sample")
    p.add_argument("--source-a", required=True, help="directory with emb.bin and mask.bin")
    p.add_argument("--source-b", required=True)
    p.add_argument("--length", type=int, default=4, help="interjection length")
    p.add_argument("--prefix", type=int, default=12)
    p.add_argument("--suffix", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = add("detect", cmd_detect, "classify every frame of an embedding sequence")
    p.add_argument("sequence")
    classifier_source(p)
    p.add_argument("--out", help="verdict log path")

    p = add("gate", cmd_gate, "replay memory writes under a verdict log")
    p.add_argument("sequence")
    p.add_argument("--verdicts", required=True)
    p.add_argument("--masks", help="predicted masks to gate")
    p.add_argument("--write-period", type=int, default=DEFAULT_WRITE_PERIOD)
    p.add_argument("--out", required=True)

    p = add("eval", cmd_eval, "score predictions against a corpus")
    p.add_argument("corpus")
    p.add_argument("--predictions", required=True, help="directory of <sample_id>.bin mask files")
    p.add_argument("--name", default="model", help="row label in the tables")
    p.add_argument("--out")

    p = add("calibrate", cmd_calibrate, "fit the free constants of a config template")
    p.add_argument("corpus")
    classifier_source(p)
    p.add_argument("--out", required=True)

    p = add("run-all", cmd_run_all, "synthesize or load a corpus and print the report tables")
    p.add_argument("--corpus", help="corpus directory (default: synthesize one)")
    corpus_shape(p)
    classifier_source(p)
    p.add_argument("--write-period", type=int, default=DEFAULT_WRITE_PERIOD)
    p.add_argument("--out")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except CutguardError as exc:
        print(f"cutguard {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cutguard {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
