"""Command line driver.

Subcommands: simulate (scene file -> RIR WAV), dereverb (batch pipeline),
benchmark (ensemble over randomized source positions), metrics (score an
estimate WAV against a target WAV).  Exit codes: 0 success, 1 partial
failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import pipeline, roomsim, wavio
from .metrics import fwssnr, segsnr
from .selection import SelectionCriterion


def _parse_criterion(text):
    """Parse e.g. 'normalized_lp:10', 'lp:1', 'max_power'."""
    if ":" in text:
        kind, iters = text.split(":", 1)
        return SelectionCriterion(kind, int(iters))
    return SelectionCriterion(text)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="lpwpe",
        description="Multichannel dereverberation with reference selection")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="synthesize RIRs for a scene file")
    sim.add_argument("scene", help="scene description YAML")
    sim.add_argument("--out", required=True, help="output RIR WAV path")

    for name in ("dereverb", "benchmark"):
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", help="pipeline config YAML")
        cmd.add_argument("--scene-file", help="room layout YAML")
        cmd.add_argument("--wav-dir", help="directory of multichannel WAVs")
        cmd.add_argument("--rir-wav", help="measured RIR WAV for oracle/targets")
        cmd.add_argument("--criterion", action="append", default=None,
                         help="e.g. normalized_lp:10, lp:10, max_power "
                              "(repeatable)")
        cmd.add_argument("--p", action="append", type=float, default=None,
                         help="sparsity value (repeatable)")
        cmd.add_argument("--iterations", type=int, default=None)
        cmd.add_argument("--seed", type=int, default=None)
        cmd.add_argument("--out", default=None, help="output directory")
        cmd.add_argument("--clamp", action="store_true")
        cmd.add_argument("--tdoa-csv", default=None,
                         help="user-supplied M x M TDOA matrix (samples)")
        cmd.add_argument("--utterance", type=float, default=None,
                         help="synthetic dry utterance length in seconds")
        cmd.add_argument("--workers", type=int, default=None)
        if name == "benchmark":
            cmd.add_argument("--n-seeds", type=int, default=20)

    met = sub.add_parser("metrics", help="score an estimate against a target")
    met.add_argument("estimate")
    met.add_argument("target")
    return parser


def _config_from_args(args) -> pipeline.PipelineConfig:
    if args.config:
        config = pipeline.load_config(args.config)
    else:
        scene_file = args.scene_file
        if scene_file is None and args.wav_dir is None:
            scene_file = str(pipeline.default_layout_path())
        config = pipeline.PipelineConfig(scene_file=scene_file,
                                         wav_dir=args.wav_dir)
    updates = {}
    for attr, key in (("scene_file", "scene_file"), ("wav_dir", "wav_dir"),
                      ("rir_wav", "rir_wav"), ("out", "out_dir"),
                      ("seed", "seed"), ("tdoa_csv", "tdoa_csv"),
                      ("utterance", "utterance_s"), ("workers", "workers")):
        value = getattr(args, attr, None)
        if value is not None:
            updates[key] = value
    if args.clamp:
        updates["clamp"] = True
    if args.criterion:
        updates["criteria"] = tuple(_parse_criterion(c) for c in args.criterion)
    if args.p:
        updates["p_values"] = tuple(args.p)
    config = replace(config, **updates)
    if args.iterations is not None:
        config = replace(config, wpe=replace(config.wpe,
                                             iterations=args.iterations))
    return config


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args = _build_parser().parse_args(argv)

    if args.command == "simulate":
        try:
            spec, seed = roomsim.load_room_spec(args.scene)
            scene = roomsim.simulate_rir(spec, seed)
        except (ValueError, KeyError, OSError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        roomsim.scene_to_wav(scene, args.out)
        for m in range(spec.num_mics):
            print(f"mic {m}: direct_path_index="
                  f"{scene.rirs[m].direct_path_index} "
                  f"elr={roomsim.elr_oracle(scene, m):.2f} dB")
        return 0

    if args.command == "metrics":
        try:
            est = wavio.read_wav(args.estimate).channels[0]
            tgt = wavio.read_wav(args.target).channels[0]
            print(f"fwssnr_db={fwssnr(est, tgt):.3f}")
            print(f"segsnr_db={segsnr(est, tgt):.3f}")
        except (ValueError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        return 0

    try:
        config = _config_from_args(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.command == "dereverb":
        code, _, summary = pipeline.run_dereverb(config)
    else:
        code, summary = pipeline.run_benchmark(config, args.n_seeds)
    for row in summary:
        print(f"{row['criterion']:22s} p={row['p']:<5g} "
              f"dFWSSNR={row['mean_delta_fwssnr_db']:+.3f} "
              f"+- {row['std_delta_fwssnr_db']:.3f} dB "
              f"(n={row['num_scenes']})")
    print(f"artifacts written to {Path(config.out_dir).resolve()}")
    return code


if __name__ == "__main__":
    sys.exit(main())
