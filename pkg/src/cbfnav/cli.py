"""Command-line entry point: ``run``, ``detect``, ``validate`` and ``oracle``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from . import scenarios
from .audio import DetectorConfig, detect_stream
from .config import ConfigError, RunManifest, load_document, parse_config, parse_detector, serialize
from .oracles import (
    invariance_case,
    invariance_rollout,
    lie_derivative_check,
    qp_check,
)
from .outputs import OutputExistsError, emit_outputs, prepare_output_dir
from .sim import Mode, run_batch
from .wavio import read_wav

log = logging.getLogger("cbfnav")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2

LIE_TOL = 1e-5
ASPECT_TOL = 1e-12
QP_GAP_TOL = 1e-5
H2_TOL = -1e-6


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cbfnav", description="Audio-aware CBF navigation benchmarks.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run seeded Monte Carlo trials for one scenario and mode")
    src = run.add_mutually_exclusive_group()
    src.add_argument("--config", type=Path, help="TOML run configuration")
    src.add_argument("--scenario", type=int, choices=(1, 2), help="reference layout (default 1)")
    run.add_argument("--mode", choices=[m.value for m in Mode], help="override the control mode")
    run.add_argument("--seed", type=_seed, help="override the perturbation seed")
    run.add_argument("--trials", type=_positive_int, help="override the trial count")
    run.add_argument("--audio", type=Path, help="16-bit PCM WAV driving the risk signal")
    run.add_argument("--out", type=Path, help="output directory (default runs/<name>_<mode>_seed<seed>)")
    run.add_argument("--force", action="store_true", help="overwrite an existing run")

    det = sub.add_parser("detect", help="turn a recording into a risk timeline")
    det.add_argument("--audio", type=Path, required=True, help="16-bit PCM WAV")
    det.add_argument("--config", type=Path, help="TOML file whose [detector] table is used")
    det.add_argument("--out", type=Path, help="write the timeline CSV here")
    det.add_argument("--force", action="store_true", help="overwrite an existing CSV")

    val = sub.add_parser("validate", help="check a configuration file")
    val.add_argument("--config", type=Path, required=True)
    val.add_argument("--dump", action="store_true", help="print the fully resolved configuration")

    orc = sub.add_parser("oracle", help="finite-difference, lattice-QP and invariance checks")
    orc.add_argument("--seed", type=_seed, default=0)
    orc.add_argument("--samples", type=_positive_int, default=100, help="Lie-derivative configurations")
    orc.add_argument("--qp-instances", type=_positive_int, default=1000)
    orc.add_argument("--invariance", type=int, default=0, metavar="N", help="closed-loop rollouts (slow)")
    return p


def _read_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ConfigError(f"{path}: not UTF-8 text ({exc.reason})") from None


def cmd_run(args) -> int:
    if args.config is not None:
        text = _read_text(args.config)
        config = parse_config(text)
        detector = parse_detector(text)
        scenario_id = load_document(text).get("scenario", 1)
    else:
        scenario_id = args.scenario or 1
        detector = DetectorConfig()
        config = scenarios.SCENARIOS[scenario_id](Mode(args.mode or Mode.ELLIPSE.value))
    overrides = {}
    if args.mode:
        overrides["mode"] = Mode(args.mode)
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trials is not None:
        overrides["trial_count"] = args.trials
    if args.audio is not None:
        samples, rate = read_wav(args.audio)
        overrides["timeline"] = detect_stream(samples, rate, detector)
        log.info("risk timeline from %s: %s", args.audio, overrides["timeline"].intervals_on())
    config = replace(config, **overrides)

    out = args.out or Path("runs") / f"{config.name}_{config.mode.value}_seed{config.seed}"
    manifest = RunManifest(
        config_path=str(args.config) if args.config else None,
        scenario=scenario_id,
        mode=config.mode.value,
        seed=config.seed,
        out_dir=str(out),
        audio_path=str(args.audio) if args.audio else None,
        trials=config.trial_count,
    )
    # fail before spending time on trials
    prepare_output_dir(manifest, args.force)
    report, trajectories = run_batch(config)
    emit_outputs(report, trajectories, manifest, config, config.timeline, force=True)
    log.info("wrote %s", out)
    return EXIT_OK


def cmd_detect(args) -> int:
    detector = parse_detector(_read_text(args.config)) if args.config else DetectorConfig()
    samples, rate = read_wav(args.audio)
    timeline = detect_stream(samples, rate, detector)
    print(f"{args.audio}: {len(samples) / rate:.2f} s at {rate} Hz, {timeline.transitions} transitions")
    for start, end in timeline.intervals_on():
        print(f"  ON  {start:8.2f} s -> {end:8.2f} s")
    if args.out is not None:
        if args.out.exists() and not args.force:
            raise OutputExistsError(f"{args.out} exists; pass --force to overwrite")
        args.out.parent.mkdir(parents=True, exist_ok=True)
        timeline.to_csv(args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    text = _read_text(args.config)
    config = parse_config(text)
    detector = parse_detector(text)
    print(
        f"{args.config}: ok ({config.name}, {config.mode.value}, {config.trial_count} trials, "
        f"{len(config.obstacles)} obstacles, {len(config.plan.waypoints)} waypoints)"
    )
    if args.dump:
        print(serialize(config, detector), end="")
    return EXIT_OK


def cmd_oracle(args) -> int:
    ok = True
    lie = lie_derivative_check(args.samples, args.seed)
    good = max(lie.max_rel_error_lf, lie.max_rel_error_lg) <= LIE_TOL
    print(
        f"lie derivatives   {'PASS' if good else 'FAIL'}  max rel err Lf {lie.max_rel_error_lf:.2e}, "
        f"Lg {lie.max_rel_error_lg:.2e} over {lie.samples} configurations (tol {LIE_TOL:g})"
    )
    ok &= good
    good = lie.max_aspect_one_diff <= ASPECT_TOL
    print(f"aspect one        {'PASS' if good else 'FAIL'}  max |ellipse - circle| {lie.max_aspect_one_diff:.2e} (tol {ASPECT_TOL:g})")
    ok &= good
    qp = qp_check(args.qp_instances, args.seed)
    good = qp.max_gap <= QP_GAP_TOL and qp.exact_when_feasible and qp.infeasible_agree
    print(
        f"qp vs lattice     {'PASS' if good else 'FAIL'}  max gap {qp.max_gap:.2e} over {qp.instances} instances, "
        f"nominal kept exactly: {qp.exact_when_feasible}, infeasibility agrees: {qp.infeasible_agree}"
    )
    ok &= good
    if args.invariance > 0:
        worst = min(invariance_rollout(*invariance_case(args.seed, i)).min_h2 for i in range(args.invariance))
        good = worst >= H2_TOL
        print(f"invariance        {'PASS' if good else 'FAIL'}  min h2 {worst:.3e} over {args.invariance} rollouts")
        ok &= good
    return EXIT_OK if ok else EXIT_FAILED


COMMANDS = {"run": cmd_run, "detect": cmd_detect, "validate": cmd_validate, "oracle": cmd_oracle}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError) as exc:
        # missing files, unwritable directories, bad audio, refused overwrites
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
