"""Batch experiment driver.

Synthesizes (or ingests) multichannel scenes, runs dereverberation under
every configured reference-selection strategy and sparsity value, and
emits per-scene metric reports plus an aggregate summary of the relative
FWSSNR improvement per strategy.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import yaml

from . import metrics as metrics_mod
from . import roomsim, wavio
from .delays import (PredictionDelayMatrix, compute_prediction_delays,
                     default_max_lag, estimate_tdoa_matrix, TdoaMatrix)
from .selection import (LP_NORM, MAX_ORACLE_ELR, MAX_POWER, NORMALIZED_LP,
                        SelectionCriterion, SelectionResult, lp_score,
                        normalized_lp_score, select_reference)
from .signals import (MultichannelTimeSignal, StftConfig, analyze_channels,
                      channel_power, speech_like_noise, stft_synthesize)
from .wpe import WpeConfig, run_wpe

log = logging.getLogger("lpwpe")

REPORT_SCHEMA_VERSION = 1

DEFAULT_CRITERIA = (
    SelectionCriterion(NORMALIZED_LP, 10),
    SelectionCriterion(NORMALIZED_LP, 1),
    SelectionCriterion(NORMALIZED_LP, 0),
    SelectionCriterion(LP_NORM, 10),
    SelectionCriterion(MAX_POWER),
    SelectionCriterion(MAX_ORACLE_ELR),
)


@dataclass(frozen=True)
class PipelineConfig:
    stft: StftConfig = StftConfig()
    wpe: WpeConfig = WpeConfig()
    criteria: tuple = DEFAULT_CRITERIA
    p_values: tuple = (0.05, 0.5, 0.9)
    scene_file: str | None = None       # room layout YAML (synthetic mode)
    wav_dir: str | None = None          # multichannel WAVs (ingestion mode)
    rir_wav: str | None = None          # measured RIRs for oracle/targets
    out_dir: str = "out"
    seed: int = 0
    utterance_s: float = 2.0
    early_ms: float = roomsim.DEFAULT_EARLY_MS
    clamp: bool = False
    tdoa_csv: str | None = None
    workers: int = 1

    def __post_init__(self):
        if len(self.criteria) < 1:
            raise ValueError("at least one criterion required")
        for p in self.p_values:
            if not 0.0 < p <= 2.0:
                raise ValueError("p values must lie in (0, 2]")
        if self.scene_file is None and self.wav_dir is None:
            raise ValueError("either scene_file or wav_dir must be given")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


def config_to_dict(config: PipelineConfig) -> dict:
    return {
        "stft": {"frame_size": config.stft.frame_size,
                 "shift": config.stft.shift,
                 "window": config.stft.window},
        "wpe": {"filter_length": config.wpe.filter_length,
                "iterations": config.wpe.iterations,
                "p": config.wpe.p,
                "epsilon": config.wpe.epsilon,
                "base_delay": config.wpe.base_delay,
                "ridge": config.wpe.ridge},
        "criteria": [{"kind": c.kind, "iterations": c.iterations}
                     for c in config.criteria],
        "p_values": list(config.p_values),
        "scene_file": config.scene_file,
        "wav_dir": config.wav_dir,
        "rir_wav": config.rir_wav,
        "out_dir": config.out_dir,
        "seed": config.seed,
        "utterance_s": config.utterance_s,
        "early_ms": config.early_ms,
        "clamp": config.clamp,
        "tdoa_csv": config.tdoa_csv,
        "workers": config.workers,
    }


def config_from_dict(doc: dict) -> PipelineConfig:
    stft = StftConfig(**doc.get("stft", {}))
    wpe_cfg = WpeConfig(**doc.get("wpe", {}))
    criteria = tuple(SelectionCriterion(c["kind"], c.get("iterations", 0))
                     for c in doc.get("criteria", []))
    if not criteria:
        criteria = DEFAULT_CRITERIA
    return PipelineConfig(
        stft=stft, wpe=wpe_cfg, criteria=criteria,
        p_values=tuple(doc.get("p_values", (0.05, 0.5, 0.9))),
        scene_file=doc.get("scene_file"),
        wav_dir=doc.get("wav_dir"),
        rir_wav=doc.get("rir_wav"),
        out_dir=doc.get("out_dir", "out"),
        seed=int(doc.get("seed", 0)),
        utterance_s=float(doc.get("utterance_s", 2.0)),
        early_ms=float(doc.get("early_ms", roomsim.DEFAULT_EARLY_MS)),
        clamp=bool(doc.get("clamp", False)),
        tdoa_csv=doc.get("tdoa_csv"),
        workers=int(doc.get("workers", 1)),
    )


def save_config(config: PipelineConfig, path):
    with open(path, "w") as fh:
        yaml.safe_dump(config_to_dict(config), fh, sort_keys=False)


def load_config(path) -> PipelineConfig:
    with open(path) as fh:
        return config_from_dict(yaml.safe_load(fh))


def config_hash(config: PipelineConfig) -> str:
    blob = json.dumps(config_to_dict(config), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def default_layout_path():
    """Shipped desk-scale benchmark layout (8 mics, 12 source positions)."""
    from importlib.resources import files

    return files("lpwpe").joinpath("data/benchmark_layout.yaml")


def load_layout(path):
    """Read a layout file: room + mic positions + source position list."""
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    sources = [tuple(s) for s in doc.pop("source_positions")]
    seed = int(doc.pop("seed", 0))
    specs = [roomsim.RoomSpec(
        dimensions=tuple(doc["dimensions"]),
        t60=float(doc["t60"]),
        source_position=src,
        mic_positions=tuple(tuple(m) for m in doc["mic_positions"]),
        sample_rate=int(doc.get("sample_rate", 16000)),
        max_order=int(doc.get("max_order", 30)),
    ) for src in sources]
    return specs, seed


@dataclass
class SceneData:
    """One prepared scene: signals, spectrograms, delays, optional oracle."""

    name: str
    mixture: MultichannelTimeSignal
    specs: list
    delays: PredictionDelayMatrix
    scene: roomsim.RoomScene | None = None
    dry: object = None
    targets: list | None = None         # per-mic direct-path targets
    reverberant_fwssnr: list | None = None


def _prepare_synthetic_scene(room_spec, dry, name, config) -> SceneData:
    scene = roomsim.simulate_rir(room_spec, early_ms=config.early_ms)
    mixture = roomsim.render_scene(scene, dry)
    specs = analyze_channels(mixture, config.stft)
    delays = _delays_for(mixture, config)
    targets = [roomsim.direct_early_target(scene, dry, m)
               for m in range(room_spec.num_mics)]
    rev_fw = [metrics_mod.fwssnr(mixture.channels[m], targets[m])
              for m in range(room_spec.num_mics)]
    return SceneData(name, mixture, specs, delays, scene=scene, dry=dry,
                     targets=targets, reverberant_fwssnr=rev_fw)


def _delays_for(mixture, config) -> PredictionDelayMatrix:
    M = mixture.num_channels
    if M == 1:
        return PredictionDelayMatrix.uniform(1, config.wpe.base_delay)
    if config.tdoa_csv is not None:
        delta = np.loadtxt(config.tdoa_csv, delimiter=",", ndmin=2)
        tdoa = TdoaMatrix((delta - delta.T) / 2.0, default_max_lag(mixture.sample_rate))
    else:
        tdoa = estimate_tdoa_matrix(mixture, default_max_lag(mixture.sample_rate))
    return compute_prediction_delays(tdoa, config.wpe.base_delay,
                                     config.stft.shift)


def evaluate_scene(data: SceneData, config: PipelineConfig, out_dir: Path):
    """Run every (criterion, p) combination on one prepared scene.

    Full-budget WPE results per candidate reference are computed once per
    p and shared across criteria (both for selection at I = I_WPE and for
    the per-mic FWSSNR average every report needs).
    """
    rows = []
    produced = []
    M = len(data.specs)
    for p in config.p_values:
        cfg = replace(config.wpe, p=p)
        full = SelectionCriterion(LP_NORM, cfg.iterations)
        full_runs = select_reference(data.specs, full, data.delays,
                                     cfg).per_candidate_outputs
        out_signals = {r: stft_synthesize(full_runs[r].output, config.stft)
                       for r in range(M)}
        if data.targets is not None:
            per_mic = [metrics_mod.fwssnr(out_signals[r], data.targets[r])
                       for r in range(M)]
        else:
            per_mic = None

        for criterion in config.criteria:
            sel = _select(data, criterion, cfg, full_runs, p)
            chosen = sel.chosen
            wav_name = (f"{data.name}__{criterion.label()}"
                        f"__p{p:g}__mic{chosen}.wav")
            wavio.write_wav(out_dir / wav_name, out_signals[chosen],
                            clamp=config.clamp)
            produced.append(wav_name)
            row = {
                "schema_version": REPORT_SCHEMA_VERSION,
                "scene": data.name,
                "criterion": criterion.label(),
                "p": p,
                "chosen": chosen,
                "scores": [float(s) for s in sel.scores],
                "output_wav": wav_name,
            }
            if per_mic is not None:
                report = metrics_mod.MetricReport(
                    fwssnr=per_mic[chosen],
                    segsnr=metrics_mod.segsnr(out_signals[chosen],
                                              data.targets[chosen]),
                    per_mic_fwssnr=tuple(per_mic),
                    delta_fwssnr=metrics_mod.relative_improvement(per_mic, chosen),
                    criterion=criterion.label(),
                    chosen=chosen,
                )
                row.update(report.to_dict())
                row["reverberant_fwssnr_db"] = data.reverberant_fwssnr[chosen]
            rows.append(row)
    return rows, produced


def _select(data, criterion, cfg, full_runs, p) -> SelectionResult:
    if criterion.kind == MAX_POWER:
        scores = np.array([channel_power(s) for s in data.specs])
        return SelectionResult(int(np.argmax(scores)), scores)
    if criterion.kind == MAX_ORACLE_ELR:
        if data.scene is None:
            raise ValueError("oracle ELR selection requires a simulated scene")
        scores = np.array([roomsim.elr_oracle(data.scene, m)
                           for m in range(len(data.specs))])
        return SelectionResult(int(np.argmax(scores)), scores)
    if criterion.iterations == cfg.iterations:
        score_fn = lp_score if criterion.kind == LP_NORM else normalized_lp_score
        scores = np.array([score_fn(full_runs[r].output, p)
                           for r in range(len(data.specs))])
        return SelectionResult(int(np.argmin(scores)), scores, full_runs)
    return select_reference(data.specs, criterion, data.delays, cfg)


def _prepare_scenes(config: PipelineConfig):
    scenes = []
    if config.scene_file is not None:
        room_specs, layout_seed = load_layout(config.scene_file)
        for i, rs in enumerate(room_specs):
            dry = speech_like_noise(config.utterance_s, rs.sample_rate,
                                    config.seed + layout_seed + i)
            scenes.append(("scene%02d" % i, rs, dry))
    else:
        wavs = sorted(Path(config.wav_dir).glob("*.wav"))
        if not wavs:
            raise ValueError(f"no WAV files in {config.wav_dir}")
        for path in wavs:
            scenes.append((path.stem, path, None))
    return scenes


def _build_scene_data(entry, config) -> SceneData:
    name, source, dry = entry
    if isinstance(source, roomsim.RoomSpec):
        return _prepare_synthetic_scene(source, dry, name, config)
    mixture = wavio.read_wav(source)
    specs = analyze_channels(mixture, config.stft)
    delays = _delays_for(mixture, config)
    data = SceneData(name, mixture, specs, delays)
    if config.rir_wav is not None:
        data.scene = roomsim.scene_from_rir_wav(config.rir_wav,
                                                early_ms=config.early_ms)
    return data


def run_dereverb(config: PipelineConfig):
    """Process every scene; returns (exit_code, rows, summary)."""
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    chash = config_hash(config)
    entries = _prepare_scenes(config)
    all_rows, produced, failures = [], [], []

    def process(entry):
        data = _build_scene_data(entry, config)
        return evaluate_scene(data, config, out_dir)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            futures = [(e[0], pool.submit(process, e)) for e in entries]
            results = [(name, _outcome(f)) for name, f in futures]
    else:
        results = [(e[0], _outcome_call(process, e)) for e in entries]

    for name, outcome in results:
        if isinstance(outcome, Exception):
            log.error("scene %s failed: %s", name, outcome)
            failures.append(name)
            continue
        rows, files = outcome
        for row in rows:
            row["config_hash"] = chash
        all_rows.extend(rows)
        produced.extend(files)
        log.info("scene %s done (%d rows)", name, len(rows))

    summary = summarize(all_rows)
    _write_reports(out_dir, all_rows, summary)
    manifest = {
        "config": config_to_dict(config),
        "config_hash": chash,
        "scenes": [e[0] for e in entries],
        "failed_scenes": failures,
        "produced": produced + ["report.csv", "report.json", "summary.csv"],
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
    exit_code = 1 if failures else 0
    return exit_code, all_rows, summary


def _outcome(future):
    try:
        return future.result()
    except Exception as exc:          # scene isolation: log, keep going
        log.debug(traceback.format_exc())
        return exc


def _outcome_call(fn, arg):
    try:
        return fn(arg)
    except Exception as exc:
        log.debug(traceback.format_exc())
        return exc


def summarize(rows):
    """Aggregate mean/std delta-FWSSNR per (criterion, p) across scenes."""
    groups = {}
    for row in rows:
        if "delta_fwssnr_db" not in row:
            continue
        groups.setdefault((row["criterion"], row["p"]), []).append(
            row["delta_fwssnr_db"])
    summary = []
    for (criterion, p), vals in sorted(groups.items()):
        arr = np.asarray(vals)
        summary.append({
            "criterion": criterion,
            "p": p,
            "mean_delta_fwssnr_db": float(np.mean(arr)),
            "std_delta_fwssnr_db": float(np.std(arr)),
            "num_scenes": len(vals),
        })
    return summary


def _write_reports(out_dir, rows, summary):
    if rows:
        keys = sorted({k for row in rows for k in row})
        with open(out_dir / "report.csv", "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=keys)
            writer.writeheader()
            for row in rows:
                writer.writerow({k: row.get(k, "") for k in keys})
    with open(out_dir / "report.json", "w") as fh:
        json.dump({"schema_version": REPORT_SCHEMA_VERSION, "rows": rows,
                   "summary": summary}, fh, indent=2)
    if summary:
        with open(out_dir / "summary.csv", "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(summary[0]))
            writer.writeheader()
            writer.writerows(summary)


def run_benchmark(config: PipelineConfig, n_seeds: int):
    """Ensemble of run_dereverb over randomized source positions.

    Each seed redraws the source position inside the room of the layout
    file (0.5 m wall margin); mic positions stay fixed.  Returns
    (exit_code, summary) with mean and std delta-FWSSNR per criterion.
    """
    if config.scene_file is None:
        raise ValueError("benchmark requires a synthetic scene file")
    room_specs, _ = load_layout(config.scene_file)
    base = room_specs[0]
    rng = np.random.default_rng(config.seed)
    all_rows = []
    exit_code = 0
    out_root = Path(config.out_dir)
    for s in range(n_seeds):
        src = tuple(rng.uniform(0.5, d - 0.5) for d in base.dimensions)
        rs = replace(base, source_position=src)
        dry = speech_like_noise(config.utterance_s, rs.sample_rate,
                                config.seed * 1000 + s)
        sub = Path(out_root) / f"seed{s:03d}"
        sub.mkdir(parents=True, exist_ok=True)
        try:
            data = _prepare_synthetic_scene(rs, dry, f"seed{s:03d}", config)
            rows, _ = evaluate_scene(data, config, sub)
            all_rows.extend(rows)
        except Exception as exc:
            log.error("benchmark seed %d failed: %s", s, exc)
            exit_code = 1
    summary = summarize(all_rows)
    _write_reports(out_root, all_rows, summary)
    return exit_code, summary
