import json
from pathlib import Path

import numpy as np
import pytest
import yaml

from lpwpe import StftConfig, WpeConfig
from lpwpe.cli import main as cli_main
from lpwpe.pipeline import (PipelineConfig, config_from_dict, config_hash,
                            config_to_dict, default_layout_path, load_config,
                            load_layout, run_benchmark, run_dereverb,
                            save_config)
from lpwpe.selection import (MAX_POWER, NORMALIZED_LP, SelectionCriterion)

FS = 16000


def write_small_layout(path, n_sources=2, n_mics=2, t60=0.4):
    doc = {
        "dimensions": [6.0, 7.0, 2.7],
        "t60": t60,
        "mic_positions": [[2.4, 3.1, 1.4], [4.6, 5.2, 1.5],
                          [1.2, 5.8, 1.3], [5.2, 1.4, 1.6]][:n_mics],
        "source_positions": [[2.0, 2.5, 1.5], [3.8, 4.4, 1.5],
                             [1.5, 4.0, 1.4]][:n_sources],
        "seed": 0,
    }
    with open(path, "w") as fh:
        yaml.safe_dump(doc, fh)


def fast_config(layout, out_dir, **kw):
    defaults = dict(
        scene_file=str(layout), out_dir=str(out_dir),
        wpe=WpeConfig(filter_length=4, iterations=2),
        criteria=(SelectionCriterion(NORMALIZED_LP, 2),
                  SelectionCriterion(MAX_POWER)),
        p_values=(0.5,), utterance_s=1.0)
    defaults.update(kw)
    return PipelineConfig(**defaults)


def test_config_validation():
    with pytest.raises(ValueError):
        PipelineConfig(scene_file="x.yaml", p_values=(3.0,))
    with pytest.raises(ValueError):
        PipelineConfig(scene_file="x.yaml", criteria=())
    with pytest.raises(ValueError):
        PipelineConfig()  # needs a scene source


def test_config_roundtrip(tmp_path):
    cfg = PipelineConfig(
        scene_file="layout.yaml",
        stft=StftConfig(frame_size=512, shift=128),
        wpe=WpeConfig(filter_length=8, p=0.9),
        criteria=(SelectionCriterion(NORMALIZED_LP, 5),
                  SelectionCriterion(MAX_POWER)),
        p_values=(0.05, 0.9), seed=3, utterance_s=1.5, workers=2)
    assert config_from_dict(config_to_dict(cfg)) == cfg
    path = tmp_path / "cfg.yaml"
    save_config(cfg, path)
    assert load_config(path) == cfg
    assert config_hash(load_config(path)) == config_hash(cfg)


def test_default_layout_loads():
    specs, seed = load_layout(default_layout_path())
    assert len(specs) == 12
    assert all(s.num_mics == 8 for s in specs)


def test_single_mic_scene(tmp_path):
    layout = tmp_path / "layout.yaml"
    doc = {
        "dimensions": [6.0, 7.0, 2.7], "t60": 0.4,
        "mic_positions": [[2.4, 3.1, 1.4]],
        "source_positions": [[2.0, 2.5, 1.5]],
    }
    with open(layout, "w") as fh:
        yaml.safe_dump(doc, fh)
    out = tmp_path / "out"
    cfg = fast_config(layout, out)
    code, rows, summary = run_dereverb(cfg)
    assert code == 0
    assert len(rows) == len(cfg.criteria)  # one p value, one scene
    assert all(row["chosen"] == 0 for row in rows)
    wavs = list(out.glob("*.wav"))
    assert len(wavs) == len(cfg.criteria)
    assert (out / "report.csv").exists()
    assert (out / "manifest.json").exists()


def test_row_count_and_artifacts(tmp_path):
    layout = tmp_path / "layout.yaml"
    write_small_layout(layout, n_sources=3, n_mics=2)
    out = tmp_path / "out"
    cfg = fast_config(layout, out, p_values=(0.5, 0.9))
    code, rows, summary = run_dereverb(cfg)
    assert code == 0
    # scenes x criteria x p values
    assert len(rows) == 3 * 2 * 2
    assert len(summary) == 2 * 2
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config_hash"] == config_hash(cfg)
    assert manifest["failed_scenes"] == []
    # every row carries the config hash; filenames encode the combination
    for row in rows:
        assert row["config_hash"] == config_hash(cfg)
        assert row["scene"] in row["output_wav"]
        assert row["criterion"] in row["output_wav"]
        assert f"p{row['p']:g}" in row["output_wav"]
        assert (out / row["output_wav"]).exists()


def test_benchmark_deterministic(tmp_path):
    layout = tmp_path / "layout.yaml"
    write_small_layout(layout, n_sources=1, n_mics=2)
    cfg_a = fast_config(layout, tmp_path / "a", utterance_s=0.8)
    cfg_b = fast_config(layout, tmp_path / "b", utterance_s=0.8)
    code_a, sum_a = run_benchmark(cfg_a, n_seeds=2)
    code_b, sum_b = run_benchmark(cfg_b, n_seeds=2)
    assert code_a == code_b == 0
    assert sum_a == sum_b  # bit identical summaries for the same seed
    assert len(sum_a) == 2  # one row per (criterion, p)
    for row in sum_a:
        assert row["num_scenes"] == 2


def test_cli_metrics_and_exit_codes(tmp_path, capsys):
    from lpwpe import speech_like_noise, write_wav
    sig = speech_like_noise(0.5, FS, 2)
    wav = tmp_path / "sig.wav"
    write_wav(wav, sig)
    assert cli_main(["metrics", str(wav), str(wav)]) == 0
    out = capsys.readouterr().out
    assert "fwssnr_db=35.000" in out

    assert cli_main(["metrics", str(tmp_path / "missing.wav"), str(wav)]) == 2


def test_cli_simulate(tmp_path, capsys):
    from lpwpe.roomsim import RoomSpec, save_room_spec
    scene_yaml = tmp_path / "room.yaml"
    save_room_spec(RoomSpec((6.0, 7.0, 2.7), 0.4, (2.0, 3.0, 1.5),
                            ((3.0, 4.0, 1.5), (4.5, 5.0, 1.2))), scene_yaml)
    rir_wav = tmp_path / "rirs.wav"
    assert cli_main(["simulate", str(scene_yaml), "--out", str(rir_wav)]) == 0
    assert rir_wav.exists()
    assert "elr=" in capsys.readouterr().out

    bad = tmp_path / "bad.yaml"
    bad.write_text("dimensions: [6, 7, 2.7]\n")  # missing fields
    assert cli_main(["simulate", str(bad), "--out", str(rir_wav)]) == 2


def test_cli_dereverb_and_config_error(tmp_path, capsys):
    layout = tmp_path / "layout.yaml"
    write_small_layout(layout, n_sources=1, n_mics=2)
    out = tmp_path / "out"
    code = cli_main(["dereverb", "--scene-file", str(layout),
                     "--out", str(out), "--criterion", "max_power",
                     "--p", "0.5", "--iterations", "2",
                     "--utterance", "1.0"])
    assert code == 0
    assert (out / "summary.csv").exists()

    # invalid p rejected before any processing
    code = cli_main(["dereverb", "--scene-file", str(layout),
                     "--out", str(tmp_path / "out2"), "--p", "3.0"])
    assert code == 2
    assert "config error" in capsys.readouterr().err
    assert not (tmp_path / "out2").exists()
