"""Small benchmark run through the batch pipeline.

Uses the shipped 8-mic / 12-source layout with a reduced configuration so
it finishes in about a minute, then prints the summary table.  The full
paper-scale configuration is simply `lpwpe benchmark` on the command line.
"""
import tempfile

from lpwpe.pipeline import (PipelineConfig, default_layout_path,
                            run_benchmark)
from lpwpe.selection import (MAX_POWER, NORMALIZED_LP, SelectionCriterion)
from lpwpe import WpeConfig

with tempfile.TemporaryDirectory() as out:
    config = PipelineConfig(
        scene_file=str(default_layout_path()),
        out_dir=out,
        wpe=WpeConfig(filter_length=8, iterations=4),
        criteria=(SelectionCriterion(NORMALIZED_LP, 4),
                  SelectionCriterion(NORMALIZED_LP, 1),
                  SelectionCriterion(MAX_POWER)),
        p_values=(0.5,),
        utterance_s=1.5,
        seed=1)
    code, summary = run_benchmark(config, n_seeds=3)
    print(f"exit code {code}")
    for row in summary:
        print(f"{row['criterion']:20s} p={row['p']:<5g} "
              f"dFWSSNR {row['mean_delta_fwssnr_db']:+.3f} "
              f"+- {row['std_delta_fwssnr_db']:.3f} dB "
              f"over {row['num_scenes']} scenes")
