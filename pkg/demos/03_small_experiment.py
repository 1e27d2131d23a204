"""A scaled-down run of the repeated experiment protocol.

Same pipeline as ``drsvm experiment`` (random 200/1800 splits, four methods,
error rates averaged over repetitions) but with 5 repetitions and a handful
of dimensions at a low SNR, so the differences between methods are visible
and the run takes well under a minute.

Run:  python demos/03_small_experiment.py [out_dir]
"""
import sys

from drsvm.dataset import synth_generate
from drsvm.pipeline import ExperimentConfig, run_experiment, write_report

data = synth_generate(3000, snr_db=-3, seed=7)
config = ExperimentConfig(repetitions=5, dims_raw=(1, 3, 13), dims_reduced=(1, 2, 3), seed=7)
report = run_experiment(config, data, progress=lambda done, total: print(f"  repetition {done}/{total}"))

print(f"\n{'method':<10} {'dim':>3} {'false alarm':>12} {'miss':>10} {'total':>10}")
for method, by_dim in report.rates.items():
    for dim, r in by_dim.items():
        print(f"{method:<10} {dim:>3} {100 * r.false_alarm:11.3f}% {100 * r.miss_detection:9.3f}% "
              f"{100 * r.total_error:9.3f}%")

print("\nleading eigenvalue share:", {m: round(float(s[0]), 3) for m, s in report.shares.items()})
if len(sys.argv) > 1:
    print("wrote", write_report(report, sys.argv[1]))
