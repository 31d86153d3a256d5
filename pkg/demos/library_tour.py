"""A short tour of the library API on one synthetic sample.

Run with ``python demos/library_tour.py``.
"""
from cutguard.calibrate import calibrate
from cutguard.classifier import classify_with_features, parse_config, preset
from cutguard.dataset import SynthSpec, synth_corpus, synth_sample
from cutguard.features import mdrt
from cutguard.pipeline import run_sample

# One sample: 12 frames of video A, 4 frames of video B, then 12 more of A.
sample = synth_sample(SynthSpec(interjection_len=4, seed=3))
print("labels:", "".join(label.value for label in sample.labels))

# Features and verdicts come out together. The cut frames stand out on st0.
verdicts, features = classify_with_features(sample.embeddings, preset("cutie"))
for v, f in zip(verdicts[9:17], features[9:17]):
    print(f"frame {v.frame_index:2d}  st0 {f.st0:8.1f}  mdr {f.mdr:5.2f}  mdrt {mdrt(f.run_length):.3f}  "
          f"{'I' if v.is_interjection else 'N'} via {v.fired_rule}")

# With the gate, no cut frame reaches memory and the cut is blanked.
gated, ungated = run_sample(sample, preset("cutie")), run_sample(sample, None)
print("memory ungated:", ungated.buffer.frame_indices)
print("memory gated:  ", gated.buffer.frame_indices)
print(f"full J&F ungated {ungated.report.full_jf:.1f}, gated {gated.report.full_jf:.1f}")
print(f"interjection FP% ungated {ungated.report.interjection_fp_pct:.2f}, "
      f"gated {gated.report.interjection_fp_pct:.2f}")

# Write a one-threshold tree and let the calibrator pick its constant.
template = parse_config("""
(config one_gate
  (windows 1 5)
  (variance-floor 0.25)
  (const thr 50 free)
  (tree (if (> st0 thr) (interjection thr) (clean thr))))
""")
result = calibrate(synth_corpus(SynthSpec(interjection_len=4, seed=21), 10), template)
print(f"calibrated thr = {result.config.constants['thr'].value:.2f}, "
      f"FP {result.false_positive_count}, recall {result.recall:.2f}, margin {result.margin:.3f}")
