"""Training the six-head network and reading the report.

A reduced run (2 locations, 10 epochs) that finishes in well under a minute.
The full default recipe is `ledft pipeline --out runs/default`.

Run:  python3 demos/04_train_and_evaluate.py
"""

import numpy as np

from ledft.datagen import ProtocolConfig, Twin, generate_dataset
from ledft.evaluation import compute_metrics, render_report
from ledft.model import TrainConfig, forward, predict, train
from ledft.pipeline import PipelineConfig, preprocess

train_files, test_files = generate_dataset(ProtocolConfig(n_locations=2), Twin(), seed=1)
cfg = PipelineConfig()
ds, normalizer = preprocess(train_files, cfg)

model = train(ds, TrainConfig(epochs=10), normalizer, pipeline=cfg, log=lambda e, l: print(f"epoch {e:2d}  loss {l:.5f}"))

test_ds, _ = preprocess(test_files, cfg, normalizer)
pred = normalizer.denormalize_labels(forward(model.params, test_ds.features))
truth = normalizer.denormalize_labels(test_ds.labels)
report = compute_metrics(pred, truth)
print(render_report(report)["report.txt"])

print("force-magnitude error by true force:")
for row in report.force_curve:
    if row.count:
        print(f"  {row.bin_center:4.2f} N  MAE {row.mae:.4f} N  ({row.rel_err_pct:5.1f}%)  n={row.count}")

# Single-window inference: four frames of baseline deltas for the 20 kept receivers.
w = predict(model, np.zeros((4, 20)))
print("prediction for a rest window:", np.round(w.as_vector(), 4))
