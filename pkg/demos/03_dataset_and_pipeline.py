"""Recording a small dataset and turning it into training rows.

The contact protocol visits locations around the finger, mixing three force
groups at three heights, three contacts per 20 s file.  Preprocessing then
median-filters, subtracts the rest baseline, drops the noisy receivers and
stacks four consecutive frames per row.

Run:  python3 demos/03_dataset_and_pipeline.py
"""

from collections import Counter

import numpy as np

from ledft.datagen import ProtocolConfig, Twin, generate_dataset
from ledft.pipeline import PipelineConfig, preprocess

protocol = ProtocolConfig(n_locations=2)  # the full protocol uses 10
train_files, test_files = generate_dataset(protocol, Twin(), seed=0)
print(f"{len(train_files)} training files, {len(test_files)} test files, {len(train_files[0])} frames each")

groups = Counter(c["group"] for f in train_files for c in f.metadata["contacts"])
print("training contacts per force group:", dict(groups))

first = train_files[0]
print("first file contacts (start s, hold s, peak N):")
for c in first.metadata["contacts"]:
    print(f"  {c['t_start']:6.2f} {c['hold']:5.2f} {c['peak_force']:5.2f}")

cfg = PipelineConfig()
ds, normalizer = preprocess(train_files, cfg)
print(f"training rows: {len(ds)} x {ds.features.shape[1]} features; "
      f"no-contact share {100 * (~ds.contact).mean():.1f}%")

# Test mode reuses the training statistics and keeps every frame.
test_ds, _ = preprocess(test_files, cfg, normalizer)
print(f"test rows: {len(test_ds)} (all frames after the first {cfg.window - 1} of each file)")
print("feature column means after normalization ~0:", float(np.abs(ds.features.mean(axis=0)).max()))
