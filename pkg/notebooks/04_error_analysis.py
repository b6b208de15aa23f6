# %% [markdown]
# # Error analysis on noisy labels
#
# With 10% of labels flipped, rank samples by per-sample BCE under the
# ensemble and compare which samples each variant gets wrong.

# %%
import tempfile
from pathlib import Path

import numpy as np

from advtext.advtrain import read_predictions
from advtext.corpus import load_tsv
from advtext.ensemble import apply_threshold
from advtext.evalkit import disagreement, top_k_losses
from advtext.pipeline import desk_config, run_cv

out = Path(tempfile.mkdtemp()) / "noisy"
m = run_cv(desk_config(out, noise_rate=0.1))
data = load_tsv(out / "data.tsv")
labels = data.labels()

# %%
ids, ens = read_predictions(out / m["ensemble"]["oof"])
text_of = dict(zip(data.ids, data.texts))
for tid, loss in top_k_losses(ens, labels, ids, 5):
    print(f"{loss:7.3f}  {text_of[tid]}")

# %%
preds = {}
for name in ("plain", "adv"):
    _, p = read_predictions(out / m["variants"][name]["oof"])
    preds[name] = apply_threshold(p, m["variants"][name]["threshold"]["threshold"])
report = disagreement(preds["plain"], preds["adv"], labels, ids)
print(report.summary("plain", "adv"))
print("both wrong:", report.both_wrong)
