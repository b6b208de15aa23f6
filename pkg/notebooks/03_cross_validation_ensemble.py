# %% [markdown]
# # Cross-validated plain vs adversarial training
#
# Five stratified folds, two variants that differ only in the adversarial flag,
# fold-level out-of-fold predictions, a model-level average and a tuned
# threshold per ensemble. Runs in well under a minute on one core.

# %%
import json
import tempfile
from pathlib import Path

from advtext.pipeline import desk_config, run_cv

out = Path(tempfile.mkdtemp()) / "desk"
cfg = desk_config(out, noise_rate=0.0)
print(json.dumps(cfg.variants[1].to_dict(), indent=1))

# %%
manifest = run_cv(cfg)
for name, v in manifest["variants"].items():
    print(name, "threshold", round(v["threshold"]["threshold"], 4), "OOF F1", round(v["metrics"]["f1"], 4),
          "stopped at", [f["stopped_epoch"] for f in v["folds"]])
e = manifest["ensemble"]
print("ensemble threshold", round(e["threshold"]["threshold"], 4), "OOF F1", round(e["metrics"]["f1"], 4))

# %% [markdown]
# Test-time prediction averages every fold checkpoint per variant, then the
# variants, and applies the ensemble threshold from the manifest.

# %%
from advtext.corpus import Dataset, Tweet
from advtext.pipeline import predict_unlabeled, preprocess_for_manifest

test = Dataset((Tweet("a", "120 new cases confirmed in Ohio HTTPURL"), Tweet("b", "lol quarantine memes \U0001f602")))
print(predict_unlabeled(out / "manifest.json", preprocess_for_manifest(out / "manifest.json", test)))
