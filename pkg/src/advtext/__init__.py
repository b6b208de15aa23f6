"""Informative-tweet classification with FGM adversarial training and k-fold ensembling."""
from .corpus import Dataset, FoldPlan, Label, Tweet, load_tsv, stratified_folds, synth_corpus, write_tsv
from .emoji_data import EmojiTable, load_emoji_table
from .preprocess import demojize, normalize_whitespace, preprocess_text, replace_url_token, unescape_html
from .textmodel import (
    ForwardTrace,
    Gradients,
    ModelParams,
    Vocab,
    backward,
    bce_loss,
    build_vocab,
    encode,
    forward,
    init_params,
)
from .advtrain import (
    OptimizerState,
    Perturbation,
    TrainConfig,
    adamw_step,
    adversarial_loss,
    adversarial_perturbation,
    train_fold,
)
from .ensemble import (
    PredictionMatrix,
    ThresholdReport,
    apply_threshold,
    fold_average,
    model_average,
    optimize_threshold,
)
from .evalkit import ConfusionCounts, DisagreementReport, disagreement, per_sample_bce, precision_recall_f1, top_k_losses
from .pipeline import ExperimentConfig, Variant, predict_unlabeled, run_cv

__version__ = "0.1.0"
