"""cwrank: rank tweets by how much they warrant fact-checking.

Pipeline: segment-aware preprocessing -> token ids with per-batch padding ->
parallel-width convolutional classifier over embeddings -> sigmoid
probability used as the ranking score, evaluated with MAP / P@k /
R-precision. See the README for the command-line workflow.
"""

from .data import (
    AugmentMode,
    LabeledTweet,
    RankedRun,
    Source,
    augment,
    load_clef_tsv,
    load_pheme,
    load_twitter1516,
    read_predictions,
    write_predictions,
)
from .errors import (
    BatchTooShortError,
    ConfigError,
    CwrankError,
    DegenerateInputError,
    EmptyDatasetError,
    InternalConsistencyError,
    ParseError,
    SchemaError,
    TrainingError,
    UndefinedMetricError,
)
from .features import (
    Provider,
    ProviderKind,
    ProviderPlan,
    load_embedding_file,
    save_embedding_file,
    tfidf_fit,
    tfidf_vector,
)
from .metrics import (
    Judged,
    average_precision,
    format_metrics_row,
    judge_run,
    mean_average_precision,
    metrics_row,
    precision_at_k,
    r_precision,
)
from .model import (
    Checkpoint,
    ModelConfig,
    ModelParams,
    backward,
    classify,
    forward,
    init_params,
    load_checkpoint,
    rank_topics,
    save_checkpoint,
    score_corpus,
)
from .optim import AdamState, OptimConfig, TrainResult, adam_step, bce_loss, train
from .preprocess import (
    ConsolidationMap,
    PreprocessPolicy,
    Segment,
    SegmentAction,
    SegmentKind,
    apply_policy,
    chi2_scores,
    propose_consolidation,
    segment,
)
from .presets import PRESETS, Preset, get_preset
from .vocab import Batch, Vocabulary, build_vocab, make_batches

__version__ = "0.1.0"
