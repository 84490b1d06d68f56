"""Low-dimensional target embeddings for multiclass classifiers.

Replace one-hot training targets with short codewords: generate a code
matrix (random, dense random, or spectral from a class-similarity graph),
train a small network against it with a distance-decoder softmax head, and
analyze what the learned bits encode.
"""

from .codes import (
    Binarization,
    BinarizationCollisionError,
    CodeGenerationError,
    CodeKind,
    CodeMatrix,
    CodeMetrics,
    binarize,
    code_metrics,
    default_code_length,
    dense_random_code,
    gaussian_code,
    load_code_csv,
    one_hot,
    save_code_csv,
)
from .spectral import (
    ConvergenceError,
    EigenDecomposition,
    SimilarityGraph,
    load_similarity_csv,
    normalized_laplacian,
    save_similarity_csv,
    similarity_from_class_means,
    spectral_code,
    symmetric_eigen,
)
from .decoder import (
    DecoderLossResult,
    backward,
    batch_loss_grad,
    decoder_softmax,
    decoding_matrix,
    distances,
    forward,
    normalize,
    predict,
    predict_batch,
)
from .datasets import (
    Dataset,
    load_attributes_csv,
    load_csv,
    save_attributes_csv,
    save_csv,
    split,
    synth_hierarchical,
)
from .net import (
    MetricsRow,
    NetParams,
    TrainConfig,
    TrainingDivergedError,
    init,
    load_model,
    net_backward,
    net_forward,
    net_outputs,
    save_metrics,
    save_model,
    train,
)
from .analysis import (
    ConfusionMatrix,
    attribute_correlation,
    bit_ablation,
    confusion,
    pcc,
    save_ablation_csv,
    save_confusion_csv,
    save_correlation_csv,
    sparsity_ratio,
)

__version__ = "0.1.0"

__all__ = [
    "Binarization",
    "BinarizationCollisionError",
    "CodeGenerationError",
    "CodeKind",
    "CodeMatrix",
    "CodeMetrics",
    "ConfusionMatrix",
    "ConvergenceError",
    "Dataset",
    "DecoderLossResult",
    "EigenDecomposition",
    "MetricsRow",
    "NetParams",
    "SimilarityGraph",
    "TrainConfig",
    "TrainingDivergedError",
    "attribute_correlation",
    "backward",
    "batch_loss_grad",
    "binarize",
    "bit_ablation",
    "code_metrics",
    "confusion",
    "decoder_softmax",
    "decoding_matrix",
    "default_code_length",
    "dense_random_code",
    "distances",
    "forward",
    "gaussian_code",
    "init",
    "load_attributes_csv",
    "load_code_csv",
    "load_csv",
    "load_model",
    "load_similarity_csv",
    "net_backward",
    "net_forward",
    "net_outputs",
    "normalize",
    "normalized_laplacian",
    "one_hot",
    "pcc",
    "predict",
    "predict_batch",
    "save_ablation_csv",
    "save_attributes_csv",
    "save_code_csv",
    "save_confusion_csv",
    "save_correlation_csv",
    "save_csv",
    "save_metrics",
    "save_model",
    "save_similarity_csv",
    "similarity_from_class_means",
    "sparsity_ratio",
    "spectral_code",
    "split",
    "symmetric_eigen",
    "synth_hierarchical",
    "train",
]
