from .errors import (PsscError, ContractViolationError, FactorizationError,
                     ConfigurationError, DivergenceError, TrainingError,
                     IngestionError)
from .linalg import SeededRng, svd, eigh_sym, softmax_rows
from .graph import (SimilarityGraph, similarity_from_coeff,
                    normalized_laplacian, weighted_recon_quadform)
from .model import (LayerParams, PsscParams, ForwardCache, PseudoLabels,
                    init_params, forward, encode, pseudo_labels)
from .loss import (LossBreakdown, loss_locality, loss_selfexpr, loss_graph,
                   loss_label, total_loss_and_grads)
from .config import TrainConfig, AffinityConfig, SynthConfig, RunConfig, load_config
from .trainer import AdamState, TrainTrace, adam_step, pretrain, finetune, train_pssc
from .affinity import ClusterResult, build_affinity, spectral_cluster
from .evaluation import MetricReport, acc, nmi, purity, psnr, evaluate
from .largescale import SplitPlan, knn_predict, run_largescale
from .datasets import Dataset, load_dataset, synthesize_subspaces
from .pipeline import (RunReport, ClusteringPipeline, FullPipeline,
                       LargeScalePipeline, compare_supervision)
