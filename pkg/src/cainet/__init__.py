"""RGB-thermal semantic segmentation on a minimal reverse-mode tensor core.

The package couples two per-modality encoders through cross-modal
complementary reasoning, global channel-affinity context, and low-level
detail aggregation, then decodes through an attention-residual refinement
stream with auxiliary binary/boundary/attention supervision.
"""

from .arlm import ArlmStream, StreamOutputs, arlm_stage
from .backbone import (BackboneConfig, CoarseDecoder, Encoder,
                       FeaturePyramid, paper_backbone, toy_backbone)
from .cacr import CACR
from .checkpoint import (CheckpointError, assign_parameters, load_checkpoint,
                         save_checkpoint)
from .data import (Corpus, DataError, DatasetManifest, LabelRangeError,
                   MissingFileError, SegSample, SizeMismatchError, colorize,
                   inverse_colorize, load_corpus, load_manifest, load_sample,
                   make_palette, save_corpus, synth_scene)
from .detail import DetailAggregation
from .gcm import GCM
from .gradcheck import CheckResult, gradcheck_report
from .losses import (ClassWeights, LossReport, LossToggles, LossWeights,
                     attention_loss, cross_entropy, enet_class_weights,
                     lovasz_softmax, total_loss, weighted_binary_cross_entropy,
                     weighted_cross_entropy)
from .metrics import (ConfusionMatrix, macc, miou, per_class_accuracy,
                      per_class_iou, report_text)
from .model import (CaiNet, ModelConfig, config_for_preset, paper_config,
                    toy_config)
from .targets import (AuxTargets, attention_target, aux_targets,
                      binary_target, boundary_target, dilate, erode,
                      gaussian_blur)
from .tensor import (ConfigError, Parameter, ParamFactory, ShapeError, Tensor,
                     backward, finite_difference_gradient, no_grad, precision)
from .train import (TrainConfig, config_from_mapping, evaluate_split,
                    parse_config_text, run_stage, staged_train)

__version__ = "0.1.0"

__all__ = [
    "ArlmStream", "StreamOutputs", "arlm_stage",
    "BackboneConfig", "CoarseDecoder", "Encoder", "FeaturePyramid",
    "paper_backbone", "toy_backbone",
    "CACR", "GCM", "DetailAggregation",
    "CheckpointError", "assign_parameters", "load_checkpoint",
    "save_checkpoint",
    "Corpus", "DataError", "DatasetManifest", "LabelRangeError",
    "MissingFileError", "SegSample", "SizeMismatchError", "colorize",
    "inverse_colorize", "load_corpus", "load_manifest", "load_sample",
    "make_palette", "save_corpus", "synth_scene",
    "CheckResult", "gradcheck_report",
    "ClassWeights", "LossReport", "LossToggles", "LossWeights",
    "attention_loss", "cross_entropy", "enet_class_weights",
    "lovasz_softmax", "total_loss", "weighted_binary_cross_entropy",
    "weighted_cross_entropy",
    "ConfusionMatrix", "macc", "miou", "per_class_accuracy",
    "per_class_iou", "report_text",
    "CaiNet", "ModelConfig", "config_for_preset", "paper_config",
    "toy_config",
    "AuxTargets", "attention_target", "aux_targets", "binary_target",
    "boundary_target", "dilate", "erode", "gaussian_blur",
    "ConfigError", "Parameter", "ParamFactory", "ShapeError", "Tensor",
    "backward", "finite_difference_gradient", "no_grad", "precision",
    "TrainConfig", "config_from_mapping", "evaluate_split",
    "parse_config_text", "run_stage", "staged_train",
    "__version__",
]
