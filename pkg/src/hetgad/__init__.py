"""Heterogeneity-aware graph anomaly detection.

A multi-view graph-transformer autoencoder over typed graphs: per-edge
attention within each layer, learnable attention over view combinations,
and a third attention over node-type logits in the decoder. Anomalies are
ranked by weighted reconstruction residuals. Includes synthetic graph
generation, anomaly injection, full-batch training on a hand-rolled
reverse-mode tape, and an experiment harness.
"""

from .aggregate import EmbeddingSet, aggregate, out_project, view_weights
from .decode import (Reconstruction, ScoreReport, ScoreWeights,
                     anomaly_probability, anomaly_score, attribute_loss,
                     node_type_loss, node_type_onehot, read_scores_csv,
                     reconstruct_attributes, reconstruct_node_types,
                     reconstruct_structure, structure_loss, total_loss,
                     write_scores_csv)
from .encoder import (EncoderConfig, ViewCombination, edge_attention,
                      encode_combination, enumerate_view_combinations,
                      layer_forward, project_inputs)
from .errors import DataError, HetgadError, NumericalError, UsageError
from .experiments import (ExperimentSpec, MetricsReport, PipelineConfig,
                          random_score_auc, run_ablation, run_pipeline,
                          run_robustness, run_sweep)
from .graph import (GlobalNodeIndex, HetGraph, NodeTypeSpec, RelationSpec,
                    build_graph, global_index, load_bundle, save_bundle,
                    validate_graph)
from .inject import (InjectionConfig, InjectionReport,
                     inject_anomalies, inject_attribute_anomalies,
                     inject_structural_anomalies)
from .metrics import auc, auc_by_kind
from .synth import NodeModel, RelationModel, SynthConfig, generate, preset
from .train import (Adam, TrainConfig, TrainResult, forward_loss, grad_check,
                    gradcheck_fixture, init_params, load_model, save_model,
                    schema_fingerprint, train_model)
from .views import (ViewPartition, partition_of, split_views, standardize,
                    view_slice, with_partition)

__version__ = "0.1.0"
