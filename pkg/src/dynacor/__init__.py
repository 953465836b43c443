"""dynacor: noisy-label detection from training-signal trajectories.

The pipeline corrupts a copy of the data with deliberately wrong labels,
records per-instance training signals while a small classifier fits the
pooled set, and clusters trajectory representations into clean/noisy groups
with a self-supervised stopping metric.
"""

from .baselines import aum_detect, avg_encoder_detect, gmm1d_em
from .corruption import CorruptionConfig, corrupt, pool
from .data import (LabeledDataset, NoiseSpec, NoiseRateReport,
                   expected_corrupted_noise_rate, inject_noise, make_blobs,
                   measured_noise_rate, noise_rate_report, overall_noise_rate,
                   read_dataset_csv, write_dataset_csv)
from .encoder import (ClusterModel, EncoderConfig, FitTrace, assign,
                      alignment_loss, cluster_loss, cosine_distance, detect,
                      fit, init_centroids, load_model, save_model,
                      target_distribution, validation_metric, verdict)
from .metrics import dbi, f1, flag_all_baseline, opt_epoch
from .probe import ProbeConfig, supervised_probe
from .report import DetectionReport
from .trainer import (ClassifierConfig, DynamicsMatrix, quantize,
                      read_dynamics_csv, signal_value, summarize,
                      train_and_record, write_dynamics_csv)

__version__ = "0.1.0"
