"""End-to-end clustering pipelines and their run reports."""
from abc import ABC, abstractmethod
from contextlib import contextmanager
from dataclasses import dataclass, field
import logging
from pathlib import Path
import statistics
import time
from typing import Dict, Optional

import numpy as np
import pandas as pd

from .affinity import build_affinity, spectral_cluster
from .config import REPORT_CONFIG_HEADER, dump_config
from .datasets import load_dataset, synthesize_subspaces
from .errors import ConfigurationError, PsscError
from .evaluation import MetricReport, evaluate
from .formats import read_checkpoint, write_checkpoint, write_matbin
from .largescale import run_largescale
from .linalg import SeededRng
from .model import FULL, forward, init_params
from .trainer import finetune, pretrain, seed_coefficients, traces_to_frame

logger = logging.getLogger(__name__)

TRACE_FLOAT_FORMAT = '%.17g'


@dataclass
class RunReport:
    """Everything needed to describe, and re-run, one pipeline execution."""
    command: str
    config: object
    metrics: MetricReport
    timings: Dict[str, float] = field(default_factory=dict)
    n: int = 0
    trace_path: Optional[Path] = None
    labels: Optional[np.ndarray] = None

    @property
    def seed(self):
        return self.config.seed

    def to_text(self):
        lines = [REPORT_CONFIG_HEADER,
                 dump_config(self.config).rstrip('\n'), '# metrics']
        for key, value in self.metrics.as_dict().items():
            if value is not None:
                lines.append(f'{key} = {value!r}')
        lines.append('# run')
        lines.append(f'command = {self.command}')
        lines.append(f'samples = {self.n}')
        if self.trace_path is not None:
            lines.append(f'trace = {self.trace_path.name}')
        lines.append('# timings')
        lines += [f'{stage}_seconds = {seconds:.3f}'
                  for stage, seconds in self.timings.items()]
        return '\n'.join(lines) + '\n'


def dataset_from_config(cfg):
    """Loads the configured data file, or generates synthetic data if the
    config names no file."""
    if cfg.data is None:
        return synthesize_subspaces(cfg.synth_config())
    return load_dataset(cfg.data, cfg.format, labels_col=cfg.labels_col,
                        idx_labels=cfg.idx_labels, labels_file=cfg.labels_file,
                        scale=cfg.scale)


class ClusteringPipeline(ABC):
    """Abstract pipeline that trains, clusters, evaluates and writes outputs.

    Subclasses implement `cluster`, returning the ClusterResult, the trained
    parameters and the training traces. This class provides the shared
    stage timing, stage tagging of errors, evaluation, and output files:

      report.txt      config echo, metrics and timings (key = value)
      labels.csv      index,label[,true_label]
      trace.csv       per-epoch loss breakdown of every training stage
      affinity.matbin optional, the affinity matrix
      checkpoint.matbin optional, the trained parameters
    """
    COMMAND = None

    def __init__(self, cfg, dataset):
        self._cfg = cfg
        self._dataset = dataset
        self._rng = SeededRng(cfg.seed)
        self._timings = {}

    @contextmanager
    def _stage(self, name):
        """Times a stage and tags any PsscError raised inside it."""
        logger.info(f'stage {name} started')
        start = time.perf_counter()
        try:
            yield
        except PsscError as err:
            if err.stage is None:
                err.stage = name
            raise
        finally:
            self._timings[name] = time.perf_counter() - start

    @abstractmethod
    def cluster(self):
        """Returns (ClusterResult, PsscParams, [TrainTrace])."""
        pass

    def run(self, out_dir=None):
        """Runs the pipeline, writing its outputs to `out_dir` if given.

        Returns: RunReport.
        """
        result, params, traces = self.cluster()

        with self._stage('evaluate'):
            core = (np.arange(self._dataset.n) if result.core_indices is None
                    else result.core_indices)
            X_core = self._dataset.X[:, core]
            Xhat = forward(params, X_core, FULL).Xhat
            metrics = evaluate(self._dataset.true_labels, result.labels,
                               X_core, Xhat, peak=self._cfg.psnr_peak,
                               nmi_average=self._cfg.nmi_average)

        report = RunReport(command=self.COMMAND, config=self._cfg,
                           metrics=metrics, timings=self._timings,
                           n=self._dataset.n, labels=result.labels)
        if out_dir is not None:
            self._write_outputs(Path(out_dir), report, result, params, traces)
        return report

    def _write_outputs(self, out_dir, report, result, params, traces):
        out_dir.mkdir(parents=True, exist_ok=True)

        labels = pd.DataFrame({'index': np.arange(result.labels.size),
                               'label': result.labels})
        if self._dataset.true_labels is not None:
            labels['true_label'] = self._dataset.true_labels
        labels.to_csv(out_dir / 'labels.csv', index=False)

        report.trace_path = out_dir / 'trace.csv'
        traces_to_frame(traces).to_csv(report.trace_path, index=False,
                                       float_format=TRACE_FLOAT_FORMAT)
        if self._cfg.dump_affinity:
            write_matbin(out_dir / 'affinity.matbin', result.A)
        if self._cfg.save_checkpoint:
            write_checkpoint(out_dir / 'checkpoint.matbin', params)
        (out_dir / 'report.txt').write_text(report.to_text())
        logger.info(f'outputs written to {out_dir}')


class FullPipeline(ClusteringPipeline):
    """Trains on every sample and clusters the learned coefficients."""
    COMMAND = 'run'

    def _initial_params(self, train_cfg, widths):
        X = self._dataset.X
        if self._cfg.resume_checkpoint is None:
            params = init_params(widths, X.shape[1], self._cfg.k,
                                 self._rng.child('init'))
            with self._stage('pretrain'):
                params, pre_trace = pretrain(X, params, train_cfg)
            params = seed_coefficients(X, params, train_cfg)
            return params, [pre_trace]

        params = read_checkpoint(self._cfg.resume_checkpoint)
        if params.layer_widths() != widths or params.n != X.shape[1] \
                or params.K != self._cfg.k:
            raise ConfigurationError(
                    f'Checkpoint has widths {params.layer_widths()}, n = '
                    f'{params.n}, K = {params.K}; the run needs widths '
                    f'{widths}, n = {X.shape[1]}, K = {self._cfg.k}.',
                    path=self._cfg.resume_checkpoint)
        logger.info(f'resuming from {self._cfg.resume_checkpoint}')
        return params, []

    def cluster(self):
        train_cfg = self._cfg.train_config()
        aff_cfg = self._cfg.affinity_config()
        widths = train_cfg.layer_widths(self._dataset.d)

        params, traces = self._initial_params(train_cfg, widths)
        with self._stage('finetune'):
            params, fine_trace = finetune(self._dataset.X, params, train_cfg)
        traces.append(fine_trace)
        with self._stage('affinity'):
            A = build_affinity(params.C, aff_cfg)
        with self._stage('spectral'):
            result = spectral_cluster(A, aff_cfg.k, aff_cfg.kmeans_restarts,
                                      self._rng.child('kmeans'))
        return result, params, traces


class LargeScalePipeline(ClusteringPipeline):
    """Trains on a random subset and labels the rest by nearest neighbors."""
    COMMAND = 'largescale'

    def cluster(self):
        m = min(self._cfg.m, self._dataset.n)
        with self._stage('largescale'):
            result, _, params, traces = run_largescale(
                    self._dataset.X, self._cfg.k, m,
                    self._cfg.train_config(), self._cfg.affinity_config(),
                    self._rng, neighbors=self._cfg.neighbors)
        return result, params, traces


def compare_supervision(dataset, cfg, seeds):
    """Runs the full pipeline per seed with and without pseudo-supervision.

    Returns: dict with the per-seed ACC lists and their medians under the
      keys 'supervised', 'unsupervised', 'supervised_median' and
      'unsupervised_median'.
    """
    if dataset.true_labels is None:
        raise ConfigurationError('Comparing variants needs true labels.')
    scores = {'pssc': [], 'pssc_l': []}
    for seed in seeds:
        for variant in scores:
            run_cfg = cfg.model_copy(update={'seed': seed, 'variant': variant})
            report = FullPipeline(run_cfg, dataset).run()
            scores[variant].append(report.metrics.acc)
            logger.info(f'seed {seed} {variant}: acc {report.metrics.acc:.4f}')
    return {'supervised': scores['pssc'],
            'unsupervised': scores['pssc_l'],
            'supervised_median': statistics.median(scores['pssc']),
            'unsupervised_median': statistics.median(scores['pssc_l'])}
