"""Command-line entry point.

Subcommands:
  synth       write a union-of-subspaces CSV dataset (labels in the last column)
  run         train on all samples, cluster, evaluate, write outputs
  largescale  train on a subset, label the rest by nearest neighbors
  eval        score a predicted labels file against a true labels file

Exit codes: 0 on success, 1 on configuration/ingestion errors, 2 on runtime
errors such as training divergence.
"""
import argparse
import logging
from pathlib import Path
import sys

from .config import build_synth_config, load_config
from .datasets import read_labels_csv, synthesize_subspaces, write_csv_dataset
from .errors import ConfigurationError, IngestionError, PsscError
from .evaluation import evaluate
from .pipeline import FullPipeline, LargeScalePipeline, dataset_from_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def _banner(title):
    print('\n' + '=' * len(title))
    print(title)
    print('=' * len(title))


def _print_metrics(metrics):
    for key, value in metrics.as_dict().items():
        if value is not None:
            print(f'  {key:7}: {value:.4f}')


def _overrides(args):
    overrides = {'seed': args.seed}
    if args.dump_affinity:
        overrides['dump_affinity'] = 'true'
    if args.labels_col:
        overrides['labels_col'] = 'true'
    return overrides


def _run_pipeline(pipeline_cls, config_path, overrides=None, out_dir=None):
    cfg = load_config(config_path, overrides)
    dataset = dataset_from_config(cfg)
    print(f'Loaded {dataset.name}: d = {dataset.d}, n = {dataset.n}')
    report = pipeline_cls(cfg, dataset).run(out_dir)
    print(f'\nFinished {report.command} on {report.n} samples:')
    _print_metrics(report.metrics)
    if out_dir is not None:
        print(f'\nOutputs written to {out_dir}')
    return report


def cmd_run(config_path, overrides=None, out_dir=None):
    """Runs the full pipeline for a config file; returns the RunReport."""
    return _run_pipeline(FullPipeline, config_path, overrides, out_dir)


def cmd_largescale(config_path, overrides=None, out_dir=None):
    """Runs the subset-plus-nearest-neighbor pipeline; returns the RunReport."""
    return _run_pipeline(LargeScalePipeline, config_path, overrides, out_dir)


def cmd_synth(cfg, out_dir):
    """Generates a synthetic dataset and writes it as `<out_dir>/synth.csv`."""
    dataset = synthesize_subspaces(cfg)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / 'synth.csv'
    write_csv_dataset(path, dataset)
    print(f'Wrote {dataset.n} samples of {dataset.name} to {path}')
    return path


def cmd_eval(pred_path, true_path, out_dir=None, nmi_average='arithmetic'):
    """Scores predicted labels against true labels; returns a MetricReport."""
    pred = read_labels_csv(pred_path)
    true = read_labels_csv(true_path, column='true_label')
    metrics = evaluate(true, pred, nmi_average=nmi_average)
    _print_metrics(metrics)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        lines = [f'{k} = {v!r}' for k, v in metrics.as_dict().items()
                 if v is not None]
        (out_dir / 'report.txt').write_text('\n'.join(lines) + '\n')
    return metrics


def _build_parser():
    parser = argparse.ArgumentParser(
            prog='pssc',
            description='Pseudo-supervised deep subspace clustering.')
    parser.add_argument('--verbose', action='store_true',
                        help='log every training epoch')
    sub = parser.add_subparsers(dest='command', required=True)

    synth = sub.add_parser('synth', help='write a synthetic subspace dataset')
    synth.add_argument('--k', type=int, default=3)
    synth.add_argument('--q', type=int, default=4)
    synth.add_argument('--d', type=int, default=30)
    synth.add_argument('--per-cluster', type=int, default=60)
    synth.add_argument('--noise', type=float, default=0.01)
    synth.add_argument('--seed', type=int, default=0)
    synth.add_argument('--out', type=Path, default=Path('.'))

    for name, help_text in (('run', 'train and cluster all samples'),
                            ('largescale', 'train on a subset, 1-NN the rest')):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument('--config', type=Path, required=True)
        cmd.add_argument('--seed', type=int, default=None)
        cmd.add_argument('--out', type=Path, default=Path('pssc_out'))
        cmd.add_argument('--dump-affinity', action='store_true')
        cmd.add_argument('--labels-col', action='store_true')

    ev = sub.add_parser('eval', help='score predicted labels')
    ev.add_argument('--pred', type=Path, required=True)
    ev.add_argument('--true', type=Path, required=True)
    ev.add_argument('--out', type=Path, default=None)
    ev.add_argument('--nmi-average', choices=('arithmetic', 'geometric'),
                    default='arithmetic')
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
            level=logging.DEBUG if args.verbose else logging.INFO,
            format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    _banner('PSSC subspace clustering')

    try:
        if args.command == 'synth':
            cmd_synth(build_synth_config(dict(
                    k=args.k, q=args.q, d=args.d, per_cluster=args.per_cluster,
                    noise=args.noise, seed=args.seed)), args.out)
        elif args.command == 'run':
            cmd_run(args.config, _overrides(args), args.out)
        elif args.command == 'largescale':
            cmd_largescale(args.config, _overrides(args), args.out)
        elif args.command == 'eval':
            cmd_eval(args.pred, args.true, args.out, args.nmi_average)
    except (ConfigurationError, IngestionError) as err:
        print(f'\nConfiguration problem:\n{err}', file=sys.stderr)
        return EXIT_CONFIG
    except PsscError as err:
        print(f'\nRun failed:\n{err}', file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as err:
        logger.exception('Unexpected failure')
        print(f'\nRun failed:\n{type(err).__name__}: {err}', file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
