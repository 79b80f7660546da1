import pandas as pd

from pssc.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main
from pssc.config import dump_config
from pssc.errors import TrainingError


def write_config(path, cfg):
    path.write_text(dump_config(cfg))
    return path


def test_synth_writes_csv(tmp_path):
    code = main(['synth', '--k', '2', '--q', '1', '--d', '3',
                 '--per-cluster', '5', '--noise', '0', '--out', str(tmp_path)])
    assert code == EXIT_OK
    frame = pd.read_csv(tmp_path / 'synth.csv', header=None)
    assert frame.shape == (10, 4)
    assert sorted(frame[3].unique()) == [0, 1]


def test_run_and_eval(small_run_cfg, tmp_path):
    config = write_config(tmp_path / 'run.conf', small_run_cfg)
    out = tmp_path / 'out'
    assert main(['run', '--config', str(config), '--out', str(out),
                 '--seed', '3', '--dump-affinity']) == EXIT_OK
    assert (out / 'affinity.matbin').exists()
    assert 'seed = 3' in (out / 'report.txt').read_text()

    labels = out / 'labels.csv'
    assert main(['eval', '--pred', str(labels), '--true', str(labels),
                 '--out', str(tmp_path / 'eval')]) == EXIT_OK
    assert 'acc = ' in (tmp_path / 'eval' / 'report.txt').read_text()


def test_run_on_csv_with_label_column(small_run_cfg, tmp_path):
    main(['synth', '--k', '2', '--q', '2', '--d', '8', '--per-cluster', '12',
          '--out', str(tmp_path)])
    cfg = small_run_cfg.model_copy(update={'data': tmp_path / 'synth.csv'})
    config = write_config(tmp_path / 'run.conf', cfg)
    assert main(['run', '--config', str(config), '--labels-col',
                 '--out', str(tmp_path / 'out')]) == EXIT_OK
    frame = pd.read_csv(tmp_path / 'out' / 'labels.csv')
    assert 'true_label' in frame.columns


def test_largescale_command(small_run_cfg, tmp_path):
    config = write_config(tmp_path / 'run.conf',
                          small_run_cfg.model_copy(update={'m': 12}))
    assert main(['largescale', '--config', str(config),
                 '--out', str(tmp_path / 'out')]) == EXIT_OK
    assert (tmp_path / 'out' / 'labels.csv').exists()


def test_configuration_problems_exit_one(tmp_path, capsys):
    assert main(['run', '--config', str(tmp_path / 'absent.conf')]) == \
        EXIT_CONFIG
    bad = tmp_path / 'bad.conf'
    bad.write_text('k = 1\n')
    assert main(['run', '--config', str(bad)]) == EXIT_CONFIG
    assert 'Configuration problem' in capsys.readouterr().err


def test_ingestion_problems_exit_one(tmp_path):
    data = tmp_path / 'data.csv'
    data.write_text('1,2\n3,nan\n')
    config = tmp_path / 'run.conf'
    config.write_text(f'data = {data}\nk = 2\nq = 1\n')
    assert main(['run', '--config', str(config)]) == EXIT_CONFIG


def test_runtime_failures_exit_two(small_run_cfg, tmp_path, monkeypatch,
                                   capsys):
    def diverge(*args, **kwargs):
        raise TrainingError('Fine-tuning diverged.', stage='finetune',
                            epoch=4, term='graph')

    monkeypatch.setattr('pssc.pipeline.finetune', diverge)
    config = write_config(tmp_path / 'run.conf', small_run_cfg)
    assert main(['run', '--config', str(config),
                 '--out', str(tmp_path / 'out')]) == EXIT_RUNTIME
    err = capsys.readouterr().err
    assert 'epoch: 4' in err and 'term: graph' in err


def test_synth_rejects_subspace_wider_than_space(tmp_path, capsys):
    code = main(['synth', '--k', '2', '--q', '5', '--d', '3',
                 '--out', str(tmp_path)])
    assert code == EXIT_CONFIG
    assert 'q (5) cannot exceed d (3)' in capsys.readouterr().err
    assert not (tmp_path / 'synth.csv').exists()


def test_unexpected_errors_exit_two(tmp_path, monkeypatch, capsys):
    def disk_full(*args, **kwargs):
        raise OSError(28, 'No space left on device')

    monkeypatch.setattr('pssc.cli.write_csv_dataset', disk_full)
    code = main(['synth', '--k', '2', '--q', '1', '--d', '3',
                 '--out', str(tmp_path)])
    assert code == EXIT_RUNTIME
    assert 'OSError' in capsys.readouterr().err
