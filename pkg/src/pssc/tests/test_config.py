from pathlib import Path

import pydantic
import pytest

from pssc.config import (AffinityConfig, RunConfig, SynthConfig, TrainConfig,
                         build_run_config, build_synth_config, dump_config,
                         load_config, parse_config_text)
from pssc.errors import ConfigurationError


def test_parse_skips_comments_and_blanks():
    text = '# header\n\nk = 4  # clusters\n  q=2\nhidden_widths = 64, 32\n'
    assert parse_config_text(text) == {'k': '4', 'q': '2',
                                       'hidden_widths': '64, 32'}


@pytest.mark.parametrize('text, line', [
    ('k = 3\nnot a pair\n', 'line 2'),
    ('= 3\n', 'line 1'),
    ('k = 3\n\nk = 4\n', 'line 3'),
])
def test_parse_errors_name_the_line(text, line):
    with pytest.raises(ConfigurationError) as err:
        parse_config_text(text, source='test.conf')
    assert err.value.offset == line
    assert err.value.path == 'test.conf'


def test_values_are_validated():
    cfg = build_run_config({'k': '4', 'hidden_widths': '64,32',
                            'freeze_laplacian': 'true', 'data': 'none'})
    assert cfg.k == 4
    assert cfg.hidden_widths == [64, 32]
    assert cfg.freeze_laplacian is True
    assert cfg.data is None


@pytest.mark.parametrize('values', [
    {'k': '1'},
    {'gamma2': '-0.5'},
    {'variant': 'dsc'},
    {'unknown_key': '1'},
    {'hidden_widths': '64,0'},
    {'coeff_init': 'ssc'},
    {'lr_coeff': '0'},
])
def test_invalid_values_are_configuration_errors(values):
    with pytest.raises(ConfigurationError):
        build_run_config(values)


def test_latent_width_defaults_to_k_times_q():
    assert RunConfig(k=3, q=4).train_config().latent_dim == 12
    assert RunConfig(k=3, q=4, latent_dim=7).train_config().latent_dim == 7


def test_unsupervised_variant_drops_pseudo_supervision():
    cfg = RunConfig(variant='pssc_l').train_config()
    assert cfg.gamma2 == 0.0 and cfg.gamma3 == 0.0 and cfg.gamma1 == 1.0
    assert RunConfig().train_config().gamma2 == 0.1


def test_stage_configs_follow_run_config():
    cfg = RunConfig(k=5, q=2, alpha_exp=2.0, seed=9, synth_noise=0.2)
    assert cfg.affinity_config() == AffinityConfig(k=5, q=2, alpha_exp=2.0,
                                                   seed=9)
    assert cfg.affinity_config().m == 11
    assert cfg.synth_config().noise == 0.2
    assert cfg.train_config().seed == 9


def test_models_are_frozen():
    cfg = TrainConfig()
    with pytest.raises(pydantic.ValidationError):
        cfg.gamma1 = 2.0


def test_synthetic_dimension_must_fit():
    with pytest.raises(pydantic.ValidationError):
        SynthConfig(q=5, d=4)


def test_dump_and_load_round_trip(tmp_path):
    cfg = RunConfig(k=4, q=3, hidden_widths=[32, 16], data=Path('x.csv'),
                    psnr_peak=None, gamma3=0.25, dump_affinity=True)
    path = tmp_path / 'run.conf'
    path.write_text(dump_config(cfg))
    assert load_config(path) == cfg


def test_overrides_win_over_file(tmp_path):
    path = tmp_path / 'run.conf'
    path.write_text('seed = 3\nk = 2\n')
    assert load_config(path, {'seed': 8, 'k': None}).seed == 8
    assert load_config(path, {'seed': None}).seed == 3


def test_report_reads_as_config(tmp_path):
    cfg = RunConfig(k=2, q=2)
    path = tmp_path / 'report.txt'
    path.write_text('# config\n' + dump_config(cfg)
                    + '# metrics\nacc = 1.0\n# timings\nrun_seconds = 1.0\n')
    assert load_config(path) == cfg


def test_missing_file(tmp_path):
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / 'absent.conf')


@pytest.mark.parametrize('path', sorted(
        (Path(__file__).parents[3] / 'configs').glob('*.conf')),
        ids=lambda p: p.name)
def test_shipped_configs_are_valid(path):
    load_config(path)


def test_coefficient_settings_reach_training():
    cfg = build_run_config({'coeff_init': 'random', 'lr_coeff': '1e-4',
                            'lsr_reg': '0.5'}).train_config()
    assert (cfg.coeff_init, cfg.lr_coeff, cfg.lsr_reg) == ('random', 1e-4, 0.5)
    assert RunConfig().train_config().coeff_init == 'lsr'


def test_synth_settings_are_checked():
    with pytest.raises(ConfigurationError) as err:
        build_synth_config({'q': 5, 'd': 3})
    assert 'cannot exceed' in str(err.value)
    assert build_synth_config({'k': 2}).k == 2
