"""Run configuration: a flat `key = value` file validated by pydantic models.

A config file holds one `key = value` pair per line; `#` starts a comment and
blank lines are ignored. The whole file maps onto RunConfig, which hands out
the per-stage models (TrainConfig, AffinityConfig, SynthConfig). The report
written after a run echoes the effective RunConfig in the same syntax, so a
report is itself a runnable config.
"""
from pathlib import Path
from typing import List, Literal, Optional

from pydantic import (BaseModel, ConfigDict, Field, ValidationError,
                      field_validator, model_validator)

from .errors import ConfigurationError

DEFAULT_HIDDEN_WIDTHS = (500, 500, 2000)
REPORT_CONFIG_HEADER = '# config'


def _check_widths(cls, widths):
    if any(w < 1 for w in widths):
        raise ValueError(f'hidden widths must be positive, got {widths}')
    return widths


class _FrozenModel(BaseModel):
    model_config = ConfigDict(extra='forbid', frozen=True)


class TrainConfig(_FrozenModel):
    """Hyperparameters of pretraining and fine-tuning."""
    gamma1: float = Field(1.0, ge=0)
    gamma2: float = Field(0.1, ge=0)
    gamma3: float = Field(0.1, ge=0)
    lr_pretrain: float = Field(1e-3, gt=0)
    lr_finetune: float = Field(1e-4, gt=0)
    lr_coeff: float = Field(1e-5, gt=0)
    epochs_pretrain: int = Field(300, ge=0)
    epochs_finetune: int = Field(150, ge=0)
    coeff_init: Literal['random', 'lsr'] = 'lsr'
    lsr_reg: float = Field(0.1, gt=0)
    thres: float = Field(0.8, gt=0, le=1)
    margin: float = Field(1.0, gt=0)
    warmup_epochs: int = Field(1, ge=0)
    seed: int = Field(0, ge=0, lt=2 ** 64)
    freeze_laplacian: bool = False
    normalize_pair_losses: bool = True
    early_stop_tol: float = Field(1e-7, ge=0)
    early_stop_window: int = Field(10, ge=1)
    log_every: int = Field(50, ge=1)
    hidden_widths: List[int] = Field(default_factory=lambda: list(DEFAULT_HIDDEN_WIDTHS))
    latent_dim: int = Field(10, ge=1)

    _positive_widths = field_validator('hidden_widths')(_check_widths)

    def layer_widths(self, input_dim):
        return [int(input_dim)] + list(self.hidden_widths) + [self.latent_dim]

    def without_supervision(self):
        """Returns a copy with the pseudo-supervision weights switched off."""
        return self.model_copy(update={'gamma2': 0.0, 'gamma3': 0.0})


class AffinityConfig(_FrozenModel):
    """Settings of the affinity construction and spectral clustering."""
    k: int = Field(..., ge=2)
    q: int = Field(..., ge=1)
    alpha_exp: float = Field(1.0, gt=0)
    kmeans_restarts: int = Field(10, ge=1)
    row_normalize: bool = True
    seed: int = Field(0, ge=0, lt=2 ** 64)

    @property
    def m(self):
        return self.k * self.q + 1


class SynthConfig(_FrozenModel):
    """Union-of-subspaces generator settings."""
    k: int = Field(3, ge=1)
    q: int = Field(4, ge=1)
    d: int = Field(30, ge=1)
    per_cluster: int = Field(60, ge=1)
    noise: float = Field(0.01, ge=0)
    seed: int = Field(0, ge=0, lt=2 ** 64)

    @model_validator(mode='after')
    def _fits_ambient_space(self):
        if self.q > self.d:
            raise ValueError(f'q ({self.q}) cannot exceed d ({self.d})')
        return self


class RunConfig(_FrozenModel):
    """Every key a run config file may hold."""
    # data
    data: Optional[Path] = None
    format: Literal['csv', 'idx', 'matbin'] = 'csv'
    labels_col: bool = False
    idx_labels: Optional[Path] = None
    labels_file: Optional[Path] = None
    scale: Literal['none', 'minmax'] = 'none'
    synth_k: int = Field(3, ge=1)
    synth_q: int = Field(4, ge=1)
    synth_d: int = Field(30, ge=1)
    synth_per_cluster: int = Field(60, ge=1)
    synth_noise: float = Field(0.01, ge=0)

    # clustering
    k: int = Field(3, ge=2)
    q: int = Field(4, ge=1)
    alpha_exp: float = Field(1.0, gt=0)
    row_normalize: bool = True
    kmeans_restarts: int = Field(10, ge=1)

    # network and training
    variant: Literal['pssc', 'pssc_l'] = 'pssc'
    hidden_widths: List[int] = Field(default_factory=lambda: list(DEFAULT_HIDDEN_WIDTHS))
    latent_dim: Optional[int] = Field(None, ge=1)
    gamma1: float = Field(1.0, ge=0)
    gamma2: float = Field(0.1, ge=0)
    gamma3: float = Field(0.1, ge=0)
    lr_pretrain: float = Field(1e-3, gt=0)
    lr_finetune: float = Field(1e-4, gt=0)
    lr_coeff: float = Field(1e-5, gt=0)
    epochs_pretrain: int = Field(300, ge=0)
    epochs_finetune: int = Field(150, ge=0)
    coeff_init: Literal['random', 'lsr'] = 'lsr'
    lsr_reg: float = Field(0.1, gt=0)
    thres: float = Field(0.8, gt=0, le=1)
    margin: float = Field(1.0, gt=0)
    warmup_epochs: int = Field(1, ge=0)
    freeze_laplacian: bool = False
    normalize_pair_losses: bool = True
    early_stop_tol: float = Field(1e-7, ge=0)
    early_stop_window: int = Field(10, ge=1)
    log_every: int = Field(50, ge=1)
    resume_checkpoint: Optional[Path] = None

    # large-scale protocol
    m: int = Field(5000, ge=1)
    neighbors: int = Field(1, ge=1)

    # evaluation and outputs
    nmi_average: Literal['arithmetic', 'geometric'] = 'arithmetic'
    psnr_peak: Optional[float] = Field(None, gt=0)
    dump_affinity: bool = False
    save_checkpoint: bool = False
    seed: int = Field(0, ge=0, lt=2 ** 64)

    @field_validator('hidden_widths', mode='before')
    @classmethod
    def _split_widths(cls, value):
        if isinstance(value, str):
            value = [w.strip() for w in value.split(',') if w.strip()]
        return value

    _positive_widths = field_validator('hidden_widths')(_check_widths)

    @field_validator('latent_dim', 'psnr_peak', 'data', 'idx_labels',
                     'labels_file', 'resume_checkpoint', mode='before')
    @classmethod
    def _blank_is_none(cls, value):
        if isinstance(value, str) and value.strip().lower() in ('', 'none'):
            return None
        return value

    def train_config(self):
        cfg = TrainConfig(
                gamma1=self.gamma1, gamma2=self.gamma2, gamma3=self.gamma3,
                lr_pretrain=self.lr_pretrain, lr_finetune=self.lr_finetune,
                lr_coeff=self.lr_coeff, coeff_init=self.coeff_init,
                lsr_reg=self.lsr_reg,
                epochs_pretrain=self.epochs_pretrain,
                epochs_finetune=self.epochs_finetune, thres=self.thres,
                margin=self.margin, warmup_epochs=self.warmup_epochs,
                seed=self.seed, freeze_laplacian=self.freeze_laplacian,
                normalize_pair_losses=self.normalize_pair_losses,
                early_stop_tol=self.early_stop_tol,
                early_stop_window=self.early_stop_window,
                log_every=self.log_every, hidden_widths=self.hidden_widths,
                latent_dim=self.latent_dim or self.k * self.q)
        if self.variant == 'pssc_l':
            cfg = cfg.without_supervision()
        return cfg

    def affinity_config(self):
        return AffinityConfig(k=self.k, q=self.q, alpha_exp=self.alpha_exp,
                              kmeans_restarts=self.kmeans_restarts,
                              row_normalize=self.row_normalize, seed=self.seed)

    def synth_config(self):
        return SynthConfig(k=self.synth_k, q=self.synth_q, d=self.synth_d,
                           per_cluster=self.synth_per_cluster,
                           noise=self.synth_noise, seed=self.seed)


def parse_config_text(text, source='<config>'):
    """Parses `key = value` lines into a dict of raw string values.

    Raises: ConfigurationError on a line without '=', an empty key, or a key
      given twice, naming the line.
    """
    values = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigurationError(f'Expecting `key = value`, got {raw!r}.',
                                     path=source, offset=f'line {line_no}')
        key, value = (part.strip() for part in line.split('=', 1))
        if not key:
            raise ConfigurationError('Empty key.', path=source,
                                     offset=f'line {line_no}')
        if key in values:
            raise ConfigurationError(f'Duplicate key {key!r}.', path=source,
                                     offset=f'line {line_no}')
        values[key] = value
    return values


def config_section(text):
    """Returns the config part of a run report, or `text` unchanged if it is
    not a report.

    A report opens with a `# config` line and starts each later section with
    another `# <name>` line.
    """
    lines = text.splitlines()
    first = next((l.strip() for l in lines if l.strip()), None)
    if first != REPORT_CONFIG_HEADER:
        return text
    start = [l.strip() for l in lines].index(REPORT_CONFIG_HEADER) + 1
    section = []
    for line in lines[start:]:
        if line.startswith('# '):
            break
        section.append(line)
    return '\n'.join(section)


def _validation_problems(err):
    return '; '.join(
            f'{".".join(str(p) for p in e["loc"]) or "config"}: {e["msg"]}'
            for e in err.errors())


def build_run_config(values, source='<config>'):
    """Validates raw values into a RunConfig.

    Raises: ConfigurationError listing every invalid or unknown key.
    """
    try:
        return RunConfig(**values)
    except ValidationError as err:
        raise ConfigurationError(
                f'Invalid configuration: {_validation_problems(err)}',
                path=source)


def build_synth_config(values):
    """Validates generator settings (e.g. from command-line flags).

    Raises: ConfigurationError, e.g. when q exceeds d.
    """
    try:
        return SynthConfig(**values)
    except ValidationError as err:
        raise ConfigurationError(
                f'Invalid synthetic settings: {_validation_problems(err)}')


def load_config(path, overrides=None):
    """Reads and validates a config file, applying CLI `overrides` last."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ConfigurationError(f'Cannot read config file: {err}', path=path)
    values = parse_config_text(config_section(text), source=path)
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return build_run_config(values, source=path)


def dump_config(cfg):
    """Renders a RunConfig back into `key = value` lines."""
    lines = []
    for key, value in cfg.model_dump().items():
        if value is None:
            value = 'none'
        elif isinstance(value, bool):
            value = str(value).lower()
        elif isinstance(value, (list, tuple)):
            value = ','.join(str(v) for v in value)
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f'{key} = {value}')
    return '\n'.join(lines) + '\n'
