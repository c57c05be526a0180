"""Pipeline configuration: a YAML file merged over defaults.

Example::

    seed: 2024
    output_dir: out
    data:
      generator: sim_univariate   # or  csv: path/to/data.csv  (labels: true)
      n: 600                      #  or  fixture: galaxy
    model:
      type: dpm                   # dpm | dpm_mv | bundle
      dpm: {iterations: 6000, burn_in: 1000, thinning: 10}
    summary:
      n_predictive: 2000
      k_max: 10
      delta: 0.1
      k_star: null                # set to force K*

Unknown keys and bad values raise :class:`ValidationError` naming the
field path (``model.dpm.k0: must be > 0``).  ``MIXSUM_SEED`` and
``MIXSUM_OUTPUT_DIR`` override the file; command-line flags override both.
"""

from __future__ import annotations

import copy
import os
from dataclasses import dataclass, field, fields

import yaml

from .errors import ValidationError
from .reference_models import GENERATORS, DpmConfig, MvDpmConfig
from .summary_fit import EmConfig

ENV_SEED = "MIXSUM_SEED"
ENV_OUTPUT_DIR = "MIXSUM_OUTPUT_DIR"


@dataclass
class DataSource:
    generator: str | None = None
    n: int | None = None
    csv: str | None = None
    fixture: str | None = None
    labels: bool = False
    seed: int | None = None


@dataclass
class ModelSource:
    type: str = "dpm"
    bundle: str | None = None
    dpm: DpmConfig = field(default_factory=DpmConfig)
    dpm_mv: MvDpmConfig = field(default_factory=MvDpmConfig)


@dataclass
class SummaryOptions:
    n_predictive: int = 2000
    k_max: int = 10
    delta: float = 0.1
    sd_cap: float | None = None
    k_star: int | None = None
    em: EmConfig = field(default_factory=EmConfig)


@dataclass
class ProjectionOptions:
    h: int = 1000
    warm_start: bool = True
    restarts: int | None = None
    grid: str | None = None


@dataclass
class ClusterOptions:
    h: int = 1000
    restarts: int = 5


@dataclass
class EvaluationOptions:
    truth: str | None = None
    n_truth_samples: int = 5000


@dataclass
class PipelineConfig:
    data: DataSource = field(default_factory=DataSource)
    model: ModelSource = field(default_factory=ModelSource)
    summary: SummaryOptions = field(default_factory=SummaryOptions)
    projection: ProjectionOptions = field(default_factory=ProjectionOptions)
    clustering: ClusterOptions = field(default_factory=ClusterOptions)
    evaluation: EvaluationOptions = field(default_factory=EvaluationOptions)
    seed: int = 0
    output_dir: str = "mixsum_out"
    threads: int = 1
    figures: bool = False

    def validate(self):
        d = self.data
        sources = [s for s in ("generator", "csv", "fixture") if getattr(d, s) is not None]
        if len(sources) != 1:
            raise ValidationError("data: exactly one of generator, csv, fixture must be set")
        if d.generator is not None:
            if d.generator not in GENERATORS:
                raise ValidationError(f"data.generator: unknown generator {d.generator!r}")
            if d.n is None or d.n < 1:
                raise ValidationError("data.n: must be >= 1 for a generator")
        m = self.model
        if m.type not in ("dpm", "dpm_mv", "bundle"):
            raise ValidationError(f"model.type: must be dpm, dpm_mv or bundle, got {m.type!r}")
        if (m.type == "bundle") != (m.bundle is not None):
            raise ValidationError("model.bundle: required exactly when model.type is bundle")
        _wrap("model.dpm", m.dpm.validate)
        _wrap("model.dpm_mv", m.dpm_mv.validate)
        s = self.summary
        if s.k_max < 1:
            raise ValidationError("summary.k_max: must be >= 1")
        if s.n_predictive <= s.k_max:
            raise ValidationError("summary.n_predictive: must exceed k_max")
        if not s.delta > 0:
            raise ValidationError("summary.delta: must be > 0")
        if s.sd_cap is not None and not s.sd_cap > 0:
            raise ValidationError("summary.sd_cap: must be > 0")
        if s.k_star is not None and not 1 <= s.k_star <= s.k_max:
            raise ValidationError("summary.k_star: must lie in 1..k_max")
        _wrap("summary.em", s.em.validate)
        if self.projection.h < 1 or self.clustering.h < 1:
            raise ValidationError("projection.h / clustering.h: must be >= 1")
        if self.projection.restarts is not None and self.projection.restarts < 0:
            raise ValidationError("projection.restarts: must be >= 0")
        if self.clustering.restarts < 1:
            raise ValidationError("clustering.restarts: must be >= 1")
        if self.evaluation.truth is not None and self.evaluation.truth not in GENERATORS:
            raise ValidationError(f"evaluation.truth: unknown design {self.evaluation.truth!r}")
        if self.seed < 0:
            raise ValidationError("seed: must be >= 0")
        if self.threads < 1:
            raise ValidationError("threads: must be >= 1")
        return self

    @property
    def truth_design(self):
        """Name of the known generating design, if any."""
        return self.evaluation.truth or self.data.generator

    def projection_em(self):
        em = copy.copy(self.summary.em)
        if self.projection.restarts is not None:
            em.restarts = self.projection.restarts
        return em


def _wrap(prefix, fn):
    try:
        fn()
    except ValidationError as exc:
        raise ValidationError(f"{prefix}.{exc}") from None


def _merge(obj, mapping, path):
    if not isinstance(mapping, dict):
        raise ValidationError(f"{path or 'config'}: expected a mapping")
    known = {f.name: f for f in fields(obj)}
    for key, value in mapping.items():
        where = f"{path}.{key}" if path else str(key)
        if key not in known:
            raise ValidationError(f"{where}: unknown key")
        current = getattr(obj, key)
        if hasattr(current, "__dataclass_fields__"):
            _merge(current, value, where)
        else:
            setattr(obj, key, _coerce(current, value, where, known[key]))


def _coerce(current, value, where, fld):
    if value is None:
        return None
    kind = type(current)
    if current is None:
        ann = str(fld.type)
        kind = int if ann.startswith("int") else float if ann.startswith("float") else str if ann.startswith("str") else None
        if kind is None:
            return value
    if kind is bool:
        if not isinstance(value, bool):
            raise ValidationError(f"{where}: expected true/false, got {value!r}")
        return value
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValidationError(f"{where}: expected an integer, got {value!r}")
        return value
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if kind is str:
        if not isinstance(value, str):
            raise ValidationError(f"{where}: expected a string, got {value!r}")
        return value
    return value


def config_from_dict(mapping, env=None):
    """Build and validate a :class:`PipelineConfig` from a plain mapping."""
    cfg = PipelineConfig()
    _merge(cfg, mapping or {}, "")
    env = os.environ if env is None else env
    if env.get(ENV_SEED):
        try:
            cfg.seed = int(env[ENV_SEED])
        except ValueError:
            raise ValidationError(f"{ENV_SEED}: expected an integer") from None
    if env.get(ENV_OUTPUT_DIR):
        cfg.output_dir = env[ENV_OUTPUT_DIR]
    return cfg


def load_config(path, env=None):
    """Read a YAML config file (see module docstring)."""
    try:
        with open(path) as fh:
            mapping = yaml.safe_load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ValidationError(f"{path}: invalid YAML ({exc})") from None
    return config_from_dict(mapping, env)
