"""
Configuration Manager
Loads experiment documents from YAML, merged over config/default_config.yaml
"""

import math
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError as PydanticValidationError
from pydantic import field_validator, model_validator

from .exceptions import ConfigurationError
from .models import Method, ShardMode, StationarityConfig
from .objective import RobustLogRegParams

DEFAULT_CONFIG_PATH = Path(__file__).parent.parent / "config" / "default_config.yaml"
LOG_LEVEL_ENV = "DPMIX_LOG_LEVEL"


class _Section(BaseModel):
    model_config = ConfigDict(extra='forbid')


class SyntheticConfig(_Section):
    """Parameters of the built-in synthetic binary dataset"""
    n: int = 2000
    d: int = 20
    margin: float = 1.0
    flip_rate: float = 0.05
    seed: int = 0

    @field_validator('n', 'd')
    @classmethod
    def _size(cls, v: int, info) -> int:
        if v < 1:
            raise ValueError(f"{info.field_name} must be at least 1")
        return v

    @field_validator('flip_rate')
    @classmethod
    def _flip(cls, v: float) -> float:
        if not 0.0 <= v < 0.5:
            raise ValueError("flip_rate must lie in [0, 0.5)")
        return v


class DatasetConfig(_Section):
    """Training data source, preprocessing and sharding"""
    kind: Literal['synthetic', 'libsvm'] = 'synthetic'
    path: Optional[str] = None
    test_path: Optional[str] = None
    n_features: Optional[int] = None
    expect_n: Optional[int] = None
    normalize: bool = True
    test_fraction: float = 0.2
    split_seed: int = 0
    shard_mode: ShardMode = ShardMode.IID
    synthetic: SyntheticConfig = Field(default_factory=SyntheticConfig)

    @field_validator('path', 'test_path')
    @classmethod
    def _exists(cls, v: Optional[str]) -> Optional[str]:
        if v is not None and not Path(v).is_file():
            raise ValueError(f"file not found: {v}")
        return v

    @field_validator('n_features', 'expect_n')
    @classmethod
    def _count(cls, v: Optional[int], info) -> Optional[int]:
        if v is not None and v < 1:
            raise ValueError(f"{info.field_name} must be at least 1")
        return v

    @field_validator('test_fraction')
    @classmethod
    def _fraction(cls, v: float) -> float:
        if not 0.0 < v < 1.0:
            raise ValueError("test_fraction must lie in (0, 1)")
        return v

    @model_validator(mode='after')
    def _path_required(self) -> "DatasetConfig":
        if self.kind == 'libsvm' and self.path is None:
            raise ValueError("path is required for libsvm datasets")
        return self


class TopologyConfig(_Section):
    """Erdos-Renyi communication graph"""
    m: int = 10
    p: float = 0.5
    seed: int = 0

    @field_validator('m')
    @classmethod
    def _agents(cls, v: int) -> int:
        if v < 1:
            raise ValueError("m must be at least 1")
        return v

    @field_validator('p')
    @classmethod
    def _probability(cls, v: float) -> float:
        if not 0.0 <= v <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        return v


class OptimizerConfig(_Section):
    """Explicit hyperparameters, or a preset derived from a target accuracy"""
    preset: Literal['explicit', 'theorem1', 'speedup'] = 'explicit'
    eta_x: float = 0.1
    eta_y: float = 0.01
    beta_x: float = 0.1
    beta_y: float = 0.1
    b0: int = 20
    batch: int = 20
    clip: Optional[float] = None
    clip_quantile: Optional[float] = None
    epsilon: Optional[float] = None
    T0: Optional[int] = None

    @field_validator('eta_x', 'eta_y')
    @classmethod
    def _step(cls, v: float, info) -> float:
        if not v > 0:
            raise ValueError(f"{info.field_name} must be positive")
        return v

    @field_validator('beta_x', 'beta_y')
    @classmethod
    def _weight(cls, v: float, info) -> float:
        if not 0 < v <= 1:
            raise ValueError(f"{info.field_name} must lie in (0, 1]")
        return v

    @field_validator('b0', 'batch')
    @classmethod
    def _batch(cls, v: int, info) -> int:
        if v < 1:
            raise ValueError(f"{info.field_name} must be at least 1")
        return v

    @field_validator('clip', 'epsilon')
    @classmethod
    def _positive(cls, v: Optional[float], info) -> Optional[float]:
        if v is not None and not v > 0:
            raise ValueError(f"{info.field_name} must be positive")
        return v

    @field_validator('clip_quantile')
    @classmethod
    def _quantile(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and not 0.0 < v < 1.0:
            raise ValueError("clip_quantile must lie in (0, 1)")
        return v

    @model_validator(mode='after')
    def _preset_inputs(self) -> "OptimizerConfig":
        if self.preset != 'explicit' and self.epsilon is None:
            raise ValueError(f"epsilon is required for the {self.preset} preset")
        if self.preset == 'speedup' and self.T0 is None:
            raise ValueError("T0 is required for the speedup preset")
        return self


class PrivacyConfig(_Section):
    """(theta, gamma) budget and calibration constant"""
    theta: float = 1.0
    gamma: float = 1e-5
    c: float = 1.0
    sigma_override: Optional[float] = None

    @field_validator('theta', 'c')
    @classmethod
    def _positive(cls, v: float, info) -> float:
        if not v > 0:
            raise ValueError(f"{info.field_name} must be positive")
        return v

    @field_validator('gamma')
    @classmethod
    def _gamma(cls, v: float) -> float:
        if not 0 < v < 1:
            raise ValueError("gamma must lie in (0, 1)")
        return v

    @field_validator('sigma_override')
    @classmethod
    def _sigma(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and v < 0:
            raise ValueError("sigma_override must be non-negative")
        return v


class ScheduleConfig(_Section):
    """Run length and logging interval; T wins over epochs when both are set"""
    epochs: Optional[int] = 10
    T: Optional[int] = None
    log_every: Optional[int] = None  # None logs once per epoch

    @field_validator('epochs', 'T', 'log_every')
    @classmethod
    def _count(cls, v: Optional[int], info) -> Optional[int]:
        if v is not None and v < 1:
            raise ValueError(f"{info.field_name} must be at least 1")
        return v

    @model_validator(mode='after')
    def _length(self) -> "ScheduleConfig":
        if self.epochs is None and self.T is None:
            raise ValueError("one of epochs or T is required")
        return self


class OutputConfig(_Section):
    """Result CSV, manifest and summary locations"""
    path: str = "results/run.csv"
    manifest: Optional[str] = None
    wall_clock: bool = True

    @property
    def manifest_path(self) -> str:
        return self.manifest or str(Path(self.path).with_suffix('.manifest.yaml'))


class LoggingConfig(_Section):
    """Logging configuration"""
    level: str = "INFO"
    file: Optional[str] = None
    console: bool = True
    rotation: str = "100 MB"
    retention: int = 5

    @field_validator('level')
    @classmethod
    def _level(cls, v: str) -> str:
        level = v.upper()
        if level not in ('TRACE', 'DEBUG', 'INFO', 'SUCCESS', 'WARNING', 'ERROR', 'CRITICAL'):
            raise ValueError(f"unknown log level {v!r}")
        return level


class AdvancedConfig(_Section):
    """Advanced configuration options"""
    parallel_execution: bool = True
    max_workers: int = 4
    estimate_variance: bool = False

    @field_validator('max_workers')
    @classmethod
    def _workers(cls, v: int) -> int:
        if v < 1:
            raise ValueError("max_workers must be at least 1")
        return v


SweepAxis = Literal['m', 'p', 'theta', 'gamma']


class SweepConfig(_Section):
    """One swept axis and its values"""
    axis: SweepAxis
    values: List[float]

    @model_validator(mode='after')
    def _values(self) -> "SweepConfig":
        if not self.values:
            raise ValueError("values must be nonempty")
        checks = {
            'm': (lambda v: v >= 1 and float(v).is_integer(), "m values must be integers >= 1"),
            'p': (lambda v: 0.0 <= v <= 1.0, "p values must lie in [0, 1]"),
            'theta': (lambda v: v > 0, "theta must be positive"),
            'gamma': (lambda v: 0 < v < 1, "gamma must lie in (0, 1)"),
        }
        ok, message = checks[self.axis]
        if not all(ok(v) for v in self.values):
            raise ValueError(message)
        if self.axis == 'm':
            self.values = [int(v) for v in self.values]
        return self


class ExperimentConfig(_Section):
    """Main configuration model"""
    dataset: DatasetConfig = Field(default_factory=DatasetConfig)
    objective: RobustLogRegParams = Field(default_factory=RobustLogRegParams)
    topology: TopologyConfig = Field(default_factory=TopologyConfig)
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    privacy: PrivacyConfig = Field(default_factory=PrivacyConfig)
    schedule: ScheduleConfig = Field(default_factory=ScheduleConfig)
    metrics: StationarityConfig = Field(default_factory=StationarityConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)
    advanced: AdvancedConfig = Field(default_factory=AdvancedConfig)
    methods: List[Method] = Field(default_factory=lambda: [Method.DPMIXSGD])
    seeds: List[int] = Field(default_factory=lambda: [0])
    sweep: Optional[SweepConfig] = None

    @field_validator('methods', mode='before')
    @classmethod
    def _single_method(cls, v: Union[str, List[str]]) -> List[str]:
        if isinstance(v, str):
            return [v]
        return v

    @field_validator('methods')
    @classmethod
    def _methods(cls, v: List[Method]) -> List[Method]:
        if not v:
            raise ValueError("at least one method is required")
        return list(dict.fromkeys(v))

    @field_validator('seeds')
    @classmethod
    def _seeds(cls, v: List[int]) -> List[int]:
        if not v:
            raise ValueError("at least one seed is required")
        if any(s < 0 for s in v):
            raise ValueError("seeds must be non-negative")
        return v

    @model_validator(mode='after')
    def _resolve_preset_weight(self) -> "ExperimentConfig":
        # beta_x only depends on (epsilon, m, T0); the rest needs the problem and graph
        opt = self.optimizer
        m = self.topology.m
        if opt.preset == 'theorem1':
            opt.beta_x = opt.epsilon * min(1.0, m * opt.epsilon) / 20.0
        elif opt.preset == 'speedup':
            if opt.T0 < 10 * m ** 2:
                raise ValueError("T0 must be at least 10 m^2")
            opt.beta_x = m ** (1.0 / 3.0) / (20.0 * opt.T0 ** (2.0 / 3.0))
        return self

    def sweep_points(self) -> List[Tuple[str, float]]:
        """(axis, value) pairs; the topology m when no sweep is configured"""
        if self.sweep is None:
            return [('m', self.topology.m)]
        return [(self.sweep.axis, v) for v in self.sweep.values]

    def at_point(self, axis: str, value: float) -> "ExperimentConfig":
        """Copy with one sweep axis fixed to `value`"""
        data = self.model_dump(mode='json')
        if axis in ('m', 'p'):
            data['topology'][axis] = int(value) if axis == 'm' else value
        else:
            data['privacy'][axis] = value
        data['sweep'] = None
        return ExperimentConfig.model_validate(data)


def _format_errors(err: PydanticValidationError) -> List[str]:
    lines = []
    for item in err.errors():
        path = ".".join(str(p) for p in item['loc']) or "<root>"
        message = item['msg']
        if message.startswith("Value error, "):
            message = message[len("Value error, "):]
        lines.append(f"{path}: {message}")
    return lines


class ConfigManager:
    """
    Configuration Manager
    Loads and manages experiment configuration from YAML
    """

    def __init__(self, config_path: Optional[str] = None, text: Optional[str] = None):
        """
        Initialize ConfigManager

        Args:
            config_path: Path to an experiment YAML or run manifest
            text: YAML document given directly (wins over config_path)
        """
        self.config_path = config_path
        self.config: Optional[ExperimentConfig] = None
        self._load_config(text)

    def _load_config(self, text: Optional[str]) -> None:
        """Load defaults, merge the user document over them and validate"""
        with open(DEFAULT_CONFIG_PATH, 'r', encoding='utf-8') as f:
            default_config = yaml.safe_load(f) or {}

        if text is None and self.config_path:
            if not os.path.exists(self.config_path):
                raise ConfigurationError(
                    f"Configuration file not found: {self.config_path}",
                    suggestion="Check the path passed to `run`",
                )
            with open(self.config_path, 'r', encoding='utf-8') as f:
                text = f.read()

        custom_config = self._parse(text) if text is not None else {}
        config_data = self._deep_merge(default_config, custom_config)

        env_level = os.environ.get(LOG_LEVEL_ENV)
        if env_level:
            config_data.setdefault('logging', {})['level'] = env_level

        self.config = self._build(config_data)

    @staticmethod
    def _parse(text: str) -> Dict[str, Any]:
        try:
            document = yaml.safe_load(text)
        except yaml.YAMLError as e:
            raise ConfigurationError("Configuration is not valid YAML", original_error=e)
        if document is None:
            return {}
        if not isinstance(document, dict):
            raise ConfigurationError("Configuration must be a mapping at the top level")
        # run manifests carry the resolved config under `config`
        if isinstance(document.get('config'), dict) and 'dataset' not in document:
            return document['config']
        return document

    @staticmethod
    def _build(config_data: Dict[str, Any]) -> ExperimentConfig:
        try:
            return ExperimentConfig.model_validate(config_data)
        except PydanticValidationError as e:
            errors = _format_errors(e)
            raise ConfigurationError(
                f"Invalid configuration ({len(errors)} error{'s' if len(errors) != 1 else ''})",
                key_path=errors[0].split(':', 1)[0] if errors else None,
                details={'errors': errors},
                original_error=e,
            )

    def _deep_merge(self, base: Dict, override: Dict) -> Dict:
        """
        Deep merge two dictionaries

        Args:
            base: Base dictionary
            override: Override dictionary

        Returns:
            Merged dictionary
        """
        result = base.copy()

        for key, value in override.items():
            if key in result and isinstance(result[key], dict) and isinstance(value, dict):
                result[key] = self._deep_merge(result[key], value)
            else:
                result[key] = value

        return result

    def get(self, key_path: str, default: Any = None) -> Any:
        """
        Get configuration value by dot-notation path

        Args:
            key_path: Dot-separated path (e.g., 'privacy.theta')
            default: Default value if key not found

        Returns:
            Configuration value
        """
        value = self.config.model_dump(mode='json')

        try:
            for key in key_path.split('.'):
                value = value[key]
            return value
        except (KeyError, TypeError):
            return default

    def set(self, key_path: str, value: Any) -> None:
        """
        Set configuration value by dot-notation path and revalidate

        Args:
            key_path: Dot-separated path
            value: Value to set
        """
        keys = key_path.split('.')
        config_dict = self.config.model_dump(mode='json')
        current = config_dict

        for key in keys[:-1]:
            if not isinstance(current.get(key), dict):
                current[key] = {}
            current = current[key]

        current[keys[-1]] = value
        self.config = self._build(config_dict)

    def save(self, output_path: str) -> None:
        """
        Save current configuration to file

        Args:
            output_path: Output file path
        """
        Path(output_path).parent.mkdir(parents=True, exist_ok=True)

        with open(output_path, 'w', encoding='utf-8') as f:
            yaml.safe_dump(self.config.model_dump(mode='json'), f, default_flow_style=False, sort_keys=False)

    def validate(self) -> Tuple[bool, List[str]]:
        """
        Soft checks that do not make the document invalid

        Returns:
            Tuple of (is_valid, warning messages)
        """
        warnings = []
        cfg = self.config

        if cfg.optimizer.clip is not None and cfg.optimizer.clip_quantile is not None:
            warnings.append("optimizer.clip and optimizer.clip_quantile both set; clip wins")

        if cfg.privacy.sigma_override is not None and any(m.is_private for m in cfg.methods):
            warnings.append("privacy.sigma_override bypasses the (theta, gamma) calibration")

        if cfg.topology.m > 1 and cfg.topology.p == 0.0:
            warnings.append("topology.p = 0 yields the repair ring only")

        if cfg.schedule.T is not None and cfg.schedule.epochs is not None:
            warnings.append("schedule.T set; schedule.epochs is ignored")

        return (len(warnings) == 0, warnings)

    def __repr__(self) -> str:
        """String representation"""
        return f"ConfigManager(path={self.config_path}, methods={[m.value for m in self.config.methods]})"


def validate_config(text: str) -> ExperimentConfig:
    """
    Resolve a YAML experiment document against the defaults

    Raises:
        ConfigurationError: details['errors'] lists "<key.path>: <reason>" entries
    """
    return ConfigManager(text=text).config


def planned_iterations(cfg: ExperimentConfig, shard_sizes: List[int]) -> Tuple[int, int]:
    """(T, rounds per epoch) for one resolved point"""
    per_epoch = max(1, math.ceil(max(shard_sizes) / cfg.optimizer.batch))
    T = cfg.schedule.T if cfg.schedule.T is not None else cfg.schedule.epochs * per_epoch
    return T, per_epoch
