#!/usr/bin/env python3
"""
Configuration Manager for Volsr
===============================

Pipeline configuration: a pydantic `PipelineConfig` with one section per
pipeline stage, loaded from JSON and overridden by command-line flags.

Version: 1.0.0
"""

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from volsr.database import DATABASE_ENV, default_database_url
from volsr.errors import ConfigError
from volsr.io.atomic import atomic_write_json
from volsr.networks.config import GanConfig, TrainingConfig, VaeConfig
from volsr.patches.spec import PatchSpec

logger = logging.getLogger(__name__)

CONFIG_ENV = 'VOLSR_CONFIG'
RESOLVED_NAME = 'config.resolved.json'

PathLike = Union[str, Path]


class PathsConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    workdir: str = '.'
    fields: str = 'fields'
    datasets: str = 'datasets'
    checkpoints: str = 'checkpoints'
    reports: str = 'reports'


class SeedsConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    data: int = 0
    model: int = 0
    train: int = 0


class ReportConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    plane: str = 'z=mid'
    component: str = 'u'
    panels: bool = True


class RuntimeConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    threads: int = Field(1, ge=1)
    strict_deterministic: bool = False
    dtype: str = 'float32'

    @field_validator('dtype')
    @classmethod
    def _known_dtype(cls, value: str) -> str:
        if value not in ('float32', 'float64'):
            raise ValueError("dtype must be float32 or float64")
        return value


class PipelineConfig(BaseModel):
    """Everything a pipeline run depends on besides its input files"""

    model_config = ConfigDict(frozen=True)

    paths: PathsConfig = PathsConfig()
    patch: PatchSpec = PatchSpec()
    vae: VaeConfig = VaeConfig()
    gan: GanConfig = GanConfig()
    training: TrainingConfig = TrainingConfig()
    seeds: SeedsConfig = SeedsConfig()
    report: ReportConfig = ReportConfig()
    runtime: RuntimeConfig = RuntimeConfig()
    database_url: Optional[str] = None

    def with_overrides(self, overrides: Dict[str, Dict[str, Any]]) -> 'PipelineConfig':
        """
        Apply per-section overrides, e.g. {'patch': {'A': 2}}. None values are skipped.

        Raises:
            ConfigError: the result violates a section's constraints
        """
        data = self.model_dump(mode='json')
        for section, values in overrides.items():
            changes = {k: v for k, v in values.items() if v is not None}
            if not changes:
                continue
            if section not in data or not isinstance(data[section], dict):
                raise ConfigError(f"unknown config section '{section}'")
            merged = dict(data[section], **changes)
            if section == 'patch' and ('A' in changes or 's' in changes) and 'q' not in changes:
                merged.pop('q', None)
            data[section] = merged
        return parse_config(data)


def parse_config(data: Dict[str, Any]) -> PipelineConfig:
    try:
        return PipelineConfig.model_validate(data)
    except ValidationError as e:
        error = e.errors()[0]
        where = '.'.join(str(part) for part in error['loc'])
        raise ConfigError(f"invalid config at {where or '<root>'}: {error['msg']}") from e


class VolsrConfigManager:
    """
    Locates, loads and saves pipeline configuration.

    Priority:
    1. Explicit path (--config)
    2. Environment variable VOLSR_CONFIG
    3. ~/.volsr/config.json
    4. Built-in defaults
    """

    def __init__(self, config_path: Optional[PathLike] = None):
        self.config_path = self._locate(config_path)
        self._config = self._load_config()

    @staticmethod
    def default_path() -> Path:
        return Path.home() / ".volsr" / "config.json"

    def _locate(self, explicit: Optional[PathLike]) -> Optional[Path]:
        if explicit:
            path = Path(explicit)
            if not path.exists():
                raise ConfigError(f"config file not found: {path}")
            return path
        env_path = os.getenv(CONFIG_ENV)
        if env_path:
            path = Path(env_path)
            if not path.exists():
                raise ConfigError(f"{CONFIG_ENV} points to a missing file: {path}")
            return path
        home = self.default_path()
        return home if home.exists() else None

    def _load_config(self) -> PipelineConfig:
        if self.config_path is None:
            logger.debug("no config file, using defaults")
            return PipelineConfig()
        try:
            data = json.loads(self.config_path.read_text(encoding='utf-8'))
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {self.config_path} is not valid JSON: {e}") from e
        logger.debug("loaded config from %s", self.config_path)
        return parse_config(data)

    @property
    def config(self) -> PipelineConfig:
        return self._config

    def get_database_url(self, workdir: Optional[PathLike] = None) -> str:
        """
        Run-registry URL.

        Priority:
        1. Environment variable VOLSR_DATABASE_URL
        2. Config file
        3. sqlite file in the work directory
        """
        env_url = os.getenv(DATABASE_ENV)
        if env_url:
            return env_url
        if self._config.database_url:
            return self._config.database_url
        return default_database_url(workdir or self._config.paths.workdir)

    def save(self, path: Optional[PathLike] = None) -> Path:
        target = Path(path) if path else (self.config_path or self.default_path())
        written = save_config(self._config, target)
        logger.info("✅ Saved config: %s", written)
        return written


def save_config(config: PipelineConfig, path: PathLike) -> Path:
    return atomic_write_json(path, config.model_dump(mode='json'))


def load_config(path: PathLike) -> PipelineConfig:
    return VolsrConfigManager(path).config


def write_resolved_config(config: PipelineConfig, out_dir: PathLike) -> Path:
    """Write config.resolved.json into a run's output directory"""
    return save_config(config, Path(out_dir) / RESOLVED_NAME)


__all__ = [
    'CONFIG_ENV',
    'RESOLVED_NAME',
    'PathsConfig',
    'SeedsConfig',
    'ReportConfig',
    'RuntimeConfig',
    'PipelineConfig',
    'parse_config',
    'VolsrConfigManager',
    'save_config',
    'load_config',
    'write_resolved_config',
]
