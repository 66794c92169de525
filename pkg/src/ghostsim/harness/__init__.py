"""Configuration, experiment recipes, file output and the command-line interface."""
from .config import ConfigError, ExperimentConfig, load_config, parse_config

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config"]
