"""
配置模块
========
管理求解器、采样基线和日志配置
"""

from .settings import (
    config,
    SystemConfig,
    SolveConfig,
    OracleConfig,
    FrameConfig,
    LoggingConfig,
    load_config_from_file,
    save_config_to_file,
)

__all__ = [
    'config',
    'SystemConfig',
    'SolveConfig',
    'OracleConfig',
    'FrameConfig',
    'LoggingConfig',
    'load_config_from_file',
    'save_config_to_file',
]
