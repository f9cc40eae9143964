"""
工具模块
========
提供日志记录、异常定义和态文件读写等辅助功能
"""

from .logger import get_logger, log_manager, MfefLogger
from .errors import (
    MfefError,
    InputValidationError,
    ConstraintViolationError,
    ConfigurationError,
    SolverError,
)

__all__ = [
    'get_logger',
    'log_manager',
    'MfefLogger',
    'MfefError',
    'InputValidationError',
    'ConstraintViolationError',
    'ConfigurationError',
    'SolverError',
]
