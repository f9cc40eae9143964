"""
日志系统模块
===========
提供统一的日志记录功能，支持控制台(stderr)和文件输出

stdout 只用于输出单个 JSON 报告，所有诊断信息一律写到 stderr。
"""

import sys
import logging
import time
import json
import threading
import functools
from datetime import datetime
from typing import Optional, Dict, Any
from pathlib import Path
from logging.handlers import RotatingFileHandler, TimedRotatingFileHandler

from colorama import Fore, Style


class ColorFormatter(logging.Formatter):
    """彩色日志格式化器"""

    COLORS = {
        'DEBUG': Fore.CYAN,
        'INFO': Fore.GREEN,
        'WARNING': Fore.YELLOW,
        'ERROR': Fore.RED,
        'CRITICAL': Fore.MAGENTA,
    }

    def format(self, record):
        color = self.COLORS.get(record.levelname)
        if color:
            # 复制一份，避免污染文件处理器看到的 record
            record = logging.makeLogRecord(record.__dict__)
            record.levelname = f"{color}{record.levelname}{Style.RESET_ALL}"
        return super().format(record)


class MfefLogger:
    """MFEF 计算专用日志器"""

    ERROR_TYPES = ('validation', 'solver', 'io', 'system')

    def __init__(self, name: str = "mfef",
                 log_dir: str = "./logs",
                 log_level: str = "INFO",
                 enable_console: bool = True,
                 enable_file: bool = False,
                 max_file_size: int = 10 * 1024 * 1024,  # 10MB
                 backup_count: int = 5):

        self.name = name
        self.log_dir = Path(log_dir)
        self.log_level = getattr(logging, log_level.upper())
        self.enable_console = enable_console
        self.enable_file = enable_file
        self.max_file_size = max_file_size
        self.backup_count = backup_count

        if self.enable_file:
            self.log_dir.mkdir(parents=True, exist_ok=True)

        self.logger = logging.getLogger(name)
        self.logger.setLevel(self.log_level)
        self.logger.propagate = False

        # 避免重复添加handler
        if not self.logger.handlers:
            self._setup_handlers()

        self.performance_logger = self._setup_performance_logger()

        # 错误统计
        self.error_stats = {f"{t}_errors": 0 for t in self.ERROR_TYPES}
        self.error_stats['last_error_time'] = None

        self._lock = threading.Lock()

    def _setup_handlers(self):
        """设置日志处理器"""
        if self.enable_console:
            console_handler = logging.StreamHandler(sys.stderr)
            console_handler.setLevel(self.log_level)
            console_handler.setFormatter(ColorFormatter(
                '%(asctime)s | %(levelname)-8s | %(name)s | %(message)s',
                datefmt='%H:%M:%S'
            ))
            self.logger.addHandler(console_handler)

        if self.enable_file:
            file_formatter = logging.Formatter(
                '%(asctime)s | %(levelname)-8s | %(name)s | %(funcName)s:%(lineno)d | %(message)s',
                datefmt='%Y-%m-%d %H:%M:%S'
            )

            file_handler = RotatingFileHandler(
                self.log_dir / f"{self.name}.log",
                maxBytes=self.max_file_size,
                backupCount=self.backup_count,
                encoding='utf-8'
            )
            file_handler.setLevel(self.log_level)
            file_handler.setFormatter(file_formatter)
            self.logger.addHandler(file_handler)

            # 错误日志文件（只记录ERROR和CRITICAL）
            error_handler = RotatingFileHandler(
                self.log_dir / f"{self.name}_errors.log",
                maxBytes=self.max_file_size,
                backupCount=self.backup_count,
                encoding='utf-8'
            )
            error_handler.setLevel(logging.ERROR)
            error_handler.setFormatter(file_formatter)
            self.logger.addHandler(error_handler)

    def _setup_performance_logger(self):
        """设置性能日志器（JSON 行格式）"""
        perf_logger = logging.getLogger(f"{self.name}_performance")
        perf_logger.setLevel(logging.INFO)
        perf_logger.propagate = False

        if not perf_logger.handlers:
            if self.enable_file:
                perf_handler = TimedRotatingFileHandler(
                    self.log_dir / f"{self.name}_performance.log",
                    when='midnight',
                    interval=1,
                    backupCount=7,
                    encoding='utf-8'
                )
                perf_handler.setFormatter(logging.Formatter(
                    '%(asctime)s | %(message)s',
                    datefmt='%Y-%m-%d %H:%M:%S'
                ))
            else:
                perf_handler = logging.NullHandler()
            perf_logger.addHandler(perf_handler)

        return perf_logger

    def debug(self, message: str, **kwargs):
        self.logger.debug(self._format_message(message, **kwargs))

    def info(self, message: str, **kwargs):
        self.logger.info(self._format_message(message, **kwargs))

    def warning(self, message: str, **kwargs):
        self.logger.warning(self._format_message(message, **kwargs))

    def error(self, message: str, error_type: str = "system", **kwargs):
        """记录错误并更新分类统计"""
        with self._lock:
            error_key = f"{error_type}_errors"
            if error_key in self.error_stats:
                self.error_stats[error_key] += 1
            else:
                self.error_stats['system_errors'] += 1
            self.error_stats['last_error_time'] = datetime.now().isoformat()

        self.logger.error(self._format_message(message, error_type=error_type, **kwargs))

    def _format_message(self, message: str, **kwargs) -> str:
        """格式化日志消息: msg | k=v | ..."""
        if kwargs:
            extra_info = " | ".join([f"{k}={v}" for k, v in kwargs.items()])
            return f"{message} | {extra_info}"
        return message

    def log_restart(self, solver: str, index: int, objective: float,
                    sweeps: int, converged: bool):
        """记录单次重启的结果"""
        self.debug(
            f"Restart finished: {solver}#{index}",
            objective=f"{objective:.12f}",
            sweeps=sweeps,
            converged=converged
        )

    def log_solve_summary(self, solver: str, value: float, restarts: int,
                          agreeing: int, kkt_residual: float, duration: float):
        """记录一次求解的汇总"""
        self.info(
            f"Solve finished: {solver}",
            value=f"{value:.12f}",
            restarts=restarts,
            agreeing=agreeing,
            kkt=f"{kkt_residual:.3e}",
            duration=f"{duration:.3f}s"
        )

    def log_performance(self, metric_name: str, value: float, unit: str = "",
                        context: Optional[Dict[str, Any]] = None):
        """记录性能指标"""
        perf_data = {
            'metric': metric_name,
            'value': value,
            'unit': unit,
            'timestamp': time.time()
        }
        if context:
            perf_data.update(context)

        self.performance_logger.info(json.dumps(perf_data, ensure_ascii=False))

    def get_error_stats(self) -> Dict[str, Any]:
        with self._lock:
            return self.error_stats.copy()

    def reset_error_stats(self):
        with self._lock:
            for key in self.error_stats:
                if key.endswith('_errors'):
                    self.error_stats[key] = 0
            self.error_stats['last_error_time'] = None

    def reconfigure(self, **settings):
        """按新参数重建处理器，用于导入时就已创建的日志器"""
        for key in ('enable_console', 'enable_file', 'max_file_size', 'backup_count'):
            if key in settings:
                setattr(self, key, settings[key])
        if 'log_dir' in settings:
            self.log_dir = Path(settings['log_dir'])
        if 'log_level' in settings:
            self.log_level = getattr(logging, settings['log_level'].upper())
            self.logger.setLevel(self.log_level)

        for target in (self.logger, self.performance_logger):
            for handler in list(target.handlers):
                target.removeHandler(handler)
                handler.close()

        if self.enable_file:
            self.log_dir.mkdir(parents=True, exist_ok=True)
        self._setup_handlers()
        self.performance_logger = self._setup_performance_logger()


class LogManager:
    """日志管理器 - 管理多个日志器"""

    def __init__(self):
        self.loggers: Dict[str, MfefLogger] = {}
        self.default_config = {
            'log_level': 'INFO',
            'enable_console': True,
            'enable_file': False,
            'log_dir': './logs'
        }
        self._lock = threading.Lock()

    def configure(self, **defaults):
        """更新默认参数；已有日志器按新参数重建处理器"""
        self.default_config.update(defaults)
        with self._lock:
            for logger in self.loggers.values():
                logger.reconfigure(**defaults)

    def get_logger(self, name: str, **config) -> MfefLogger:
        """获取或创建日志器"""
        with self._lock:
            if name not in self.loggers:
                logger_config = {**self.default_config, **config}
                self.loggers[name] = MfefLogger(name, **logger_config)
            return self.loggers[name]

    def get_all_error_stats(self) -> Dict[str, Dict[str, Any]]:
        return {name: logger.get_error_stats() for name, logger in self.loggers.items()}

    def reset_all_error_stats(self):
        for logger in self.loggers.values():
            logger.reset_error_stats()


# 全局日志管理器实例
log_manager = LogManager()


def get_logger(name: str = "mfef", **config) -> MfefLogger:
    """获取日志器的便捷函数"""
    return log_manager.get_logger(name, **config)


def log_execution_time(logger: Optional[MfefLogger] = None,
                       metric_name: str = "execution_time"):
    """记录函数执行时间的装饰器"""

    def decorator(func):
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            active = logger or get_logger()
            start_time = time.perf_counter()
            try:
                result = func(*args, **kwargs)
            except Exception as e:
                active.error(
                    f"Function {func.__name__} failed after {time.perf_counter() - start_time:.3f}s: {e}",
                    error_type="solver",
                    function=func.__name__
                )
                raise
            active.log_performance(
                f"{func.__name__}_{metric_name}",
                time.perf_counter() - start_time,
                "seconds"
            )
            return result

        return wrapper

    return decorator


def log_errors(logger: Optional[MfefLogger] = None,
               error_type: str = "system"):
    """自动记录异常的装饰器"""

    def decorator(func):
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            try:
                return func(*args, **kwargs)
            except Exception as e:
                (logger or get_logger()).error(
                    f"Error in {func.__name__}: {e}",
                    error_type=error_type,
                    function=func.__name__
                )
                raise

        return wrapper

    return decorator
