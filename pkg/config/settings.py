"""
配置管理模块
===========
统一管理求解器、采样基线、GHZ 框架缓存和日志的配置参数
支持 YAML 配置文件和环境变量覆盖
"""

import os
from dataclasses import dataclass, asdict, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from dotenv import load_dotenv

from utils.errors import ConfigurationError


@dataclass(frozen=True)
class SolveConfig:
    """多起点求解配置（两个求解器共用）"""
    restarts: int = 32
    max_sweeps: int = 500
    objective_tol: float = 1e-10      # 每轮相对增益阈值
    stationarity_tol: float = 1e-8    # KKT 残差阈值
    seed: int = 0
    threads: Optional[int] = None     # None 表示由 joblib 决定
    pin_first_site: bool = False      # 固定 U_1 = I
    max_halvings: int = 30            # 线搜索最多减半次数
    agreement_tol: float = 1e-7       # restarts_agreeing 的判定宽度

    def __post_init__(self):
        for name in ("restarts", "max_sweeps", "max_halvings"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} 必须为正: {getattr(self, name)}")
        for name in ("objective_tol", "stationarity_tol", "agreement_tol"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} 必须为正: {getattr(self, name)}")
        if self.seed < 0:
            raise ConfigurationError(f"seed 不能为负: {self.seed}")
        if self.threads is not None and self.threads <= 0:
            raise ConfigurationError(f"threads 必须为正: {self.threads}")

    def with_overrides(self, **overrides) -> "SolveConfig":
        """返回替换了非 None 字段的新配置"""
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


@dataclass(frozen=True)
class OracleConfig:
    """Haar 随机采样基线配置"""
    samples: int = 10000
    seed: int = 0
    show_progress: bool = False

    def __post_init__(self):
        if self.samples <= 0:
            raise ConfigurationError(f"samples 必须为正: {self.samples}")


@dataclass(frozen=True)
class FrameConfig:
    """GHZ 框架向量配置"""
    cache_size: int = 4096
    r_tensor_max_parties: int = 5     # 16^n 个条目的内存上限

    def __post_init__(self):
        if self.cache_size <= 0 or self.r_tensor_max_parties < 2:
            raise ConfigurationError("cache_size 必须为正且 r_tensor_max_parties ≥ 2")


@dataclass(frozen=True)
class LoggingConfig:
    """日志配置"""
    level: str = "INFO"
    enable_console: bool = True
    enable_file: bool = False
    log_dir: str = "./logs"
    max_file_size: int = 10 * 1024 * 1024  # 10MB
    backup_count: int = 5


class SystemConfig:
    """系统配置管理器"""

    SECTIONS = {
        "solver": SolveConfig,
        "oracle": OracleConfig,
        "frame": FrameConfig,
        "logging": LoggingConfig,
    }

    def __init__(self, solver: Optional[SolveConfig] = None,
                 oracle: Optional[OracleConfig] = None,
                 frame: Optional[FrameConfig] = None,
                 logging: Optional[LoggingConfig] = None):
        self.solver = solver or SolveConfig()
        self.oracle = oracle or OracleConfig()
        self.frame = frame or FrameConfig()
        self.logging = logging or LoggingConfig()

    def apply_env_overrides(self, dotenv_path: Optional[str] = None) -> "SystemConfig":
        """读取 .env 及环境变量 MFEF_LOG_LEVEL / MFEF_THREADS / MFEF_SEED"""
        load_dotenv(dotenv_path)

        level = os.getenv("MFEF_LOG_LEVEL")
        if level:
            self.logging = replace(self.logging, level=level.upper())

        threads = os.getenv("MFEF_THREADS")
        seed = os.getenv("MFEF_SEED")
        try:
            self.solver = self.solver.with_overrides(
                threads=int(threads) if threads else None,
                seed=int(seed) if seed else None,
            )
        except ValueError as e:
            raise ConfigurationError(f"环境变量解析失败: {e}") from e
        return self

    def to_dict(self) -> Dict[str, Dict[str, Any]]:
        return {name: asdict(getattr(self, name)) for name in self.SECTIONS}


# 全局配置实例
config = SystemConfig()


def _build_section(cls, values: Dict[str, Any]):
    known = {f.name for f in fields(cls)}
    unknown = set(values) - known
    if unknown:
        raise ConfigurationError(f"{cls.__name__} 不认识的配置项: {sorted(unknown)}")
    return cls(**values)


def load_config_from_file(config_file: str = "config/user_config.yaml") -> SystemConfig:
    """从 YAML 配置文件加载配置，缺省的段落使用默认值"""
    path = Path(config_file)
    if not path.exists():
        raise ConfigurationError(f"配置文件不存在: {config_file}")

    with open(path, 'r', encoding='utf-8') as f:
        raw = yaml.safe_load(f) or {}

    if not isinstance(raw, dict):
        raise ConfigurationError(f"配置文件顶层必须是映射: {config_file}")

    unknown = set(raw) - set(SystemConfig.SECTIONS)
    if unknown:
        raise ConfigurationError(f"不认识的配置段: {sorted(unknown)}")

    sections = {
        name: _build_section(cls, raw.get(name) or {})
        for name, cls in SystemConfig.SECTIONS.items()
    }
    return SystemConfig(**sections)


def save_config_to_file(config_obj: SystemConfig, config_file: str = "config/user_config.yaml"):
    """保存配置到 YAML 文件"""
    path = Path(config_file)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        yaml.safe_dump(config_obj.to_dict(), f, allow_unicode=True, sort_keys=False)
