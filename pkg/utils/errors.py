"""
异常定义
========
库函数统一抛出这里的异常，命令行入口据此决定退出码
"""

from typing import Optional


class MfefError(Exception):
    """所有 MFEF 相关异常的基类"""


class InputValidationError(MfefError, ValueError):
    """输入不满足某个不变量（厄米性、迹、半正定、维度、条目数等）"""

    def __init__(self, message: str, invariant: Optional[str] = None):
        super().__init__(message)
        self.invariant = invariant or "input"

    def __str__(self):
        return f"[{self.invariant}] {super().__str__()}"


class ConstraintViolationError(InputValidationError):
    """系数向量违反幺正约束"""

    def __init__(self, message: str):
        super().__init__(message, invariant="unitarity-constraint")


class ConfigurationError(MfefError, ValueError):
    """配置参数非法"""


class SolverError(MfefError, RuntimeError):
    """求解过程失败（本征分解失败、求解器分派错误等）"""
