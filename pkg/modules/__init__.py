"""
MFEF 计算模块包
==============
各子模块按需直接导入，例如 ``from modules.qubit_solver import solve_qubit``
"""

__version__ = "0.1.0"

__all__ = [
    "quantum_core",
    "su_generators",
    "ghz_frame",
    "analytic",
    "restarts",
    "qubit_solver",
    "qudit_solver",
    "pipeline",
]
