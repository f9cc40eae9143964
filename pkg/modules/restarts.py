"""
多起点求解公共模块
=================
两个求解器共用的重启池、种子派生、结果归约和结果类型

每个重启拥有自己的迭代和随机源，种子由 (cfg.seed, 重启序号) 确定，
所以结果与线程调度无关；归约取最大值，平局时取序号最小的重启。
"""

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from config.settings import SolveConfig
from modules.analytic import BoundCertificate
from modules.quantum_core import LocalUnitarySet

if TYPE_CHECKING:
    from modules.qudit_solver import KktReport


@dataclass(frozen=True)
class RestartLog:
    """单次重启的记录"""
    index: int
    objective: float
    sweeps: int
    converged: bool
    stalled: bool = False


@dataclass(frozen=True, eq=False)
class RestartOutcome:
    """单次重启的完整结果（只在求解器内部流转）"""
    index: int
    objective: float
    unitaries: LocalUnitarySet
    sweeps: int
    converged: bool
    kkt_residual: float
    trajectory: Tuple[float, ...] = field(default=())
    stalled: bool = False

    def to_log(self) -> RestartLog:
        return RestartLog(self.index, self.objective, self.sweeps, self.converged, self.stalled)


@dataclass(frozen=True, eq=False)
class MfefEstimate:
    """MFEF 数值估计及其证书"""
    value: float
    unitaries: LocalUnitarySet
    certificate: BoundCertificate
    kkt_residual: float
    restarts_agreeing: int
    log: Tuple[RestartLog, ...]
    converged: bool
    solver: str
    multipliers: Tuple[float, ...] = ()
    kkt: Optional["KktReport"] = None
    trajectory: Tuple[float, ...] = ()

    @property
    def within_certificate(self) -> bool:
        return self.certificate.contains(self.value)


def restart_rng(seed: int, index: int) -> np.random.Generator:
    """由 (seed, index) 确定的独立随机源"""
    return np.random.default_rng([seed, index])


def run_restarts(worker: Callable[[int, np.random.Generator], RestartOutcome],
                 cfg: SolveConfig) -> List[RestartOutcome]:
    """并发执行 cfg.restarts 个重启，结果按序号排列"""
    n_jobs = cfg.threads if cfg.threads is not None else -1
    outcomes = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(worker)(i, restart_rng(cfg.seed, i)) for i in range(cfg.restarts)
    )
    return sorted(outcomes, key=lambda o: o.index)


def select_best(outcomes: Sequence[RestartOutcome], agreement_tol: float) -> Tuple[RestartOutcome, int, bool]:
    """
    归约多个重启

    Returns:
        (最优结果, 与最优值相差不超过 agreement_tol 的重启数, 是否存在收敛的重启)
        优先在收敛的重启中取最大值；没有收敛的重启时退回全部重启中的最大值。
    """
    converged = [o for o in outcomes if o.converged]
    pool = converged or list(outcomes)
    best = min(pool, key=lambda o: (-o.objective, o.index))
    agreeing = sum(1 for o in outcomes if abs(o.objective - best.objective) <= agreement_tol)
    return best, agreeing, bool(converged)
