"""
计算管道协调器
=============
整合态文件读写、解析公式、两个数值求解器和随机采样基线，生成机器可读的结果报告
"""

import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from tqdm import tqdm

from config.settings import SolveConfig, SystemConfig, config
from modules import __version__
from modules.analytic import (
    BoundCertificate,
    bounds,
    classify_extremes,
    family_value,
    recognize_family,
    theorem2_state,
    theorem3_state,
)
from modules.qubit_solver import kkt_residual_qubit, solve_qubit, x_from_unitary
from modules.quantum_core import (
    DensityMatrix,
    LocalUnitarySet,
    ghz_projector,
    haar_local_unitaries,
    haar_mixed_state,
    objective,
)
from modules.qudit_solver import kkt_report, solve as solve_qudit
from modules.restarts import MfefEstimate
from utils.errors import InputValidationError
from utils.logger import get_logger, log_manager
from utils.state_io import StateFile, input_hash, read_state_file, write_state_file, write_unitaries_file

SOLVERS = ("auto", "qubit", "qudit", "analytic")
FAMILIES = ("ghz", "theorem2", "theorem3", "haar-mixed")


@dataclass
class ResultReport:
    """一次命令的结果，to_dict() 即写到 stdout 的 JSON 文档"""
    command: str
    d: int
    n: int
    certificate: BoundCertificate
    input_label: Optional[str] = None
    input_hash: Optional[str] = None
    value: Optional[float] = None
    solver: Optional[str] = None
    kkt_residual: Optional[float] = None
    restarts_agreeing: Optional[int] = None
    converged: bool = True
    wall_time: float = 0.0
    config: Dict[str, Any] = field(default_factory=dict)
    details: Dict[str, Any] = field(default_factory=dict)
    version: str = __version__

    @property
    def within_certificate(self) -> Optional[bool]:
        if self.value is None:
            return None
        return self.certificate.contains(self.value)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "input": {"label": self.input_label, "sha256": self.input_hash},
            "d": self.d,
            "n": self.n,
            "value": self.value,
            "solver": self.solver,
            "certificate": self.certificate.to_dict(),
            "within_certificate": self.within_certificate,
            "kkt_residual": self.kkt_residual,
            "restarts_agreeing": self.restarts_agreeing,
            "converged": self.converged,
            "details": self.details,
            "config": self.config,
            "version": self.version,
            "wall_time": self.wall_time,
        }


class MfefPipeline:
    """MFEF 计算管道"""

    def __init__(self, system_config: Optional[SystemConfig] = None):
        self.config = system_config or config
        self.logger = get_logger("mfef.pipeline")

        # 回调函数
        self.status_callbacks: List[Callable[[str, Dict], None]] = []
        self.error_callbacks: List[Callable[[str], None]] = []

        # 性能统计
        self.performance_stats = {
            "reports": 0,
            "solver_runs": 0,
            "total_runtime": 0.0,
            "error_count": 0,
        }

    def add_status_callback(self, callback: Callable[[str, Dict], None]):
        self.status_callbacks.append(callback)

    def add_error_callback(self, callback: Callable[[str], None]):
        self.error_callbacks.append(callback)

    def _report_status(self, status: str, data: Optional[Dict] = None):
        data = data or {}
        self.logger.debug(status, **data)
        for callback in self.status_callbacks:
            try:
                callback(status, data)
            except Exception as e:
                self.logger.warning(f"状态回调错误: {e}")

    def report_error(self, error_msg: str, error_type: str = "system"):
        """记录错误并通知回调"""
        self.performance_stats["error_count"] += 1
        self.logger.error(error_msg, error_type=error_type)
        for callback in self.error_callbacks:
            try:
                callback(error_msg)
            except Exception as e:
                self.logger.warning(f"错误回调执行失败: {e}")

    def _finish(self, report: ResultReport, start: float) -> ResultReport:
        report.wall_time = time.perf_counter() - start
        self.performance_stats["reports"] += 1
        self.performance_stats["total_runtime"] += report.wall_time
        self._report_status(f"{report.command} 完成", {"value": report.value})
        return report

    def load_state(self, path: str):
        """读取态文件，返回 (ρ, 标签, sha256)"""
        sf = read_state_file(path)
        rho = sf.to_density()
        label = sf.label if sf.label is not None else Path(path).name
        return rho, label, input_hash(path)

    def run_solver(self, rho: DensityMatrix, solver: str = "auto",
                   cfg: Optional[SolveConfig] = None) -> MfefEstimate:
        """按 solver 分派到数值求解器；auto 对 d=2 使用量子比特求解器"""
        if solver not in ("auto", "qubit", "qudit"):
            raise InputValidationError(f"未知的数值求解器: {solver}", invariant="solver")
        cfg = cfg or self.config.solver
        kind = ("qubit" if rho.d == 2 else "qudit") if solver == "auto" else solver
        self.performance_stats["solver_runs"] += 1
        self._report_status("开始求解", {"solver": kind, "d": rho.d, "n": rho.n})
        if kind == "qubit":
            return solve_qubit(rho, cfg)
        return solve_qudit(rho, cfg)

    def compute(self, path: str, solver: str = "auto", cfg: Optional[SolveConfig] = None,
                unitaries_out: Optional[str] = None) -> ResultReport:
        """
        计算 MFEF

        Raises:
            InputValidationError: 文件或态非法；analytic 模式下态不属于已知族
        """
        if solver not in SOLVERS:
            raise InputValidationError(f"未知的求解器: {solver}", invariant="solver")
        start = time.perf_counter()
        rho, label, digest = self.load_state(path)
        cfg = cfg or self.config.solver
        certificate = bounds(rho)
        report = ResultReport("compute", rho.d, rho.n, certificate, label, digest,
                              config={"solver": solver, **_config_echo(cfg)})

        if solver == "analytic":
            match = recognize_family(rho)
            if match is None:
                raise InputValidationError("态不属于有闭式值的族，无法使用 analytic 求解器",
                                           invariant="family")
            kind, param = match
            report.value = family_value(match, rho.d, rho.n)
            report.solver = "analytic"
            report.details = {
                "family": kind,
                "parameter": float(param) if kind == "theorem3" else [float(v) for v in param],
                "saturation": classify_extremes(rho, report.value),
            }
            return self._finish(report, start)

        estimate = self.run_solver(rho, solver, cfg)
        report.value = estimate.value
        report.solver = estimate.solver
        report.kkt_residual = estimate.kkt_residual
        report.restarts_agreeing = estimate.restarts_agreeing
        report.converged = estimate.converged
        report.details = {
            "saturation": classify_extremes(rho, estimate.value),
            "multipliers": list(estimate.multipliers),
            "restarts": [
                {"index": r.index, "objective": r.objective, "sweeps": r.sweeps, "converged": r.converged}
                for r in estimate.log
            ],
        }
        if estimate.kkt is not None:
            report.details["kkt"] = estimate.kkt.to_dict()
        if unitaries_out:
            write_unitaries_file(estimate.unitaries, unitaries_out)
            report.details["unitaries_path"] = str(unitaries_out)
        if not estimate.converged:
            self.logger.warning("没有收敛的重启，输出最优的未收敛结果", value=estimate.value)
        return self._finish(report, start)

    def bounds_report(self, path: str) -> ResultReport:
        """只给出上下界证书，不做优化"""
        start = time.perf_counter()
        rho, label, digest = self.load_state(path)
        report = ResultReport("bounds", rho.d, rho.n, bounds(rho), label, digest)
        return self._finish(report, start)

    def make_state(self, family: str, d: int = 2, n: int = 2,
                   p: Optional[Sequence[float]] = None, c: Optional[float] = None,
                   rank: Optional[int] = None, seed: int = 0,
                   out: Optional[str] = None, label: Optional[str] = None) -> StateFile:
        """
        生成指定族的态

        ghz:        GHZ 投影
        theorem2:   Σ√p_i|ii…i⟩ 的投影（需要 p）
        theorem3:   (I + cσ_3^{⊗n})/2^n（需要 c，d 固定为 2）
        haar-mixed: rank 个 Haar 纯态的 Dirichlet(1) 混合（rank 缺省为 d^n）
        """
        if family == "ghz":
            rho = ghz_projector(d, n)
        elif family == "theorem2":
            if p is None:
                raise InputValidationError("theorem2 族需要概率向量 p", invariant="parameter")
            rho = theorem2_state(p, d, n)
        elif family == "theorem3":
            if c is None:
                raise InputValidationError("theorem3 族需要参数 c", invariant="parameter")
            rho = theorem3_state(c, n)
        elif family == "haar-mixed":
            rng = np.random.default_rng(seed)
            rho = haar_mixed_state(d, n, rank or d ** n, rng)
        else:
            raise InputValidationError(f"未知的态族: {family}", invariant="family")

        label = label or _default_label(family, rho.d, rho.n, p, c, rank, seed)
        self._report_status("生成态", {"family": family, "d": rho.d, "n": rho.n})
        if out:
            return write_state_file(rho, out, label)
        return StateFile.from_density(rho, label)

    def oracle(self, path: str, samples: Optional[int] = None, seed: Optional[int] = None,
               show_progress: Optional[bool] = None) -> ResultReport:
        """Haar 随机局域幺正组上的最大目标函数值，作为独立的下界基线"""
        start = time.perf_counter()
        rho, label, digest = self.load_state(path)
        samples = self.config.oracle.samples if samples is None else samples
        seed = self.config.oracle.seed if seed is None else seed
        show = self.config.oracle.show_progress if show_progress is None else show_progress
        if samples <= 0:
            raise InputValidationError(f"samples 必须为正: {samples}", invariant="parameter")

        rng = np.random.default_rng(seed)
        best = -np.inf
        for _ in tqdm(range(samples), desc="oracle", file=sys.stderr, disable=not show):
            best = max(best, objective(rho, haar_local_unitaries(rho.d, rho.n, rng)))

        report = ResultReport("oracle", rho.d, rho.n, bounds(rho), label, digest,
                              value=float(best), solver="oracle",
                              config={"samples": samples, "seed": seed})
        return self._finish(report, start)

    def verify(self, path: str, unitaries: LocalUnitarySet) -> ResultReport:
        """在给定幺正组处求目标函数值并验证驻点条件"""
        start = time.perf_counter()
        rho, label, digest = self.load_state(path)
        if (unitaries.d, unitaries.n) != (rho.d, rho.n):
            raise InputValidationError(
                f"维度不匹配: 态为 (d={rho.d}, n={rho.n})，幺正组为 (d={unitaries.d}, n={unitaries.n})",
                invariant="dimension")

        value = objective(rho, unitaries)
        kkt = kkt_report(rho, unitaries)
        report = ResultReport("verify", rho.d, rho.n, bounds(rho), label, digest,
                              value=value, solver="verify", kkt_residual=kkt.gradient_residual)
        report.details = {"kkt": kkt.to_dict()}
        if rho.d == 2:
            xs = np.array([x_from_unitary(u) for u in unitaries])
            report.details["qubit_residual"] = kkt_residual_qubit(rho, xs)
        return self._finish(report, start)

    def get_pipeline_status(self) -> Dict[str, Any]:
        return {
            "version": __version__,
            "performance_stats": self.performance_stats.copy(),
            "error_stats": log_manager.get_all_error_stats(),
            "config": self.config.to_dict(),
        }


def _config_echo(cfg: SolveConfig) -> Dict[str, Any]:
    return {
        "restarts": cfg.restarts,
        "max_sweeps": cfg.max_sweeps,
        "objective_tol": cfg.objective_tol,
        "stationarity_tol": cfg.stationarity_tol,
        "seed": cfg.seed,
        "pin_first_site": cfg.pin_first_site,
    }


def _default_label(family: str, d: int, n: int, p, c, rank, seed) -> str:
    if family == "theorem2":
        return f"theorem2 d={d} n={n} p={list(p)}"
    if family == "theorem3":
        return f"theorem3 n={n} c={c}"
    if family == "haar-mixed":
        return f"haar-mixed d={d} n={n} rank={rank or d ** n} seed={seed}"
    return f"ghz d={d} n={n}"
