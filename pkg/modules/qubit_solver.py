"""
量子比特求解模块
==============
N 量子比特 MFEF 的交替本征迭代

每个 U_l 由实单位 4 维向量 x 参数化: U_l = x_0 I + i(x_1σ_1 + x_2σ_2 + x_3σ_3)。
固定其他位置时目标函数是 x^T M^(l) x，在单位球面上的最大值就是 M^(l) 的最大本征值，
所以逐点取最大本征向量的循环扫描是单调上升的；驻点满足 M^(l)x = λx，且各点的 λ 都等于目标函数值。
"""

import time
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from config.settings import SolveConfig, config
from models.basis_manager import basis_manager
from modules.analytic import bounds
from modules.ghz_frame import site_form
from modules.quantum_core import DensityMatrix, LocalUnitarySet, objective
from modules.restarts import MfefEstimate, RestartOutcome, run_restarts, select_best
from utils.errors import InputValidationError, SolverError
from utils.logger import get_logger, log_execution_time

logger = get_logger("mfef.qubit")

DEGENERACY_GAP = 1e-12
SIGN_TOL = 1e-14

IDENTITY_X = np.array([1.0, 0.0, 0.0, 0.0])


@dataclass(frozen=True, eq=False)
class QubitIterate:
    """当前迭代点: n 个单位 4 维向量、目标函数值和最近一次更新的乘子"""
    x: np.ndarray
    objective: float
    lam: float = float("nan")
    sweep: int = 0

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        x.flags.writeable = False
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    def unitaries(self) -> LocalUnitarySet:
        return xs_to_unitaries(self.x)

    @classmethod
    def start(cls, rho: DensityMatrix, x: np.ndarray) -> "QubitIterate":
        return cls(x, objective(rho, xs_to_unitaries(np.asarray(x, dtype=float))))


def unitary_from_x(x: Sequence[float]) -> np.ndarray:
    """x_0 I + i(x_1σ_1 + x_2σ_2 + x_3σ_3)"""
    x = np.asarray(x, dtype=float)
    if x.shape != (4,):
        raise InputValidationError(f"需要 4 维实向量，得到形状 {x.shape}", invariant="dimension")
    sigmas = basis_manager.get_basis(2).sigmas
    return x[0] * sigmas[0] + 1j * np.einsum('j,jab->ab', x[1:], sigmas[1:])


def x_from_unitary(u: np.ndarray) -> np.ndarray:
    """
    把任意 U(2) 元素映射到单位实 4 维向量

    先用 V = U/√det U 去掉整体相位（相位不影响目标函数），再按 Pauli 分量读出 x。
    """
    u = np.asarray(u, dtype=np.complex128)
    v = u / np.sqrt(linalg.det(u))
    sigmas = basis_manager.get_basis(2).sigmas
    x = np.empty(4)
    x[0] = np.trace(v).real / 2
    x[1:] = (np.einsum('jab,ba->j', sigmas[1:], v) / 2j).real
    return x / np.linalg.norm(x)


def xs_to_unitaries(xs: np.ndarray) -> LocalUnitarySet:
    return LocalUnitarySet.from_unchecked(2, len(xs), [unitary_from_x(x) for x in xs])


def _site_matrix(rho: DensityMatrix, xs: np.ndarray, l: int) -> np.ndarray:
    return site_form(rho, xs_to_unitaries(xs), l, qubit_phase=True).matrix


def _top_eigenvector(m: np.ndarray, previous: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    最大本征值及其单位本征向量

    非简并时取第一个非零分量非负的符号；简并时（间隙 < 1e-12）取本征子空间中
    离上一次 x 最近的向量，避免在等价解之间来回跳动。
    """
    try:
        vals, vecs = linalg.eigh(m)
    except linalg.LinAlgError as e:
        raise SolverError(f"本征分解失败: {e}") from e

    lam = float(vals[-1])
    top = vecs[:, vals >= lam - DEGENERACY_GAP]
    if top.shape[1] > 1:
        v = top @ (top.T @ previous)
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            return lam, v / norm

    v = vecs[:, -1]
    lead = v[np.abs(v) > SIGN_TOL]
    if lead.size and lead[0] < 0:
        v = -v
    return lam, v


def sweep_step(rho: DensityMatrix, it: QubitIterate, l: int) -> QubitIterate:
    """把第 l 个位置更新为 M^(l) 的最大本征向量"""
    if rho.d != 2:
        raise InputValidationError(f"量子比特求解器需要 d=2，得到 d={rho.d}", invariant="dimension")
    if not 0 <= l < it.n:
        raise InputValidationError(f"位置 {l} 越界 (n={it.n})", invariant="index")

    m = _site_matrix(rho, it.x, l)
    lam, v = _top_eigenvector(m, it.x[l])
    x = it.x.copy()
    x[l] = v
    return QubitIterate(x, float(v @ m @ v), lam, it.sweep)


def site_multipliers(rho: DensityMatrix, xs: np.ndarray) -> List[float]:
    """各位置的 λ_l = x^(l)T M^(l) x^(l)"""
    out = []
    for l in range(len(xs)):
        m = _site_matrix(rho, xs, l)
        out.append(float(xs[l] @ m @ xs[l]))
    return out


def kkt_residual_qubit(rho: DensityMatrix, xs: np.ndarray, sites: Optional[Sequence[int]] = None) -> float:
    """max_l ‖M^(l)x^(l) - (x^(l)T M^(l) x^(l)) x^(l)‖₂"""
    xs = np.asarray(xs, dtype=float)
    if rho.d != 2 or xs.shape != (rho.n, 4):
        raise InputValidationError(
            f"需要 d=2 以及 {rho.n} 个 4 维向量，得到 d={rho.d}, 形状 {xs.shape}", invariant="dimension")
    sites = range(rho.n) if sites is None else sites
    worst = 0.0
    for l in sites:
        m = _site_matrix(rho, xs, l)
        mx = m @ xs[l]
        worst = max(worst, float(np.linalg.norm(mx - (xs[l] @ mx) * xs[l])))
    return worst


def _initial_x(n: int, index: int, rng: np.random.Generator, pin_first: bool) -> np.ndarray:
    """第 0 个重启从单位矩阵出发，其余在 S³ 上均匀采样"""
    if index == 0:
        xs = np.tile(IDENTITY_X, (n, 1))
    else:
        xs = rng.standard_normal((n, 4))
        xs /= np.linalg.norm(xs, axis=1, keepdims=True)
    if pin_first:
        xs[0] = IDENTITY_X
    return xs


def _run_restart(rho: DensityMatrix, cfg: SolveConfig, index: int, rng: np.random.Generator) -> RestartOutcome:
    n = rho.n
    sites = list(range(1 if cfg.pin_first_site else 0, n))
    it = QubitIterate.start(rho, _initial_x(n, index, rng, cfg.pin_first_site))
    trajectory = [it.objective]
    converged = False
    kkt = float("inf")

    for sweep in range(1, cfg.max_sweeps + 1):
        before = it.objective
        for l in sites:
            it = sweep_step(rho, it, l)
        it = replace(it, sweep=sweep)
        trajectory.append(it.objective)

        if it.objective - before <= cfg.objective_tol * max(1.0, abs(it.objective)):
            kkt = kkt_residual_qubit(rho, it.x, sites)
            if kkt <= cfg.stationarity_tol:
                converged = True
                break
    else:
        kkt = kkt_residual_qubit(rho, it.x, sites)

    logger.log_restart("qubit", index, it.objective, it.sweep, converged)
    return RestartOutcome(index, it.objective, it.unitaries(), it.sweep, converged, kkt,
                          tuple(trajectory))


@log_execution_time(logger, "solve")
def solve_qubit(rho: DensityMatrix, cfg: Optional[SolveConfig] = None) -> MfefEstimate:
    """
    多起点交替本征迭代

    Raises:
        InputValidationError: d ≠ 2
        SolverError: 本征分解失败
    """
    if rho.d != 2:
        raise InputValidationError(f"量子比特求解器需要 d=2，得到 d={rho.d}", invariant="dimension")
    cfg = cfg or config.solver
    start = time.perf_counter()

    outcomes = run_restarts(lambda i, rng: _run_restart(rho, cfg, i, rng), cfg)
    best, agreeing, any_converged = select_best(outcomes, cfg.agreement_tol)

    xs = np.array([x_from_unitary(u) for u in best.unitaries])
    certificate = bounds(rho)
    estimate = MfefEstimate(
        value=best.objective,
        unitaries=LocalUnitarySet(2, rho.n, best.unitaries.unitaries),
        certificate=certificate,
        kkt_residual=best.kkt_residual,
        restarts_agreeing=agreeing,
        log=tuple(o.to_log() for o in outcomes),
        converged=any_converged,
        solver="qubit",
        multipliers=tuple(site_multipliers(rho, xs)),
        trajectory=best.trajectory,
    )

    logger.log_solve_summary("qubit", estimate.value, cfg.restarts, agreeing,
                             estimate.kkt_residual, time.perf_counter() - start)
    if not any_converged:
        logger.warning("No restart converged, reporting best effort", value=estimate.value)
    return estimate
