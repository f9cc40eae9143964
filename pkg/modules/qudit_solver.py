"""
一般维度求解模块
==============
任意 d 的 MFEF: 在幺正群上逐点做黎曼梯度上升，再用系数空间中的 Lagrange 条件验证终点

每个位置的更新:
    G   = 目标函数对 U_l 的欧氏梯度，f(U+Δ) - f(U) = Re tr(G†Δ) + O(‖Δ‖²)
    P   = G - U G† U                 （切空间投影）
    U  ← polar(U + ηP)               （极分解收缩回幺正群）
η 从 1/(1+‖G‖) 开始回溯减半，直到满足充分上升条件。
"""

import time
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np
from scipy import linalg

from config.settings import SolveConfig, config
from models.basis_manager import basis_manager
from modules.analytic import bounds
from modules.ghz_frame import site_form
from modules.quantum_core import (
    DensityMatrix,
    LocalUnitarySet,
    apply_at_site,
    apply_local,
    expectation,
    ghz,
    haar_unitary,
    objective,
)
from modules.restarts import MfefEstimate, RestartOutcome, run_restarts, select_best
from modules.su_generators import constraint_jacobian, constraint_residuals, decompose_unitary
from utils.errors import InputValidationError, SolverError
from utils.logger import get_logger, log_execution_time

logger = get_logger("mfef.qudit")

SUFFICIENT_INCREASE = 1e-4
CONTRACTION = 0.5
STATIONARY_NORM = 1e-14
# 低于此值的充分上升量已经淹没在舍入误差中
ROUNDOFF_GAIN = 1e-15


@dataclass(frozen=True, eq=False)
class QuditIterate:
    unitaries: LocalUnitarySet
    objective: float
    sweep: int = 0
    stalled: bool = False

    @classmethod
    def start(cls, rho: DensityMatrix, us: LocalUnitarySet) -> "QuditIterate":
        return cls(us, objective(rho, us))


@dataclass(frozen=True)
class KktReport:
    """
    Lagrange 驻点条件的验证结果

    multipliers 按归一化的范数约束 (2/d)Σ(x²+y²) = 1 给出，驻点处等于目标函数值；
    constraint_multipliers[l][k-1] 对应第 k 个非对角约束。
    """
    multipliers: Tuple[float, ...]
    constraint_multipliers: Tuple[Tuple[float, ...], ...]
    gradient_residual: float
    constraint_residual: float
    rank_deficient: bool
    site_residuals: Tuple[float, ...] = ()

    def to_dict(self) -> dict:
        return {
            "multipliers": list(self.multipliers),
            "gradient_residual": self.gradient_residual,
            "constraint_residual": self.constraint_residual,
            "rank_deficient": self.rank_deficient,
            "site_residuals": list(self.site_residuals),
        }


def _check(rho: DensityMatrix, us: LocalUnitarySet, l: int):
    if (rho.d, rho.n) != (us.d, us.n):
        raise InputValidationError(
            f"维度不匹配: ρ 为 (d={rho.d}, n={rho.n})，幺正组为 (d={us.d}, n={us.n})",
            invariant="dimension")
    if not 0 <= l < rho.n:
        raise InputValidationError(f"位置 {l} 越界 (n={rho.n})", invariant="index")


def _slot_major(vec: np.ndarray, l: int, d: int, n: int) -> np.ndarray:
    """把第 l 个因子换到最前面，返回 (d, d^{n-1})"""
    return np.moveaxis(vec.reshape((d,) * n), l, 0).reshape(d, -1)


def _environment(rho: DensityMatrix, us: LocalUnitarySet, l: int) -> np.ndarray:
    """χ = (⊗_{k≠l} U_k)|φ⟩"""
    return apply_local(us.unitaries, ghz(rho.d, rho.n), rho.d, rho.n, skip=l)


def euclidean_gradient(rho: DensityMatrix, us: LocalUnitarySet, l: int) -> np.ndarray:
    """G_l = 2·η_l χ_l†，其中 η = ρψ，ψ = (⊗U)|φ⟩，下标 l 表示第 l 个因子在前的矩阵形式"""
    _check(rho, us, l)
    d, n = rho.d, rho.n
    chi = _environment(rho, us, l)
    psi = apply_at_site(us[l], chi, l, d, n)
    eta = rho.mat @ psi
    return 2.0 * _slot_major(eta, l, d, n) @ _slot_major(chi, l, d, n).conj().T


def riemannian_direction(u: np.ndarray, g: np.ndarray) -> np.ndarray:
    """G - U G† U"""
    return g - u @ g.conj().T @ u


def polar_retract(m: np.ndarray) -> np.ndarray:
    """极分解的幺正因子，即离 m 最近的幺正矩阵"""
    u, _ = linalg.polar(m)
    return u


def ascent_step(rho: DensityMatrix, it: QuditIterate, l: int,
                max_halvings: Optional[int] = None) -> QuditIterate:
    """
    对第 l 个位置做一次带回溯的黎曼梯度上升

    驻点处直接返回原迭代（增益为零）；回溯用尽时返回原迭代并标记 stalled。
    """
    us = it.unitaries
    _check(rho, us, l)
    d, n = rho.d, rho.n
    max_halvings = config.solver.max_halvings if max_halvings is None else max_halvings

    chi = _environment(rho, us, l)
    u = us[l]
    f0 = expectation(rho, apply_at_site(u, chi, l, d, n))
    g = euclidean_gradient(rho, us, l)
    p = riemannian_direction(u, g)
    p_norm = float(np.linalg.norm(p))
    pp = p_norm ** 2 / 4

    if p_norm < STATIONARY_NORM:
        return replace(it, objective=f0, stalled=False)

    eta = 1.0 / (1.0 + float(np.linalg.norm(g)))
    for _ in range(max_halvings + 1):
        try:
            cand = polar_retract(u + eta * p)
        except (linalg.LinAlgError, ValueError) as e:
            raise SolverError(f"极分解失败: {e}") from e
        f = expectation(rho, apply_at_site(cand, chi, l, d, n))
        target = SUFFICIENT_INCREASE * eta * pp
        if f - f0 >= target or (target < ROUNDOFF_GAIN and f >= f0 - ROUNDOFF_GAIN):
            return replace(it, unitaries=us.replace_site(l, cand), objective=f, stalled=False)
        eta *= CONTRACTION

    return replace(it, objective=f0, stalled=True)


def stationarity_norms(rho: DensityMatrix, us: LocalUnitarySet) -> List[float]:
    """各位置的 ‖G - U G† U‖"""
    return [float(np.linalg.norm(riemannian_direction(us[l], euclidean_gradient(rho, us, l))))
            for l in range(rho.n)]


def kkt_report(rho: DensityMatrix, us: LocalUnitarySet) -> KktReport:
    """
    在系数空间 (x, y) 中验证 Lagrange 驻点条件

    目标函数 z†H^(l)z 对 (x, y) 的梯度为 (2Re Hz, 2Im Hz)。它应当落在约束梯度张成的
    空间里；用最小二乘求乘子，残差就是不在该空间中的分量。
    """
    _check(rho, us, 0)
    basis = basis_manager.get_basis(rho.d)
    m = basis.size

    lams, taus, site_res = [], [], []
    constraint_res = 0.0
    rank_deficient = False
    for l in range(rho.n):
        zc = decompose_unitary(us[l], basis)
        h = site_form(rho, us, l, qubit_phase=False).matrix
        hz = h @ zc.z
        grad = np.concatenate([2 * hz.real, 2 * hz.imag])

        jac = constraint_jacobian(zc, basis)
        jac[0] *= 2.0 / rho.d
        mult, _, rank, _ = linalg.lstsq(jac.T, grad)
        rank_deficient = rank_deficient or bool(rank < m)

        lams.append(float(mult[0]))
        taus.append(tuple(float(t) for t in mult[1:]))
        site_res.append(float(np.linalg.norm(grad - jac.T @ mult)))

        norm_res, res = constraint_residuals(zc, basis)
        constraint_res = max(constraint_res, abs(norm_res), float(np.max(np.abs(res), initial=0.0)))

    if rank_deficient:
        logger.warning("Constraint Jacobian is rank deficient, reporting minimum-norm multipliers")
    return KktReport(tuple(lams), tuple(taus), max(site_res), constraint_res,
                     rank_deficient, tuple(site_res))


def _initial_unitaries(d: int, n: int, index: int, rng: np.random.Generator,
                       pin_first: bool) -> LocalUnitarySet:
    """第 0 个重启从单位矩阵出发，其余 Haar 随机"""
    if index == 0:
        us = [np.eye(d, dtype=np.complex128) for _ in range(n)]
    else:
        us = [haar_unitary(d, rng) for _ in range(n)]
    if pin_first:
        us[0] = np.eye(d, dtype=np.complex128)
    return LocalUnitarySet.from_unchecked(d, n, us)


def _run_restart(rho: DensityMatrix, cfg: SolveConfig, index: int, rng: np.random.Generator) -> RestartOutcome:
    d, n = rho.d, rho.n
    sites = list(range(1 if cfg.pin_first_site else 0, n))
    it = QuditIterate.start(rho, _initial_unitaries(d, n, index, rng, cfg.pin_first_site))
    trajectory = [it.objective]
    converged = False
    stalled = False
    residual = float("inf")

    for sweep in range(1, cfg.max_sweeps + 1):
        before = it.objective
        stalled = False
        for l in sites:
            it = ascent_step(rho, it, l, cfg.max_halvings)
            stalled |= it.stalled
        it = replace(it, sweep=sweep)
        trajectory.append(it.objective)

        if it.objective - before <= cfg.objective_tol * max(1.0, abs(it.objective)):
            norms = stationarity_norms(rho, it.unitaries)
            residual = max(norms[l] for l in sites) / np.sqrt(2)
            if residual <= cfg.stationarity_tol:
                converged = True
                break
    else:
        norms = stationarity_norms(rho, it.unitaries)
        residual = max(norms[l] for l in sites) / np.sqrt(2)

    if stalled and not converged:
        logger.debug(f"Line search stalled: qudit#{index}", sweep=it.sweep)
    logger.log_restart("qudit", index, it.objective, it.sweep, converged)
    return RestartOutcome(index, it.objective, it.unitaries, it.sweep, converged, residual,
                          tuple(trajectory), stalled)


@log_execution_time(logger, "solve")
def solve(rho: DensityMatrix, cfg: Optional[SolveConfig] = None) -> MfefEstimate:
    """多起点黎曼梯度上升，终点附带 Lagrange 条件的验证报告"""
    cfg = cfg or config.solver
    start = time.perf_counter()

    outcomes = run_restarts(lambda i, rng: _run_restart(rho, cfg, i, rng), cfg)
    best, agreeing, any_converged = select_best(outcomes, cfg.agreement_tol)

    report = kkt_report(rho, best.unitaries)
    estimate = MfefEstimate(
        value=best.objective,
        unitaries=LocalUnitarySet(rho.d, rho.n, best.unitaries.unitaries),
        certificate=bounds(rho),
        kkt_residual=best.kkt_residual,
        restarts_agreeing=agreeing,
        log=tuple(o.to_log() for o in outcomes),
        converged=any_converged,
        solver="qudit",
        multipliers=report.multipliers,
        kkt=report,
        trajectory=best.trajectory,
    )

    logger.log_solve_summary("qudit", estimate.value, cfg.restarts, agreeing,
                             estimate.kkt_residual, time.perf_counter() - start)
    if not any_converged:
        logger.warning("No restart converged, reporting best effort", value=estimate.value)
    return estimate


solve_qudit = solve
