"""
GHZ 框架模块
===========
旋转后的 GHZ 框架向量，以及两个求解器共同使用的二次型数据:
    - 量子比特的实对称张量 R 和单点 4×4 实对称矩阵 M^(l)
    - 一般 d 的单点 d²×d² 厄米矩阵 H^(l)

量子比特框架向量带相位 i^{g(μ_1)+…+g(μ_N)}，g(0)=0，g(1)=g(2)=g(3)=1，
这样 U_l = Σ_μ x_μ i^{g(μ)} σ_μ 的系数 x 保持为实数；一般 d 的框架不带相位。
"""

import itertools
import threading
from collections import OrderedDict
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from config.settings import config
from models.basis_manager import basis_manager
from modules.quantum_core import (
    DensityMatrix,
    LocalUnitarySet,
    StateVector,
    apply_at_site,
    apply_local,
    ghz,
)
from utils.errors import InputValidationError

QUBIT_PHASES = np.array([1.0, 1j, 1j, 1j])


class GhzFrame:
    """旋转 GHZ 框架，框架向量按多重指标惰性计算并缓存"""

    def __init__(self, d: int, n: int, qubit_phase: Optional[bool] = None,
                 cache_size: Optional[int] = None):
        if d < 2 or n < 2:
            raise InputValidationError(f"GHZ 框架需要 d ≥ 2 且 n ≥ 2，得到 d={d}, n={n}",
                                       invariant="dimension")
        self.d = d
        self.n = n
        self.qubit_phase = (d == 2) if qubit_phase is None else qubit_phase
        if self.qubit_phase and d != 2:
            raise InputValidationError("只有 d=2 的框架可以带 i^g 相位", invariant="dimension")

        self.phi = ghz(d, n)
        self.ops = site_operators(d, self.qubit_phase)
        self.cache_size = cache_size or config.frame.cache_size

        self._cache: "OrderedDict[Tuple[int, ...], np.ndarray]" = OrderedDict()
        self._lock = threading.Lock()

    @property
    def size(self) -> int:
        """每个位置的指标个数 (d²)"""
        return self.d ** 2

    def frame_vector(self, mu: Sequence[int]) -> StateVector:
        """(⊗_l i^{g(μ_l)}σ_{μ_l})|φ⟩ 或 (⊗_l σ_{μ_l})|φ⟩"""
        key = tuple(int(m) for m in mu)
        if len(key) != self.n or any(m < 0 or m >= self.size for m in key):
            raise InputValidationError(
                f"多重指标 {key} 越界: 需要 {self.n} 个取值于 0…{self.size - 1} 的指标",
                invariant="index")

        with self._lock:
            vec = self._cache.get(key)
            if vec is not None:
                self._cache.move_to_end(key)
                return vec

        vec = self.phi
        for l, m in enumerate(key):
            vec = apply_at_site(self.ops[m], vec, l, self.d, self.n)
        vec = np.array(vec)
        vec.flags.writeable = False

        with self._lock:
            self._cache[key] = vec
            if len(self._cache) > self.cache_size:
                self._cache.popitem(last=False)
        return vec

    def frame_matrix(self) -> np.ndarray:
        """全部 (d²)^n 个框架向量按多重指标字典序排列成列"""
        indices = itertools.product(range(self.size), repeat=self.n)
        return np.stack([self.frame_vector(mu) for mu in indices], axis=1)

    def cache_info(self) -> dict:
        with self._lock:
            return {"entries": len(self._cache), "capacity": self.cache_size}


def site_operators(d: int, qubit_phase: bool) -> np.ndarray:
    """单点替换算符: 量子比特为 i^{g(μ)}σ_μ，一般 d 为 σ_μ"""
    sigmas = basis_manager.get_basis(d).sigmas
    if qubit_phase:
        return QUBIT_PHASES[:, None, None] * sigmas
    return sigmas


@dataclass(frozen=True, eq=False)
class RTensor:
    """R_{ν_1…ν_N; μ_1…μ_N}，以 (4^n, 4^n) 矩阵存储"""
    n: int
    matrix: np.ndarray

    @property
    def entries(self) -> np.ndarray:
        """按 (ν_1,…,ν_N, μ_1,…,μ_N) 排列的 2n 阶张量视图"""
        return self.matrix.reshape((4,) * (2 * self.n))


@dataclass(frozen=True, eq=False)
class SiteForm:
    """第 l 个位置的二次型矩阵（量子比特为实对称 4×4，一般 d 为厄米 d²×d²）"""
    site: int
    matrix: np.ndarray

    def value(self, coeffs: np.ndarray) -> float:
        c = np.asarray(coeffs)
        return float(np.real(np.vdot(c, self.matrix @ c)))


def build_r_tensor(rho: DensityMatrix, max_parties: Optional[int] = None) -> RTensor:
    """
    R = ½[⟨φ_ν|ρ|φ_μ⟩ + ⟨φ_μ|ρ|φ_ν⟩] = Re⟨φ_ν|ρ|φ_μ⟩

    Raises:
        InputValidationError: d ≠ 2 或 16^n 个条目超出内存预算
    """
    if rho.d != 2:
        raise InputValidationError(f"R 张量只对量子比特定义，得到 d={rho.d}", invariant="dimension")
    limit = max_parties or config.frame.r_tensor_max_parties
    if rho.n > limit:
        raise InputValidationError(
            f"R 张量需要 16^{rho.n} 个条目，超出预算 (n ≤ {limit})", invariant="budget")

    frame = GhzFrame(2, rho.n, qubit_phase=True, cache_size=4 ** rho.n)
    phis = frame.frame_matrix()
    gram = phis.conj().T @ (rho.mat @ phis)
    r = gram.real
    r = 0.5 * (r + r.T)
    r.flags.writeable = False
    return RTensor(rho.n, r)


def contract_r_tensor(r: RTensor, xs: Sequence[np.ndarray]) -> float:
    """Σ_{ν;μ} x_ν1…x_νN x_μ1…x_μN R_{ν;μ}"""
    if len(xs) != r.n:
        raise InputValidationError(f"需要 {r.n} 个 4 维向量，得到 {len(xs)}", invariant="dimension")
    v = xs[0]
    for x in xs[1:]:
        v = np.kron(v, x)
    return float(v @ r.matrix @ v)


def site_vectors(rho: DensityMatrix, us: LocalUnitarySet, l: int,
                 qubit_phase: Optional[bool] = None) -> np.ndarray:
    """
    w_μ = (U_1⊗…⊗[替换算符 μ 放在第 l 位]⊗…⊗U_N)|φ⟩，返回形状 (d², d^n)

    第 l 位原有的幺正矩阵被忽略。
    """
    _check_site(rho, us, l)
    qubit_phase = (rho.d == 2) if qubit_phase is None else qubit_phase
    chi = apply_local(us.unitaries, ghz(rho.d, rho.n), rho.d, rho.n, skip=l)
    return apply_at_site(site_operators(rho.d, qubit_phase), chi, l, rho.d, rho.n)


def site_form(rho: DensityMatrix, us: LocalUnitarySet, l: int,
              qubit_phase: Optional[bool] = None) -> SiteForm:
    """
    单点二次型

    量子比特: M_{νμ} = Re(w_ν† ρ w_μ)，x^T M x 等于 U_l 由 x 参数化时的目标函数
    一般 d:   H_{νμ} = w_ν† ρ w_μ，z†Hz 等于 U_l = Σ z_μσ_μ 时的目标函数
    """
    qubit_phase = (rho.d == 2) if qubit_phase is None else qubit_phase
    w = site_vectors(rho, us, l, qubit_phase)
    h = w.conj() @ (rho.mat @ w.T)
    if qubit_phase:
        m = h.real
        m = 0.5 * (m + m.T)
    else:
        m = 0.5 * (h + h.conj().T)
    return SiteForm(l, m)


def _check_site(rho: DensityMatrix, us: LocalUnitarySet, l: int):
    if (rho.d, rho.n) != (us.d, us.n):
        raise InputValidationError(
            f"维度不匹配: ρ 为 (d={rho.d}, n={rho.n})，幺正组为 (d={us.d}, n={us.n})",
            invariant="dimension")
    if not 0 <= l < rho.n:
        raise InputValidationError(f"位置 {l} 越界 (n={rho.n})", invariant="index")
