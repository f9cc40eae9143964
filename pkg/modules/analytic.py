"""
解析结果模块
===========
上下界证书、GHZ 对角纯态族和 N 比特对角族的闭式值，以及极值态的判定

关于纯态族 |ψ⟩ = Σ_i √p_i |ii…i⟩ 的闭式值:
    取 U_1 = … = U_N = I 时 |⟨ψ|φ⟩|² = (1/d)(Σ_i √p_i)²，而证明中的不等式链
    给出同一个上界，所以 F(ψ) = (1/d)(Σ_i √p_i)²。不带 1/d 的写法在 p 均匀时
    会达到 d > 1，违反 F ≤ 1，这里不采用。
"""

from dataclasses import dataclass, asdict
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from modules.quantum_core import (
    DensityMatrix,
    density_from_pure,
    ghz,
    purity,
    validate_density,
)
from utils.errors import InputValidationError

PROBABILITY_TOL = 1e-10
FAMILY_TOL = 1e-10
SANDWICH_TOL = 1e-9


@dataclass(frozen=True)
class BoundCertificate:
    """1/d^n ≤ F ≤ min(p_max, √tr ρ², 1)"""
    lower: float
    upper_pmax: float
    upper_purity: float
    upper: float

    def contains(self, value: float, tol: float = SANDWICH_TOL) -> bool:
        return self.lower - tol <= value <= self.upper + tol

    def to_dict(self) -> dict:
        return asdict(self)


def bounds(rho: DensityMatrix) -> BoundCertificate:
    """由谱和纯度给出 MFEF 的上下界"""
    lower = 1.0 / rho.dim
    p_max = float(rho.eigenvalues[-1])
    p_max = min(max(p_max, lower), 1.0)
    upper_purity = min(float(np.sqrt(purity(rho))), 1.0)
    # p_max ≤ √Σp_i² 在数学上总成立，这里只吸收舍入误差
    upper_purity = max(upper_purity, p_max)
    upper = min(p_max, upper_purity, 1.0)
    return BoundCertificate(lower, p_max, upper_purity, upper)


def _check_probabilities(p: Sequence[float], d: int) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size != d:
        raise InputValidationError(f"概率向量长度 {p.size} 与 d={d} 不符", invariant="probability")
    if not np.all(np.isfinite(p)) or np.any(p < -PROBABILITY_TOL):
        raise InputValidationError(f"概率向量含负值或非有限值: {p.tolist()}", invariant="probability")
    if abs(p.sum() - 1.0) > PROBABILITY_TOL:
        raise InputValidationError(f"概率之和为 {p.sum():.12g}，不是 1", invariant="probability")
    return np.clip(p, 0.0, None)


def theorem2_value(p: Sequence[float], d: int) -> float:
    """Σ_i √p_i |ii…i⟩ 的 MFEF: (1/d)(Σ_i √p_i)²"""
    p = _check_probabilities(p, d)
    # Cauchy-Schwarz 保证不超过 1，均匀分布时消去舍入误差
    return min(float(np.sum(np.sqrt(p)) ** 2 / d), 1.0)


def theorem2_state(p: Sequence[float], d: int, n: int) -> DensityMatrix:
    """投影到 Σ_i √p_i |ii…i⟩ 上"""
    p = _check_probabilities(p, d)
    psi = np.zeros(d ** n, dtype=np.complex128)
    psi[_ghz_support(d, n)] = np.sqrt(p)
    return density_from_pure(psi / np.linalg.norm(psi), d, n)


def _ghz_support(d: int, n: int) -> np.ndarray:
    """|ii…i⟩ 的线性下标"""
    return np.arange(d) * ((d ** n - 1) // (d - 1))


def _check_c(c: float):
    if not np.isfinite(c) or abs(c) > 1.0:
        raise InputValidationError(f"需要 |c| ≤ 1，得到 c={c}", invariant="parameter")


def theorem3_value(c: float, n: int) -> float:
    """(I + cσ_3^{⊗n})/2^n 的 MFEF: (1+|c|)/2^n"""
    _check_c(c)
    if n < 2:
        raise InputValidationError(f"需要 n ≥ 2，得到 {n}", invariant="dimension")
    return (1.0 + abs(c)) / 2 ** n


def _z_parity(n: int) -> np.ndarray:
    """σ_3^{⊗n} 的对角元"""
    z = np.array([1.0, -1.0])
    out = z
    for _ in range(n - 1):
        out = np.kron(out, z)
    return out


def theorem3_state(c: float, n: int) -> DensityMatrix:
    """(1/2^n)(I^{⊗n} + cσ_3^{⊗n})，计算基下对角"""
    _check_c(c)
    diag = (1.0 + c * _z_parity(n)) / 2 ** n
    return validate_density(np.diag(diag), 2, n)


def classify_extremes(rho: DensityMatrix, value: float, tol: float = 1e-6) -> Optional[str]:
    """
    判定是否处于上下界的极值:
        F = 1      ⇔ ρ 是局域旋转后的 GHZ 态 ("ghz-class")
        F = 1/d^n  ⇔ ρ = I/d^n ("maximally-mixed")
    """
    if np.max(np.abs(rho.mat - np.eye(rho.dim) / rho.dim)) <= tol:
        return "maximally-mixed"
    if purity(rho) >= 1.0 - tol and value >= 1.0 - tol:
        return "ghz-class"
    return None


FamilyMatch = Tuple[str, Union[float, np.ndarray]]


def recognize_family(rho: DensityMatrix) -> Optional[FamilyMatch]:
    """
    识别有闭式值的态族

    Returns:
        ("theorem3", c)  ρ = (I + cσ_3^{⊗n})/2^n（d = 2）
        ("theorem2", p)  ρ 是只支撑在 {|ii…i⟩} 上的纯态；相位可由对角局域幺正吸收
        None             其他情况
    """
    d, n = rho.d, rho.n
    if d == 2:
        c = float(np.real(np.sum(_z_parity(n) * np.diag(rho.mat))))
        if abs(c) <= 1.0 + FAMILY_TOL:
            c = float(np.clip(c, -1.0, 1.0))
            expected = np.diag((1.0 + c * _z_parity(n)) / 2 ** n)
            if np.max(np.abs(rho.mat - expected)) <= FAMILY_TOL:
                return "theorem3", c

    if purity(rho) >= 1.0 - FAMILY_TOL:
        vals, vecs = rho.eigensystem
        psi = vecs[:, -1]
        support = _ghz_support(d, n)
        off = np.delete(psi, support)
        if np.max(np.abs(off), initial=0.0) <= np.sqrt(FAMILY_TOL):
            p = np.abs(psi[support]) ** 2
            return "theorem2", p / p.sum()
    return None


def family_value(match: FamilyMatch, d: int, n: int) -> float:
    kind, param = match
    if kind == "theorem3":
        return theorem3_value(float(param), n)
    return theorem2_value(param, d)
