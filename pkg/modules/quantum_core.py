"""
量子核心模块
===========
复矩阵/态的基本类型、密度矩阵校验、张量积、目标函数求值和 Haar 随机采样

约定:
    - 第 1 个参与方是张量积中最高位的因子（与 ⊗_{l=1}^{N} 的顺序一致）
    - 所有数组为 complex128，构造后只读
"""

from dataclasses import dataclass
from functools import cached_property, reduce
from typing import Iterable, List, Sequence, Tuple

import numpy as np
from scipy import linalg

from utils.errors import InputValidationError

# 数值容差
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_FLOOR = -1e-9
UNITARY_TOL = 1e-9
NORM_TOL = 1e-10
IMAG_TOL = 1e-10

# d^n 的上限
MAX_DIMENSION = 4096

ComplexMatrix = np.ndarray
StateVector = np.ndarray


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.flags.writeable = False
    return a


def _check_dims(d: int, n: int):
    if d < 2 or n < 2:
        raise InputValidationError(f"需要 d ≥ 2 且 n ≥ 2，得到 d={d}, n={n}", invariant="dimension")
    if d ** n > MAX_DIMENSION:
        raise InputValidationError(f"d^n = {d ** n} 超过上限 {MAX_DIMENSION}", invariant="dimension")


def as_complex_matrix(raw, rows: int = None, cols: int = None) -> ComplexMatrix:
    """转换为有限值的二维复矩阵"""
    m = np.asarray(raw, dtype=np.complex128)
    if m.ndim != 2:
        raise InputValidationError(f"期望二维矩阵，得到形状 {m.shape}", invariant="dimension")
    if (rows is not None and m.shape[0] != rows) or (cols is not None and m.shape[1] != cols):
        raise InputValidationError(
            f"矩阵形状 {m.shape} 与期望的 ({rows}, {cols}) 不符", invariant="dimension")
    if not np.all(np.isfinite(m)):
        raise InputValidationError("矩阵含有 NaN 或 Inf", invariant="finite")
    return m


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """经过校验的 n 体 d 维密度矩阵"""
    d: int
    n: int
    mat: ComplexMatrix

    @property
    def dim(self) -> int:
        return self.d ** self.n

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """升序本征值"""
        return linalg.eigh(self.mat, eigvals_only=True)

    @cached_property
    def eigensystem(self) -> Tuple[np.ndarray, np.ndarray]:
        return linalg.eigh(self.mat)


@dataclass(frozen=True, eq=False)
class LocalUnitarySet:
    """n 个 d×d 局域幺正矩阵"""
    d: int
    n: int
    unitaries: Tuple[ComplexMatrix, ...]

    def __post_init__(self):
        if len(self.unitaries) != self.n:
            raise InputValidationError(
                f"需要 {self.n} 个幺正矩阵，得到 {len(self.unitaries)}", invariant="dimension")
        frozen = []
        for l, u in enumerate(self.unitaries):
            u = as_complex_matrix(u, self.d, self.d)
            err = unitarity_error(u)
            if err > UNITARY_TOL:
                raise InputValidationError(
                    f"第 {l} 个矩阵不是幺正的: max|UU†-I| = {err:.3e}", invariant="unitarity")
            frozen.append(_frozen(u))
        object.__setattr__(self, "unitaries", tuple(frozen))

    @classmethod
    def identities(cls, d: int, n: int) -> "LocalUnitarySet":
        return cls(d, n, tuple(np.eye(d) for _ in range(n)))

    @classmethod
    def from_unchecked(cls, d: int, n: int, unitaries: Sequence[ComplexMatrix]) -> "LocalUnitarySet":
        """跳过幺正性检查（仅供内部迭代使用，输入已由投影保证幺正）"""
        obj = object.__new__(cls)
        object.__setattr__(obj, "d", d)
        object.__setattr__(obj, "n", n)
        object.__setattr__(obj, "unitaries", tuple(_frozen(u) for u in unitaries))
        return obj

    def replace_site(self, l: int, u: ComplexMatrix) -> "LocalUnitarySet":
        us = list(self.unitaries)
        us[l] = u
        return LocalUnitarySet.from_unchecked(self.d, self.n, us)

    def __iter__(self):
        return iter(self.unitaries)

    def __getitem__(self, l: int) -> ComplexMatrix:
        return self.unitaries[l]


def unitarity_error(u: ComplexMatrix) -> float:
    """max |UU† - I|"""
    return float(np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))))


def validate_density(raw, d: int, n: int) -> DensityMatrix:
    """
    校验并构造密度矩阵

    先检查厄米性，再对称化 ρ ← (ρ+ρ†)/2，然后检查迹和最小本征值。

    Raises:
        InputValidationError: 维度不符、非厄米、迹偏离 1、存在负本征值
    """
    _check_dims(d, n)
    dim = d ** n
    m = as_complex_matrix(raw)
    if m.shape != (dim, dim):
        raise InputValidationError(
            f"矩阵形状 {m.shape} 与 d^n = {dim} 不符", invariant="dimension")

    asym = float(np.max(np.abs(m - m.conj().T)))
    if asym > HERMITIAN_TOL:
        raise InputValidationError(f"矩阵不是厄米的: max|ρ-ρ†| = {asym:.3e}", invariant="hermitian")
    m = (m + m.conj().T) / 2

    tr = np.trace(m).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise InputValidationError(f"迹偏离 1: tr ρ = {tr:.12g}", invariant="trace")

    lam_min = float(linalg.eigh(m, eigvals_only=True)[0])
    if lam_min < PSD_FLOOR:
        raise InputValidationError(f"存在负本征值: λ_min = {lam_min:.3e}", invariant="psd")

    return DensityMatrix(d, n, _frozen(m))


def density_from_pure(psi: StateVector, d: int, n: int) -> DensityMatrix:
    """由归一化纯态构造投影算符"""
    psi = np.asarray(psi, dtype=np.complex128)
    norm = np.vdot(psi, psi).real
    if abs(norm - 1.0) > NORM_TOL:
        raise InputValidationError(f"态矢量未归一化: ‖ψ‖² = {norm:.12g}", invariant="norm")
    return validate_density(np.outer(psi, psi.conj()), d, n)


def kron_all(ms: Iterable[ComplexMatrix]) -> ComplexMatrix:
    """按列表顺序做 Kronecker 积"""
    ms = list(ms)
    if not ms:
        raise InputValidationError("kron_all 需要非空列表", invariant="dimension")
    return reduce(np.kron, (np.asarray(m, dtype=np.complex128) for m in ms))


def ghz(d: int, n: int) -> StateVector:
    """GHZ 态 (1/√d) Σ_i |ii…i⟩"""
    if d < 2 or n < 2:
        raise InputValidationError(f"GHZ 态需要 d ≥ 2 且 n ≥ 2，得到 d={d}, n={n}", invariant="dimension")
    step = (d ** n - 1) // (d - 1)  # d^{n-1} + … + d + 1
    phi = np.zeros(d ** n, dtype=np.complex128)
    phi[np.arange(d) * step] = 1.0 / np.sqrt(d)
    phi.flags.writeable = False
    return phi


def apply_at_site(op: np.ndarray, vec: StateVector, l: int, d: int, n: int) -> np.ndarray:
    """
    把单体算符作用在第 l 个因子上

    op 可以是 (d, d) 或一叠 (m, d, d)；后者返回形状 (m, d^n)。
    """
    t = np.moveaxis(np.asarray(vec).reshape((d,) * n), l, 0).reshape(d, -1)
    if op.ndim == 2:
        out = (op @ t).reshape((d,) * n)
        return np.moveaxis(out, 0, l).reshape(-1)
    m = op.shape[0]
    out = (op @ t).reshape((m,) + (d,) * n)
    return np.moveaxis(out, 1, l + 1).reshape(m, -1)


def apply_local(us: Sequence[ComplexMatrix], vec: StateVector, d: int, n: int,
                skip: int = None) -> np.ndarray:
    """计算 (⊗_l U_l)|vec⟩，skip 指定的位置视为单位算符"""
    out = np.asarray(vec, dtype=np.complex128)
    for l, u in enumerate(us):
        if l != skip:
            out = apply_at_site(u, out, l, d, n)
    return out


def _check_pair(rho: DensityMatrix, us: LocalUnitarySet):
    if (rho.d, rho.n) != (us.d, us.n):
        raise InputValidationError(
            f"维度不匹配: ρ 为 (d={rho.d}, n={rho.n})，幺正组为 (d={us.d}, n={us.n})",
            invariant="dimension")


def expectation(rho: DensityMatrix, psi: StateVector) -> float:
    """⟨ψ|ρ|ψ⟩，虚部超过容差即报错"""
    val = np.vdot(psi, rho.mat @ psi)
    if abs(val.imag) > IMAG_TOL:
        raise InputValidationError(f"期望值虚部过大: {val.imag:.3e}", invariant="hermitian")
    return float(val.real)


def objective(rho: DensityMatrix, us: LocalUnitarySet) -> float:
    """⟨φ|(⊗U†) ρ (⊗U)|φ⟩，固定幺正组时的目标函数值"""
    _check_pair(rho, us)
    psi = apply_local(us.unitaries, ghz(rho.d, rho.n), rho.d, rho.n)
    return expectation(rho, psi)


def haar_unitary(d: int, rng: np.random.Generator) -> ComplexMatrix:
    """
    Haar 分布的 d×d 幺正矩阵

    复高斯矩阵做 QR 分解，再用 R 对角元的相位修正 Q。
    """
    if d < 1:
        raise InputValidationError(f"d 必须 ≥ 1，得到 {d}", invariant="dimension")
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = linalg.qr(z)
    diag = np.diag(r)
    return q * (diag / np.abs(diag))


def haar_local_unitaries(d: int, n: int, rng: np.random.Generator) -> LocalUnitarySet:
    return LocalUnitarySet.from_unchecked(d, n, [haar_unitary(d, rng) for _ in range(n)])


def haar_pure_state(dim: int, rng: np.random.Generator) -> StateVector:
    """归一化复高斯向量，恰好服从 Haar 分布"""
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def haar_mixed_state(d: int, n: int, rank: int, rng: np.random.Generator) -> DensityMatrix:
    """rank 个 Haar 随机纯态的混合，权重服从 Dirichlet(1, …, 1)"""
    _check_dims(d, n)
    dim = d ** n
    if not 1 <= rank <= dim:
        raise InputValidationError(f"秩必须在 1…{dim} 之间，得到 {rank}", invariant="parameter")
    weights = rng.dirichlet(np.ones(rank))
    psis = np.stack([haar_pure_state(dim, rng) for _ in range(rank)], axis=1)
    m = (psis * weights) @ psis.conj().T
    return validate_density(m / np.trace(m).real, d, n)


def rotate_density(rho: DensityMatrix, us: LocalUnitarySet) -> DensityMatrix:
    """(⊗V) ρ (⊗V†)"""
    _check_pair(rho, us)
    v = kron_all(us.unitaries)
    return validate_density(v @ rho.mat @ v.conj().T, rho.d, rho.n)


def purity(rho: DensityMatrix) -> float:
    """tr(ρ²)"""
    return float(np.sum(np.abs(rho.mat) ** 2))


def maximally_mixed(d: int, n: int) -> DensityMatrix:
    _check_dims(d, n)
    return DensityMatrix(d, n, _frozen(np.eye(d ** n) / d ** n))


def ghz_projector(d: int, n: int) -> DensityMatrix:
    return density_from_pure(ghz(d, n), d, n)


def product_state_index(digits: List[int], d: int) -> int:
    """计算基矢 |i_1 … i_n⟩ 的线性下标（第 1 方为最高位）"""
    idx = 0
    for i in digits:
        idx = idx * d + i
    return idx
