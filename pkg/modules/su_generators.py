"""
su(d) 生成元模块
===============
广义 Gell-Mann 基、结构常数，以及幺正矩阵在系数空间中的表示和幺正约束

基的顺序（固定，保证系数向量可复现）:
    σ_0 = √(2/d)·I
    对称对   |j⟩⟨k| + |k⟩⟨j|          j<k，字典序
    反对称对 -i|j⟩⟨k| + i|k⟩⟨j|       j<k，字典序
    对角     √(2/(j(j+1)))(Σ_{k≤j}|k⟩⟨k| - j|j+1⟩⟨j+1|)，j = 1…d-1

d=2 时 σ_1, σ_2, σ_3 就是 Pauli 矩阵 X, Y, Z。
结构常数稠密存储，大小为 (d²-1)³，d ≤ 6 时可以接受。
"""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from modules.quantum_core import ComplexMatrix, UNITARY_TOL, as_complex_matrix, unitarity_error
from utils.errors import ConstraintViolationError, InputValidationError

RECONSTRUCT_TOL = 1e-6


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class GeneratorBasis:
    """d² 个正交厄米生成元以及结构常数 f、dsym"""
    d: int
    sigmas: np.ndarray   # (d², d, d)
    f: np.ndarray        # (d²-1,)*3，全反对称
    dsym: np.ndarray     # (d²-1,)*3，全对称

    @property
    def size(self) -> int:
        return self.d ** 2

    @property
    def traceless(self) -> np.ndarray:
        return self.sigmas[1:]

    @property
    def s0(self) -> float:
        """σ_0 的归一化系数 √(2/d)"""
        return np.sqrt(2.0 / self.d)


@dataclass(frozen=True, eq=False)
class UnitaryCoefficients:
    """U = Σ_μ z_μ σ_μ 的复系数"""
    d: int
    z: np.ndarray

    @property
    def x(self) -> np.ndarray:
        return self.z.real

    @property
    def y(self) -> np.ndarray:
        return self.z.imag


def generator_labels(d: int) -> List[Tuple[str, int, int]]:
    """生成元的 (类型, j, k) 标签，与 build_basis 的顺序一致"""
    pairs = [(j, k) for j in range(d) for k in range(j + 1, d)]
    labels = [("identity", 0, 0)]
    labels += [("symmetric", j, k) for j, k in pairs]
    labels += [("antisymmetric", j, k) for j, k in pairs]
    labels += [("diagonal", j, j) for j in range(1, d)]
    return labels


def _generator(kind: str, j: int, k: int, d: int) -> np.ndarray:
    g = np.zeros((d, d), dtype=np.complex128)
    if kind == "identity":
        g = np.sqrt(2.0 / d) * np.eye(d, dtype=np.complex128)
    elif kind == "symmetric":
        g[j, k] = g[k, j] = 1.0
    elif kind == "antisymmetric":
        g[j, k] = -1j
        g[k, j] = 1j
    else:
        g[np.arange(j), np.arange(j)] = 1.0
        g[j, j] = -j
        g *= np.sqrt(2.0 / (j * (j + 1)))
    return g


def build_basis(d: int) -> GeneratorBasis:
    """
    构造广义 Gell-Mann 基和结构常数

    f_ijk = (1/4i) tr([σ_i,σ_j]σ_k)，d_ijk = (1/4) tr({σ_i,σ_j}σ_k)
    """
    if d < 2:
        raise InputValidationError(f"生成元基需要 d ≥ 2，得到 {d}", invariant="dimension")

    sigmas = np.stack([_generator(kind, j, k, d) for kind, j, k in generator_labels(d)])

    s = sigmas[1:]
    # t[i,j,k] = tr(σ_i σ_j σ_k)
    t = np.einsum('iab,jbc,kca->ijk', s, s, s, optimize=True)
    tt = t.transpose(1, 0, 2)
    f = ((t - tt) / 4j).real
    dsym = ((t + tt) / 4).real
    # 舍去舍入噪声，使 d=2 时得到精确的 Levi-Civita 张量和零张量
    f[np.abs(f) < 1e-14] = 0.0
    dsym[np.abs(dsym) < 1e-14] = 0.0

    return GeneratorBasis(d, _freeze(sigmas), _freeze(f), _freeze(dsym))


def _check_basis(d: int, basis: GeneratorBasis):
    if basis.d != d:
        raise InputValidationError(f"基的维度 {basis.d} 与 d={d} 不符", invariant="dimension")


def decompose_unitary(u: ComplexMatrix, basis: GeneratorBasis) -> UnitaryCoefficients:
    """z_μ = tr(σ_μ U)/2"""
    u = as_complex_matrix(u, basis.d, basis.d)
    err = unitarity_error(u)
    if err > UNITARY_TOL:
        raise InputValidationError(f"输入不是幺正矩阵: max|UU†-I| = {err:.3e}", invariant="unitarity")
    return UnitaryCoefficients(basis.d, decompose_matrix(u, basis))


def decompose_matrix(m: ComplexMatrix, basis: GeneratorBasis) -> np.ndarray:
    """任意 d×d 矩阵在基下的系数（基在 tr(M₁†M₂) 内积下正交，范数 √2）"""
    return np.einsum('mab,ba->m', basis.sigmas, m) / 2


def combine(z: np.ndarray, basis: GeneratorBasis) -> ComplexMatrix:
    """Σ_μ z_μ σ_μ，不做任何检查"""
    return np.einsum('m,mab->ab', z, basis.sigmas)


def constraint_residuals(zc: UnitaryCoefficients, basis: GeneratorBasis) -> Tuple[float, np.ndarray]:
    """
    幺正约束的残差（实形式）

    Returns:
        (Σ(x²+y²) - d/2,
         [2√(2/d)(x_0x_k + y_0y_k) + Σ_ij((x_ix_j + y_iy_j)d_ijk + 2x_iy_jf_ijk)]_k)
        第二项对 k = 1…d²-1；由 f 反对称、dsym 对称可知复形式的虚部恒为零。
    """
    _check_basis(zc.d, basis)
    x, y = zc.x, zc.y
    norm_res = float(np.sum(x ** 2 + y ** 2) - zc.d / 2)

    xs, ys = x[1:], y[1:]
    lin = 2 * basis.s0 * (x[0] * xs + y[0] * ys)
    quad = (np.einsum('i,j,ijk->k', xs, xs, basis.dsym)
            + np.einsum('i,j,ijk->k', ys, ys, basis.dsym)
            + 2 * np.einsum('i,j,ijk->k', xs, ys, basis.f))
    return norm_res, lin + quad


def constraint_jacobian(zc: UnitaryCoefficients, basis: GeneratorBasis) -> np.ndarray:
    """
    约束对 (x, y) 的梯度，形状 (d², 2d²)

    第 0 行对应范数约束，第 k 行对应 constraint_residuals 的第 k 个分量。
    """
    m = basis.size
    x, y = zc.x, zc.y
    xs, ys = x[1:], y[1:]
    jac = np.zeros((m, 2 * m))

    jac[0, :m] = 2 * x
    jac[0, m:] = 2 * y

    s2 = 2 * basis.s0
    rows = slice(1, m)
    # 线性项
    jac[rows, 0] = s2 * xs
    jac[rows, m] = s2 * ys
    jac[rows, 1:m] += s2 * x[0] * np.eye(m - 1)
    jac[rows, m + 1:] += s2 * y[0] * np.eye(m - 1)
    # 二次项: ∂/∂x_p = 2Σ_j x_j d_pjk + 2Σ_j y_j f_pjk，∂/∂y_p = 2Σ_j y_j d_pjk + 2Σ_i x_i f_ipk
    jac[rows, 1:m] += (2 * np.einsum('j,pjk->kp', xs, basis.dsym)
                       + 2 * np.einsum('j,pjk->kp', ys, basis.f))
    jac[rows, m + 1:] += (2 * np.einsum('j,pjk->kp', ys, basis.dsym)
                          + 2 * np.einsum('i,ipk->kp', xs, basis.f))
    return jac


def gram_expansion(z: np.ndarray, basis: GeneratorBasis) -> ComplexMatrix:
    """
    由结构常数组装 UU† 的展开式

    (Σ|z_μ|²)(2/d)I + Σ_k[√(2/d)(z_0* z_k + z_0 z_k*) + Σ_ij z_i z_j*(d_ijk + i f_ijk)]σ_k
    对任意系数向量成立，不要求幺正。
    """
    z = np.asarray(z, dtype=np.complex128)
    d = basis.d
    zs = z[1:]
    coeff = basis.s0 * (np.conj(z[0]) * zs + z[0] * np.conj(zs))
    coeff = coeff + np.einsum('i,j,ijk->k', zs, np.conj(zs), basis.dsym + 1j * basis.f)
    ident = np.sum(np.abs(z) ** 2) * (2.0 / d) * np.eye(d)
    return ident + np.einsum('k,kab->ab', coeff, basis.traceless)


def reconstruct(zc: UnitaryCoefficients, basis: GeneratorBasis) -> ComplexMatrix:
    """
    U = Σ_μ z_μ σ_μ

    Raises:
        ConstraintViolationError: 约束残差超过 1e-6
    """
    _check_basis(zc.d, basis)
    norm_res, res = constraint_residuals(zc, basis)
    worst = max(abs(norm_res), float(np.max(np.abs(res))) if res.size else 0.0)
    if worst > RECONSTRUCT_TOL:
        raise ConstraintViolationError(f"系数向量违反幺正约束，最大残差 {worst:.3e}")
    return combine(zc.z, basis)
