"""
量子核心模块测试
==============
测试密度矩阵校验、GHZ 态、目标函数和 Haar 采样
"""

import pytest
import sys
import os

import numpy as np

# 添加项目根目录到路径
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from modules.quantum_core import (
    LocalUnitarySet,
    density_from_pure,
    ghz,
    ghz_projector,
    haar_local_unitaries,
    haar_mixed_state,
    haar_unitary,
    kron_all,
    maximally_mixed,
    objective,
    product_state_index,
    purity,
    validate_density,
)
from utils.errors import InputValidationError


class TestValidateDensity:
    """密度矩阵校验测试"""

    def test_accepts_valid_states(self):
        print("\n=== 测试合法密度矩阵 ===")
        rho = validate_density(np.diag([0.5, 0.5, 0.0, 0.0]), 2, 2)
        assert rho.dim == 4
        np.testing.assert_allclose(rho.eigenvalues, [0, 0, 0.5, 0.5], atol=1e-15)
        print("✅ 合法密度矩阵测试通过")

    def test_symmetrizes_small_asymmetry(self):
        m = np.eye(4) / 4
        m = m.astype(complex)
        m[0, 1] = 1e-12
        rho = validate_density(m, 2, 2)
        assert rho.mat[0, 1] == rho.mat[1, 0].conjugate()

    @pytest.mark.parametrize("raw, invariant", [
        (np.array([[0.5, 0.1], [0.0, 0.5]]), "dimension"),
        (np.diag([0.5, 0.5, 0.1, 0.0]), "trace"),
        (np.diag([0.75, 0.5, -0.25, 0.0]), "psd"),
    ])
    def test_rejects_invalid_states(self, raw, invariant):
        with pytest.raises(InputValidationError) as exc:
            validate_density(raw, 2, 2)
        assert exc.value.invariant == invariant

    def test_rejects_non_hermitian(self):
        m = np.eye(4, dtype=complex) / 4
        m[0, 1] = 0.1
        with pytest.raises(InputValidationError) as exc:
            validate_density(m, 2, 2)
        assert exc.value.invariant == "hermitian"
        assert "[hermitian]" in str(exc.value)

    def test_rejects_bad_dimensions(self):
        with pytest.raises(InputValidationError):
            validate_density(np.eye(2) / 2, 1, 1)
        with pytest.raises(InputValidationError):
            validate_density(np.eye(4) / 4, 2, 3)

    def test_purity_examples(self):
        print("\n=== 测试纯度 ===")
        assert purity(ghz_projector(2, 2)) == pytest.approx(1.0, abs=1e-12)
        assert purity(maximally_mixed(2, 2)) == pytest.approx(0.25, abs=1e-15)
        assert purity(validate_density(np.diag([0.5, 0.5, 0, 0]), 2, 2)) == pytest.approx(0.5)
        print("✅ 纯度测试通过")


class TestGhzAndObjective:
    """GHZ 态和目标函数测试"""

    def setup_method(self):
        self.rng = np.random.default_rng(7)

    def test_ghz_amplitudes(self):
        print("\n=== 测试 GHZ 态 ===")
        s = 1 / np.sqrt(2)
        np.testing.assert_allclose(ghz(2, 2), [s, 0, 0, s])
        phi3 = ghz(3, 2)
        np.testing.assert_allclose(np.nonzero(phi3)[0], [0, 4, 8])
        np.testing.assert_allclose(phi3[[0, 4, 8]], 1 / np.sqrt(3))
        np.testing.assert_allclose(np.nonzero(ghz(2, 3))[0], [0, 7])
        assert np.linalg.norm(ghz(4, 3)) == pytest.approx(1.0)
        print("✅ GHZ 态测试通过")

    def test_kron_all(self):
        np.testing.assert_array_equal(kron_all([np.eye(2), np.eye(2)]), np.eye(4))
        x = np.array([[0, 1], [1, 0]])
        np.testing.assert_allclose(kron_all([x, x]) @ ghz(2, 2), ghz(2, 2))
        a = np.array([[1, 2], [3, 4]])
        b = np.arange(9).reshape(3, 3)
        out = kron_all([a, b])
        assert out.shape == (6, 6)
        np.testing.assert_array_equal(out[3:, :3], 3 * b)
        with pytest.raises(InputValidationError):
            kron_all([])

    def test_ghz_rejects_small_dimensions(self):
        with pytest.raises(InputValidationError):
            ghz(1, 3)
        with pytest.raises(InputValidationError):
            ghz(2, 1)

    @pytest.mark.parametrize("d, n", [(2, 2), (2, 3), (3, 2), (4, 2)])
    def test_ghz_overlap_with_diagonal_products(self, d, n):
        phi = ghz(d, n)
        for i in range(d):
            idx = product_state_index([i] * n, d)
            assert abs(phi[idx]) ** 2 == pytest.approx(1 / d, abs=1e-14)

    def test_objective_examples(self):
        print("\n=== 测试目标函数 ===")
        assert objective(ghz_projector(3, 2), LocalUnitarySet.identities(3, 2)) == pytest.approx(1.0, abs=1e-12)

        rho = maximally_mixed(3, 2)
        us = haar_local_unitaries(3, 2, self.rng)
        assert objective(rho, us) == pytest.approx(1 / 9, abs=1e-14)

        psi = np.zeros(4, dtype=complex)
        psi[0] = 1
        rho00 = density_from_pure(psi, 2, 2)
        assert objective(rho00, LocalUnitarySet.identities(2, 2)) == pytest.approx(0.5, abs=1e-12)
        print("✅ 目标函数测试通过")

    def test_objective_dimension_mismatch(self):
        with pytest.raises(InputValidationError):
            objective(ghz_projector(2, 2), LocalUnitarySet.identities(2, 3))

    def test_global_phase_invariance(self):
        rho = haar_mixed_state(3, 2, 3, self.rng)
        us = haar_local_unitaries(3, 2, self.rng)
        shifted = us.replace_site(1, np.exp(0.7j) * us[1])
        assert objective(rho, shifted) == pytest.approx(objective(rho, us), abs=1e-12)

    def test_objective_below_top_eigenvalue(self):
        for d, n in [(2, 2), (2, 3), (3, 2)]:
            rho = haar_mixed_state(d, n, 3, self.rng)
            p_max = rho.eigenvalues[-1]
            for _ in range(20):
                value = objective(rho, haar_local_unitaries(d, n, self.rng))
                assert -1e-12 <= value <= min(p_max, 1.0) + 1e-9

    def test_local_unitary_set_validates(self):
        with pytest.raises(InputValidationError) as exc:
            LocalUnitarySet(2, 2, (np.eye(2), 2 * np.eye(2)))
        assert exc.value.invariant == "unitarity"
        with pytest.raises(InputValidationError):
            LocalUnitarySet(2, 2, (np.eye(2),))


class TestHaarSampling:
    """Haar 随机采样测试"""

    def test_unitary_and_deterministic(self):
        print("\n=== 测试 Haar 幺正矩阵 ===")
        u = haar_unitary(4, np.random.default_rng(3))
        np.testing.assert_allclose(u @ u.conj().T, np.eye(4), atol=1e-12)
        again = haar_unitary(4, np.random.default_rng(3))
        assert np.array_equal(u, again)
        print("✅ Haar 幺正矩阵测试通过")

    def test_scalar_case(self):
        u = haar_unitary(1, np.random.default_rng(0))
        assert u.shape == (1, 1)
        assert abs(u[0, 0]) == pytest.approx(1.0, abs=1e-12)

    def test_second_moment(self):
        rng = np.random.default_rng(11)
        samples = [abs(np.trace(haar_unitary(3, rng))) ** 2 for _ in range(10000)]
        assert np.mean(samples) == pytest.approx(1.0, rel=0.05)

    def test_mixed_state(self):
        rho = haar_mixed_state(2, 3, 2, np.random.default_rng(5))
        assert np.trace(rho.mat).real == pytest.approx(1.0, abs=1e-12)
        assert np.sum(rho.eigenvalues > 1e-10) == 2
        with pytest.raises(InputValidationError):
            haar_mixed_state(2, 2, 5, np.random.default_rng(0))
