"""
GHZ 框架模块测试
==============
测试框架向量、量子比特 R 张量和单点二次型
"""

import pytest
import sys
import os

import numpy as np

# 添加项目根目录到路径
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from models.basis_manager import basis_manager
from modules.ghz_frame import (
    GhzFrame,
    build_r_tensor,
    contract_r_tensor,
    site_form,
    site_vectors,
)
from modules.quantum_core import (
    LocalUnitarySet,
    ghz,
    ghz_projector,
    haar_local_unitaries,
    haar_mixed_state,
    maximally_mixed,
    objective,
)
from modules.qubit_solver import unitary_from_x, xs_to_unitaries
from modules.su_generators import decompose_unitary
from utils.errors import InputValidationError


def random_xs(rng, n):
    xs = rng.standard_normal((n, 4))
    return xs / np.linalg.norm(xs, axis=1, keepdims=True)


class TestGhzFrame:
    """框架向量测试"""

    def test_qubit_frame_examples(self):
        print("\n=== 测试量子比特框架向量 ===")
        frame = GhzFrame(2, 2)
        phi = ghz(2, 2)
        s = 1 / np.sqrt(2)
        np.testing.assert_allclose(frame.frame_vector((0, 0)), phi, atol=1e-15)
        np.testing.assert_allclose(frame.frame_vector((1, 1)), -phi, atol=1e-15)
        np.testing.assert_allclose(frame.frame_vector((2, 2)), phi, atol=1e-15)
        np.testing.assert_allclose(frame.frame_vector((3, 3)), -phi, atol=1e-15)
        np.testing.assert_allclose(frame.frame_vector((0, 3)), [1j * s, 0, 0, -1j * s], atol=1e-15)
        print("✅ 量子比特框架向量测试通过")

    def test_unphased_frame(self):
        frame = GhzFrame(2, 2, qubit_phase=False)
        np.testing.assert_allclose(frame.frame_vector((1, 1)), ghz(2, 2), atol=1e-15)
        assert not GhzFrame(3, 2).qubit_phase

    def test_rejects_bad_arguments(self):
        frame = GhzFrame(2, 3)
        with pytest.raises(InputValidationError) as exc:
            frame.frame_vector((0, 4, 0))
        assert exc.value.invariant == "index"
        with pytest.raises(InputValidationError):
            frame.frame_vector((0, 0))
        with pytest.raises(InputValidationError):
            GhzFrame(3, 2, qubit_phase=True)
        with pytest.raises(InputValidationError):
            GhzFrame(2, 1)

    def test_cache_is_bounded(self):
        frame = GhzFrame(2, 3, cache_size=2)
        first = frame.frame_vector((1, 2, 3))
        assert frame.frame_vector((1, 2, 3)) is first
        assert not first.flags.writeable
        frame.frame_vector((0, 0, 1))
        frame.frame_vector((0, 0, 2))
        assert frame.cache_info() == {"entries": 2, "capacity": 2}

    def test_frame_matrix_shape(self):
        assert GhzFrame(3, 2).frame_matrix().shape == (9, 81)

    def test_qubit_expansion(self):
        print("\n=== 测试量子比特展开式 ===")
        rng = np.random.default_rng(5)
        xs = random_xs(rng, 3)
        frame = GhzFrame(2, 3)
        coeffs = np.einsum('a,b,c->abc', *xs).reshape(-1)
        expanded = frame.frame_matrix() @ coeffs
        us = xs_to_unitaries(xs)
        direct = np.kron(np.kron(us[0], us[1]), us[2]) @ ghz(2, 3)
        np.testing.assert_allclose(expanded, direct, atol=1e-12)
        print("✅ 量子比特展开式测试通过")

    def test_qudit_expansion(self):
        rng = np.random.default_rng(6)
        us = haar_local_unitaries(3, 2, rng)
        basis = basis_manager.get_basis(3)
        z1 = decompose_unitary(us[0], basis).z
        z2 = decompose_unitary(us[1], basis).z
        expanded = GhzFrame(3, 2).frame_matrix() @ np.outer(z1, z2).reshape(-1)
        np.testing.assert_allclose(expanded, np.kron(us[0], us[1]) @ ghz(3, 2), atol=1e-12)


class TestRTensor:
    """量子比特 R 张量测试"""

    def setup_method(self):
        self.rng = np.random.default_rng(17)

    def test_symmetric_and_contracts_to_objective(self):
        print("\n=== 测试 R 张量收缩 ===")
        for n in (2, 3):
            rho = haar_mixed_state(2, n, 3, self.rng)
            r = build_r_tensor(rho)
            assert r.matrix.shape == (4 ** n, 4 ** n)
            np.testing.assert_allclose(r.matrix, r.matrix.T, atol=0)
            assert r.entries.shape == (4,) * (2 * n)
            for _ in range(5):
                xs = random_xs(self.rng, n)
                assert contract_r_tensor(r, xs) == pytest.approx(
                    objective(rho, xs_to_unitaries(xs)), abs=1e-12)
        print("✅ R 张量收缩测试通过")

    def test_known_entries(self):
        r = build_r_tensor(ghz_projector(2, 2))
        assert r.entries[0, 0, 0, 0] == pytest.approx(1.0)
        assert contract_r_tensor(r, [np.array([1.0, 0, 0, 0])] * 2) == pytest.approx(1.0)

        mixed = build_r_tensor(maximally_mixed(2, 3))
        for _ in range(5):
            assert contract_r_tensor(mixed, random_xs(self.rng, 3)) == pytest.approx(1 / 8, abs=1e-14)

    def test_rejects_unsupported_inputs(self):
        with pytest.raises(InputValidationError):
            build_r_tensor(maximally_mixed(3, 2))
        with pytest.raises(InputValidationError) as exc:
            build_r_tensor(maximally_mixed(2, 3), max_parties=2)
        assert exc.value.invariant == "budget"
        r = build_r_tensor(maximally_mixed(2, 2))
        with pytest.raises(InputValidationError):
            contract_r_tensor(r, random_xs(self.rng, 3))


class TestSiteForm:
    """单点二次型测试"""

    def setup_method(self):
        self.rng = np.random.default_rng(23)

    def test_qubit_form_reproduces_objective(self):
        print("\n=== 测试量子比特单点二次型 ===")
        rho = haar_mixed_state(2, 3, 2, self.rng)
        xs = random_xs(self.rng, 3)
        us = xs_to_unitaries(xs)
        for l in range(3):
            form = site_form(rho, us, l)
            np.testing.assert_allclose(form.matrix, form.matrix.T, atol=0)
            assert np.isrealobj(form.matrix)
            assert form.value(xs[l]) == pytest.approx(objective(rho, us), abs=1e-12)

            y = random_xs(self.rng, 1)[0]
            swapped = us.replace_site(l, unitary_from_x(y))
            assert form.value(y) == pytest.approx(objective(rho, swapped), abs=1e-12)
        print("✅ 量子比特单点二次型测试通过")

    def test_qudit_form_reproduces_objective(self):
        rho = haar_mixed_state(3, 2, 3, self.rng)
        us = haar_local_unitaries(3, 2, self.rng)
        basis = basis_manager.get_basis(3)
        form = site_form(rho, us, 1)
        np.testing.assert_allclose(form.matrix, form.matrix.conj().T, atol=0)
        z = decompose_unitary(us[1], basis).z
        assert form.value(z) == pytest.approx(objective(rho, us), abs=1e-12)

    def test_identity_site_on_ghz(self):
        form = site_form(ghz_projector(2, 2), LocalUnitarySet.identities(2, 2), 0)
        assert form.matrix[0, 0] == pytest.approx(1.0)
        assert form.value(np.array([1.0, 0, 0, 0])) == pytest.approx(1.0)

    def test_site_vectors_shape_and_errors(self):
        us = LocalUnitarySet.identities(3, 2)
        assert site_vectors(maximally_mixed(3, 2), us, 0).shape == (9, 9)
        with pytest.raises(InputValidationError) as exc:
            site_form(maximally_mixed(3, 2), us, 2)
        assert exc.value.invariant == "index"
        with pytest.raises(InputValidationError):
            site_form(maximally_mixed(2, 2), us, 0)
