import numpy as np
import pytest

from twistcoh.core.linalg import is_zero
from twistcoh.services.algebra import identity_morphism, power
from twistcoh.services.modules import (
    IsomorphismFound,
    NotAModuleError,
    NotIsomorphic,
    WrongAlgebraError,
    bimodule_twist,
    direct_sum,
    hom_basis,
    is_isomorphic,
    left_restriction,
    projective_cover,
    radical_submodule,
    regular_module,
    right_restriction,
    syzygy,
    tensor_dimension_via_presentation,
    tensor_over_algebra,
    top,
    twist,
    validate_module,
)
from twistcoh.services.qexterior import X, QExterior, build_module, simple_module


def assert_certificate(verdict: object) -> None:
    assert isinstance(verdict, IsomorphismFound)
    cert = verdict.certificate
    assert cert.is_invertible()
    assert cert.is_intertwiner()


class TestValidateModule:
    def test_regular_module_validates(self, lq: QExterior) -> None:
        module = regular_module(lq.algebra)
        again = validate_module(lq.algebra, module.stack, "L")
        assert again.dim == 4

    def test_broken_action(self, lq: QExterior) -> None:
        stack = regular_module(lq.algebra).stack.copy()
        stack[X] = stack[X] * 0 + np.eye(4, dtype=object)
        with pytest.raises(NotAModuleError):
            validate_module(lq.algebra, stack, "bad")

    def test_quantum_module_dimension(self, lq: QExterior) -> None:
        module = build_module(lq, 1, 3)
        assert module.dim == 2
        validate_module(lq.algebra, module.stack, "M")


class TestTwist:
    def test_identity_twist(self, lq: QExterior) -> None:
        module = build_module(lq, 1, 1)
        twisted = twist(module, identity_morphism(lq.algebra), 3)
        assert np.array_equal(twisted.stack, module.stack)

    def test_x_scales_by_nakayama(self, lq: QExterior) -> None:
        module = build_module(lq, 1, 2)
        twisted = twist(module, lq.nu, 1)
        assert is_zero(twisted.stack[X] - module.stack[X] * (-1 / lq.q))

    def test_powers_add(self, lq: QExterior) -> None:
        module = build_module(lq, 1, 1)
        stepwise = twist(twist(module, lq.nu, 2), lq.nu, -1)
        assert np.array_equal(stepwise.stack, twist(module, lq.nu, 1).stack)

    def test_twisted_regular_module_is_free(self, lq: QExterior) -> None:
        regular = regular_module(lq.algebra)
        assert_certificate(is_isomorphic(regular, twist(regular, lq.nu, 1)))


class TestBimoduleTwist:
    def test_identity_twists(self, lq: QExterior) -> None:
        ident = identity_morphism(lq.algebra)
        twisted = bimodule_twist(lq.bimodule, ident, ident)
        assert np.array_equal(twisted.stack, lq.bimodule.stack)

    def test_nakayama_twist_is_a_module(self, lq: QExterior) -> None:
        twisted = bimodule_twist(lq.bimodule, lq.nu, lq.nu, 1, 0)
        validate_module(twisted.algebra, twisted.stack, "nu-Lambda")

    def test_moving_the_twist_across(self, lq2: QExterior) -> None:
        right = bimodule_twist(lq2.bimodule, lq2.nu, lq2.nu, 0, -2)
        left = bimodule_twist(lq2.bimodule, lq2.nu, lq2.nu, 2, 0)
        assert_certificate(is_isomorphic(right, left))

    def test_left_restriction_is_regular(self, lq: QExterior) -> None:
        restricted = left_restriction(lq.bimodule)
        assert np.array_equal(restricted.stack, regular_module(lq.algebra).stack)

    def test_right_restriction_is_regular_over_opposite(self, lq: QExterior) -> None:
        restricted = right_restriction(lq.bimodule)
        assert restricted.algebra.name == f"{lq.algebra.name}^op"
        assert np.array_equal(restricted.stack, lq.algebra.right_stack)
        validate_module(restricted.algebra, restricted.stack, "A_op")

    def test_restriction_needs_a_bimodule(self, lq: QExterior) -> None:
        with pytest.raises(WrongAlgebraError):
            right_restriction(regular_module(lq.algebra))

    def test_module_is_not_a_bimodule(self, lq: QExterior) -> None:
        ident = identity_morphism(lq.algebra)
        with pytest.raises(WrongAlgebraError):
            bimodule_twist(regular_module(lq.algebra), ident, ident)


class TestHom:
    def test_endomorphisms_of_regular(self, lq: QExterior) -> None:
        regular = regular_module(lq.algebra)
        assert len(hom_basis(regular, regular)) == 4

    def test_into_simple(self, lq: QExterior) -> None:
        assert len(hom_basis(build_module(lq, 1, 2), simple_module(lq))) == 1

    @pytest.mark.parametrize(("beta", "other", "expected"), [(1, 2, 1), (2, 2, 2), (0, 1, 1)])
    def test_between_quantum_modules(
        self, lq: QExterior, beta: int, other: int, expected: int
    ) -> None:
        maps = hom_basis(build_module(lq, 1, beta), build_module(lq, 1, other))
        assert len(maps) == expected
        assert all(f.is_intertwiner() for f in maps)


class TestTopAndCover:
    def test_top_of_regular(self, lq: QExterior) -> None:
        assert top(regular_module(lq.algebra)).module.dim == 1

    def test_top_of_quantum_module(self, lq: QExterior) -> None:
        assert top(build_module(lq, 1, 1)).module.dim == 1

    def test_radical_of_simple(self, lq: QExterior) -> None:
        assert radical_submodule(simple_module(lq)).module.dim == 0

    def test_cover_of_regular(self, lq: QExterior) -> None:
        cover = projective_cover(regular_module(lq.algebra))
        assert cover.rank == 1
        assert cover.is_free

    def test_cover_of_quantum_module(self, lq: QExterior) -> None:
        assert projective_cover(build_module(lq, 1, 5)).rank == 1

    def test_cover_is_additive(self, lq: QExterior) -> None:
        k = simple_module(lq)
        assert projective_cover(direct_sum(k, k)).rank == 2


class TestSyzygy:
    def test_projective_has_no_syzygy(self, lq: QExterior) -> None:
        assert syzygy(regular_module(lq.algebra)).dim == 0

    def test_x_module_is_its_own_syzygy(self, lq: QExterior) -> None:
        module = build_module(lq, 1, 0)
        assert_certificate(is_isomorphic(module, syzygy(module)))

    def test_simple_syzygy_dimension(self, lq: QExterior) -> None:
        assert syzygy(simple_module(lq)).dim == 3


class TestTensor:
    def test_regular_bimodule_is_a_unit(self, lq: QExterior) -> None:
        module = build_module(lq, 1, 2)
        product = tensor_over_algebra(lq.bimodule, module).module
        assert_certificate(is_isomorphic(product, module))

    def test_twisted_bimodule_twists(self, lq: QExterior) -> None:
        module = build_module(lq, 1, 1)
        twisted = bimodule_twist(lq.bimodule, lq.nu, lq.nu, 1, 0)
        product = tensor_over_algebra(twisted, module).module
        assert_certificate(is_isomorphic(product, twist(module, lq.nu, 1)))

    @pytest.mark.parametrize(("alpha", "beta"), [(1, 0), (0, 1), (1, 1)])
    def test_dimension_two_ways(self, lq: QExterior, alpha: int, beta: int) -> None:
        module = build_module(lq, alpha, beta)
        twisted = bimodule_twist(lq.bimodule, lq.nu, lq.nu, 1, 2)
        for bimodule in (lq.bimodule, twisted):
            direct = tensor_over_algebra(bimodule, module).module.dim
            assert direct == tensor_dimension_via_presentation(bimodule, module)

    def test_simple_dimension(self, lq: QExterior) -> None:
        k = simple_module(lq)
        assert tensor_over_algebra(lq.bimodule, k).module.dim == 1


class TestIsomorphism:
    def test_self(self, lq: QExterior) -> None:
        module = build_module(lq, 1, 2)
        assert_certificate(is_isomorphic(module, module))

    def test_tau_of_quantum_module(self, lq: QExterior) -> None:
        module = build_module(lq, 1, 2)
        tau = syzygy(syzygy(twist(module, lq.nu, 1)))
        assert_certificate(is_isomorphic(module, tau))

    def test_distinct_parameters(self, lq: QExterior) -> None:
        verdict = is_isomorphic(build_module(lq, 1, 1), build_module(lq, 1, 2))
        assert isinstance(verdict, NotIsomorphic)

    def test_dimension_mismatch(self, lq: QExterior) -> None:
        verdict = is_isomorphic(simple_module(lq), build_module(lq, 1, 1))
        assert isinstance(verdict, NotIsomorphic)
        assert "dimensions" in verdict.reason

    def test_seed_is_reproducible(self, lq: QExterior) -> None:
        module = build_module(lq, 1, 3)
        tau = syzygy(syzygy(twist(module, lq.nu, 1)))
        first = is_isomorphic(module, tau, seed=7)
        second = is_isomorphic(module, tau, seed=7)
        assert isinstance(first, IsomorphismFound)
        assert isinstance(second, IsomorphismFound)
        assert np.array_equal(first.certificate.matrix, second.certificate.matrix)

    def test_power_of_nakayama_twist(self, lq: QExterior) -> None:
        module = build_module(lq, 0, 1)
        twisted = twist(module, power(lq.nu, 2), 1)
        assert np.array_equal(twisted.stack, twist(module, lq.nu, 2).stack)
