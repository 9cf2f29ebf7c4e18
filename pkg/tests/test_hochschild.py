import pytest

from twistcoh.core.field import RationalField
from twistcoh.core.linalg import zeros
from twistcoh.services.algebra import identity_morphism, validate_algebra
from twistcoh.services.ext import ExtClass, TwistedRing, class_equal, ring_sample
from twistcoh.services.hochschild import (
    BarComplex,
    BuiltinUnavailableError,
    DegreeZeroError,
    ExtModule,
    HochschildError,
    HochschildMethod,
    NotFoundError,
    SizeCapError,
    bar_criterion_check,
    default_generators,
    hh_ring,
    hh_twisted,
    k_eta,
    module_ring,
    scalar_action,
    strong_comm_check,
    strongify,
    tensor_down,
    tensor_sequence,
)
from twistcoh.services.qexterior import (
    YX,
    QExterior,
    build_module,
    module_generator,
    nakayama_ring,
    skewed_automorphism,
    theta,
)


def yx_class(ring: TwistedRing) -> ExtClass:
    images = zeros((4, 1))
    images[YX, 0] = 1
    return ring.space(0).class_of(images)


class TestBarComplex:
    def test_ranks(self, lq2: QExterior) -> None:
        assert BarComplex(lq2.algebra).rank(2) == 9
        assert BarComplex(lq2.algebra, normalized=False).length(1) == 64

    def test_exact(self, lq2: QExterior) -> None:
        BarComplex(lq2.algebra).check(2)

    def test_center_in_degree_zero(self, lq2: QExterior) -> None:
        ident = identity_morphism(lq2.algebra)
        sample = hh_twisted(lq2.algebra, ident, 1, 0, HochschildMethod.BAR)
        assert sample.dims == [2]

    def test_size_cap(self, lq2: QExterior) -> None:
        bar = BarComplex(lq2.algebra, cap=10)
        with pytest.raises(SizeCapError):
            bar.differential(2)


class TestHochschildDims:
    def test_builtin_nakayama_dims(self, lq: QExterior) -> None:
        sample = hh_twisted(
            lq.algebra, lq.nu, 2, 8, HochschildMethod.BUILTIN, with_products=False
        )
        assert sample.dims == [2, 0, 1, 0, 1, 0, 1, 0, 1]

    def test_methods_agree(self, lq2: QExterior) -> None:
        dims = {
            method: hh_twisted(lq2.algebra, lq2.nu, 1, 2, method, with_products=False).dims
            for method in HochschildMethod
        }
        assert dims[HochschildMethod.MINIMAL] == dims[HochschildMethod.BUILTIN]
        assert dims[HochschildMethod.BAR] == dims[HochschildMethod.BUILTIN]

    def test_minimal_matches_builtin_for_stride_two(self, lq2: QExterior) -> None:
        minimal = hh_twisted(lq2.algebra, lq2.nu, 2, 3, with_products=False)
        assert minimal.dims == [2, 0, 1, 0]

    def test_builtin_needs_a_known_algebra(self) -> None:
        k = validate_algebra("k", RationalField(), ("1",), [[[1]]], [1])
        with pytest.raises(BuiltinUnavailableError):
            hh_ring(k, identity_morphism(k), 1, HochschildMethod.BUILTIN)


class TestTensorDown:
    @pytest.mark.parametrize("beta", [1, 2, -1])
    def test_unit_goes_to_unit(self, lq: QExterior, beta: int) -> None:
        ring = nakayama_ring(lq)
        module = build_module(lq, 1, beta)
        target = module_ring(module, lq.nu, 2)
        assert class_equal(tensor_down(ring.unit(), module, ring, target), target.unit())

    @pytest.mark.parametrize("beta", [1, 2, -1])
    def test_theta_acts_by_a_scalar(self, lq: QExterior, beta: int) -> None:
        ring = nakayama_ring(lq)
        module = build_module(lq, 1, beta)
        target = module_ring(module, lq.nu, 2)
        generator = module_generator(lq, 1, beta)
        images = (lq.q**3 * beta**2 * generator).reshape(2, 1)
        expected = target.space(2).class_of(images)
        assert class_equal(tensor_down(theta(lq, ring), module, ring, target), expected)

    def test_theta_vanishes_on_x_module(self, lq: QExterior) -> None:
        ring = nakayama_ring(lq)
        assert tensor_down(theta(lq, ring), build_module(lq, 1, 0), ring).is_zero

    def test_multiplicative(self, lq2: QExterior) -> None:
        ring = nakayama_ring(lq2)
        module = build_module(lq2, 1, 1)
        target = module_ring(module, lq2.nu, 2)
        g = theta(lq2, ring)
        down = tensor_down(g, module, ring, target)
        squared = tensor_down(ring.product(g, g), module, ring, target)
        assert class_equal(squared, target.product(down, down))


class TestExtModule:
    def test_actions_agree(self, lq2: QExterior) -> None:
        ring = nakayama_ring(lq2)
        module = build_module(lq2, 1, 1)
        ext_module = ExtModule(ring, module, module)
        g = theta(lq2, ring)
        for zeta in ext_module.space(0).basis():
            right = scalar_action(g, zeta, "right", ext_module)
            left = scalar_action(g, zeta, "left", ext_module)
            assert class_equal(right, left)

    def test_right_action_matrix(self, lq2: QExterior) -> None:
        ring = nakayama_ring(lq2)
        module = build_module(lq2, 1, 1)
        ext_module = ExtModule(ring, module, module)
        matrix = ext_module.right_action_matrix(theta(lq2, ring), 1)
        assert matrix.shape == (ext_module.space(3).dim, ext_module.space(1).dim)

    def test_unknown_side(self, lq2: QExterior) -> None:
        ring = nakayama_ring(lq2)
        module = build_module(lq2, 1, 1)
        ext_module = ExtModule(ring, module, module)
        zeta = ext_module.space(0).basis()[0]
        with pytest.raises(HochschildError):
            scalar_action(theta(lq2, ring), zeta, "middle", ext_module)


class TestStrongCommutativity:
    def test_theta(self, lq: QExterior) -> None:
        ring = nakayama_ring(lq)
        assert strong_comm_check(theta(lq, ring), 2, ring)

    def test_center_under_nakayama(self, lq: QExterior) -> None:
        ring = nakayama_ring(lq)
        assert strong_comm_check(yx_class(ring), 1, ring)

    def test_center_under_skewed_twist(self, lq: QExterior) -> None:
        ring = hh_ring(lq.algebra, skewed_automorphism(lq), 2, HochschildMethod.BUILTIN)
        assert not strong_comm_check(yx_class(ring), 1, ring)

    def test_untwisted_is_always_strong(self, lq2: QExterior) -> None:
        ring = hh_ring(lq2.algebra, identity_morphism(lq2.algebra), 2, HochschildMethod.BUILTIN)
        for n in range(2):
            for cls in ring.space(n).basis():
                assert strong_comm_check(cls, 1, ring)

    def test_bar_criterion_is_sufficient(self, lq2: QExterior) -> None:
        for psi in (lq2.nu, skewed_automorphism(lq2)):
            ring = hh_ring(lq2.algebra, psi, 2, HochschildMethod.BUILTIN)
            for cls in ring.space(0).basis():
                assert not bar_criterion_check(cls, 1, ring) or strong_comm_check(cls, 1, ring)

    def test_strongify_nakayama(self, lq: QExterior) -> None:
        ring = nakayama_ring(lq)
        generators = default_generators(ring_sample(ring, 2, with_products=False))
        assert len(generators) == 3
        sub = strongify(ring, generators, 3)
        assert sub.s == 1
        assert sub.ring.t == 2

    def test_strongify_fails_for_skewed_twist(self, lq2: QExterior) -> None:
        ring = hh_ring(lq2.algebra, skewed_automorphism(lq2), 2, HochschildMethod.BUILTIN)
        with pytest.raises(NotFoundError):
            strongify(ring, [yx_class(ring)], 2)


class TestKEta:
    def test_extension_of_theta(self, lq: QExterior) -> None:
        ring = nakayama_ring(lq)
        extension = k_eta(theta(lq, ring), ring)
        assert extension.certificate.exact
        assert extension.syzygy.dim == 28
        assert extension.k_eta.dim == 32

    @pytest.mark.parametrize("beta", [1, 0])
    def test_tensored_sequence_stays_exact(self, lq2: QExterior, beta: int) -> None:
        ring = nakayama_ring(lq2)
        extension = k_eta(theta(lq2, ring), ring)
        sequence = tensor_sequence(extension, build_module(lq2, 1, beta))
        assert sequence.certificate.exact
        assert [m.dim for m in sequence.modules] == [2, 16, 14]

    def test_degree_zero_has_no_extension(self, lq2: QExterior) -> None:
        ring = nakayama_ring(lq2)
        with pytest.raises(DegreeZeroError):
            k_eta(ring.unit(), ring)
