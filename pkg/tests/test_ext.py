import numpy as np
import pytest

from twistcoh.core.linalg import dot, zeros
from twistcoh.services.ext import (
    DegreeMismatchError,
    ExtClass,
    NotACocycleError,
    SpaceMismatchError,
    TwistedRing,
    TwistMismatchError,
    check_associativity,
    check_unit,
    class_equal,
    ext_space,
    lift_chain_map,
    ring_sample,
    twisted_ext_space,
)
from twistcoh.services.qexterior import (
    YX,
    QExterior,
    build_module,
    nakayama_ring,
    simple_module,
    theta,
)
from twistcoh.services.resolution import minimal_resolution


def center_class(ring: TwistedRing, index: int) -> ExtClass:
    images = zeros((4, 1))
    images[index, 0] = 1
    return ring.space(0).class_of(images)


class TestExtSpace:
    @pytest.mark.parametrize("beta", [1, 2])
    def test_endomorphisms(self, lq: QExterior, beta: int) -> None:
        module = build_module(lq, 1, beta)
        assert len(ext_space(module, module, 0)) == 2

    def test_first_ext_of_simple(self, lq: QExterior) -> None:
        k = simple_module(lq)
        assert len(ext_space(k, k, 1)) == 2

    def test_twisted_into_simple(self, lq: QExterior) -> None:
        module = build_module(lq, 1, 1)
        k = simple_module(lq)
        for n in range(7):
            assert twisted_ext_space(module, k, lq.nu, 2, n).dim == 1

    def test_negative_degree(self, lq: QExterior) -> None:
        k = simple_module(lq)
        with pytest.raises(DegreeMismatchError):
            ext_space(k, k, -1)

    def test_wrong_shape_is_rejected(self, lq2: QExterior) -> None:
        space = nakayama_ring(lq2).space(2)
        with pytest.raises(NotACocycleError):
            space.class_of(zeros((4, 2)))

    def test_zero_and_basis(self, lq2: QExterior) -> None:
        space = nakayama_ring(lq2).space(0)
        assert space.zero().is_zero
        assert [cls.coords.tolist() for cls in space.basis()] == [[1, 0], [0, 1]]


class TestClasses:
    def test_scaling_changes_the_class(self, lq: QExterior) -> None:
        ring = nakayama_ring(lq)
        g = theta(lq, ring)
        assert not class_equal(g, g.scaled(2))
        assert class_equal(g.scaled(2), g + g)
        assert (g - g).is_zero

    def test_coboundary_does_not_change_the_class(self, lq: QExterior) -> None:
        ring = nakayama_ring(lq)
        g = theta(lq, ring)
        space = g.space
        field = lq.algebra.field
        cochain = space.cochain_basis(3)[:, 0]
        boundary = space.unvec(dot(field, space.coboundary(3), cochain))
        assert class_equal(space.class_of(g.images + boundary), g)

    def test_classes_from_different_degrees(self, lq2: QExterior) -> None:
        ring = nakayama_ring(lq2)
        with pytest.raises(SpaceMismatchError):
            class_equal(theta(lq2, ring), ring.unit())


class TestYoneda:
    def test_lift_commutes(self, lq: QExterior) -> None:
        ring = nakayama_ring(lq)
        lift = lift_chain_map(theta(lq, ring), ring.view(0), 3)
        lift.verify()
        assert len(lift.maps) == 4

    def test_unit_is_two_sided(self, lq: QExterior) -> None:
        ring = nakayama_ring(lq)
        g = theta(lq, ring)
        assert class_equal(ring.product(ring.unit(), g), g)
        assert class_equal(ring.product(g, ring.unit()), g)

    def test_powers_of_theta_survive(self, lq: QExterior) -> None:
        ring = nakayama_ring(lq)
        g = theta(lq, ring)
        for m in range(1, 4):
            assert not ring.power(g, m).is_zero

    def test_radical_center_kills_theta(self, lq: QExterior) -> None:
        ring = nakayama_ring(lq)
        g = theta(lq, ring)
        yx = center_class(ring, YX)
        assert ring.product(yx, g).is_zero
        assert ring.product(g, yx).is_zero

    def test_bilinear(self, lq2: QExterior) -> None:
        ring = nakayama_ring(lq2)
        g = theta(lq2, ring)
        assert class_equal(ring.product(g.scaled(3), g), ring.product(g, g).scaled(3))

    def test_negative_power(self, lq2: QExterior) -> None:
        ring = nakayama_ring(lq2)
        with pytest.raises(DegreeMismatchError):
            ring.power(theta(lq2, ring), -1)


class TestTwistedRing:
    def test_stride_must_be_positive(self, lq2: QExterior) -> None:
        with pytest.raises(DegreeMismatchError):
            TwistedRing(lq2.buchweitz(), lq2.nu, 0)

    def test_degree_off_the_stride(self, lq2: QExterior) -> None:
        odd = TwistedRing(lq2.buchweitz(), lq2.nu, 1).space(1).zero()
        with pytest.raises(DegreeMismatchError):
            nakayama_ring(lq2).index_of(odd)

    def test_module_valued_ring_has_no_unit(self, lq2: QExterior) -> None:
        module = build_module(lq2, 1, 1)
        ring = TwistedRing(minimal_resolution(module, 0), lq2.nu, 2, simple_module(lq2))
        assert not ring.is_algebra
        with pytest.raises(TwistMismatchError):
            ring.unit()


class TestRingSample:
    def test_dims(self, lq: QExterior) -> None:
        sample = ring_sample(nakayama_ring(lq), 4, with_products=False)
        assert sample.dims == [2, 0, 1, 0, 1]
        assert sample.table == {}

    def test_structure(self, lq2: QExterior) -> None:
        sample = ring_sample(nakayama_ring(lq2), 4)
        assert check_associativity(sample) == []
        assert check_unit(sample)
        for (m, i, n, j), coords in sample.table.items():
            assert np.array_equal(coords, sample.table[(n, j, m, i)])

    def test_outside_the_window(self, lq2: QExterior) -> None:
        sample = ring_sample(nakayama_ring(lq2), 2)
        with pytest.raises(DegreeMismatchError):
            sample.product_coords(2, 0, 2, 0)

    def test_elements_round_trip(self, lq2: QExterior) -> None:
        sample = ring_sample(nakayama_ring(lq2), 2, with_products=False)
        element = sample.element(2, [5])
        assert element.coords.tolist() == [5]
        assert element.space is theta(lq2, sample.ring).space
