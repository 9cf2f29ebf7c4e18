import pytest

from twistcoh.core.field import PrimeField, RationalField
from twistcoh.core.linalg import zeros
from twistcoh.services.algebra import validate_algebra
from twistcoh.services.ext import TwistedRing, class_equal
from twistcoh.services.qexterior import (
    LABELS,
    Y,
    YX,
    BadParamsError,
    QExterior,
    QExteriorError,
    QExteriorParams,
    ZeroPairError,
    build,
    build_module,
    g_class,
    gbar_lifting,
    h_maps,
    lookup,
    nakayama_ring,
    scalar_lifts,
    simple_module,
    skewed_automorphism,
    structure_constants,
    theta,
)
from twistcoh.services.resolution import betti_ranks, minimal_resolution


class TestParams:
    @pytest.mark.parametrize("q", ["0", "1", "-1", "abc", "1/0"])
    def test_rejected_over_rationals(self, q: str) -> None:
        with pytest.raises(BadParamsError):
            QExteriorParams.create(q, RationalField())

    @pytest.mark.parametrize(("q", "p"), [("3", 2), ("4", 5), ("3", 7)])
    def test_prime_fields_refused(self, q: str, p: int) -> None:
        with pytest.raises(BadParamsError):
            QExteriorParams.create(q, PrimeField(p))

    def test_default_field_is_rational(self) -> None:
        built = build(QExteriorParams.create("3"))
        assert built.params.field == RationalField()
        assert built.nu.matrix[Y, Y] == -3


class TestModules:
    def test_quantum_module(self, lq: QExterior) -> None:
        assert build_module(lq, 1, 2).dim == 2
        assert build_module(lq, 0, 1).dim == 2

    def test_zero_pair(self, lq: QExterior) -> None:
        with pytest.raises(ZeroPairError):
            build_module(lq, 0, 0)

    def test_simple_module(self, lq: QExterior) -> None:
        k = simple_module(lq)
        assert k.dim == 1
        assert k.name == "k"

    def test_skewed_automorphism(self, lq: QExterior) -> None:
        sigma = skewed_automorphism(lq)
        assert sigma.is_automorphism
        assert not sigma.is_identity


class TestLookup:
    def test_registered(self, lq: QExterior) -> None:
        assert lookup(lq.algebra) is lq

    def test_parsed_copy(self, lq: QExterior) -> None:
        copy = validate_algebra(
            "copy", RationalField(), LABELS, structure_constants(lq.params), [1, 0, 0, 0]
        )
        found = lookup(copy)
        assert found is not None
        assert found.q == lq.q

    def test_unrelated_algebra(self) -> None:
        k = validate_algebra("k", RationalField(), ("1",), [[[1]]], [1])
        assert lookup(k) is None


class TestBuchweitzComplex:
    def test_ranks(self, lq: QExterior) -> None:
        complex_ = lq.buchweitz()
        assert [complex_.rank(n) for n in range(6)] == [1, 2, 3, 4, 5, 6]
        assert complex_ is lq.buchweitz()

    def test_exact_and_minimal(self, lq: QExterior) -> None:
        lq.buchweitz().check(8, minimal=True)

    def test_matches_generic_resolution(self, lq2: QExterior) -> None:
        generic = minimal_resolution(lq2.bimodule, 4)
        assert betti_ranks(generic) == [lq2.buchweitz().rank(n) for n in range(5)]


class TestGClasses:
    def test_theta_spans(self, lq: QExterior) -> None:
        ring = nakayama_ring(lq)
        g = theta(lq, ring)
        assert not g.is_zero
        assert ring.space(2).dim == 1

    @pytest.mark.parametrize("m", [1, 2])
    def test_radical_center_annihilates(self, lq: QExterior, m: int) -> None:
        ring = nakayama_ring(lq)
        images = zeros((4, 1))
        images[YX, 0] = 1
        yx = ring.space(0).class_of(images)
        assert ring.product(yx, g_class(lq, ring, m)).is_zero

    @pytest.mark.parametrize("m", [2, 3])
    def test_powers_of_theta(self, lq: QExterior, m: int) -> None:
        ring = nakayama_ring(lq)
        expected = g_class(lq, ring, m).scaled(lq.q ** (2 * m * (m - 1)))
        assert class_equal(ring.power(theta(lq, ring), m), expected)

    def test_bad_index(self, lq2: QExterior) -> None:
        ring = nakayama_ring(lq2)
        with pytest.raises(QExteriorError):
            g_class(lq2, ring, 0)

    def test_off_stride(self, lq2: QExterior) -> None:
        ring = TwistedRing(lq2.buchweitz(), lq2.nu, 3)
        with pytest.raises(QExteriorError):
            g_class(lq2, ring, 1)


class TestExplicitLiftings:
    @pytest.mark.parametrize("m", [1, 2])
    def test_gbar_lifting(self, lq: QExterior, m: int) -> None:
        ring = nakayama_ring(lq)
        lifting = gbar_lifting(lq, ring, m)
        assert class_equal(lifting.composite, lifting.expected)
        assert class_equal(ring.product(theta(lq, ring), g_class(lq, ring, m)), lifting.composite)

    def test_gbar_needs_the_nakayama_ring(self, lq2: QExterior) -> None:
        ring = TwistedRing(lq2.buchweitz(), lq2.nu, 1)
        with pytest.raises(QExteriorError):
            gbar_lifting(lq2, ring, 1)

    @pytest.mark.parametrize("beta", [1, 2, -1])
    def test_comparison_maps(self, lq: QExterior, beta: int) -> None:
        lift = h_maps(lq, beta, 5)
        assert len(lift.maps) == 6

    @pytest.mark.parametrize("beta", [1, 2, -1])
    def test_scalar_lifts(self, lq: QExterior, beta: int) -> None:
        lift = scalar_lifts(lq, beta, 5)
        assert lift.shift == 4
        assert len(lift.maps) == 6
