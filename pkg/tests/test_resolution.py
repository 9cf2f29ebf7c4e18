import pytest

from twistcoh.core.linalg import dot, is_zero, rank_of
from twistcoh.services.modules import (
    IsomorphismFound,
    direct_sum,
    is_isomorphic,
    regular_bimodule,
    regular_module,
    syzygy,
    twist,
)
from twistcoh.services.qexterior import (
    ONE,
    X,
    Y,
    ExplicitComplex,
    QExterior,
    build_module,
    simple_module,
)
from twistcoh.services.resolution import (
    GrowthVerdict,
    ResolutionError,
    betti_lengths,
    betti_ranks,
    classify_growth,
    complexity,
    minimal_resolution,
    top_multiplicities,
    twisted_syzygy_track,
)


class TestMinimalResolution:
    @pytest.mark.parametrize("beta", [1, 2, -1])
    def test_quantum_module_ranks_and_differentials(self, lq: QExterior, beta: int) -> None:
        module = build_module(lq, 1, beta)
        res = minimal_resolution(module, 10)
        assert betti_ranks(res) == [1] * 11
        for n in range(1, 11):
            coefficient = res.differential(n)[0, 0]
            assert coefficient[ONE] == 0
            assert coefficient[X] != 0
            assert coefficient[Y] == coefficient[X] * lq.q**n * beta

    def test_projective_stops(self, lq: QExterior) -> None:
        res = minimal_resolution(regular_module(lq.algebra), 3)
        assert res.projective_dimension == 0
        assert betti_ranks(res) == [1, 0, 0, 0]

    def test_simple_module_ranks(self, lq: QExterior) -> None:
        res = minimal_resolution(simple_module(lq), 5)
        assert betti_ranks(res) == [1, 2, 3, 4, 5, 6]
        assert betti_lengths(res) == [4, 8, 12, 16, 20, 24]

    def test_quantum_module_lengths(self, lq: QExterior) -> None:
        res = minimal_resolution(build_module(lq, 1, 1), 4)
        assert betti_lengths(res) == [4] * 5

    def test_complex_exact_and_minimal(self, lq: QExterior) -> None:
        for module in (simple_module(lq), build_module(lq, 1, 3), build_module(lq, 0, 1)):
            minimal_resolution(module, 6).check(6, minimal=True)

    def test_rank_nullity(self, lq: QExterior) -> None:
        res = minimal_resolution(simple_module(lq), 5)
        field = lq.algebra.field
        for n in range(1, 6):
            image = dot(field, res.ambient_differential(n), res.projective_basis(n))
            assert rank_of(field, image) + res.syzygy(n + 1).dim == res.length(n)

    def test_syzygies_match_iterated_syzygy(self, lq: QExterior) -> None:
        module = build_module(lq, 1, 1)
        res = minimal_resolution(module, 2)
        iterated = syzygy(syzygy(module))
        assert isinstance(is_isomorphic(res.syzygy(2), iterated), IsomorphismFound)

    def test_extension_is_cached(self, lq: QExterior) -> None:
        module = build_module(lq, 1, 5)
        first = minimal_resolution(module, 2)
        second = minimal_resolution(module, 4)
        assert first is second
        assert second.computed_length >= 4

    def test_explicit_complex_agrees(self, lq: QExterior) -> None:
        explicit = ExplicitComplex(lq, 1, 2)
        explicit.check(6, minimal=True)

    def test_generic_bimodule_resolution_ranks(self, lq2: QExterior) -> None:
        res = minimal_resolution(regular_bimodule(lq2.algebra), 4)
        assert betti_ranks(res) == [1, 2, 3, 4, 5]


class TestGrowth:
    def test_classify(self) -> None:
        assert classify_growth([3, 0, 0, 0], 4) == (GrowthVerdict.EVENTUALLY_ZERO, 0)
        assert classify_growth([4, 4, 4, 4], 4) == (GrowthVerdict.BOUNDED, 1)
        linear = list(range(1, 9))
        assert classify_growth(linear, 8) == (GrowthVerdict.POLYNOMIAL_DEGREE, 2)
        assert classify_growth([n * n for n in range(1, 11)], 10) == (
            GrowthVerdict.POLYNOMIAL_DEGREE,
            3,
        )
        assert classify_growth([1, 2, 4, 8, 16, 32], 6)[0] == GrowthVerdict.INCONCLUSIVE

    def test_quantum_module_is_bounded(self, lq: QExterior) -> None:
        estimate = complexity(build_module(lq, 1, 2), t=2, window=6)
        assert estimate.verdict == GrowthVerdict.BOUNDED
        assert estimate.gamma == 1

    @pytest.mark.parametrize("t", [1, 2, 3])
    def test_projective_is_eventually_zero(self, lq: QExterior, t: int) -> None:
        estimate = complexity(regular_module(lq.algebra), t=t, window=6)
        assert estimate.verdict == GrowthVerdict.EVENTUALLY_ZERO
        assert estimate.gamma == 0

    def test_simple_module_grows_linearly(self, lq: QExterior) -> None:
        estimate = complexity(simple_module(lq), t=1, window=12)
        assert estimate.verdict == GrowthVerdict.POLYNOMIAL_DEGREE
        assert estimate.gamma == 2
        assert estimate.values[:3] == [4, 8, 12]

    def test_syzygy_invariance(self, lq: QExterior) -> None:
        for module, t in ((simple_module(lq), 1), (build_module(lq, 1, 3), 2)):
            before = complexity(module, t=t, window=8)
            shifted = minimal_resolution(module, t).syzygy(t)
            after = complexity(twist(shifted, lq.nu, 1), t=t, window=7)
            assert before.verdict == after.verdict
            assert before.gamma == after.gamma

    def test_direct_sum_takes_the_maximum(self, lq: QExterior) -> None:
        k, module = simple_module(lq), build_module(lq, 1, 1)
        total = complexity(direct_sum(k, module), t=1, window=8)
        parts = [complexity(m, t=1, window=8).gamma for m in (k, module)]
        assert total.gamma == max(g for g in parts if g is not None)

    def test_bad_window(self, lq: QExterior) -> None:
        with pytest.raises(ResolutionError):
            complexity(simple_module(lq), t=0)


class TestTwistedSyzygies:
    def test_first_entry_is_the_module(self, lq: QExterior) -> None:
        module = build_module(lq, 1, 1)
        track = twisted_syzygy_track(module, lq.nu, 2, 2)
        assert track[0].same_as(module)

    def test_tau_periodic(self, lq: QExterior) -> None:
        module = build_module(lq, 1, 2)
        track = twisted_syzygy_track(module, lq.nu, 2, 1)
        assert isinstance(is_isomorphic(module, track[1]), IsomorphismFound)

    def test_dimensions_match_untwisted(self, lq: QExterior) -> None:
        k = simple_module(lq)
        track = twisted_syzygy_track(k, lq.nu, 1, 4)
        res = minimal_resolution(k, 4)
        assert [m.dim for m in track] == [res.syzygy(n).dim for n in range(5)]

    def test_top_multiplicities(self, lq: QExterior) -> None:
        assert top_multiplicities(simple_module(lq), 1, 5) == [1, 2, 3, 4, 5]

    def test_twisted_resolution_stays_exact(self, lq: QExterior) -> None:
        res = minimal_resolution(build_module(lq, 1, 1), 4)
        view = res.twisted(lq.nu)
        view.check(4, minimal=True)
        assert is_zero(view.augmentation() - res.augmentation())
