import itertools
import math

import numpy as np
import pytest

from srmcmc import (KernelValidationError, LEnsemble, SpectralSampler,
                    SubsetState, dpp_log_weight, enumerate_distribution,
                    l_to_marginal, marginal_to_l, rbf_kernel, spectral_sample,
                    spectrum_step_kernel, validate_marginal_kernel)
from srmcmc.measures import NEG_INF


def S(indices, n):
    return SubsetState.from_indices(indices, n)


class TestKernelValidation:
    def test_zero_and_identity_valid(self):
        validate_marginal_kernel(np.zeros((3, 3)))
        validate_marginal_kernel(np.eye(3))

    def test_eigenvalue_above_one_rejected(self):
        with pytest.raises(KernelValidationError, match="1.5"):
            validate_marginal_kernel(np.diag([1.5, 0.5]))

    def test_asymmetric_rejected(self):
        M = np.array([[0.5, 0.1], [0.3, 0.5]])
        with pytest.raises(KernelValidationError, match="asymmetric"):
            validate_marginal_kernel(M)

    def test_l_ensemble_rejects_negative(self):
        with pytest.raises(KernelValidationError):
            LEnsemble(np.diag([1.0, -0.5]))


class TestConversions:
    def test_marginal_to_l_diag(self):
        assert np.allclose(marginal_to_l(np.diag([0.5, 0.5])).L, np.eye(2))
        assert np.allclose(marginal_to_l(np.zeros((2, 2))).L, 0.0)
        assert np.allclose(marginal_to_l(np.diag([2 / 3, 3 / 4])).L,
                           np.diag([2.0, 3.0]))

    def test_eigenvalue_one_is_elementary(self):
        with pytest.raises(KernelValidationError, match="elementary"):
            marginal_to_l(np.diag([1.0, 0.5]))

    def test_l_to_marginal_diag(self):
        assert np.allclose(l_to_marginal(np.diag([2.0, 3.0])),
                           np.diag([2 / 3, 3 / 4]))
        assert np.allclose(l_to_marginal(np.zeros((2, 2))), 0.0)

    def test_round_trip(self):
        rng = np.random.default_rng(7)
        A = rng.standard_normal((5, 5))
        K = validate_marginal_kernel(l_to_marginal(A @ A.T / 5))
        assert np.allclose(l_to_marginal(marginal_to_l(K)), K, atol=1e-8)

    def test_k00_matches_enumeration(self):
        L = np.array([[1.0, 0.5], [0.5, 1.0]])
        K = l_to_marginal(L)
        # brute force: sum det(L_S) over S containing 0, over all S
        num = 1.0 + (1.0 - 0.25)  # {0}, {0,1}
        den = 1.0 + 1.0 + 1.0 + 0.75  # {}, {0}, {1}, {0,1}
        assert K[0, 0] == pytest.approx(num / den, abs=1e-12)


class TestLogWeight:
    def test_empty_set(self):
        assert dpp_log_weight(np.diag([2.0, 3.0]), S([], 2)) == 0.0

    def test_diagonal(self):
        assert dpp_log_weight(np.diag([2.0, 3.0]), S([0, 1], 2)) == \
            pytest.approx(math.log(6.0))

    def test_two_by_two(self):
        L = np.array([[1.0, 0.5], [0.5, 1.0]])
        assert dpp_log_weight(L, S([0, 1], 2)) == pytest.approx(math.log(0.75))

    def test_singular_minor(self):
        L = np.ones((2, 2))
        assert dpp_log_weight(L, S([0, 1], 2)) == NEG_INF


class TestSchurRatios:
    def test_hand_two_by_two(self):
        m = LEnsemble(np.array([[1.0, 0.5], [0.5, 1.0]]))
        cache = m.make_cache(S([0], 2))
        assert cache.add_ratio(1) == pytest.approx(0.75)

    def test_diagonal_add_ratio(self):
        m = LEnsemble(np.diag([2.0, 3.0, 0.5]))
        cache = m.make_cache(S([0], 3))
        assert cache.add_ratio(1) == pytest.approx(3.0)
        assert cache.add_ratio(2) == pytest.approx(0.5)

    def test_exhaustive_sweep_matches_naive(self):
        rng = np.random.default_rng(11)
        A = rng.standard_normal((6, 6))
        m = LEnsemble(A @ A.T / 6)
        n = 6
        for mask in range(1 << n):
            st = SubsetState.from_bitmask(mask, n)
            if m.log_weight(st) == NEG_INF:
                continue
            cache = m.make_cache(st)
            inside = [int(i) for i in st.indices()]
            outside = [t for t in range(n) if not st.contains(t)]
            for t in outside:
                assert cache.add_ratio(t) == \
                    pytest.approx(m.add_ratio(st, t), rel=1e-8)
            for s_el in inside:
                assert cache.delete_ratio(s_el) == \
                    pytest.approx(m.delete_ratio(st, s_el), rel=1e-8)
                for t in outside:
                    assert cache.swap_ratio(s_el, t) == \
                        pytest.approx(m.swap_ratio(st, s_el, t), rel=1e-8)


class TestCholeskyCache:
    def test_add_then_delete_restores_log_det(self):
        rng = np.random.default_rng(3)
        A = rng.standard_normal((5, 5))
        m = LEnsemble(A @ A.T / 5)
        cache = m.make_cache(S([0, 2], 5))
        before = cache.log_det
        cache.apply_add(4)
        cache.apply_delete(4)
        assert cache.log_det == pytest.approx(before, abs=1e-9)

    def test_empty_cache(self):
        cache = LEnsemble(np.eye(3)).make_cache(S([], 3))
        assert cache.log_det == 0.0
        assert cache.chol.shape == (0, 0)

    def test_long_random_walk_drift(self):
        rng = np.random.default_rng(9)
        n = 40
        A = rng.standard_normal((n, n))
        m = LEnsemble(A @ A.T / n)
        cache = m.make_cache(S([], n))
        cur = set()
        accepted = 0
        while accepted < 10_000:
            if cur and rng.random() < 0.5:
                s_el = sorted(cur)[rng.integers(len(cur))]
                cache.apply_delete(s_el)
                cur.discard(s_el)
                accepted += 1
            else:
                cand = [t for t in range(n) if t not in cur]
                if not cand:
                    continue
                t = cand[rng.integers(len(cand))]
                if cache.add_ratio(t) > 1e-9:
                    cache.apply_add(t)
                    cur.add(t)
                    accepted += 1
        ref = dpp_log_weight(m.L, S(sorted(cur), n))
        assert cache.log_det == pytest.approx(ref, rel=1e-6)


class TestSpectralSampler:
    def test_zero_kernel_gives_empty(self, rng):
        st = spectral_sample(np.zeros((4, 4)), rng)
        assert st.cardinality == 0

    def test_diagonal_inclusion_probabilities(self, rng):
        sampler = SpectralSampler(np.diag([2.0, 3.0]))
        reps = 40_000
        counts = np.zeros(2)
        for _ in range(reps):
            counts[list(sampler.sample(rng).indices())] += 1
        est = counts / reps
        for i, p in enumerate([2 / 3, 3 / 4]):
            se = math.sqrt(p * (1 - p) / reps)
            assert abs(est[i] - p) < 3 * se + 1e-9

    def test_small_instance_distribution_tv(self, rng):
        A = np.random.default_rng(21).standard_normal((4, 4))
        m = LEnsemble(A @ A.T / 4)
        dist = enumerate_distribution(m)
        sampler = SpectralSampler(m)
        reps = 1_000_000
        counts = np.zeros(16)
        for _ in range(reps):
            counts[sampler.sample(rng).bitmask()] += 1
        tv = 0.5 * np.abs(counts / reps - dist.probs).sum()
        assert tv <= 0.005

    def test_expected_cardinality_matches_trace(self, rng):
        A = np.random.default_rng(5).standard_normal((8, 8))
        m = LEnsemble(A @ A.T / 8)
        target = np.trace(l_to_marginal(m))
        reps = 20_000
        cards = np.array([sampler_card for sampler_card in
                          (SpectralSampler(m).sample(rng).cardinality
                           for _ in range(reps))], dtype=float)
        se = cards.std(ddof=1) / math.sqrt(reps)
        assert abs(cards.mean() - target) < 3 * se


class TestKernelSynthesis:
    def test_rbf_single_point(self):
        m = rbf_kernel(np.zeros((1, 3)), 0.5)
        assert m.L.shape == (1, 1)
        assert m.L[0, 0] == pytest.approx(1.0, abs=1e-9)

    def test_rbf_rejects_bad_args(self):
        with pytest.raises(ValueError):
            rbf_kernel(np.zeros((2, 2)), 0.0)
        with pytest.raises(ValueError):
            rbf_kernel(np.zeros(3), 1.0)

    def test_spectrum_step_paper_configuration(self, rng):
        m = spectrum_step_kernel(200, 100, 500.0, 1.0 / 500.0, rng)
        evals = np.sort(np.linalg.eigvalsh(m.L))
        assert np.allclose(evals[:100], 1.0 / 500.0, atol=1e-6)
        assert np.allclose(evals[100:], 500.0, rtol=1e-6)

    def test_spectrum_step_degenerate_k(self, rng):
        m = spectrum_step_kernel(6, 0, 5.0, 0.25, rng)
        assert np.allclose(np.linalg.eigvalsh(m.L), 0.25, atol=1e-8)

    def test_generated_kernels_pass_validator(self, rng):
        pts = rng.random((20, 3))
        LEnsemble(rbf_kernel(pts, 0.5).L)
        LEnsemble(spectrum_step_kernel(10, 4, 8.0, 0.1, rng).L)


def test_eq4_marginals_vs_enumeration():
    """Pr(S subset T) = det(K_S) for singletons and pairs, via enumeration."""
    for n in (4, 6, 8):
        A = np.random.default_rng(100 + n).standard_normal((n, n))
        m = LEnsemble(A @ A.T / n)
        K = l_to_marginal(m)
        dist = enumerate_distribution(m)
        for size in (1, 2):
            for combo in itertools.combinations(range(n), size):
                want = sum(dist.probs[mask] for mask in range(1 << n)
                           if all(mask >> i & 1 for i in combo))
                got = np.linalg.det(K[np.ix_(combo, combo)])
                assert got == pytest.approx(want, abs=1e-8)
