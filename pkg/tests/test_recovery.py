import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import complex_gaussian, random_system
from dynsamp.dynamics import (
    DiscreteSystem,
    continuous_state,
    iterate,
    iterate_time_varying,
    sample,
    stationary_map,
    stream_samples,
)
from dynsamp.exceptions import DimensionError, NotAFrameError, RecoverabilityError
from dynsamp.frames import VectorSystem, canonical_dual, frame_bounds_on
from dynsamp.hilbert import Subspace
from dynsamp.measurement import DataMatrix, norm_finite
from dynsamp.recovery import (
    decay_rate,
    estimate_stability,
    explicit_linear_map,
    general_form_blocks,
    identifiability_gap,
    infinite_horizon_dual,
    least_squares_source,
    recover_continuous,
    recover_general_form,
    recover_infinite,
    recover_time_varying,
    recover_two_sample,
    stacked_system,
    top_singular_value,
)


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


class TestTwoSample:
    def test_zero_operator_orthonormal(self, rng):
        w, x0 = complex_gaussian(rng, 3), complex_gaussian(rng, 3)
        sys = DiscreteSystem(np.zeros((3, 3)), Subspace.full(3), w, x0)
        G = VectorSystem.orthonormal_basis(3)
        D = sample(iterate(sys, 2), G)
        rep = recover_two_sample(D.rows[0], D.rows[1], sys.A, G, w_true=w)
        np.testing.assert_allclose(rep.w_hat, w)

    @pytest.mark.parametrize("seed", range(5))
    def test_random_frame(self, seed):
        sys, G = random_system(seed, dim=8, J=16)
        D = sample(iterate(sys, 2), G)
        rep = recover_two_sample(D.rows[0], D.rows[1], sys.A, G, w_true=sys.w)
        assert rep.residual < 1e-9 * np.linalg.norm(sys.w)

    def test_initial_state_independence(self, rng):
        sys, G = random_system(9, dim=8, J=16)
        other = sys.with_initial_state(complex_gaussian(rng, 8))
        a = sample(iterate(sys, 2), G).rows
        b = sample(iterate(other, 2), G).rows
        wa = recover_two_sample(a[0], a[1], sys.A, G).w_hat
        wb = recover_two_sample(b[0], b[1], sys.A, G).w_hat
        assert np.linalg.norm(wa - wb) < 1e-10 * np.linalg.norm(wa)

    def test_requires_full_frame(self, rng):
        G = VectorSystem(complex_gaussian(rng, 2, 4))
        with pytest.raises(NotAFrameError, match="full-space frame"):
            recover_two_sample(np.zeros(2), np.zeros(2), np.zeros((4, 4)), G)

    def test_report_serialises(self):
        G = VectorSystem.orthonormal_basis(2)
        d = recover_two_sample([0, 0], [1j, 0], np.zeros((2, 2)), G).to_dict()
        assert d["w_hat"][0] == [0.0, 1.0]
        assert d["method"] == "two_sample"


class TestGeneralForm:
    def test_zero_data(self, rng):
        sys, G = random_system(1)
        rep = recover_general_form(np.zeros((3, len(G))), sys.A, G)
        np.testing.assert_array_equal(rep.w_hat, 0)

    def test_matches_two_sample(self):
        sys, G = random_system(2)
        D = sample(iterate(sys, 4), G)
        a = recover_general_form(D, sys.A, G).w_hat
        b = recover_two_sample(D.rows[0], D.rows[1], sys.A, G).w_hat
        np.testing.assert_allclose(a, b, atol=1e-12)

    @pytest.mark.parametrize("seed", range(4))
    def test_stability_estimate(self, seed):
        sys, G = random_system(seed)
        rng = np.random.default_rng(100 + seed)
        D = sample(iterate(sys, 2), G)
        delta = DataMatrix(1e-3 * complex_gaussian(rng, 2, len(G)))
        clean = recover_general_form(D, sys.A, G)
        noisy = recover_general_form(D + delta, sys.A, G)
        assert np.linalg.norm(noisy.w_hat - clean.w_hat) <= clean.stability_constant * norm_finite(delta)

    def test_constant_is_exact_norm(self):
        sys, G = random_system(3, dim=4, J=7)
        R = lambda D: recover_general_form(D, sys.A, G).w_hat
        rep = recover_general_form(np.zeros((2, 7)), sys.A, G)
        assert estimate_stability(R, (2, 7)) == pytest.approx(rep.stability_constant, rel=1e-9)

    def test_average_pairs(self):
        sys, G = random_system(4)
        D = sample(iterate(sys, 6), G)
        rep = recover_general_form(D, sys.A, G, w_true=sys.w, average_pairs=True)
        assert rep.residual < 1e-9
        assert rep.extra["average_pairs"]

    def test_shape_checks(self):
        sys, G = random_system(5)
        with pytest.raises(DimensionError):
            recover_general_form(np.zeros((1, len(G))), sys.A, G)
        with pytest.raises(DimensionError):
            recover_general_form(np.zeros((2, len(G) + 1)), sys.A, G)

    def test_blocks_reproduce_map(self, rng):
        sys, G = random_system(6)
        L0, L1 = general_form_blocks(sys.A, G, canonical_dual(G))
        D = complex_gaussian(rng, 2, len(G))
        np.testing.assert_allclose(L0 @ D[0] + L1 @ D[1], recover_general_form(D, sys.A, G).w_hat)


class TestInfinite:
    def test_stationary_start(self):
        sys, G = random_system(0, dim=6, J=3, rank=2)
        s = stationary_map(sys).S @ sys.w
        D = sample(iterate(sys.with_initial_state(s), 20), G)
        rep = recover_infinite(D, infinite_horizon_dual(sys.A, G, sys.W), w_true=sys.w)
        assert max(rep.trace) < 1e-9
        assert rep.residual < 1e-9

    @pytest.mark.parametrize("J", [1, 2, 3])
    def test_random_few_vectors(self, J):
        rho = 0.5
        sys, G = random_system(J, dim=8, J=J, rank=J, rho=rho)
        assert frame_bounds_on(infinite_horizon_dual(sys.A, G, sys.W), sys.W).is_frame
        n_max = math.ceil(40 / -math.log10(rho))
        D = sample(iterate(sys, n_max), G)
        rep = recover_infinite(D, infinite_horizon_dual(sys.A, G, sys.W), w_true=sys.w, W=sys.W)
        assert rep.converged
        assert rep.residual < 1e-7
        assert rep.w_coords.shape == (J,)

    def test_from_stream(self):
        sys, G = random_system(11, dim=8, J=4, rank=4)
        dual = infinite_horizon_dual(sys.A, G, sys.W)
        rep = recover_infinite(stream_samples(sys, G), dual, w_true=sys.w)
        assert rep.residual < 1e-7
        assert rep.extra["rows_used"] < 10_000

    def test_recoverability_failure(self):
        sys, G = random_system(12, dim=6, J=1, rank=3)
        with pytest.raises(RecoverabilityError):
            infinite_horizon_dual(sys.A, G, sys.W)

    def test_decay_rate(self):
        assert decay_rate(0.3 ** np.arange(40)) == pytest.approx(0.3)
        assert math.isnan(decay_rate([1.0, 0.5]))


class TestTimeVarying:
    def _run(self, sources, seed=3):
        sys, G = random_system(seed)
        X = iterate_time_varying(sys.A, sys.x0, sources)
        D = sample(X, G)
        return sys, G, D, recover_time_varying(D, sys.A, G, w_true=sources)

    def test_constant_reduces_to_two_sample(self):
        sys, G = random_system(3)
        D = sample(iterate(sys, 5), G)
        reps = recover_time_varying(D, sys.A, G)
        ref = recover_two_sample(D.rows[0], D.rows[1], sys.A, G).w_hat
        for r in reps:
            np.testing.assert_allclose(r.w_hat, ref, atol=1e-10)

    def test_linear_schedule(self):
        w = random_system(3)[0].w
        _, _, _, reps = self._run([n * w for n in range(6)])
        assert max(r.residual for r in reps) < 1e-9

    def test_alternating_signs(self):
        w = random_system(3)[0].w
        sources = [(-1) ** n * w for n in range(6)]
        _, _, _, reps = self._run(sources)
        signs = [np.sign(np.real(np.vdot(w, r.w_hat))) for r in reps]
        assert signs == [(-1) ** n for n in range(6)]
        assert max(r.residual for r in reps) < 1e-9


def _curve(sys, G, t):
    return G.analysis(np.array([continuous_state(sys.A, sys.x0, sys.w, ti) for ti in t]))


class TestContinuous:
    def test_zero_operator_linear_curve(self, rng):
        sys, G = random_system(0)
        sys = DiscreteSystem(np.zeros_like(sys.A), sys.W, sys.w, sys.x0)
        t = np.array([0.0, 0.1])
        rep = recover_continuous(t, _curve(sys, G, t), sys.A, G, w_true=sys.w)
        assert rep.residual < 1e-9
        assert rep.extra["scheme"] == "forward"

    def test_forward_is_first_order(self):
        rng = np.random.default_rng(0)
        A = np.diag(-rng.uniform(0.5, 2.0, 4)).astype(complex)
        sys, G = random_system(0, dim=4)
        sys = DiscreteSystem(A, sys.W, sys.w, sys.x0)
        errs = []
        for h in (1e-3, 5e-4):
            t = np.array([0.0, h])
            errs.append(recover_continuous(t, _curve(sys, G, t), A, G, w_true=sys.w).residual)
        assert errs[0] / errs[1] == pytest.approx(2.0, abs=0.2)

    @pytest.mark.parametrize("scheme", ["central", "three_point"])
    def test_second_order(self, scheme):
        sys, G = random_system(1, dim=4)
        errs = []
        for h in (1e-2, 5e-3):
            t = np.array([-h, 0.0, h]) if scheme == "central" else np.array([0.0, h, 2 * h])
            rep = recover_continuous(t, _curve(sys, G, t), sys.A, G, scheme=scheme, w_true=sys.w)
            assert rep.extra["order"] == 2
            errs.append(rep.residual)
        assert errs[0] / errs[1] == pytest.approx(4.0, abs=0.5)

    def test_grid_errors(self):
        sys, G = random_system(1, dim=3)
        curve = np.zeros((2, len(G)))
        with pytest.raises(ValueError, match="contain 0"):
            recover_continuous([0.1, 0.2], curve, sys.A, G)
        with pytest.raises(ValueError, match="-h"):
            recover_continuous([0.0, 0.1], curve, sys.A, G, scheme="central")
        with pytest.raises(ValueError, match="unknown scheme"):
            recover_continuous([0.0, 0.1], curve, sys.A, G, scheme="bogus")


class TestStability:
    def test_orthonormal_zero_operator(self):
        G = VectorSystem.orthonormal_basis(3)
        R = lambda D: recover_general_form(D, np.zeros((3, 3)), G).w_hat
        L = explicit_linear_map(R, (2, 3))
        # exact SVD oracle on the row-1 block
        assert np.linalg.svd(L[:, 3:], compute_uv=False)[0] == pytest.approx(1.0)
        est = estimate_stability(R, (2, 3))
        assert est == pytest.approx(1.0)
        assert estimate_stability(R, (2, 3), data_norm="frobenius") <= math.sqrt(2) + 1e-12

    def test_unknown_norm(self):
        with pytest.raises(ValueError):
            estimate_stability(lambda D: D[0], (2, 2), data_norm="bogus")

    def test_top_singular_value_matches_svd(self, rng):
        M = complex_gaussian(rng, 6, 5)
        assert top_singular_value(M) == pytest.approx(np.linalg.svd(M, compute_uv=False)[0], rel=1e-10)
        assert top_singular_value(np.zeros((3, 3))) == 0.0

    def test_explicit_map_of_linear_function(self, rng):
        M = complex_gaussian(rng, 3, 4)
        L = explicit_linear_map(lambda D: M @ D.reshape(-1), (2, 2))
        np.testing.assert_allclose(L, M)


class TestOracle:
    @pytest.mark.parametrize("seed", range(5))
    def test_two_sample_agrees_with_least_squares(self, seed):
        sys, G = random_system(seed)
        D = sample(iterate(sys, 2), G)
        np.testing.assert_allclose(least_squares_source(D, sys.A, G),
                                   recover_general_form(D, sys.A, G).w_hat, atol=1e-9)

    @pytest.mark.parametrize("seed", range(3))
    def test_infinite_agrees_with_least_squares(self, seed):
        sys, G = random_system(seed, dim=8, J=3, rank=2)
        D = sample(iterate(sys, 60), G)
        a = least_squares_source(D, sys.A, G, sys.W)
        b = recover_infinite(D, infinite_horizon_dual(sys.A, G, sys.W)).w_hat
        assert np.linalg.norm(a - b) < 1e-8 * np.linalg.norm(b)

    def test_stacked_rows(self):
        sys, G = random_system(4, dim=4, rank=2)
        Mx, Mw = stacked_system(sys.A, G, sys.W, 3)
        D = sample(iterate(sys, 3), G)
        np.testing.assert_allclose(Mx @ sys.x0 + Mw @ sys.W.coordinates(sys.w), D.rows.reshape(-1),
                                   atol=1e-12)

    def test_gap_positive_when_identifiable(self):
        sys, G = random_system(5, dim=4)
        assert identifiability_gap(*stacked_system(sys.A, G, sys.W, 2)) > 1e-3

    def test_gap_zero_for_single_row(self):
        sys, G = random_system(5, dim=4)
        assert identifiability_gap(*stacked_system(sys.A, G, sys.W, 1)) < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 6))
def test_recovery_is_linear(seed, d):
    sys, G = random_system(seed, dim=d)
    rng = np.random.default_rng(seed)
    D1, D2 = complex_gaussian(rng, 2, len(G)), complex_gaussian(rng, 2, len(G))
    a = complex(*rng.standard_normal(2))
    R = lambda D: recover_general_form(D, sys.A, G).w_hat
    np.testing.assert_allclose(R(a * D1 + D2), a * R(D1) + R(D2), atol=1e-8 * (1 + np.abs(R(D1)).max()))
