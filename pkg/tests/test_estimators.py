import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from conftest import random_system
from dynsamp.dynamics import iterate, sample
from dynsamp.estimators import FiniteSampleRecovery, InfiniteHorizonRecovery, TimeVaryingRecovery
from dynsamp.exceptions import DimensionError, NotAFrameError, RecoverabilityError
from dynsamp.recovery import recover_general_form


def batch(seed, n, N, **kw):
    sys0, G = random_system(seed, **kw)
    rng = np.random.default_rng(seed)
    X, Y = [], []
    for _ in range(n):
        w = sys0.W.from_coordinates(rng.standard_normal(sys0.W.rank) + 1j * rng.standard_normal(sys0.W.rank))
        sys = sys0.with_source(w).with_initial_state(rng.standard_normal(sys0.dim))
        X.append(sample(iterate(sys, N), G).rows)
        Y.append(w)
    return sys0, G, np.array(X), np.array(Y)


class TestFinite:
    def test_fit_transform(self):
        sys, G, X, Y = batch(0, 5, 3)
        est = FiniteSampleRecovery(sys.A, G).fit()
        np.testing.assert_allclose(est.fit_transform(X), Y, atol=1e-9)
        assert est.score(X, Y) > -1e-9
        assert est.n_features_in_ == len(G)

    def test_matches_functional(self):
        sys, G, X, _ = batch(1, 1, 2)
        est = FiniteSampleRecovery(sys.A, G).fit()
        rep = recover_general_form(X[0], sys.A, G)
        np.testing.assert_allclose(est.transform(X[0])[0], rep.w_hat)
        assert est.stability_constant_ == pytest.approx(rep.stability_constant)

    def test_pair_choice(self):
        sys, G, X, Y = batch(2, 3, 5)
        np.testing.assert_allclose(FiniteSampleRecovery(sys.A, G, pair=3).fit().transform(X), Y, atol=1e-9)
        with pytest.raises(DimensionError):
            FiniteSampleRecovery(sys.A, G, pair=4).fit().transform(X)

    def test_params_and_clone(self):
        sys, G, _, _ = batch(3, 1, 2)
        est = FiniteSampleRecovery(sys.A, G, pair=1)
        assert est.get_params()["pair"] == 1
        assert clone(est).set_params(pair=0).pair == 0

    def test_not_fitted(self):
        sys, G, X, _ = batch(4, 1, 2)
        with pytest.raises(NotFittedError):
            FiniteSampleRecovery(sys.A, G).transform(X)

    def test_not_a_frame(self):
        sys, G, _, _ = batch(5, 1, 2, J=3)
        with pytest.raises(NotAFrameError):
            FiniteSampleRecovery(sys.A, G).fit()

    def test_input_checks(self):
        sys, G, X, _ = batch(6, 1, 2)
        est = FiniteSampleRecovery(sys.A, G).fit()
        with pytest.raises(DimensionError):
            est.transform(X[:, :, :-1])
        bad = X.copy()
        bad[0, 0, 0] = np.nan
        with pytest.raises(ValueError):
            est.transform(bad)
        with pytest.raises(DimensionError):
            FiniteSampleRecovery(np.eye(2), G).fit()


def test_time_varying_shape():
    sys, G, X, Y = batch(7, 2, 4)
    out = TimeVaryingRecovery(sys.A, G).fit().transform(X)
    assert out.shape == (2, 3, sys.dim)
    np.testing.assert_allclose(out[:, 1], Y, atol=1e-9)


class TestInfinite:
    def test_recovers_on_subspace(self):
        sys, G, X, Y = batch(8, 3, 80, dim=8, J=3, rank=2)
        est = InfiniteHorizonRecovery(sys.A, G, sys.W).fit()
        np.testing.assert_allclose(est.transform(X), Y, atol=1e-7)
        assert est.frame_bounds_.is_frame

    def test_condition_failure(self):
        sys, G, _, _ = batch(9, 1, 2, dim=6, J=1, rank=3)
        with pytest.raises(RecoverabilityError):
            InfiniteHorizonRecovery(sys.A, G, sys.W).fit()
