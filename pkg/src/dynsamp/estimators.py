"""scikit-learn compatible wrappers around the reconstruction maps.

Each estimator is configured with the known dynamics ``A`` and sampling
family ``G``.  ``fit`` precomputes the dual frame and the linear map;
``transform`` sends data matrices (one ``(N, J)`` array or a stack of them)
to recovered sources, one row per input matrix.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_operator
from .exceptions import DimensionError
from .frames import VectorSystem, canonical_dual, coefficient_matrix, frame_bounds_on
from .hilbert import Subspace, operator_norm
from .measurement import DEFAULT_EPS, DataMatrix, limit_synthesis
from .recovery import general_form_blocks, infinite_horizon_dual, require_full_frame


def _as_system(G):
    return G if isinstance(G, VectorSystem) else VectorSystem(G)


def _as_stack(X, J, min_rows):
    X = np.asarray(X, dtype=complex)
    if X.ndim == 2:
        X = X[np.newaxis]
    if X.ndim != 3 or X.shape[2] != J:
        raise DimensionError(f"expected data of shape (n, N, {J}) or (N, {J}), got {X.shape}")
    if X.shape[1] < min_rows:
        raise DimensionError(f"each data matrix needs at least {min_rows} rows")
    if not np.all(np.isfinite(X)):
        raise ValueError("data contains NaN or Inf")
    return X


class _SourceRecoveryBase(TransformerMixin, BaseEstimator):
    def score(self, X, y):
        """Negative mean distance between recovered and true sources."""
        w_hat = self.transform(X)
        y = np.atleast_2d(np.asarray(y, dtype=complex))
        return -float(np.mean(np.linalg.norm(w_hat - y, axis=1)))


class FiniteSampleRecovery(_SourceRecoveryBase):
    """Bounded two-row reconstruction; ``G`` must be a frame for the whole space.

    Parameters
    ----------
    A : array of shape (d, d)
        Dynamic operator.
    G : VectorSystem or array of shape (J, d)
        Sampling vectors as rows.
    pair : int
        Index ``n`` of the row pair ``(n, n+1)`` used by ``transform``.

    Attributes
    ----------
    dual_ : VectorSystem
    coef_ : ndarray of shape (J, J)
        ``a_ij = <A^* g_j, gd_i>``.
    stability_constant_ : float
        Norm of the map w.r.t. the sum of row norms.
    """

    def __init__(self, A, G, pair=0):
        self.A = A
        self.G = G
        self.pair = pair

    def fit(self, X=None, y=None):
        G = _as_system(self.G)
        A = check_operator(self.A, G.dim, "A")
        self.frame_bounds_ = require_full_frame(G)
        self.dual_ = canonical_dual(G)
        self.coef_ = coefficient_matrix(A, G, self.dual_)
        self.blocks_ = general_form_blocks(A, G, self.dual_)
        self.stability_constant_ = max(operator_norm(B) for B in self.blocks_)
        self.n_features_in_ = len(G)
        return self

    def transform(self, X):
        check_is_fitted(self, "blocks_")
        X = _as_stack(X, self.n_features_in_, self.pair + 2)
        L0, L1 = self.blocks_
        return X[:, self.pair] @ L0.T + X[:, self.pair + 1] @ L1.T


class TimeVaryingRecovery(FiniteSampleRecovery):
    """Per-step sources; ``transform`` returns shape ``(n, N-1, d)``."""

    def transform(self, X):
        check_is_fitted(self, "blocks_")
        X = _as_stack(X, self.n_features_in_, 2)
        L0, L1 = self.blocks_
        return X[:, :-1] @ L0.T + X[:, 1:] @ L1.T


class InfiniteHorizonRecovery(_SourceRecoveryBase):
    """Limit of row syntheses against the dual of ``{P_W (I - A^*)^{-1} g_j}``.

    Parameters
    ----------
    A, G : as in :class:`FiniteSampleRecovery`; ``rho(A) < 1`` is expected.
    W : Subspace or None
        Source subspace (whole space if None).
    eps : float
        Tail tolerance for the row-convergence test.
    """

    def __init__(self, A, G, W=None, eps=DEFAULT_EPS):
        self.A = A
        self.G = G
        self.W = W
        self.eps = eps

    def fit(self, X=None, y=None):
        G = _as_system(self.G)
        A = check_operator(self.A, G.dim, "A")
        W = Subspace.full(G.dim) if self.W is None else self.W
        self.dual_ = infinite_horizon_dual(A, G, W)
        self.frame_bounds_ = frame_bounds_on(self.dual_, W)
        self.n_features_in_ = len(G)
        return self

    def transform(self, X):
        check_is_fitted(self, "dual_")
        X = _as_stack(X, self.n_features_in_, 2)
        return np.array([limit_synthesis(DataMatrix(D), self.dual_, self.eps) for D in X])
