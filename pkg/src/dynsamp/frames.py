"""Bessel sequences and frames of finitely many vectors.

A :class:`VectorSystem` stores its vectors as the rows of a ``(J, dim)``
array.  With the inner product linear in its first slot, the analysis
operator is ``v -> conj(G) @ v`` and the synthesis operator is
``c -> G.T @ c``.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import check_operator, check_rows, check_vector, frozen
from .exceptions import DimensionError, NotAFrameError
from .hilbert import Subspace, adjoint, resolvent_at_one

FRAME_RANK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class VectorSystem:
    vectors: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vectors", frozen(check_rows(self.vectors, name="vector system")))

    @classmethod
    def from_list(cls, vectors):
        return cls(np.array([check_vector(v, name="g_j") for v in vectors]))

    @classmethod
    def orthonormal_basis(cls, dim):
        return cls(np.eye(dim, dtype=complex))

    @property
    def dim(self):
        return self.vectors.shape[1]

    def __len__(self):
        return self.vectors.shape[0]

    def __getitem__(self, j):
        return self.vectors[j]

    def analysis(self, v):
        """``v -> (<v, g_j>)_j``; also accepts a stack of vectors as rows."""
        v = np.asarray(v, dtype=complex)
        return v @ self.vectors.conj().T

    def synthesis(self, c):
        """``c -> sum_j c_j g_j``; also accepts a stack of coefficient rows."""
        c = np.asarray(c, dtype=complex)
        return c @ self.vectors

    def frame_operator(self):
        """``S = sum_j g_j <., g_j>`` as a Hermitian ``(dim, dim)`` matrix."""
        G = self.vectors
        return G.T @ G.conj()

    def project(self, W):
        """Family ``{P_W g_j}``."""
        return VectorSystem(self.vectors @ W.projector().T)


@dataclass(frozen=True)
class FrameBounds:
    lower: float
    upper: float
    subspace_rank: int

    @property
    def is_frame(self):
        return self.upper > 0 and self.lower > FRAME_RANK_TOL * self.upper

    def as_dict(self):
        return {"lower": self.lower, "upper": self.upper, "subspace_rank": self.subspace_rank,
                "is_frame": self.is_frame}


def _hermitian_eigh(M):
    M = 0.5 * (M + adjoint(M))
    return np.linalg.eigh(M)


def bessel_bound(G):
    """Optimal Bessel bound: top eigenvalue of the frame operator."""
    vals, _ = _hermitian_eigh(G.frame_operator())
    return float(max(vals[-1], 0.0))


def top_bessel_vector(G):
    """Unit vector attaining the Bessel bound."""
    _, vecs = _hermitian_eigh(G.frame_operator())
    return vecs[:, -1]


def _restricted_frame_matrix(G, W):
    if G.dim != W.dim:
        raise DimensionError(f"system lives in dimension {G.dim}, subspace in {W.dim}")
    B = W.basis
    return adjoint(B) @ G.frame_operator() @ B


def frame_bounds_on(G, W=None):
    """Optimal bounds ``c, C`` with ``c|w|^2 <= sum_j |<w,g_j>|^2 <= C|w|^2`` on W.

    ``W=None`` means the whole space.  The vectors of ``G`` need not lie in W.
    """
    if W is None:
        W = Subspace.full(G.dim)
    if W.rank == 0:
        raise DimensionError("empty subspace")
    vals, _ = _hermitian_eigh(_restricted_frame_matrix(G, W))
    return FrameBounds(float(max(vals[0], 0.0)), float(max(vals[-1], 0.0)), W.rank)


def canonical_dual(G, W=None):
    """Canonical dual of ``G`` as a frame for ``W`` (default: whole space).

    The dual vectors lie in W and satisfy ``sum_j <w, g_j> gd_j = w`` for
    every ``w`` in W.  Only the frame operator compressed to W is inverted,
    so G does not have to be a frame for the ambient space.
    """
    if W is None:
        W = Subspace.full(G.dim)
    bounds = frame_bounds_on(G, W)
    if not bounds.is_frame:
        raise NotAFrameError("not a frame for W", bounds.lower, bounds.upper)
    B = W.basis
    K = _restricted_frame_matrix(G, W)
    # gd_j = B K^{-1} B^* g_j, stacked as rows
    coeffs = np.linalg.solve(K, adjoint(B) @ G.vectors.T)
    return VectorSystem((B @ coeffs).T)


def coefficient_matrix(A, G, Gdual):
    """Matrix ``a[i, j] = <A^* g_j, gd_i>``.

    When ``G`` is a frame for the whole space, ``A^* g_j = sum_i a_ij g_i``.
    """
    A = check_operator(A, G.dim)
    if Gdual.dim != G.dim or len(Gdual) != len(G):
        raise DimensionError("dual system shape does not match the system")
    AstarG = G.vectors @ A.conj()  # row j is A^* g_j
    return Gdual.vectors.conj() @ AstarG.T


def recoverability_system(A, G, W):
    """Family ``{P_W (I - A^*)^{-1} g_j}``, i.e. ``S^* g_j`` for the stationary map."""
    A = check_operator(A, G.dim)
    inv = resolvent_at_one(A)
    Sadj = W.projector() @ adjoint(inv)
    return VectorSystem(G.vectors @ Sadj.T)
