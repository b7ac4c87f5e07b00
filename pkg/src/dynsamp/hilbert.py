"""Finite truncation of l^2: vectors, operators, subspaces and spectral tools.

Vectors are 1-D complex ndarrays and operators are square complex ndarrays.
The inner product is linear in the first argument::

    <u, v> = sum_k u_k * conj(v_k)
"""

from dataclasses import dataclass

import numpy as np

from ._validation import check_operator, check_vector, frozen
from .exceptions import DimensionError, EigenSolverError, IllConditionedError

DEFAULT_DIM = 64
RESOLVENT_MAX_CONDITION = 1e12
GRAM_SCHMIDT_DROP_TOL = 1e-12


def inner(u, v):
    """Sesquilinear inner product, linear in ``u``."""
    return np.vdot(v, u)


def norm(v):
    return float(np.linalg.norm(v))


def adjoint(A):
    return np.conj(np.transpose(A))


def identity(dim):
    return np.eye(dim, dtype=complex)


def basis_vector(dim, k):
    """Canonical unit vector e_k (0-based ``k``)."""
    e = np.zeros(dim, dtype=complex)
    e[k] = 1.0
    return e


@dataclass(frozen=True, eq=False)
class Subspace:
    """Subspace of C^dim stored through an orthonormal basis.

    ``basis`` has shape ``(dim, rank)``; columns are orthonormal.  Build it
    with :meth:`from_vectors`, :meth:`full` or :meth:`span` rather than the
    raw constructor, which trusts its input.
    """

    basis: np.ndarray

    @property
    def dim(self):
        return self.basis.shape[0]

    @property
    def rank(self):
        return self.basis.shape[1]

    @classmethod
    def from_vectors(cls, vectors, dim=None, drop_tol=GRAM_SCHMIDT_DROP_TOL):
        """Orthonormalise ``vectors`` (an iterable of 1-D arrays, or a 2-D
        array whose *rows* are the vectors) by modified Gram-Schmidt.

        A vector whose residual falls below ``drop_tol`` times the largest
        input norm is treated as dependent and dropped.  Each vector is
        orthogonalised twice, which keeps the Gram matrix at identity to
        roughly machine precision even for nearly parallel input.
        """
        vecs = [check_vector(v, dim, "subspace vector") for v in vectors]
        if not vecs:
            if dim is None:
                raise DimensionError("cannot infer the ambient dimension of an empty subspace")
            return cls(frozen(np.zeros((dim, 0), dtype=complex)))
        dim = vecs[0].shape[0]
        scale = max(np.linalg.norm(v) for v in vecs)
        basis = []
        for v in vecs:
            u = v.copy()
            for _ in range(2):
                for b in basis:
                    u = u - inner(u, b) * b
            r = np.linalg.norm(u)
            if scale == 0 or r <= drop_tol * scale:
                continue
            basis.append(u / r)
        mat = np.array(basis).T if basis else np.zeros((dim, 0), dtype=complex)
        return cls(frozen(mat.reshape(dim, len(basis))))

    @classmethod
    def full(cls, dim):
        return cls(frozen(identity(dim)))

    @classmethod
    def span(cls, *vectors):
        return cls.from_vectors(vectors)

    def projector(self):
        """Orthogonal projector P_W = B B^*."""
        return self.basis @ adjoint(self.basis)

    def contains(self, v, rtol=1e-10):
        v = check_vector(v, self.dim)
        return norm(project(self, v) - v) <= rtol * max(norm(v), np.finfo(float).tiny)

    def coordinates(self, v):
        """Coefficients of ``P_W v`` in the orthonormal basis."""
        return adjoint(self.basis) @ check_vector(v, self.dim)

    def from_coordinates(self, c):
        return self.basis @ check_vector(c, self.rank, "coordinates")


def project(W, v):
    """Orthogonal projection of ``v`` onto ``W``."""
    v = check_vector(v, W.dim)
    return W.basis @ (adjoint(W.basis) @ v)


def spectral_radius(A, name="A"):
    """Largest eigenvalue modulus of ``A``."""
    A = check_operator(A, name=name)
    try:
        eig = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"eigenvalue solver did not converge for operator {name!r}") from exc
    return float(np.max(np.abs(eig)))


def resolvent_at_one(A, return_condition=False, max_condition=RESOLVENT_MAX_CONDITION):
    """Return ``(I - A)^{-1}``.

    Refuses to invert when the 2-norm condition number of ``I - A`` exceeds
    ``max_condition``; that covers both 1 in the spectrum and near misses.
    """
    A = check_operator(A)
    M = identity(A.shape[0]) - A
    kappa = float(np.linalg.cond(M))
    if not np.isfinite(kappa) or kappa > max_condition:
        raise IllConditionedError("ill-conditioned resolvent: 1 is (nearly) in the spectrum", kappa)
    inv = np.linalg.inv(M)
    if return_condition:
        return inv, kappa
    return inv


def geometric_sum(A, n):
    """Return ``I + A + ... + A^{n-1}`` (the zero operator for ``n = 0``)."""
    A = check_operator(A)
    n = int(n)
    if n < 0:
        raise ValueError("n must be nonnegative")
    total = np.zeros_like(A)
    power = identity(A.shape[0])
    for _ in range(n):
        total += power
        power = power @ A
    return total


def matrix_power(A, n):
    return np.linalg.matrix_power(check_operator(A), int(n))


def operator_norm(A):
    """Spectral norm (largest singular value)."""
    return float(np.linalg.norm(np.asarray(A), 2))


def random_vector(rng, dim, complex_=True):
    v = rng.standard_normal(dim)
    if complex_:
        v = v + 1j * rng.standard_normal(dim)
    return v.astype(complex)


def random_subspace(rng, dim, rank):
    """Haar-ish random subspace via QR of a Gaussian matrix."""
    if not 0 <= rank <= dim:
        raise DimensionError(f"rank {rank} outside [0, {dim}]")
    if rank == 0:
        return Subspace(frozen(np.zeros((dim, 0), dtype=complex)))
    Z = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    Q, _ = np.linalg.qr(Z)
    return Subspace(frozen(Q))
