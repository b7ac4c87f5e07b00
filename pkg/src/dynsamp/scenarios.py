"""Executable constructions: the finite-sample impossibility instance, the
unbounded-recovery instance, and seeded random instances for testing.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import check_random_state
from .dynamics import DiscreteSystem, iterate, random_operator, sample
from .exceptions import IllConditionedError
from .frames import VectorSystem, frame_bounds_on, recoverability_system
from .hilbert import Subspace, geometric_sum, inner, matrix_power, norm, random_subspace, random_vector
from .measurement import DataMatrix
from .recovery import identifiability_gap, infinite_horizon_dual, recover_infinite, stacked_system

MAX_ADVERSARIAL_CONDITION = 1e12


@dataclass(frozen=True, eq=False)
class AdversarialInstance:
    """Diagonal system whose first ``N`` samples through one vector vanish.

    ``A = diag(lambdas_full)``, ``w_k = 2^{-k}``, ``g = (I - A) w``, and
    ``x0`` is supported on the first ``N`` coordinates.  The source is ``c*w``.
    """

    N: int
    lambdas: np.ndarray
    lambdas_full: np.ndarray
    d: int
    c: complex
    x0: np.ndarray
    w: np.ndarray
    g: np.ndarray
    coefficients: np.ndarray

    @property
    def A(self):
        return np.diag(self.lambdas_full).astype(complex)

    @property
    def W(self):
        return Subspace.span(self.w)

    @property
    def G(self):
        return VectorSystem(self.g[np.newaxis, :])

    def system(self):
        return DiscreteSystem(self.A, self.W, self.c * self.w, self.x0)


def default_lambdas(N):
    return np.arange(1, N + 1) / (N + 1)


def _tail_lambdas(lambdas, count):
    # distinct values below min(lambdas), so rho(A) = max(lambdas)
    lo = float(np.min(lambdas))
    return lo * np.arange(1, count + 1) / (count + 1)


def build_adversarial(N, lambdas=None, c=1.0, d=None):
    """Choose ``x0`` so that ``<x_n, g> = 0`` for ``n = 0 .. N-1``.

    Solves the ``N x (N+1)`` homogeneous system whose row ``n`` is
    ``(<A^n e_1, g>, .., <A^n e_N, g>, <Lambda_n w, g>)`` for ``(a_1..a_N)``
    with the last unknown fixed to ``c``; ``Lambda_n = I + .. + A^{n-1}``.
    """
    N = int(N)
    if N < 1:
        raise ValueError("N must be >= 1")
    lambdas = default_lambdas(N) if lambdas is None else np.asarray(lambdas, dtype=float)
    if lambdas.shape != (N,):
        raise ValueError(f"need exactly N={N} lambdas")
    if np.any(lambdas <= 0) or np.any(lambdas >= 1) or len(np.unique(lambdas)) != N:
        raise ValueError("lambdas must be distinct and lie in (0, 1)")
    if c == 0:
        raise ValueError("c must be nonzero")
    d = N + 1 if d is None else int(d)
    if d < N + 1:
        raise ValueError("ambient dimension must be at least N + 1")
    full = np.concatenate([lambdas, _tail_lambdas(lambdas, d - N)])
    A = np.diag(full).astype(complex)
    w = 2.0 ** -np.arange(1, d + 1) + 0j
    g = w - full * w
    M = np.empty((N, N + 1), dtype=complex)
    for n in range(N):
        An = matrix_power(A, n)
        M[n, :N] = [inner(An[:, i], g) for i in range(N)]
        M[n, N] = inner(geometric_sum(A, n) @ w, g)
    block = M[:, :N]
    kappa = float(np.linalg.cond(block))
    if not np.isfinite(kappa) or kappa > MAX_ADVERSARIAL_CONDITION:
        raise IllConditionedError("adversarial system is near-singular; use better separated lambdas",
                                  kappa)
    coeffs = np.linalg.solve(block, -c * M[:, N])
    x0 = np.zeros(d, dtype=complex)
    x0[:N] = coeffs
    return AdversarialInstance(N, lambdas, full, d, complex(c), x0, w, g, coeffs)


def verify_impossibility(inst, horizon=None, eps=1e-10):
    """Check that the first ``N`` samples carry no information about ``c*w``
    while the infinite-horizon reconstruction still finds it.
    """
    sys = inst.system()
    G = inst.G
    first = sample(iterate(sys, inst.N), G).rows[:, 0]
    zero_rows = sample(iterate(sys.with_initial_state(np.zeros(inst.d)).with_source(np.zeros(inst.d)),
                               inst.N), G).rows[:, 0]
    max_first = float(np.max(np.abs(first)))
    tol = 1e-10 * norm(inst.g)
    Mx, Mw = stacked_system(sys.A, G, sys.W, inst.N)
    gap = identifiability_gap(Mx, Mw)
    null_residual = norm(Mx @ inst.x0 + Mw @ (sys.W.coordinates(sys.w)))
    dual = infinite_horizon_dual(sys.A, G, sys.W)
    rho = float(np.max(inst.lambdas_full))
    if horizon is None:
        horizon = int(np.ceil(np.log(1e-14) / np.log(rho))) + inst.N
    report = recover_infinite(DataMatrix(sample(iterate(sys, horizon), G).rows), dual, eps,
                              w_true=inst.c * inst.w)
    return {
        "N": inst.N,
        "d": inst.d,
        "max_first_samples": max_first,
        "first_samples_vanish": bool(max_first < tol),
        "indistinguishable_from_zero_source": bool(np.allclose(first, zero_rows, atol=tol, rtol=0)),
        "restricted_min_singular_value": gap,
        "null_vector_residual": null_residual,
        "sample_after_horizon": float(abs(inner(iterate(sys, inst.N + 1)[-1], inst.g))),
        "infinite_horizon_residual": report.residual,
        "horizon": horizon,
        "recovered": bool(report.residual < 1e-7),
    }


def build_unstable(d):
    """``A = I``, ``g_j = e_j / j`` and the unbounded map ``R(D) = sum_j j (d_1j - d_0j) e_j``."""
    d = int(d)
    if d < 2:
        raise ValueError("d must be >= 2")
    A = np.eye(d, dtype=complex)
    j = np.arange(1, d + 1)
    G = VectorSystem(np.diag(1.0 / j).astype(complex))

    def recover(D):
        D = np.asarray(D, dtype=complex)
        return j * (D[1] - D[0])

    return A, G, recover


@dataclass(frozen=True, eq=False)
class RandomInstance:
    system: DiscreteSystem
    G: VectorSystem
    frame_condition: bool
    derived_lower: float
    full_frame: bool


def random_instance(seed, dim, J, rho_target, subspace_dim=None, complex_=True):
    """Seeded random system with ``rho(A) = rho_target`` and sampling family."""
    if not 0 < rho_target < 1:
        raise ValueError("rho_target must lie in (0, 1)")
    if J < 1:
        raise ValueError("J must be >= 1")
    subspace_dim = dim if subspace_dim is None else subspace_dim
    if not 1 <= subspace_dim <= dim:
        raise ValueError("subspace_dim must lie in [1, dim]")
    rng = check_random_state(seed)
    A = random_operator(rng, dim, rho_target)
    W = Subspace.full(dim) if subspace_dim == dim else random_subspace(rng, dim, subspace_dim)
    w = W.from_coordinates(random_vector(rng, subspace_dim, complex_))
    x0 = random_vector(rng, dim, complex_)
    G = VectorSystem(rng.standard_normal((J, dim)) + (1j * rng.standard_normal((J, dim)) if complex_ else 0))
    sys = DiscreteSystem(A, W, w, x0)
    derived = frame_bounds_on(recoverability_system(A, G, W), W)
    return RandomInstance(sys, G, derived.is_frame, derived.lower, frame_bounds_on(G).is_frame)
