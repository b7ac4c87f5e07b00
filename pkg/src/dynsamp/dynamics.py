"""Trajectories of source-driven linear systems.

Discrete model ``x_{n+1} = A x_n + w`` with ``w`` in a subspace ``W``, the
generalised recursion with a caller-supplied step map, and the continuous
model ``x'(t) = A x(t) + w`` for bounded ``A``.
"""

import csv
import math
import warnings
from collections import namedtuple
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import expm

from ._validation import check_operator, check_random_state, check_vector, frozen
from .exceptions import ConfigError, DimensionError, DivergentTrajectoryError
from .hilbert import (
    Subspace,
    adjoint,
    geometric_sum,
    identity,
    matrix_power,
    norm,
    project,
    resolvent_at_one,
    spectral_radius,
)
from .measurement import DataMatrix

DIVERGENCE_THRESHOLD = 1e150
SOURCE_IN_W_RTOL = 1e-10

StationaryMap = namedtuple("StationaryMap", "S S_adj")


@dataclass(frozen=True, eq=False)
class DiscreteSystem:
    A: np.ndarray
    W: Subspace
    w: np.ndarray
    x0: np.ndarray

    def __post_init__(self):
        A = check_operator(self.A, name="A")
        d = A.shape[0]
        if self.W.dim != d:
            raise DimensionError(f"W lives in dimension {self.W.dim}, A in {d}")
        w = check_vector(self.w, d, "w")
        x0 = check_vector(self.x0, d, "x0")
        if norm(project(self.W, w) - w) > SOURCE_IN_W_RTOL * norm(w):
            raise ValueError("source w does not lie in W")
        object.__setattr__(self, "A", frozen(A))
        object.__setattr__(self, "w", frozen(w))
        object.__setattr__(self, "x0", frozen(x0))

    @property
    def dim(self):
        return self.A.shape[0]

    def with_initial_state(self, x0):
        return DiscreteSystem(self.A, self.W, self.w, x0)

    def with_source(self, w):
        return DiscreteSystem(self.A, self.W, w, self.x0)


def stream_states(sys):
    """Infinite generator ``x_0, x_1, ...`` with a divergence guard."""
    x = np.array(sys.x0)
    n = 0
    while True:
        yield x
        x = sys.A @ x + sys.w
        n += 1
        nx = norm(x)
        if not np.isfinite(nx) or nx > DIVERGENCE_THRESHOLD:
            raise DivergentTrajectoryError(n, nx)


def iterate(sys, N):
    """States ``x_0 .. x_{N-1}`` by direct recursion, as rows of an array."""
    if N < 1:
        raise ValueError("N must be >= 1")
    states = np.empty((N, sys.dim), dtype=complex)
    for n, x in zip(range(N), stream_states(sys)):
        states[n] = x
    return states


def iterate_time_varying(A, x0, sources):
    """States of ``x_{n+1} = A x_n + w_n`` for ``n = 0 .. len(sources)-1``."""
    A = check_operator(A)
    x = check_vector(x0, A.shape[0], "x0")
    states = [x]
    for n, wn in enumerate(sources):
        x = A @ x + check_vector(wn, A.shape[0], "w_n")
        if norm(x) > DIVERGENCE_THRESHOLD:
            raise DivergentTrajectoryError(n + 1, norm(x))
        states.append(x)
    return np.array(states)


def closed_form(sys, n):
    """``A^n x_0 + (I - A^n)(I - A)^{-1} w``."""
    n = int(n)
    if n < 0:
        raise ValueError("n must be nonnegative")
    An = matrix_power(sys.A, n)
    inv = resolvent_at_one(sys.A)
    return An @ sys.x0 + (identity(sys.dim) - An) @ (inv @ sys.w)


def closed_form_geometric(sys, n):
    """``A^n x_0 + (I + A + ... + A^{n-1}) w``; valid even when 1 is in the spectrum."""
    return matrix_power(sys.A, n) @ sys.x0 + geometric_sum(sys.A, n) @ sys.w


def stationary_map(sys):
    """Stationary map ``S = (I - A)^{-1}`` on W and its adjoint ``P_W (I - A^*)^{-1}``.

    ``S`` is returned as an ambient matrix; only its action on W matters.
    Warns when ``rho(A) >= 1``: S exists but trajectories are not attracted.
    """
    rho = spectral_radius(sys.A)
    if rho >= 1:
        warnings.warn(f"spectral radius {rho:.4g} >= 1: stationary state is not attracting",
                      RuntimeWarning, stacklevel=2)
    inv = resolvent_at_one(sys.A)
    return StationaryMap(inv, sys.W.projector() @ adjoint(inv))


def sample(states, G):
    """Data matrix with entries ``<x_n, g_j>``."""
    states = np.atleast_2d(np.asarray(states, dtype=complex))
    if states.shape[1] != G.dim:
        raise DimensionError(f"states have dimension {states.shape[1]}, system {G.dim}")
    return DataMatrix(G.analysis(states))


def stream_samples(sys, G):
    if sys.dim != G.dim:
        raise DimensionError(f"system dimension {sys.dim} differs from sampling dimension {G.dim}")
    for x in stream_states(sys):
        yield G.analysis(x)


@dataclass(frozen=True, eq=False)
class GeneralSystem:
    """Linear recursion ``x_n = step(history, w)`` with stationary map ``S``.

    ``step`` receives the list of previous states and ``w``; ``stationary``
    maps ``w`` to its fixed state.  Stationarity and attraction are checked
    empirically on instances rather than assumed.
    """

    step: Callable
    stationary: Callable
    W: Subspace

    def trajectory(self, x0, w, N):
        history = [check_vector(x0, self.W.dim, "x0")]
        for _ in range(N - 1):
            history.append(check_vector(self.step(history, w), self.W.dim, "state"))
        return np.array(history)

    def stationarity_gap(self, w, n_check=20):
        """``max_n |x_n - S(w)| / |S(w)|`` starting from ``x_0 = S(w)``."""
        s = self.stationary(w)
        traj = self.trajectory(s, w, n_check)
        return float(np.max(np.linalg.norm(traj - s, axis=1)) / max(norm(s), np.finfo(float).tiny))

    def attraction_errors(self, x0, w, N):
        """``|x_n - S(w)|`` for ``n < N``."""
        return np.linalg.norm(self.trajectory(x0, w, N) - self.stationary(w), axis=1)

    @classmethod
    def from_discrete(cls, A, W):
        A = check_operator(A)
        inv = resolvent_at_one(A)
        return cls(step=lambda hist, w: A @ hist[-1] + w,
                   stationary=lambda w: inv @ w, W=W)


@dataclass(frozen=True, eq=False)
class ContinuousSystem:
    A: np.ndarray
    w: np.ndarray
    x0: np.ndarray
    t_grid: np.ndarray = field(default_factory=lambda: np.array([0.0]))

    def __post_init__(self):
        A = check_operator(self.A, name="A")
        d = A.shape[0]
        t = np.asarray(self.t_grid, dtype=float)
        if t.ndim != 1 or t.size == 0 or t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise ValueError("t_grid must start at 0 and be strictly increasing")
        object.__setattr__(self, "A", frozen(A))
        object.__setattr__(self, "w", frozen(check_vector(self.w, d, "w")))
        object.__setattr__(self, "x0", frozen(check_vector(self.x0, d, "x0")))
        object.__setattr__(self, "t_grid", frozen(t))


def continuous_state(A, x0, w, t):
    """``e^{tA} x0 + (int_0^t e^{sA} ds) w`` for any real ``t``.

    Uses the exponential of the augmented matrix ``[[A, w], [0, 0]]``, which
    needs no invertibility of ``A``.
    """
    A = np.asarray(A, dtype=complex)
    d = A.shape[0]
    M = np.zeros((d + 1, d + 1), dtype=complex)
    M[:d, :d] = A
    M[:d, d] = w
    E = expm(t * M)
    return E[:d, :d] @ x0 + E[:d, d]


def evolve_continuous(sys):
    """States ``x(t)`` on ``sys.t_grid`` as rows."""
    return np.array([continuous_state(sys.A, sys.x0, sys.w, t) for t in sys.t_grid])


def ode_residual(sys, states):
    """Max central-difference residual of ``x' - Ax - w`` on interior grid points."""
    t = sys.t_grid
    if t.size < 3:
        return 0.0
    deriv = (states[2:] - states[:-2]) / (t[2:] - t[:-2])[:, None]
    resid = deriv - states[1:-1] @ sys.A.T - sys.w
    return float(np.max(np.linalg.norm(resid, axis=1)))


# --- JSON system specs and trajectory CSV ----------------------------------

def complex_array(value, name="value"):
    """Parse nested lists of numbers or ``{"re": .., "im": ..}`` objects."""
    def walk(x):
        if isinstance(x, list):
            return [walk(y) for y in x]
        if isinstance(x, dict):
            return complex(float(x.get("re", 0.0)), float(x.get("im", 0.0)))
        if isinstance(x, (int, float)) and not isinstance(x, bool):
            return complex(x)
        raise ConfigError(f"{name}: cannot parse {x!r} as a complex number")

    try:
        return np.asarray(walk(value), dtype=complex)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from exc


def random_operator(rng, dim, rho):
    """Complex Gaussian matrix rescaled to spectral radius ``rho``."""
    Z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2 * dim)
    r = spectral_radius(Z)
    return Z * (rho / r)


def operator_from_dict(spec, dim, rng):
    kind = spec.get("kind")
    if kind == "diagonal":
        vals = complex_array(spec["values"], "A.values")
        if vals.shape != (dim,):
            raise ConfigError(f"A.values must have length {dim}")
        return np.diag(vals)
    if kind == "dense":
        M = complex_array(spec["entries"], "A.entries")
        if M.shape != (dim, dim):
            raise ConfigError(f"A.entries must be {dim}x{dim}")
        return M
    if kind == "random_contraction":
        rho = float(spec.get("rho", 0.5))
        if not 0 < rho < 1:
            raise ConfigError("A.rho must lie in (0, 1)")
        return random_operator(rng, dim, rho)
    if kind == "zero":
        return np.zeros((dim, dim), dtype=complex)
    if kind == "identity":
        return identity(dim)
    raise ConfigError(f"unknown operator kind {kind!r}")


def system_from_dict(spec, seed=None):
    """Build a :class:`DiscreteSystem` from its JSON description.

    Missing ``w`` or ``x0`` are drawn from the seeded generator (``w`` inside W);
    a missing ``W`` means the whole space.
    """
    try:
        dim = int(spec["dim"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError("system.dim is required and must be an integer") from exc
    if dim < 1:
        raise ConfigError("system.dim must be positive")
    rng = check_random_state(spec.get("seed", 0) if seed is None else seed)
    A = operator_from_dict(spec.get("A", {"kind": "zero"}), dim, rng)
    if "W" in spec and spec["W"] is not None:
        basis = complex_array(spec["W"]["basis"], "W.basis")
        if basis.ndim != 2 or basis.shape[1] != dim:
            raise ConfigError(f"W.basis must be a list of length-{dim} vectors")
        W = Subspace.from_vectors(basis)
    else:
        W = Subspace.full(dim)
    if "w" in spec:
        w = complex_array(spec["w"], "w")
    else:
        w = W.from_coordinates(rng.standard_normal(W.rank) + 1j * rng.standard_normal(W.rank))
    x0 = complex_array(spec["x0"], "x0") if "x0" in spec else \
        rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    try:
        return DiscreteSystem(A, W, w, x0)
    except (DimensionError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def write_trajectory_csv(states, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "k", "re", "im"])
        for n, x in enumerate(states):
            for k, z in enumerate(x):
                writer.writerow([n, k, f"{z.real:.17g}", f"{z.imag:.17g}"])


def read_trajectory_csv(path):
    recs = {}
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            recs[int(rec["n"]), int(rec["k"])] = complex(float(rec["re"]), float(rec["im"]))
    N = 1 + max(n for n, _ in recs)
    d = 1 + max(k for _, k in recs)
    out = np.zeros((N, d), dtype=complex)
    for (n, k), z in recs.items():
        out[n, k] = z
    return out
