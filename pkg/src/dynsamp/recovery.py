"""Reconstruction of the source term from space-time samples.

All reconstruction maps are linear in the data.  With ``G`` a frame for the
whole space, dual ``Gd`` and ``a_ij = <A^* g_j, gd_i>``, two consecutive
sample rows determine the source::

    w = sum_j ( <x_{n+1}, g_j> - sum_i conj(a_ij) <x_n, g_i> ) gd_j

When only a subspace W is targeted and ``rho(A) < 1``, the source is the
limit of the row syntheses against the dual of ``{P_W (I - A^*)^{-1} g_j}``.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_operator, check_positive, check_random_state, check_rows, check_vector
from .exceptions import DimensionError, NotAFrameError, RecoverabilityError
from .frames import (
    bessel_bound,
    canonical_dual,
    coefficient_matrix,
    frame_bounds_on,
    recoverability_system,
)
from .hilbert import Subspace, identity, norm, operator_norm
from .measurement import DEFAULT_EPS, DataMatrix, is_strong, limit_synthesis, partial_syntheses

METHODS = ("two_sample", "general_form", "infinite_horizon", "time_varying", "continuous")


@dataclass
class RecoveryReport:
    method: str
    w_hat: np.ndarray
    residual: float
    stability_constant: float
    trace: list = field(default_factory=list)
    converged: bool = True
    w_coords: np.ndarray = None
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        out = {
            "method": self.method,
            "w_hat": [[float(z.real), float(z.imag)] for z in self.w_hat],
            "residual": float(self.residual),
            "stability_constant": float(self.stability_constant),
            "trace": [float(t) for t in self.trace],
            "converged": bool(self.converged),
        }
        if self.w_coords is not None:
            out["w_coords"] = [[float(z.real), float(z.imag)] for z in self.w_coords]
        out.update(self.extra)
        return out


def _residual(w_hat, w_true, fallback):
    if w_true is None:
        return float(fallback)
    return norm(w_hat - check_vector(w_true, w_hat.shape[0], "w_true"))


def require_full_frame(G):
    bounds = frame_bounds_on(G)
    if not bounds.is_frame:
        raise NotAFrameError("full-space frame required for finite-sample recovery",
                             bounds.lower, bounds.upper)
    return bounds


def _dual_or_default(G, Gdual):
    if Gdual is None:
        require_full_frame(G)
        return canonical_dual(G)
    if len(Gdual) != len(G) or Gdual.dim != G.dim:
        raise DimensionError("dual system shape does not match the sampling system")
    return Gdual


def _pair_coefficients(row0, row1, a):
    # c_j = row1_j - sum_i conj(a_ij) row0_i
    return row1 - a.conj().T @ row0


def recover_two_sample(row0, row1, A, G, Gdual=None, w_true=None):
    """Source from the samples of two consecutive states."""
    require_full_frame(G)
    Gdual = _dual_or_default(G, Gdual)
    J = len(G)
    row0 = check_vector(row0, J, "row0")
    row1 = check_vector(row1, J, "row1")
    a = coefficient_matrix(A, G, Gdual)
    c = _pair_coefficients(row0, row1, a)
    w_hat = Gdual.synthesis(c)
    consistency = norm(G.analysis(w_hat) - c)
    L0, L1 = general_form_blocks(A, G, Gdual)
    return RecoveryReport("two_sample", w_hat, _residual(w_hat, w_true, consistency),
                          max(operator_norm(L0), operator_norm(L1)))


def general_form_blocks(A, G, Gdual):
    """Matrices ``L0, L1`` with ``R(D) = L0 d_0 + L1 d_1`` for the general-form map.

    ``R(D) = sum_j (d_1j - <A u, g_j>) gd_j`` with ``u = sum_k d_0k gd_k``.
    """
    A = check_operator(A, G.dim)
    synth = Gdual.vectors.T                 # coefficients -> vector
    L1 = synth
    L0 = -synth @ G.vectors.conj() @ A @ synth
    return L0, L1


def recover_general_form(D, A, G, Gdual=None, w_true=None, average_pairs=False):
    """Apply the bounded two-row reconstruction map to a raw data matrix.

    Rows need not come from a trajectory.  The reported stability constant
    ``C = max(|L0|, |L1|)`` is the exact norm of the map with respect to the
    sum-of-row-norms norm, so ``|R(D)| <= C * norm_finite(D)``.

    ``average_pairs`` (off by default) averages the estimates over every
    consecutive row pair; it is a convenience for noisy data only.
    """
    require_full_frame(G)
    Gdual = _dual_or_default(G, Gdual)
    if not isinstance(D, DataMatrix):
        D = DataMatrix(D)
    if D.row_count < 2:
        raise DimensionError("general-form recovery needs at least two rows")
    if D.col_count != len(G):
        raise DimensionError(f"data has {D.col_count} columns, system has {len(G)} vectors")
    L0, L1 = general_form_blocks(A, G, Gdual)
    rows = D.rows
    if average_pairs:
        w_hat = np.mean([L0 @ rows[n] + L1 @ rows[n + 1] for n in range(D.row_count - 1)], axis=0)
    else:
        w_hat = L0 @ rows[0] + L1 @ rows[1]
    C = max(operator_norm(L0), operator_norm(L1))
    return RecoveryReport("general_form", w_hat, _residual(w_hat, w_true, 0.0), C,
                          extra={"average_pairs": bool(average_pairs)})


def infinite_horizon_dual(A, G, W):
    """Canonical dual on W of ``{P_W (I - A^*)^{-1} g_j}``.

    Raises :class:`RecoverabilityError` when that family is not a frame for W.
    """
    H = recoverability_system(A, G, W)
    bounds = frame_bounds_on(H, W)
    if not bounds.is_frame:
        raise RecoverabilityError(
            "recoverability condition fails: {P_W (I - A^*)^{-1} g_j} is not a frame for W",
            bounds.lower, bounds.upper)
    return canonical_dual(H, W)


def decay_rate(trace, floor=1e-11, skip=0.2):
    """Geometric decay rate of a trace by a log-linear least-squares fit.

    Uses entries after the first ``skip`` fraction and above
    ``floor * max(trace)``; returns NaN if fewer than three remain.
    """
    t = np.asarray(trace, dtype=float)
    if t.size < 3:
        return float("nan")
    idx = np.arange(t.size)
    keep = (idx >= int(skip * t.size)) & (t > floor * t.max())
    if keep.sum() < 3:
        return float("nan")
    slope = np.polyfit(idx[keep], np.log(t[keep]), 1)[0]
    return float(np.exp(slope))


def recover_infinite(D, dual, eps=DEFAULT_EPS, w_true=None, W=None, n_max=10_000):
    """Limit of the row syntheses of ``D`` against ``dual``.

    ``D`` is a :class:`DataMatrix` or an iterator of rows (consumed until
    the tail test passes or ``n_max`` rows).  ``trace[n]`` is the distance
    of the ``n``-th partial synthesis from the final estimate.
    """
    eps = check_positive(eps, "eps")
    if not isinstance(D, DataMatrix):
        D = DataMatrix.collect(iter(D), n_max=n_max, eps=eps)
    w_hat = limit_synthesis(D, dual, eps)
    partials = partial_syntheses(D, dual)
    trace = np.linalg.norm(partials - w_hat, axis=1).tolist()
    test = is_strong(D, eps)
    report = RecoveryReport(
        "infinite_horizon", w_hat, _residual(w_hat, w_true, test.tail_gap),
        float(np.sqrt(bessel_bound(dual))), trace, bool(test.is_strong),
        extra={"rows_used": D.row_count, "decay_rate": decay_rate(trace), "tail_gap": test.tail_gap},
    )
    if W is not None:
        report.w_coords = W.coordinates(w_hat)
    return report


def recover_time_varying(D, A, G, Gdual=None, w_true=None):
    """Per-step sources ``w_n`` of ``x_{n+1} = A x_n + w_n``, ``n = 0 .. N-2``."""
    require_full_frame(G)
    Gdual = _dual_or_default(G, Gdual)
    rows = D.rows if isinstance(D, DataMatrix) else check_rows(D, len(G), "data", min_rows=2)
    if rows.shape[0] < 2:
        raise DimensionError("time-varying recovery needs at least two rows")
    a = coefficient_matrix(A, G, Gdual)
    L0, L1 = general_form_blocks(A, G, Gdual)
    C = max(operator_norm(L0), operator_norm(L1))
    reports = []
    for n in range(rows.shape[0] - 1):
        c = _pair_coefficients(rows[n], rows[n + 1], a)
        w_hat = Gdual.synthesis(c)
        truth = None if w_true is None else w_true[n]
        reports.append(RecoveryReport("time_varying", w_hat,
                                      _residual(w_hat, truth, norm(G.analysis(w_hat) - c)), C,
                                      extra={"step": n}))
    return reports


def _find_time(t_grid, t, tol=1e-12):
    hits = np.flatnonzero(np.abs(t_grid - t) <= tol * max(1.0, abs(t)))
    return int(hits[0]) if hits.size else None


def recover_continuous(t_grid, curve, A, G, Gdual=None, h=None, scheme="auto", w_true=None):
    """Source of ``x' = Ax + w`` from sampled observation curves.

    ``curve[k]`` holds ``(<x(t_k), g_j>)_j``.  The derivative at 0 is a
    difference quotient with step ``h``:

    * ``"central"``: ``(D(h) - D(-h)) / 2h``, second order, needs ``-h``;
    * ``"three_point"``: ``(-3D(0) + 4D(h) - D(2h)) / 2h``, second order;
    * ``"forward"``: ``(D(h) - D(0)) / h``, first order.

    ``"auto"`` picks the first of those the grid supports.
    """
    require_full_frame(G)
    Gdual = _dual_or_default(G, Gdual)
    t_grid = np.asarray(t_grid, dtype=float)
    curve = check_rows(curve, len(G), "curve")
    if curve.shape[0] != t_grid.size:
        raise DimensionError("curve and t_grid lengths differ")
    i0 = _find_time(t_grid, 0.0)
    if i0 is None:
        raise ValueError("t_grid must contain 0")
    if h is None:
        later = t_grid[t_grid > 0]
        if later.size == 0:
            raise ValueError("t_grid has no point after 0")
        h = float(later.min())
    if h <= 0:
        raise ValueError("h must be positive")
    ip, im, i2 = _find_time(t_grid, h), _find_time(t_grid, -h), _find_time(t_grid, 2 * h)
    if ip is None:
        raise ValueError(f"t_grid is missing the point h={h}")
    if scheme == "auto":
        scheme = "central" if im is not None else "three_point" if i2 is not None else "forward"
    if scheme == "central":
        if im is None:
            raise ValueError(f"central differences need the point -h={-h}")
        weights, order = {ip: 1 / (2 * h), im: -1 / (2 * h)}, 2
    elif scheme == "three_point":
        if i2 is None:
            raise ValueError(f"three-point differences need the point 2h={2 * h}")
        weights, order = {i0: -3 / (2 * h), ip: 4 / (2 * h), i2: -1 / (2 * h)}, 2
    elif scheme == "forward":
        weights, order = {ip: 1 / h, i0: -1 / h}, 1
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    deriv = sum(wk * curve[k] for k, wk in weights.items())
    a = coefficient_matrix(A, G, Gdual)
    c = _pair_coefficients(curve[i0], deriv, a)
    w_hat = Gdual.synthesis(c)
    # exact norm of the map (curve rows used) -> w_hat, per sampled time
    synth = Gdual.vectors.T
    J = len(G)
    blocks = {k: wk * identity(J) for k, wk in weights.items()}
    blocks[i0] = blocks.get(i0, np.zeros((J, J), dtype=complex)) - a.conj().T
    C = max(operator_norm(synth @ B) for B in blocks.values())
    return RecoveryReport("continuous", w_hat, _residual(w_hat, w_true, norm(G.analysis(w_hat) - c)),
                          C, extra={"scheme": scheme, "h": h, "order": order})


# --- stability of linear recovery maps ---------------------------------------

def top_singular_value(M, v0=None, tol=1e-15, maxiter=100_000):
    """Largest singular value of ``M`` by power iteration on ``M^* M``."""
    M = np.asarray(M, dtype=complex)
    n = M.shape[1]
    v = np.ones(n, dtype=complex) if v0 is None else np.asarray(v0, dtype=complex).copy()
    if not np.any(v):
        v = np.ones(n, dtype=complex)
    v /= np.linalg.norm(v)
    sigma2 = 0.0
    for _ in range(maxiter):
        u = M.conj().T @ (M @ v)
        new = float(np.real(np.vdot(v, u)))
        nu = np.linalg.norm(u)
        if nu == 0:
            return 0.0
        v = u / nu
        if abs(new - sigma2) <= tol * max(new, np.finfo(float).tiny):
            sigma2 = new
            break
        sigma2 = new
    return float(np.sqrt(max(sigma2, 0.0)))


def explicit_linear_map(recover, shape):
    """Matrix of a linear map ``(N, J) data -> vector`` by probing unit matrices."""
    N, J = shape
    cols = []
    for idx in range(N * J):
        E = np.zeros(N * J, dtype=complex)
        E[idx] = 1.0
        cols.append(np.asarray(recover(E.reshape(N, J)), dtype=complex))
    return np.array(cols).T


def _data_norm(D, kind):
    if kind == "finite":
        return float(np.sum(np.linalg.norm(D, axis=1)))
    if kind == "frobenius":
        return float(np.linalg.norm(D))
    raise ValueError(f"unknown data norm {kind!r}")


def estimate_stability(recover, shape, trials=8, seed=0, data_norm="finite"):
    """Operator norm of a linear recovery map on ``shape``-sized data.

    A randomised lower estimate over ``trials`` seeded matrices is refined
    by power iteration on the explicit matrix of the map.  With the default
    sum-of-row-norms norm the exact value is the largest block norm
    ``max_n |L_n|``; with ``"frobenius"`` it is the spectral norm of the
    whole map.
    """
    N, J = shape
    ss = np.random.SeedSequence(seed if seed is not None else 0)
    best, best_D = 0.0, None
    for child in ss.spawn(trials):
        rng = check_random_state(child)
        D = rng.standard_normal((N, J)) + 1j * rng.standard_normal((N, J))
        ratio = norm(np.asarray(recover(D))) / _data_norm(D, data_norm)
        if ratio > best:
            best, best_D = ratio, D
    L = explicit_linear_map(recover, shape)
    if data_norm == "frobenius":
        v0 = None if best_D is None else best_D.reshape(-1)
        return max(best, top_singular_value(L, v0))
    blocks = [L[:, n * J:(n + 1) * J] for n in range(N)]
    refined = max(top_singular_value(B, None if best_D is None else best_D[n])
                  for n, B in enumerate(blocks))
    return max(best, refined)


# --- least-squares ground truth ---------------------------------------------

def stacked_system(A, G, W, N):
    """Equations ``<A^n x_0 + (I + .. + A^{n-1}) w, g_j> = d_nj`` for ``n < N``.

    Returns ``(Mx, Mw)`` acting on ``x_0`` and on the coordinates of ``w`` in
    the orthonormal basis of W; row ``n*J + j`` is equation ``(n, j)``.
    """
    A = check_operator(A, G.dim)
    d = G.dim
    Gc = G.vectors.conj()
    power, lam = identity(d), np.zeros((d, d), dtype=complex)
    Mx, Mw = [], []
    for _ in range(N):
        Mx.append(Gc @ power)
        Mw.append(Gc @ lam @ W.basis)
        lam = lam + power
        power = A @ power
    return np.vstack(Mx), np.vstack(Mw)


def _range_complement(M, rtol=1e-13):
    U, s, _ = np.linalg.svd(M, full_matrices=True)
    r = int(np.sum(s > rtol * s[0])) if s.size and s[0] > 0 else 0
    Q = U[:, :r]
    return lambda X: X - Q @ (Q.conj().T @ X)


def identifiability_gap(Mx, Mw):
    """Smallest singular value of the source block after eliminating ``x_0``.

    Zero (to rounding) means some nonzero source is indistinguishable from
    a change of initial state on these samples.
    """
    P = _range_complement(Mx)
    s = np.linalg.svd(P(Mw), compute_uv=False)
    return float(s[-1]) if s.size else 0.0


def least_squares_source(D, A, G, W=None):
    """Source estimate from the stacked linear system, independent of any frame formula.

    ``x_0`` is eliminated by projecting onto the orthogonal complement of its
    column range; the remaining source coordinates are fitted by least squares.
    """
    if W is None:
        W = Subspace.full(G.dim)
    rows = D.rows if isinstance(D, DataMatrix) else check_rows(D, len(G), "data")
    Mx, Mw = stacked_system(A, G, W, rows.shape[0])
    y = rows.reshape(-1)
    P = _range_complement(Mx)
    coords = np.linalg.lstsq(P(Mw), P(y), rcond=None)[0]
    return W.from_coordinates(coords)
