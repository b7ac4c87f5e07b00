"""Data matrices of space-time samples and the spaces they live in.

Row ``n`` of a data matrix holds the samples ``(<x_n, g_j>)_j`` of one state.
Two norms are used: the sum of row norms for finitely many rows and the
supremum of row norms, which equals the operator norm from l^2 to l^inf.
Membership in the "strong" subspace (rows converging in l^2) can only be
checked through a tail surrogate on finite data.
"""

import csv
import itertools
from collections import namedtuple
from dataclasses import dataclass

import numpy as np

from ._validation import check_positive, check_random_state, check_rows, frozen
from .exceptions import DimensionError, NotStrongError
from .frames import bessel_bound, top_bessel_vector

DEFAULT_EPS = 1e-10
MIN_TAIL_WINDOW = 4

StrongTest = namedtuple("StrongTest", "is_strong limit_row tail_gap limit_row_index")


@dataclass(frozen=True, eq=False)
class DataMatrix:
    """Finite block of rows of a (possibly infinite) data matrix.

    ``streaming=True`` marks a matrix that was cut from an unbounded row
    stream, so the finite-row norm is meaningless and the sup norm is only
    a partial supremum.
    """

    rows: np.ndarray
    streaming: bool = False

    def __post_init__(self):
        object.__setattr__(self, "rows", frozen(check_rows(self.rows, name="data matrix")))

    @property
    def row_count(self):
        return self.rows.shape[0]

    @property
    def col_count(self):
        return self.rows.shape[1]

    @property
    def shape(self):
        return self.rows.shape

    def row_norms(self):
        return np.linalg.norm(self.rows, axis=1)

    def apply(self, x):
        """``(Dx)_i = sum_j d_ij x_j`` (no conjugation: D acts as a matrix)."""
        return self.rows @ np.asarray(x, dtype=complex)

    def __add__(self, other):
        return DataMatrix(self.rows + other.rows, self.streaming or other.streaming)

    def __mul__(self, scalar):
        return DataMatrix(scalar * self.rows, self.streaming)

    __rmul__ = __mul__

    @classmethod
    def collect(cls, row_stream, n_max=10_000, eps=DEFAULT_EPS, check_every=16):
        """Pull rows from an iterator until the tail test passes or ``n_max``."""
        rows = []
        for row in itertools.islice(row_stream, n_max):
            rows.append(np.asarray(row, dtype=complex))
            n = len(rows)
            if n >= 2 and (n % check_every == 0) and _tail_gap(np.array(rows)) < eps:
                break
        return cls(np.array(rows), streaming=True)


def _tail_window(n):
    return min(n, max(MIN_TAIL_WINDOW, n // 4))


def _tail_gap(rows):
    n = rows.shape[0]
    tail = rows[n - _tail_window(n):]
    return float(np.max(np.linalg.norm(tail - rows[-1], axis=1)))


def norm_finite(D):
    """Sum of the l^2 norms of the rows."""
    if D.streaming:
        raise ValueError("finite-N norm on unbounded data")
    return float(np.sum(D.row_norms()))


def norm_sup(D):
    """Supremum of the l^2 norms of the rows (partial for streaming data)."""
    return float(np.max(D.row_norms()))


def sup_maximizer(D):
    """Unit-scale vector attaining ``|Dx|_inf / |x|_2 = norm_sup(D)``.

    Takes the largest row and sets ``x_j = |d_ij|^2 / d_ij = conj(d_ij)``
    (zero where ``d_ij = 0``), so ``(Dx)_i = |r_i|^2`` and ``|x| = |r_i|``.
    """
    i = int(np.argmax(D.row_norms()))
    return np.conj(D.rows[i])


def is_strong(D, eps=DEFAULT_EPS):
    """Tail-Cauchy test for row convergence.

    Passes when every row in the last ``max(4, N/4)`` rows lies within
    ``eps`` of the final row, which is returned as the limit estimate.
    """
    eps = check_positive(eps, "eps")
    if D.row_count < 2:
        raise DimensionError("the strong-membership test needs at least 2 rows")
    gap = _tail_gap(D.rows)
    return StrongTest(gap < eps, D.rows[-1].copy(), gap, D.row_count - 1)


def limit_synthesis(D, G, eps=DEFAULT_EPS):
    """``lim_i sum_j d_ij g_j`` for a row-convergent data matrix."""
    if D.col_count != len(G):
        raise DimensionError(f"data has {D.col_count} columns but system has {len(G)} vectors")
    test = is_strong(D, eps)
    if not test.is_strong:
        raise NotStrongError("data not in B^s: rows are not Cauchy within eps", test.tail_gap)
    return G.synthesis(test.limit_row)


def partial_syntheses(D, G):
    """Row-wise syntheses ``(DG)_i = sum_j d_ij g_j`` stacked as rows."""
    return G.synthesis(D.rows)


def operator_norm_ratio(G, trials=16, seed=0, n_rows=8):
    """Largest observed ``|R_G(D)| / norm_sup(D)`` over trial matrices.

    The first trial is the constant-row matrix whose row is the analysis of
    the top eigenvector of the frame operator; it attains ``sqrt(C_G)``.
    The remaining trials are random geometrically convergent matrices.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = check_random_state(seed)
    J = len(G)
    v = top_bessel_vector(G)
    best_row = G.analysis(v)
    candidates = [DataMatrix(np.tile(best_row, (n_rows, 1)))]
    for _ in range(trials - 1):
        t = rng.standard_normal(J) + 1j * rng.standard_normal(J)
        noise = rng.standard_normal((n_rows, J)) + 1j * rng.standard_normal((n_rows, J))
        decay = 2.0 ** -np.arange(n_rows)[:, None]
        decay[-1] = 0.0
        candidates.append(DataMatrix(t + decay * noise))
    best = 0.0
    for D in candidates:
        s = norm_sup(D)
        if s == 0:
            continue
        test = is_strong(D, eps=1.0)
        best = max(best, np.linalg.norm(G.synthesis(test.limit_row)) / s)
    return float(best)


def sqrt_bessel_bound(G):
    return float(np.sqrt(bessel_bound(G)))


def norms_report(D, eps=DEFAULT_EPS):
    test = is_strong(D, eps) if D.row_count >= 2 else None
    return {
        "norm_sup": norm_sup(D),
        "norm_finite": None if D.streaming else norm_finite(D),
        "is_strong": bool(test.is_strong) if test else False,
        "eps": float(eps),
        "limit_row_index": int(test.limit_row_index) if test else 0,
        "partial": bool(D.streaming),
    }


def write_csv(D, path):
    """One ``n,j,re,im`` record per entry, row-major, 17 significant digits."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "j", "re", "im"])
        for n, row in enumerate(D.rows):
            for j, z in enumerate(row):
                writer.writerow([n, j, f"{z.real:.17g}", f"{z.imag:.17g}"])


def read_csv(path):
    entries = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["n", "j", "re", "im"]:
            raise ValueError(f"unexpected data-matrix CSV header {reader.fieldnames}")
        for rec in reader:
            entries[int(rec["n"]), int(rec["j"])] = complex(float(rec["re"]), float(rec["im"]))
    if not entries:
        raise ValueError("empty data-matrix CSV")
    N = 1 + max(n for n, _ in entries)
    J = 1 + max(j for _, j in entries)
    if len(entries) != N * J:
        raise ValueError(f"data-matrix CSV is not a full {N}x{J} grid")
    rows = np.zeros((N, J), dtype=complex)
    for (n, j), z in entries.items():
        rows[n, j] = z
    return DataMatrix(rows)
