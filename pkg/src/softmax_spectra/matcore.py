"""Dense linear-algebra kernel: Kronecker products, a Jacobi eigensolver,
rank by elimination, and a homogeneous cone feasibility test.

Matrices are plain float ``numpy.ndarray`` objects; nothing here mutates
its inputs.
"""
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.optimize import linprog, minimize

from .errors import DimensionMismatch, NoConvergence, NotSymmetric

RANK_TOL = 1e-9
CONE_FEAS_TOL = 1e-9
CONE_OPT_TOL = 1e-6
MAX_SWEEPS = 60


@dataclass(frozen=True)
class EigResult:
    values: np.ndarray  # descending
    vectors: np.ndarray  # columns, matching ``values``
    residual: float  # max_j ||M v_j - lambda_j v_j||


@dataclass(frozen=True)
class ConeProblem:
    """Find w in span(subspace_basis) with constraint_rows @ w >= 0, w != 0."""

    constraint_rows: np.ndarray  # (m, n)
    subspace_basis: np.ndarray  # (n, k), orthonormal columns

    def __post_init__(self):
        rows = np.atleast_2d(np.asarray(self.constraint_rows, dtype=float))
        basis = np.asarray(self.subspace_basis, dtype=float)
        if basis.ndim != 2:
            raise DimensionMismatch("subspace basis must be 2-D (n, k)")
        if rows.size == 0:
            rows = np.zeros((0, basis.shape[0]))
        if basis.shape[1] and not np.allclose(basis.T @ basis, np.eye(basis.shape[1]), atol=1e-8):
            raise ValueError("subspace basis columns must be orthonormal")
        object.__setattr__(self, "constraint_rows", rows)
        object.__setattr__(self, "subspace_basis", basis)


def kron(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ra, ca = a.shape
    rb, cb = b.shape
    return (a[:, None, :, None] * b[None, :, None, :]).reshape(ra * rb, ca * cb)


def centering_projector(c):
    """I - (1/c) 11^T, the orthogonal projection onto mean-zero vectors."""
    if c < 1:
        raise ValueError("c must be >= 1")
    return np.eye(c) - np.full((c, c), 1.0 / c)


@lru_cache(maxsize=None)
def _round_robin(n):
    """Disjoint (p, q) index sets covering every pair once per sweep."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a < n and b < n:
                ps.append(min(a, b))
                qs.append(max(a, b))
        if ps:
            rounds.append((np.array(ps), np.array(qs)))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def _offdiag_norm(a):
    # summed directly: |A|^2 - |diag|^2 cancels once off-diagonals are small
    off = a * (1.0 - np.eye(a.shape[-1]))
    return np.sqrt(np.sum(off * off, axis=(-2, -1)))


def jacobi_batch(ms, vectors=True, max_sweeps=MAX_SWEEPS):
    """Cyclic Jacobi on a stack of symmetric matrices, shape (B, n, n).

    Each round applies n/2 disjoint rotations at once (round-robin
    ordering), vectorised over the batch. Returns unsorted diagonals and,
    optionally, the accumulated rotations.
    """
    a = np.array(ms, dtype=float, copy=True)
    bsz, n, _ = a.shape
    v = np.broadcast_to(np.eye(n), (bsz, n, n)).copy() if vectors else None
    if n < 2:
        return np.diagonal(a, axis1=1, axis2=2).copy(), v
    scale = np.sqrt(np.sum(a * a, axis=(1, 2)))
    target = 1e-15 * np.maximum(scale, np.finfo(float).tiny)
    rounds = _round_robin(n)
    prev = np.full(bsz, np.inf)
    for _ in range(max_sweeps):
        off = _offdiag_norm(a)
        if np.all((off <= target) | (off >= prev)):
            break
        prev = np.where(off <= target, 0.0, off)
        for p, q in rounds:
            apq = a[:, p, q]
            app = a[:, p, p]
            aqq = a[:, q, q]
            nz = apq != 0.0
            safe = np.where(nz, apq, 1.0)
            with np.errstate(over="ignore"):
                # |theta| = inf gives t = 0, the correct limit
                theta = (aqq - app) / (2.0 * safe)
                t = np.where(theta >= 0.0, 1.0, -1.0) / (np.abs(theta) + np.hypot(theta, 1.0))
            t = np.where(nz, t, 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            # A <- A J  (columns)
            cp = a[:, :, p]
            cq = a[:, :, q]
            a[:, :, p] = c[:, None, :] * cp - s[:, None, :] * cq
            a[:, :, q] = s[:, None, :] * cp + c[:, None, :] * cq
            # A <- J^T A  (rows)
            rp = a[:, p, :]
            rq = a[:, q, :]
            a[:, p, :] = c[:, :, None] * rp - s[:, :, None] * rq
            a[:, q, :] = s[:, :, None] * rp + c[:, :, None] * rq
            a[:, p, q] = 0.0
            a[:, q, p] = 0.0
            if vectors:
                vp = v[:, :, p]
                vq = v[:, :, q]
                v[:, :, p] = c[:, None, :] * vp - s[:, None, :] * vq
                v[:, :, q] = s[:, None, :] * vp + c[:, None, :] * vq
    return np.diagonal(a, axis1=1, axis2=2).copy(), v


def sym_eig(m, tol=1e-10):
    """Full spectrum of a symmetric matrix, eigenvalues descending."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"sym_eig needs a square matrix, got {m.shape}")
    n = m.shape[0]
    if n == 0:
        return EigResult(np.zeros(0), np.zeros((0, 0)), 0.0)
    # asymmetry is judged relative to the entry scale
    asym = np.max(np.abs(m - m.T))
    if asym > tol * max(1.0, np.max(np.abs(m))):
        raise NotSymmetric(f"max |M - M^T| = {asym:.3e} exceeds tolerance")
    sym = 0.5 * (m + m.T)
    w, v = jacobi_batch(sym[None])
    w, v = w[0], v[0]
    order = np.argsort(-w, kind="stable")
    w = w[order]
    v = v[:, order]
    residual = float(np.max(np.linalg.norm(sym @ v - v * w, axis=0)))
    fro = float(np.linalg.norm(sym))
    if residual > tol * max(fro, np.finfo(float).tiny) and residual > 0.0:
        raise NoConvergence(f"Jacobi residual {residual:.3e} above tol * ||M||_F")
    return EigResult(w, v, residual)


def sym_eigvals(m, tol=1e-10):
    return sym_eig(m, tol).values


def row_echelon(m, tol=RANK_TOL):
    """Row reduction with partial pivoting.

    Returns ``(S, E, pivots)`` with ``S @ m == E`` (S invertible), E in row
    echelon form and rows ``len(pivots):`` of E exactly zero. Pivots below
    ``tol * max column norm`` are treated as zero.
    """
    m = np.asarray(m, dtype=float)
    rows, cols = m.shape
    e = m.copy()
    s = np.eye(rows)
    if e.size == 0:
        return s, e, []
    thresh = tol * np.max(np.linalg.norm(e, axis=0))
    pivots = []
    r = 0
    for j in range(cols):
        if r == rows:
            break
        k = r + int(np.argmax(np.abs(e[r:, j])))
        if abs(e[k, j]) <= thresh:
            e[r:, j] = 0.0
            continue
        if k != r:
            e[[r, k]] = e[[k, r]]
            s[[r, k]] = s[[k, r]]
        f = e[r + 1:, j] / e[r, j]
        e[r + 1:] -= np.outer(f, e[r])
        s[r + 1:] -= np.outer(f, s[r])
        e[r + 1:, j] = 0.0
        pivots.append(j)
        r += 1
    e[r:] = 0.0
    return s, e, pivots


def rank_of(m, tol=RANK_TOL):
    m = np.asarray(m, dtype=float)
    if m.size == 0 or not np.any(m):
        return 0
    return len(row_echelon(m, tol)[2])


def _canonical_sign(w):
    k = int(np.argmax(np.abs(w)))
    return w if w[k] >= 0 else -w


def _central_ray(g, positive, z0):
    """Minimum-norm z with g[positive] @ z >= 1 and the rest >= 0.

    The LP optimum is generally a whole face; this picks its unique
    minimum-norm representative so witnesses are reproducible.
    """
    rhs = np.where(positive, 1.0, 0.0)
    scale = np.min(g[positive] @ z0)
    start = z0 / scale
    res = minimize(
        lambda z: 0.5 * z @ z,
        start,
        jac=lambda z: z,
        constraints=[{"type": "ineq", "fun": lambda z: g @ z - rhs, "jac": lambda z: g}],
        method="SLSQP",
        options={"ftol": 1e-15, "maxiter": 500},
    )
    z = res.x
    if not res.success or np.min(g @ z - rhs) < -1e-9:
        return start
    return z


def cone_nontrivial(p: ConeProblem) -> Optional[np.ndarray]:
    """Nonzero unit w in the subspace with a_k . w >= 0 for all k, or None."""
    a = p.constraint_rows
    b = p.subspace_basis
    n, k = b.shape
    if a.shape[1] != n:
        raise DimensionMismatch(f"constraints act on dimension {a.shape[1]}, basis on {n}")
    if k == 0:
        return None
    g = a @ b  # constraints in subspace coordinates
    m = g.shape[0]

    # (i) directions on which every constraint vanishes
    gram = g.T @ g
    eig = sym_eig(gram)
    gscale = max(1.0, float(np.linalg.norm(g)))
    null = np.sqrt(np.maximum(eig.values, 0.0)) <= CONE_FEAS_TOL * gscale
    if np.any(null):
        z = eig.vectors[:, np.flatnonzero(null)[-1]]
        return _canonical_sign(b @ z) / np.linalg.norm(b @ z)

    # (ii) max sum_k min(g_k z, 1) s.t. g z >= 0, |B z|_inf <= 1
    cost = np.concatenate([np.zeros(k), -np.ones(m)])
    a_ub = np.block([
        [-g, np.eye(m)],          # s_k <= g_k z
        [-g, np.zeros((m, m))],   # g z >= 0
        [b, np.zeros((n, m))],    # B z <= 1
        [-b, np.zeros((n, m))],   # -B z <= 1
    ])
    b_ub = np.concatenate([np.zeros(2 * m), np.ones(2 * n)])
    bounds = [(None, None)] * k + [(0.0, 1.0)] * m
    res = linprog(cost, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0 or -res.fun <= CONE_OPT_TOL:
        return None
    z = res.x[:k]

    positive = g @ z > CONE_FEAS_TOL
    # constraints zero at the LP optimum may still be strictly satisfiable
    for j in np.flatnonzero(~positive):
        probe = linprog(
            -g[j],
            A_ub=np.vstack([-g, b, -b]),
            b_ub=np.concatenate([np.zeros(m), np.ones(2 * n)]),
            bounds=[(None, None)] * k,
            method="highs",
        )
        if probe.status == 0 and -probe.fun > CONE_OPT_TOL:
            z = z + probe.x
    positive = g @ z > CONE_FEAS_TOL
    z = _central_ray(g, positive, z)

    w = b @ z
    norm = np.linalg.norm(w)
    if norm == 0.0 or np.min(a @ (w / norm)) < -CONE_FEAS_TOL:
        return None
    return w / norm
