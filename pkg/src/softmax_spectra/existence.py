"""Existence of a minimum of the cross-entropy loss, with witnesses.

Vocabulary: Z are the C x D matrices with zero column sums, Z0 the part of
Z annihilated by X (``W @ X == 0``, parameters the loss cannot see), and Z1
the orthogonal complement of Z0 inside Z.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NotInvertible, NotPositiveTarget
from .matcore import ConeProblem, centering_projector, cone_nontrivial, rank_of, row_echelon, sym_eig
from .model import Dataset, gradient, loss
from .reduction import build_kmap

VERDICTS = ("exists_unique_on_Z", "exists_unique_on_Z1", "no_minimum", "undetermined")
RAY_GRID = (1.0, 10.0, 100.0, 1000.0)


@dataclass
class ExistenceReport:
    t_positive: bool
    x_rank: int
    regime: str  # invertible_square | full_rank_D | deficient
    closed_form: Optional[np.ndarray]
    bounded_direction: Optional[np.ndarray]
    z0_basis: list
    verdict: str
    ray_losses: list = field(default_factory=list)

    @property
    def z0_dimension(self):
        return len(self.z0_basis)


def check_critical(w, d: Dataset, tol=1e-8):
    g = gradient(w, d)
    return bool(np.linalg.norm(g) <= tol * (1.0 + np.linalg.norm(d.X)))


def closed_form_minimum(d: Dataset):
    """The unique minimiser in Z when T > 0 and X is square and invertible."""
    if not np.all(d.T > 0):
        raise NotPositiveTarget("closed form needs every target entry > 0")
    if d.N != d.D or rank_of(d.X) < d.D:
        raise NotInvertible(f"closed form needs an invertible square X, got {d.D}x{d.N}")
    r = np.log(d.T)
    r_xinv = np.linalg.solve(d.X.T, r.T).T
    return centering_projector(d.C) @ r_xinv


def _sample_space_split(x):
    """Orthonormal bases of range(X) and its complement in R^D."""
    d = x.shape[0]
    r = rank_of(x)
    if d == 0:
        return np.zeros((0, 0)), np.zeros((0, 0)), 0
    eig = sym_eig(x @ x.T)
    return eig.vectors[:, :r], eig.vectors[:, r:], r


def _outer_basis(kmat, vecs):
    return [np.outer(kmat[:, a], vecs[:, b])
            for a in range(kmat.shape[1]) for b in range(vecs.shape[1])]


def wasted_subspace(d: Dataset):
    """Frobenius-orthonormal basis of Z0 = {W in Z : W X = 0}."""
    _, null, _ = _sample_space_split(d.X)
    return _outer_basis(build_kmap("isometric", d.C).K, null)


def z1_basis(d: Dataset):
    rng, _, _ = _sample_space_split(d.X)
    return _outer_basis(build_kmap("isometric", d.C).K, rng)


def z_basis(c, dim):
    return _outer_basis(build_kmap("isometric", c).K, np.eye(dim))


def reduce_dataset(d: Dataset):
    """Invertible S with the last D - rank rows of S X zero.

    Returns ``(S, reduced)`` where ``reduced`` keeps the top rank rows of
    S X and the same targets; L(W; X) == L(W S^-1 padded; reduced).
    """
    s, e, pivots = row_echelon(d.X)
    k = len(pivots)
    return s, Dataset(e[:k], d.T)


def cone_constraints(d: Dataset):
    """Rows a with a . vec(W) = (W x_n)_i - (W x_n)_j for t_in > 0, j != i.

    vec is row-major over the C x D weight matrix.
    """
    c, dim = d.C, d.D
    rows = []
    for n in range(d.N):
        x = d.X[:, n]
        for i in np.flatnonzero(d.T[:, n] > 0):
            for j in range(c):
                if j == i:
                    continue
                a = np.zeros((c, dim))
                a[i] += x
                a[j] -= x
                rows.append(a.reshape(-1))
    return np.array(rows).reshape(len(rows), c * dim)


def bounded_direction(d: Dataset, quotient_z0=True):
    """A unit W in Z (Z1 by default) along which L(beta W) stays bounded."""
    basis = z1_basis(d) if quotient_z0 else z_basis(d.C, d.D)
    if not basis:
        return None
    b = np.column_stack([m.reshape(-1) for m in basis])
    w = cone_nontrivial(ConeProblem(cone_constraints(d), b))
    if w is None:
        return None
    return w.reshape(d.C, d.D)


def ray_losses(w, d: Dataset, grid=RAY_GRID):
    return [loss(beta * w, d) for beta in grid]


def _decreasing_to_unattained_inf(values):
    # past saturation consecutive values can round to the same float, so
    # strictness is required overall, monotonicity pairwise
    pairwise = all(b <= a for a, b in zip(values, values[1:]))
    return pairwise and values[-1] < values[0]


def analyze(d: Dataset):
    t_pos = bool(np.all(d.T > 0))
    r = rank_of(d.X)
    full = r == d.D
    if full and d.N == d.D:
        regime = "invertible_square"
    elif full:
        regime = "full_rank_D"
    else:
        regime = "deficient"
    exists = "exists_unique_on_Z" if full else "exists_unique_on_Z1"

    closed = closed_form_minimum(d) if (t_pos and regime == "invertible_square") else None
    z0 = wasted_subspace(d)
    direction = None
    profile = []
    if t_pos:
        verdict = exists
    else:
        direction = bounded_direction(d)
        if direction is None:
            verdict = exists
        else:
            profile = ray_losses(direction, d)
            verdict = "no_minimum" if _decreasing_to_unattained_inf(profile) else "undetermined"
    return ExistenceReport(
        t_positive=t_pos,
        x_rank=r,
        regime=regime,
        closed_form=closed,
        bounded_direction=direction,
        z0_basis=z0,
        verdict=verdict,
        ray_losses=profile,
    )
