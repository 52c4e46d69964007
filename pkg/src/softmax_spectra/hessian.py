"""Reduced Hessian assembled as a sum of per-sample Kronecker products.

A reduced direction P ((C-1) x D) is flattened row by row, ``P.reshape(-1)``,
so that ``vec(P) @ dense @ vec(P) == D^2 L(K S)(K P, K P)``.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch
from .matcore import kron, rank_of
from .model import Dataset, sample_curvature, softmax
from .reduction import KMap, ReducedWeights, lift

VEC_CONVENTION = "row-stacked P (vec of P transposed, column-major)"


@dataclass(frozen=True)
class KronHessian:
    terms: tuple  # ((A_n, B_n), ...) with A_n (C-1)x(C-1), B_n D x D
    dense: np.ndarray
    kmap_kind: str
    vec_convention: str = VEC_CONVENTION

    @property
    def size(self):
        return self.dense.shape[0]

    def term_matrix(self, n):
        a, b = self.terms[n]
        return kron(a, b)


@dataclass
class RangeReport:
    applicable: bool
    term_ranks: list
    total_rank: int
    expected_total: int
    reason: str = ""
    details: dict = field(default_factory=dict)


def hessian_from_activations(y, x, kmap: KMap):
    """Assemble sum_n (K^T Q_n K) kron (x_n x_n^T) at fixed activations Y."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if y.shape[0] != kmap.C or y.shape[1] != x.shape[1]:
        raise DimensionMismatch(f"activations {y.shape} do not fit samples {x.shape}")
    k = kmap.K
    d = x.shape[0]
    size = d * (kmap.C - 1)
    dense = np.zeros((size, size))
    terms = []
    for n in range(x.shape[1]):
        a = k.T @ sample_curvature(y[:, n]) @ k
        a = 0.5 * (a + a.T)
        b = np.outer(x[:, n], x[:, n])
        terms.append((a, b))
        dense += kron(a, b)
    dense = 0.5 * (dense + dense.T)
    dense.setflags(write=False)
    return KronHessian(tuple(terms), dense, kmap.kind)


def build_hessian(s: ReducedWeights, d: Dataset):
    if s.S.shape[1] != d.D or s.kmap.C != d.C:
        raise DimensionMismatch("reduced weights do not match the dataset")
    y = softmax(lift(s) @ d.X)
    return hessian_from_activations(y, d.X, s.kmap)


def hessian_quadratic(h: KronHessian, p):
    v = np.asarray(p, dtype=float).reshape(-1)
    if v.size != h.size:
        raise DimensionMismatch(f"direction has {v.size} entries, Hessian acts on {h.size}")
    return float(v @ h.dense @ v)


def range_decomposition_check(h: KronHessian):
    """Check that the per-sample ranges split the whole space (square case).

    Never raises; an inapplicable instance comes back with
    ``applicable=False`` and the reason.
    """
    n = len(h.terms)
    c1 = h.terms[0][0].shape[0] if n else 0
    d = h.terms[0][1].shape[0] if n else 0
    term_ranks = [rank_of(h.term_matrix(i)) for i in range(n)]
    total = rank_of(h.dense)
    expected = n * c1
    if n != d:
        return RangeReport(False, term_ranks, total, expected, f"NotApplicable: N={n} != D={d}")
    if total < h.size:
        return RangeReport(False, term_ranks, total, expected,
                           f"NotApplicable: Hessian rank {total} < {h.size}")
    ok = all(r == c1 for r in term_ranks) and total == expected
    reason = "" if ok else "term ranks do not add up to the total rank"
    return RangeReport(ok, term_ranks, total, expected, reason)
