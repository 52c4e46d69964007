"""Eigenvalue and condition-number bounds for the reduced Hessian.

Every bound is evaluated at given activations Y (C x N) and samples X
(D x N). ``exact_spectrum`` gives the reference values the bounds are
compared against.
"""
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional

import numpy as np

from .errors import NoValidSubset, RegimeMismatch, SingularHessian
from .hessian import KronHessian, hessian_from_activations
from .matcore import EigResult, rank_of, sym_eig
from .reduction import build_kmap

DEFAULT_BUDGET = 4096
SINGULAR_TOL = 1e-12


@dataclass(frozen=True)
class SpectralBounds:
    lambda_min_lower: float
    lambda_min_upper: float
    lambda_max_lower: float
    lambda_max_upper: float
    kappa_lower: float
    kappa_upper: float
    regime: str  # "square" | "overdetermined"
    subset_budget: int
    extras: dict = field(default_factory=dict)

    def as_dict(self):
        out = {k: getattr(self, k) for k in (
            "lambda_min_lower", "lambda_min_upper", "lambda_max_lower",
            "lambda_max_upper", "kappa_lower", "kappa_upper", "regime", "subset_budget")}
        out.update(self.extras)
        return out


@dataclass(frozen=True)
class SubsetBound:
    value: float  # C * min_alpha ||sum_{j in alpha} x_j||
    value_max: float  # same with max over alpha
    proof_consistent: float  # C * min_alpha sum_{j in alpha} ||x_j||^2
    best_subset: tuple
    enumerated: int
    qualifying: int
    exhaustive: bool

    @property
    def truncated(self):
        return not self.exhaustive


def _norms(x):
    return np.linalg.norm(np.asarray(x, dtype=float), axis=0)


def _require_square(x):
    d, n = np.shape(x)
    if n != d:
        raise RegimeMismatch(f"bound needs N = D, got N={n}, D={d}")


def lambda_min_lower_bound(y, x):
    """min_n ||x_n||^2 * min_i y_in  (square regime)."""
    _require_square(x)
    y = np.asarray(y, dtype=float)
    return float(np.min(_norms(x) ** 2 * y.min(axis=0)))


def lambda_min_upper_bound(x, c):
    """Return (C min ||x_i||, C min ||x_i||^2).

    The first is the bound as usually quoted; the second is what the
    Weyl-perturbation argument actually delivers, since the perturbing
    term has norm lambda_1(A) ||x||^2 with lambda_1(A) < C.
    """
    _require_square(x)
    nx = _norms(x)
    return float(c * nx.min()), float(c * (nx ** 2).min())


def lambda_max_bounds(y, x):
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    nx = _norms(x)
    c = y.shape[0]
    lower = max(y.min() * nx.max(), y.max() * nx.min())
    upper = c * float(np.linalg.norm(x))
    return float(lower), float(upper)


def _subsets(n, budget):
    """Nonempty subsets of range(n) by size then lexicographically."""
    count = 0
    for size in range(1, n + 1):
        for combo in combinations(range(n), size):
            if count >= budget:
                return
            count += 1
            yield combo


def _term_sum(h: KronHessian, idx):
    out = np.zeros_like(h.dense)
    for j in idx:
        out += h.term_matrix(j)
    return out


def lambda_min_upper_bound_general(h: KronHessian, x, budget=DEFAULT_BUDGET):
    """Subset-family upper bound on the smallest eigenvalue (N >= D).

    A subset alpha qualifies when the Hessian terms in alpha sum to a full
    rank matrix and the remaining terms do not.
    """
    x = np.asarray(x, dtype=float)
    d, n = x.shape
    if n < d:
        raise RegimeMismatch(f"needs N >= D, got N={n}, D={d}")
    c = h.terms[0][0].shape[0] + 1
    full = h.size
    everything = set(range(n))
    exhaustive = 2 ** n <= budget
    enumerated = 0
    found = []
    for alpha in _subsets(n, budget):
        enumerated += 1
        if rank_of(_term_sum(h, alpha)) < full:
            continue
        rest = sorted(everything - set(alpha))
        if rest and rank_of(_term_sum(h, rest)) >= full:
            continue
        found.append(alpha)
    if not found:
        raise NoValidSubset(f"no qualifying subset among {enumerated} enumerated")
    stated = [c * float(np.linalg.norm(x[:, list(a)].sum(axis=1))) for a in found]
    proof = [c * float(np.sum(_norms(x[:, list(a)]) ** 2)) for a in found]
    best = int(np.argmin(stated))
    return SubsetBound(
        value=stated[best],
        value_max=max(stated),
        proof_consistent=min(proof),
        best_subset=found[best],
        enumerated=enumerated,
        qualifying=len(found),
        exhaustive=exhaustive,
    )


def _overdetermined_lambda_min_lower(h: KronHessian, y, x, budget):
    """max over full-rank D-subsets gamma of min_{n in gamma} ||x_n||^2 min_i y_in."""
    d, n = x.shape
    per_sample = _norms(x) ** 2 * y.min(axis=0)
    best = None
    count = 0
    for gamma in combinations(range(n), d):
        if count >= budget:
            break
        count += 1
        if rank_of(_term_sum(h, gamma)) < h.size:
            continue
        v = float(per_sample[list(gamma)].min())
        best = v if best is None else max(best, v)
    if best is None:
        raise NoValidSubset("no full-rank subset of D samples")
    return best, count


def exact_spectrum(h: KronHessian) -> EigResult:
    return sym_eig(h.dense)


def condition_bounds(y, x, kind="isometric", budget=DEFAULT_BUDGET,
                     hessian: Optional[KronHessian] = None):
    """Bracket lambda_min, lambda_max and kappa of the reduced Hessian at Y."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    d, n = x.shape
    c = y.shape[0]
    h = hessian if hessian is not None else hessian_from_activations(y, x, build_kmap(kind, c))
    if n < d:
        raise SingularHessian(f"N={n} < D={d}: the reduced Hessian has rank at most N(C-1)")
    lam_min = float(exact_spectrum(h).values[-1])
    if lam_min < SINGULAR_TOL:
        raise SingularHessian(f"exact lambda_min = {lam_min:.3e}")

    nx = _norms(x)
    lmax_lo, lmax_hi = lambda_max_bounds(y, x)
    extras = {}
    if n == d:
        regime = "square"
        lmin_lo = lambda_min_lower_bound(y, x)
        stated, proof = lambda_min_upper_bound(x, c)
        lmin_hi = proof
        displayed_den = stated
    else:
        regime = "overdetermined"
        lmin_lo, checked = _overdetermined_lambda_min_lower(h, y, x, budget)
        general = lambda_min_upper_bound_general(h, x, budget)
        stated, lmin_hi = general.value, general.proof_consistent
        displayed_den = general.value_max
        extras.update(subset_exhaustive=general.exhaustive,
                      subset_enumerated=general.enumerated,
                      subset_qualifying=general.qualifying,
                      lambda_min_upper_stated_max=general.value_max,
                      lower_subsets_checked=checked)
    # condition-number display variant: inner factor min_n max_i y_in
    num = float((nx ** 2).min()) * max(y.max(axis=0).min() * nx.max(), y.max() * nx.min())
    extras.update(
        lambda_min_upper_stated=stated,
        kappa_lower_displayed=num / displayed_den if displayed_den > 0 else float("nan"),
    )
    return SpectralBounds(
        lambda_min_lower=lmin_lo,
        lambda_min_upper=lmin_hi,
        lambda_max_lower=lmax_lo,
        lambda_max_upper=lmax_hi,
        kappa_lower=lmax_lo / lmin_hi,
        kappa_upper=lmax_hi / lmin_lo if lmin_lo > 0 else float("inf"),
        regime=regime,
        subset_budget=budget,
        extras=extras,
    )
