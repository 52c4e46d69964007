"""Fixed-step gradient descent with learning rates chosen from the Hessian spectrum."""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import BadSpectrum, BadTheta, Diverged, InsufficientTrace, NotInvertible, NotPositiveTarget
from .existence import closed_form_minimum
from .hessian import build_hessian
from .matcore import sym_eig
from .model import Dataset, gradient, loss, softmax
from .reduction import KMap, ReducedWeights, lift, project_to_Z, reduce_weights, reduced_gradient
from .spectral import SINGULAR_TOL, condition_bounds

SPACES = ("reduced", "full_Z")
DIVERGENCE_FACTOR = 1e3
EXACT_SPECTRUM_MAX_DIM = 64


@dataclass(frozen=True)
class DescentConfig:
    eta: float
    theta: float = 0.5
    max_iters: int = 10000
    grad_tol: float = 1e-10
    space: str = "reduced"

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"eta must be > 0, got {self.eta}")
        if not 0 < self.theta < 1:
            raise BadTheta(f"theta must lie in (0, 1), got {self.theta}")
        if self.space not in SPACES:
            raise ValueError(f"space must be one of {SPACES}")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")


@dataclass
class DescentTrace:
    losses: list = field(default_factory=list)
    grad_norms: list = field(default_factory=list)
    error_ratios: list = field(default_factory=list)
    converged: bool = False
    final: Optional[ReducedWeights] = None

    @property
    def iterations(self):
        return len(self.losses) - 1

    @property
    def final_weights(self):
        return None if self.final is None else lift(self.final)


def eta_interval(lambda_min, lambda_max, theta):
    """Step sizes with every eigenvalue of I - eta H inside [-theta, theta].

    Returns ``(lo, hi)`` or None when lambda_max / lambda_min exceeds
    (1 + theta) / (1 - theta).
    """
    if not 0 < theta < 1:
        raise BadTheta(f"theta must lie in (0, 1), got {theta}")
    if not (0 < lambda_min <= lambda_max and np.isfinite(lambda_max)):
        raise BadSpectrum(f"need 0 < lambda_min <= lambda_max, got {lambda_min}, {lambda_max}")
    lo = (1 - theta) / lambda_min
    hi = (1 + theta) / lambda_max
    if lo > hi:
        return None
    return lo, hi


def run(start: ReducedWeights, d: Dataset, cfg: DescentConfig, reference=None):
    """Iterate W <- W - eta grad L(W) in the configured coordinates."""
    kmap = start.kmap
    ref = None if reference is None else project_to_Z(reference)
    trace = DescentTrace()
    s = np.array(start.S)
    w = lift(start)
    prev_err = None

    def current():
        return ReducedWeights(s, kmap) if cfg.space == "reduced" else reduce_weights(w, kmap)

    for it in range(cfg.max_iters + 1):
        if cfg.space == "reduced":
            w = kmap.K @ s
            g = reduced_gradient(ReducedWeights(s, kmap), d)
        else:
            g = gradient(w, d)
        value = loss(w, d)
        gnorm = float(np.linalg.norm(g))
        if not (np.isfinite(value) and np.isfinite(gnorm)) or (
                it > 0 and value > DIVERGENCE_FACTOR * trace.losses[0]):
            trace.final = None
            raise Diverged(f"loss {value:.6g} at iteration {it} (start {trace.losses[0]:.6g})", trace)
        trace.losses.append(value)
        trace.grad_norms.append(gnorm)
        if ref is not None:
            err = float(np.linalg.norm(project_to_Z(w) - ref))
            if prev_err is not None:
                trace.error_ratios.append(err / prev_err if prev_err > 0 else float("nan"))
            prev_err = err
        if gnorm <= cfg.grad_tol:
            trace.converged = True
            break
        if it == cfg.max_iters:
            break
        if cfg.space == "reduced":
            s = s - cfg.eta * g
        else:
            w = w - cfg.eta * g
    trace.final = current()
    return trace


def measured_contraction(trace: DescentTrace, tail=10):
    """Geometric mean of the last ``tail`` error ratios."""
    ratios = trace.error_ratios
    if tail < 1 or len(ratios) < tail:
        raise InsufficientTrace(f"need {tail} error ratios, trace has {len(ratios)}")
    last = np.asarray(ratios[-tail:], dtype=float)
    return float(np.exp(np.mean(np.log(last))))


def lipschitz_bound(d: Dataset, kmap: KMap):
    """Certified upper bound on lambda_max of the reduced Hessian anywhere.

    lambda_1(K^T Q K) <= ||K||_2^2 max_i y_i <= ||K||_2^2, so the Hessian
    is bounded by ||K||_2^2 ||X||_F^2.
    """
    k2 = float(np.linalg.norm(kmap.K, 2)) ** 2
    return k2 * float(np.linalg.norm(d.X)) ** 2


@dataclass
class EtaChoice:
    eta: float
    theta: float
    source: str  # "exact" | "bounds"
    lambda_min: float
    lambda_max: float
    interval: Optional[tuple]
    reference: Optional[np.ndarray]
    reference_source: str

    def as_dict(self):
        return {
            "eta": self.eta,
            "theta": self.theta,
            "spectrum_source": self.source,
            "lambda_min": self.lambda_min,
            "lambda_max": self.lambda_max,
            "interval": None if self.interval is None else list(self.interval),
            "reference_source": self.reference_source,
        }


def reference_minimum(d: Dataset, kmap: KMap, max_iters=200000):
    """Closed-form minimiser when available, else a long fine-tolerance run."""
    try:
        return closed_form_minimum(d), "closed_form"
    except (NotPositiveTarget, NotInvertible):
        pass
    eta = 1.0 / lipschitz_bound(d, kmap)
    start = ReducedWeights(np.zeros((d.C - 1, d.D)), kmap)
    cfg = DescentConfig(eta=eta, max_iters=max_iters, grad_tol=1e-12)
    tr = run(start, d, cfg)
    return tr.final_weights, "long_run" if tr.converged else "long_run_unconverged"


def choose_eta(d: Dataset, kmap: KMap, theta=0.5, reference=None):
    """Midpoint of the admissible interval at the (reference) minimum.

    Uses the exact spectrum for Hessians up to 64x64, otherwise the
    eigenvalue bounds. If the interval is empty, falls back to
    2 / (lambda_min + lambda_max).
    """
    if reference is None:
        reference, ref_source = reference_minimum(d, kmap)
    else:
        ref_source = "supplied"
    s = reduce_weights(reference, kmap)
    h = build_hessian(s, d)
    if h.size <= EXACT_SPECTRUM_MAX_DIM:
        vals = sym_eig(h.dense).values
        lmin, lmax, source = float(vals[-1]), float(vals[0]), "exact"
    else:
        b = condition_bounds(softmax(lift(s) @ d.X), d.X, kind=kmap.kind, hessian=h)
        lmin, lmax, source = b.lambda_min_lower, b.lambda_max_upper, "bounds"
    if lmin <= SINGULAR_TOL:
        # singular at the reference: only the upper end is meaningful
        return EtaChoice(1.0 / lmax, theta, source, lmin, lmax, None, reference, ref_source)
    interval = eta_interval(lmin, lmax, theta)
    eta = 0.5 * (interval[0] + interval[1]) if interval else 2.0 / (lmin + lmax)
    return EtaChoice(eta, theta, source, lmin, lmax, interval, reference, ref_source)
