"""Monte Carlo study of lambda_{C-1}(K^T Q K) / min(y) for random activations.

Activation vectors are i.i.d. uniforms on (0, 1) normalised to sum 1. Each
realization has its own Philox substream keyed by (seed, C) and jumped by
the realization index, so results do not depend on evaluation order.
"""
from dataclasses import dataclass, field

import numpy as np

from .matcore import jacobi_batch, sym_eig
from .model import sample_curvature
from .reduction import build_kmap

DEFAULT_CLASSES = (3, 6, 9, 12, 15, 18)
EDGE_LO, EDGE_HI = 1.0, 3.0
CONCENTRATION_EPS = (0.1, 0.25, 0.5)
_MANTISSA = 2 ** 53


@dataclass(frozen=True)
class MCConfig:
    class_counts: tuple = DEFAULT_CLASSES
    realizations: int = 2000
    kmap_kind: str = "canonical"
    seed: int = 0
    bin_count: int = 40

    def __post_init__(self):
        object.__setattr__(self, "class_counts", tuple(int(c) for c in self.class_counts))
        if any(c < 2 for c in self.class_counts):
            raise ValueError("every class count must be >= 2")
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        if self.bin_count < 1:
            raise ValueError("bin_count must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass
class RatioHistogram:
    c: int
    edges: np.ndarray  # bin_count + 1 boundaries on [1, 3]
    counts: np.ndarray  # bin_count regular bins, then one overflow bin
    median: float
    ratios: np.ndarray = field(repr=False)

    def fraction_below(self, threshold):
        return float(np.mean(self.ratios < threshold))


def stream(seed, c):
    """Base bit generator for class count ``c``; jump it per realization."""
    return np.random.Philox(np.random.SeedSequence([seed, c]))


def realization_rng(seed, c, index):
    return np.random.Generator(stream(seed, c).jumped(index))


def sample_y(c, rng):
    if c < 2:
        raise ValueError("c must be >= 2")
    # (k + 1/2) / 2^53 lies strictly inside (0, 1)
    u = (rng.integers(0, _MANTISSA, size=c, dtype=np.int64) + 0.5) / _MANTISSA
    return u / u.sum()


def _reduced_curvatures(ys, kmap):
    q = ys[:, :, None] * np.eye(ys.shape[1]) - ys[:, :, None] * ys[:, None, :]
    a = kmap.K.T @ q @ kmap.K
    return 0.5 * (a + np.swapaxes(a, 1, 2))


def ratio_realization(y, kind):
    y = np.asarray(y, dtype=float)
    k = build_kmap(kind, y.size).K
    a = k.T @ sample_curvature(y) @ k
    lam = sym_eig(0.5 * (a + a.T)).values[-1]
    return float(lam / y.min())


def ratios_for(c, kind, realizations, seed):
    base = stream(seed, c)
    ys = np.array([sample_y(c, np.random.Generator(base.jumped(i)))
                   for i in range(realizations)])
    a = _reduced_curvatures(ys, build_kmap(kind, c))
    vals, _ = jacobi_batch(a, vectors=False)
    return vals.min(axis=1) / ys.min(axis=1)


def histogram(c, ratios, bin_count):
    edges = np.linspace(EDGE_LO, EDGE_HI, bin_count + 1)
    clipped = np.clip(ratios, EDGE_LO, None)  # ratios sit at >= 1 up to rounding
    regular, _ = np.histogram(clipped[clipped < EDGE_HI], bins=edges)
    overflow = int(np.sum(clipped >= EDGE_HI))
    counts = np.append(regular, overflow).astype(np.int64)
    return RatioHistogram(c, edges, counts, float(np.median(ratios)), np.asarray(ratios))


def run_experiment(cfg: MCConfig):
    return [histogram(c, ratios_for(c, cfg.kmap_kind, cfg.realizations, cfg.seed), cfg.bin_count)
            for c in cfg.class_counts]


def summary_rows(hists):
    rows = []
    for h in hists:
        row = {"C": h.c, "median": h.median}
        for eps in CONCENTRATION_EPS:
            row[f"fraction_below_{1 + eps:g}"] = h.fraction_below(1 + eps)
        rows.append(row)
    return rows
