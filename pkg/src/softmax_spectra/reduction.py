"""Parameterisation of the zero-column-sum subspace Z by (C-1) x D matrices.

A K-map is a C x (C-1) matrix whose columns span the complement of the
ones vector; ``W = K @ S`` ranges over Z as S ranges over (C-1) x D.
"""
from dataclasses import dataclass

import numpy as np

from .errors import BadClassCount, DimensionMismatch
from .model import Dataset, gradient

KINDS = ("canonical", "isometric")


@dataclass(frozen=True)
class KMap:
    kind: str
    K: np.ndarray

    @property
    def C(self):
        return self.K.shape[0]


@dataclass(frozen=True)
class ReducedWeights:
    S: np.ndarray
    kmap: KMap

    def __post_init__(self):
        s = np.array(self.S, dtype=float)
        if s.ndim != 2 or s.shape[0] != self.kmap.C - 1:
            raise DimensionMismatch(
                f"reduced weights need {self.kmap.C - 1} rows, got shape {s.shape}")
        if not np.all(np.isfinite(s)):
            raise ValueError("reduced weights must be finite")
        s.setflags(write=False)
        object.__setattr__(self, "S", s)


def build_kmap(kind, c):
    if c < 2:
        raise BadClassCount(f"need at least 2 classes, got {c}")
    if kind == "canonical":
        k = np.vstack([np.eye(c - 1), -np.ones((1, c - 1))])
    elif kind == "isometric":
        # Householder reflection sending e_1 to 1/sqrt(c); the remaining
        # columns are an orthonormal basis of the ones-complement.
        v = np.full(c, 1.0 / np.sqrt(c))
        v[0] -= 1.0
        h = np.eye(c) - 2.0 * np.outer(v, v) / (v @ v)
        k = h[:, 1:]
    else:
        raise ValueError(f"unknown K-map kind {kind!r}; expected one of {KINDS}")
    k.setflags(write=False)
    return KMap(kind, k)


def lift(s: ReducedWeights):
    return s.kmap.K @ s.S


def project_to_Z(w):
    w = np.asarray(w, dtype=float)
    return w - w.mean(axis=0)


def reduce_weights(w, kmap: KMap):
    """The S with K S equal to the Z-projection of ``w``."""
    wz = project_to_Z(w)
    if kmap.kind == "isometric":
        s = kmap.K.T @ wz
    else:
        s = np.linalg.lstsq(kmap.K, wz, rcond=None)[0]
    return ReducedWeights(s, kmap)


def reduced_gradient(s: ReducedWeights, d: Dataset):
    """Gradient in S-coordinates, shaped like S: -K^T (T - Y) X^T."""
    if s.S.shape[1] != d.D or s.kmap.C != d.C:
        raise DimensionMismatch("reduced weights do not match the dataset")
    return s.kmap.K.T @ gradient(lift(s), d)
