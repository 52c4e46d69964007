"""Softmax activations, cross-entropy loss and its first and second derivatives.

Shapes: weights W are C x D, samples X are D x N (one sample per column),
targets T are C x N with stochastic columns.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidDataset

STOCHASTIC_TOL = 1e-9
TIE_TOL = 1e-12


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    T: np.ndarray

    def __post_init__(self):
        x = np.array(self.X, dtype=float)
        t = np.array(self.T, dtype=float)
        if x.ndim != 2 or t.ndim != 2:
            raise InvalidDataset("X and T must be 2-D matrices")
        if x.shape[1] != t.shape[1]:
            raise InvalidDataset(f"X has {x.shape[1]} samples but T has {t.shape[1]}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(t))):
            raise InvalidDataset("non-finite entries")
        if np.any(t < 0):
            raise InvalidDataset("T has negative entries")
        sums = t.sum(axis=0)
        if np.any(np.abs(sums - 1.0) > STOCHASTIC_TOL):
            raise InvalidDataset("columns of T must sum to 1")
        x.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "X", x)
        object.__setattr__(self, "T", t)

    @property
    def C(self):
        return self.T.shape[0]

    @property
    def D(self):
        return self.X.shape[0]

    @property
    def N(self):
        return self.X.shape[1]

    def check_weights(self, w):
        w = np.asarray(w, dtype=float)
        if w.shape != (self.C, self.D):
            raise DimensionMismatch(f"weights must be {self.C}x{self.D}, got {w.shape}")
        return w


def in_Z(w, tol=STOCHASTIC_TOL):
    """True when every column of ``w`` sums to zero."""
    return bool(np.all(np.abs(np.asarray(w).sum(axis=0)) <= tol))


def log_softmax(u):
    u = np.asarray(u, dtype=float)
    top = np.argmax(u, axis=0)
    shifted = u - np.take_along_axis(u, np.expand_dims(top, 0), axis=0)
    e = np.exp(shifted)
    # the argmax contributes exactly 1; log1p keeps tiny remainders
    np.put_along_axis(e, np.expand_dims(top, 0), 0.0, axis=0)
    return shifted - np.log1p(e.sum(axis=0))


def softmax(u):
    """Softmax of a vector, or of each column of a matrix."""
    u = np.asarray(u, dtype=float)
    e = np.exp(u - u.max(axis=0))
    return e / e.sum(axis=0)


def activations(w, d: Dataset):
    return softmax(d.check_weights(w) @ d.X)


def loss(w, d: Dataset):
    logy = log_softmax(d.check_weights(w) @ d.X)
    # 0 * log 0 := 0
    terms = np.where(d.T > 0, d.T * logy, 0.0)
    return float(-terms.sum()) + 0.0  # no negative zero


def gradient(w, d: Dataset):
    y = activations(w, d)
    return -(d.T - y) @ d.X.T


def directional_derivative(w, v, d: Dataset):
    y = activations(w, d)
    v = d.check_weights(v)
    return float(-np.sum((d.T - y) * (v @ d.X)))


def second_derivative_form(w, u, v, d: Dataset):
    """sum_n (U x_n)^T Q_n (V x_n) with Q_n = diag(y_n) - y_n y_n^T."""
    y = activations(w, d)
    ux = d.check_weights(u) @ d.X
    vx = d.check_weights(v) @ d.X
    yv = y * vx
    qv = yv - y * yv.sum(axis=0)
    return float(np.sum(ux * qv))


def sample_curvature(y):
    y = np.asarray(y, dtype=float)
    return np.diag(y) - np.outer(y, y)


def softmax_ray_limit(u):
    """lim_{b -> inf} softmax(b u): uniform over the argmax set of u."""
    u = np.asarray(u, dtype=float)
    tied = u >= u.max() - TIE_TOL
    return tied / tied.sum()
