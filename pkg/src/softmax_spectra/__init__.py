"""Diagnostics for multi-class logistic regression: loss derivatives,
Kronecker-structured Hessians, eigenvalue and condition-number bounds,
existence of minima and spectrally tuned gradient descent."""

__version__ = "0.1.0"
