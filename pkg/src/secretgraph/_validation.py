"""Input validation helpers shared across the package."""

import numbers

import numpy as np

PROB_TOL = 1e-12
RENORM_TOL = 1e-9


def check_probabilities(probs, size=None, tol=PROB_TOL, name="probs"):
    """Return ``probs`` as a float array after checking it is a distribution."""
    arr = np.asarray(probs, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if size is not None and arr.shape[0] != size:
        raise ValueError(f"{name} must have length {size}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    if np.any(arr < -tol):
        raise ValueError(f"{name} has negative entries (min {arr.min():.3g})")
    total = arr.sum()
    if abs(total - 1.0) > max(tol, tol * arr.shape[0]):
        raise ValueError(f"{name} must sum to 1, got {total!r}")
    return np.clip(arr, 0.0, None)


def check_index(value, n_bits, name="index"):
    if not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    value = int(value)
    if value < 0 or value >= (1 << n_bits):
        raise ValueError(f"{name}={value} out of range for {n_bits} bits")
    return value


def check_unit_interval(value, name):
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return value


def renormalize(lam, tol=RENORM_TOL):
    """Rescale ``lam`` to unit sum, refusing drifts larger than ``tol``."""
    total = lam.sum()
    if abs(total - 1.0) > tol:
        raise ValueError(f"normalization drift {total - 1.0:.3g} exceeds {tol}")
    return lam / total


def as_generator(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
